#ifndef NONCANON_PERMANENT_HPP
#define NONCANON_PERMANENT_HPP

#include <Eigen/Dense>
#include <bit>
#include <cstdint>

#include "noncanon/types.hpp"

namespace noncanon {

// Permanent of a square matrix by Ryser's formula with Gray-code updates,
// O(2^n n). Intended for small n (the library caps callers at n <= 8).
template <class Derived>
typename Derived::Scalar permanent(const Eigen::MatrixBase<Derived>& a) {
  using Scalar = typename Derived::Scalar;
  const int n = static_cast<int>(a.rows());
  if (a.rows() != a.cols()) throw std::invalid_argument("permanent: matrix must be square");
  if (n == 0) return Scalar(1);
  if (n > 30) throw CapError("permanent: dimension too large for Ryser enumeration");

  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> rowsum =
      Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Zero(n);
  Scalar total(0);
  std::uint32_t prev_gray = 0;
  for (std::uint32_t k = 1; k < (1u << n); ++k) {
    std::uint32_t gray = k ^ (k >> 1);
    std::uint32_t changed = gray ^ prev_gray;
    int j = std::countr_zero(changed);
    if (gray & changed)
      rowsum += a.col(j);
    else
      rowsum -= a.col(j);
    prev_gray = gray;
    Scalar prod(1);
    for (int i = 0; i < n; ++i) prod *= rowsum(i);
    total += (std::popcount(gray) % 2 == 0) ? -prod : prod;
  }
  return (n % 2 == 0) ? -total : total;
}

}  // namespace noncanon

#endif
