#ifndef NONCANON_TYPES_HPP
#define NONCANON_TYPES_HPP

#include <complex>
#include <stdexcept>
#include <string>

namespace noncanon {

using Real = double;
using Complex = std::complex<double>;

// Photon helicity. Exactly two values; used as a column index everywhere.
enum class Helicity : int { plus = 0, minus = 1 };

inline constexpr int n_helicities = 2;

inline constexpr int index(Helicity s) { return static_cast<int>(s); }

// Resource or dimension cap exceeded (CLI exit code 3).
struct CapError : std::runtime_error {
  explicit CapError(const std::string& what) : std::runtime_error(what) {}
};

// A numerical contract failed: non-convergent refinement, cross-method
// disagreement, declared divergence hit at an invalid request (CLI exit 1).
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace noncanon

#endif
