#ifndef NONCANON_FOCK_HPP
#define NONCANON_FOCK_HPP

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <optional>
#include <vector>

#include "noncanon/mode_set.hpp"
#include "noncanon/types.hpp"

namespace noncanon {

// Conventions (see README "Discretization conventions"): basis kets
// |k, n+, n-> are orthonormal; the quadrature weight z_k enters only through
// vacuum amplitudes sqrt(z_k) and through the weighted scalar product.
// Smeared operators are plain unweighted sums over modes and helicities.

struct TruncationSpec {
  int n_max = 4;                    // per mode and helicity
  double norm_tolerance = 1e-8;     // allowed truncated-norm deficit of states
  std::size_t max_amplitudes = std::size_t(1) << 22;
};

// One oscillator: modes x (n_max+1)^2 levels, index order (k, n+, n-).
class SingleSpace {
 public:
  SingleSpace(int modes, int n_max);

  int modes() const { return modes_; }
  int n_max() const { return n_max_; }
  int levels() const { return n_max_ + 1; }
  int dim() const { return modes_ * levels() * levels(); }

  int index(int k, int n_plus, int n_minus) const;
  struct Basis {
    int k;
    int n[n_helicities];
  };
  Basis decode(int idx) const;

 private:
  int modes_;
  int n_max_;
};

// N distinguishable oscillators, oscillator-major tensor order (oscillator 0
// is the most significant index). Total amplitude count is capped.
class MultiSpace {
 public:
  MultiSpace(SingleSpace single, int oscillators, std::size_t max_amplitudes);

  const SingleSpace& single() const { return single_; }
  int oscillators() const { return n_; }
  std::size_t dim() const { return dim_; }

 private:
  SingleSpace single_;
  int n_;
  std::size_t dim_;
};

using SparseOp = Eigen::SparseMatrix<Complex>;

// Single-oscillator blocks.
SparseOp annihilator_block(const SingleSpace& sp, int k, Helicity s);  // |k><k| x a_s
SparseOp creator_block(const SingleSpace& sp, int k, Helicity s);
SparseOp mode_projector_block(const SingleSpace& sp, int k);  // I_k = |k><k| x 1
SparseOp number_block(const SingleSpace& sp);                 // sum_{k,s} a+ a

enum class SmearKind { annihilate, create };

// a(f) = sum_{k,s} conj(f(k,s)) a_{k,s},  a(f)+ = sum_{k,s} f(k,s) a+_{k,s}.
SparseOp smeared_block(const SingleSpace& sp, const ModeSet& ms, const ModeAmplitudes& f,
                       SmearKind kind);

// coeff * sum_j block acting on oscillator j. Default coeff is 1/sqrt(N);
// pass 1 for additive observables like the number operator.
class LiftedOperator {
 public:
  LiftedOperator(MultiSpace space, SparseOp block, double coeff);
  Eigen::VectorXcd apply(const Eigen::VectorXcd& x) const;
  LiftedOperator adjoint() const;
  double coeff() const { return coeff_; }
  const SparseOp& block() const { return block_; }

 private:
  MultiSpace space_;
  SparseOp block_;
  double coeff_;
};

LiftedOperator lift(const MultiSpace& space, const SparseOp& block,
                    std::optional<double> coeff = std::nullopt);

// The same single-oscillator block applied to every tensor factor (N-th
// tensor power), used for displacement operators.
class FactorizedOperator {
 public:
  FactorizedOperator(MultiSpace space, Eigen::MatrixXcd block);
  Eigen::VectorXcd apply(const Eigen::VectorXcd& x) const;
  FactorizedOperator adjoint() const;
  const Eigen::MatrixXcd& block() const { return block_; }

 private:
  MultiSpace space_;
  Eigen::MatrixXcd block_;
};

struct State {
  MultiSpace space;
  Eigen::VectorXcd amp;
  double norm_deficit = 0.0;  // 1 - |amp|^2 lost to truncation
};

Eigen::VectorXcd vacuum_single(const SingleSpace& sp, const ModeSet& ms);
// Single-oscillator coherent amplitudes at displacement alpha / sqrt(N).
Eigen::VectorXcd coherent_single(const SingleSpace& sp, const ModeSet& ms,
                                 const CoherentSpec& alpha, int N);

State vacuum_state(const ModeSet& ms, int N, const TruncationSpec& trunc);
// Truncated tensor power of the single-oscillator coherent state; raises
// NumericError when the norm deficit exceeds trunc.norm_tolerance.
State coherent_state(const ModeSet& ms, const CoherentSpec& alpha, int N,
                     const TruncationSpec& trunc);

// exp(beta_N a+ - conj(beta_N) a) per mode and helicity, beta_N = beta/sqrt(N),
// as the N-th tensor power of a block-diagonal unitary single-oscillator block.
FactorizedOperator displacement_operator(const ModeSet& ms, const CoherentSpec& beta, int N,
                                         const TruncationSpec& trunc);

// <vac| a(f_1)...a(f_m) a(g_1)+...a(g_m)+ |vac> on N oscillators with the
// 1/sqrt(N) lift. class_sum: permutation x coincidence-class expansion with
// exact class weights, any N. tensor: dense truncated-space evaluation,
// present when the dimension cap allows it; both routes must then agree to
// 1e-12 (relative) or NumericError is raised.
struct VacuumExpectation {
  Complex class_sum;
  std::optional<Complex> tensor;
};

Complex vacuum_expectation_class_sum(const std::vector<ModeAmplitudes>& fs,
                                     const std::vector<ModeAmplitudes>& gs, const ModeSet& ms,
                                     long long N);

VacuumExpectation vacuum_expectation(const std::vector<ModeAmplitudes>& fs,
                                     const std::vector<ModeAmplitudes>& gs, const ModeSet& ms,
                                     int N, const TruncationSpec& trunc);

// Large-N limit: permanent of the Gram matrix G_ij = <f_i|g_j>_z, m <= 8.
Complex thermodynamic_expectation(const std::vector<ModeAmplitudes>& fs,
                                  const std::vector<ModeAmplitudes>& gs, const ModeSet& ms);

// Cavity reduction of the two-point function at coinciding positions:
// 2 sum_k z_k exp(i omega_k (t_x - t_y)). Equals 2 exactly at t_x = t_y.
Complex uv_scalar_product(const ModeSet& ms, double t_x, double t_y);

// Free field average in the N-oscillator coherent state, per helicity:
// analytic value sum_k z_k alpha(k,s) exp(-i omega_k t) next to the exact
// truncated-space expectation of the lifted annihilator smeared with the
// matching phase profile. N-independent up to truncation error.
struct FieldAverage {
  Eigen::Vector2cd analytic;
  Eigen::Vector2cd numeric;
};

FieldAverage coherent_field_average(const ModeSet& ms, const CoherentSpec& alpha, int N, double t,
                                    const TruncationSpec& trunc);

}  // namespace noncanon

#endif
