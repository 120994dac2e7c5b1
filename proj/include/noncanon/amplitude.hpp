#ifndef NONCANON_AMPLITUDE_HPP
#define NONCANON_AMPLITUDE_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "noncanon/mode_set.hpp"
#include "noncanon/types.hpp"

namespace noncanon {

// Two-level emitter coupled to the mode ladder: coupling strength C > 0,
// transition frequency omega0 > 0; detunings Delta_k = omega_k - omega0.
struct CouplingModel {
  double C = 1.0;
  double omega0 = 1.0;
  ModeSet modes;

  CouplingModel(double C_, double omega0_, ModeSet ms);
};

// Memory kernel f_Z(tau) = sum_k z_k exp(-i Delta_k tau) / omega_k.
Complex kernel_fZ(const CouplingModel& model, double tau);

struct AmplitudeSeries {
  Eigen::ArrayXd t;
  Eigen::ArrayXcd F;
  std::string method;
  double h = 0.0;               // step of the grid scheme, 0 for spectral
  double error_estimate = 0.0;  // sup-norm estimate where the method has one
  bool refinement_anomaly = false;
};

// Survival amplitude from the integro-differential form
//   F'(t) = -C int_0^t f_Z(t - s) F(s) ds,  F(0) = 1,
// by product-trapezoid convolution plus explicit-midpoint stepping
// (second order; the generator has purely imaginary spectrum, where the
// two-step midpoint rule is neutrally stable).
AmplitudeSeries solve_volterra(const CouplingModel& model, double t_max, double h);

// Step size satisfying sqrt(C max_k(z_k / omega_k)) h <= 0.02 and resolving
// the largest detuning.
double default_step(const CouplingModel& model);

// Halve h until the Richardson error estimate reaches tol. order is the
// observed convergence order; a refinement ratio outside [3.5, 4.5] (order
// outside [1.8, 2.2]) sets refinement_anomaly on the returned series.
struct RefinedVolterra {
  AmplitudeSeries series;
  double order = 0.0;
  int levels = 0;
};

RefinedVolterra solve_volterra_refined(const CouplingModel& model, double t_max, double h0,
                                       double tol, int max_levels = 10);

// Bordered generator of the coupled amplitude system: top-left scalar 0,
// first row -c_j, first column +c_j with c_j = sqrt(C w_j / omega_j), and
// diagonal -i Delta_j. i B is Hermitian, so eigenvalues are purely
// imaginary and F(t) = [exp(B t)]_00 satisfies |F| <= 1 structurally.
Eigen::MatrixXcd bordered_matrix(double C, const Eigen::ArrayXd& omega, const Eigen::ArrayXd& w,
                                 double omega0);

// max |Re lambda| over the spectrum, computed with a general (non-Hermitian)
// eigensolver; the structural contract is <= 1e-10 * ||B||.
double bordered_reality_defect(const Eigen::MatrixXcd& b);

// F(t) = [exp(B t)]_00 through the Hermitian eigendecomposition of i B;
// falls back to scaling-and-squaring (flagged in method) if that fails.
AmplitudeSeries solve_resolvent(double C, const Eigen::ArrayXd& omega, const Eigen::ArrayXd& w,
                                double omega0, const Eigen::ArrayXd& t_grid);

// Canonical (fully thermodynamic) amplitude for the kernel f_Z.
AmplitudeSeries canonical_amplitude(const CouplingModel& model, const Eigen::ArrayXd& t_grid);

// Finite-N amplitude: mixture over mode multisets of per-configuration
// amplitudes with weight 1/N per draw. Exact enumeration, capped at
// modes^N <= tuple_cap.
AmplitudeSeries noncanonical_amplitude_exact(const CouplingModel& model, int N,
                                             const Eigen::ArrayXd& t_grid,
                                             std::size_t tuple_cap = 1000000);

// Monte Carlo estimate of the same mixture. Sample i draws its modes from
// substream (seed, i); chunked pairwise-tree reduction makes the output
// byte-identical for any worker count (NONCANON_THREADS honored).
struct McAmplitudeSeries {
  AmplitudeSeries series;
  Eigen::ArrayXd std_error;  // per-t standard error of the complex mean
  std::size_t samples = 0;
  std::uint64_t seed = 0;
};

McAmplitudeSeries noncanonical_amplitude_mc(const CouplingModel& model, int N,
                                            std::size_t samples, std::uint64_t seed,
                                            const Eigen::ArrayXd& t_grid);

// Flat-window profile of plateau height Z_scale on [lambda1, upper]; the
// window upper edge doubles `doublings` times while C * Z stays fixed (the
// couplings depend only on the product, so this is by construction).
// Reports sup-norm drift between consecutive windows.
struct RenormSweep {
  std::vector<double> window_upper;
  std::vector<AmplitudeSeries> amplitudes;
  std::vector<double> drift;
};

RenormSweep renormalization_sweep(double C, double Z_scale, double omega0, double lambda1,
                                  double lambda2, int doublings, double mode_density,
                                  const Eigen::ArrayXd& t_grid);

Eigen::ArrayXd uniform_grid(double t_max, double dt);

// Worker cap: NONCANON_THREADS if set, else hardware concurrency.
int worker_count();

}  // namespace noncanon

#endif
