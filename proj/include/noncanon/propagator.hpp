#ifndef NONCANON_PROPAGATOR_HPP
#define NONCANON_PROPAGATOR_HPP

#include <Eigen/Dense>
#include <functional>

#include "noncanon/mode_set.hpp"
#include "noncanon/types.hpp"

namespace noncanon {

struct QuadratureDiagnostics {
  double error = 0.0;  // accumulated |GL16 - GL8| over accepted panels
  long panels = 0;
};

struct PaneledIntegral {
  double value = 0.0;
  double error = 0.0;
};

// n equal panels, Gauss-Legendre 16 per panel, error from the embedded
// 8-point rule. Error estimate decreases as n grows.
PaneledIntegral paneled_integral(const std::function<double(double)>& f, double a, double b,
                                 long n);

// Globally adaptive bisection on top of the paneled rule. Initial panels
// resolve the phase: width <= 2 pi / phase_rate. Absolute tolerance; throws
// NumericError (with the achieved bound) when the panel budget is exhausted.
double adaptive_integral(const std::function<double(double)>& f, double a, double b,
                         double phase_rate, double tol, QuadratureDiagnostics* diag = nullptr);

// Composite Simpson on n uniform intervals (n even). Slow reference
// integrator; also used for cross-checks in tests.
double fixed_grid_integral(const std::function<double(double)>& f, double a, double b, long n);

// Continuum vacuum profile with the radial measure folded in and the overall
// scale fixed so that the measure-weighted integral of Z over (0, k_max)
// equals 1. k_max covers all but < 1e-10 of the weight (exact for
// flat-cutoff).
class RadialProfile {
 public:
  explicit RadialProfile(const VacuumProfile& shape);

  double z(double k) const { return k > 0.0 && k < k_max_ ? scale_ * shape_(k) : 0.0; }
  // Weight density in plain dk: z(k) * radial_measure(k).
  double density(double k) const { return z(k) * radial_measure(k); }
  double k_max() const { return k_max_; }
  const VacuumProfile& shape() const { return shape_; }

 private:
  VacuumProfile shape_;
  double scale_ = 1.0;
  double k_max_ = 0.0;
};

struct SpacetimePoint {
  double t = 0.0;
  double r = 0.0;  // radial separation, >= 0
};

// Vacuum-smeared commutator function
//   D(t, r) = (1 / (2 pi^2 r)) Int_0^inf dk Z(k) sin(k r) sin(k t),
// with the analytic r -> 0 limit (1 / (2 pi^2)) Int dk k Z(k) sin(k t).
double d_z(const RadialProfile& profile, const SpacetimePoint& p, double tol = 1e-10,
           QuadratureDiagnostics* diag = nullptr);

struct LightconePeak {
  double peak_time = 0.0;
  double width = 0.0;  // full width at half maximum of |D| in t
  bool ambiguous = false;  // no dominant localized peak (near-monochromatic Z)
};

// Peak of |D(t, r)| over t in [0, 2r] and its FWHM. Throws NumericError on a
// flat landscape (peak below noise floor).
LightconePeak lightcone_deviation(const RadialProfile& profile, double r);

// Coincidence value of the two-point scalar product, 2 Int dk density(k);
// equals 2 up to quadrature error for every normalized profile.
double coincidence_uv(const RadialProfile& profile);

// Mean emitted quantum count Sum_s Int_{ir_cutoff} dk density(k) |j(k,s)|^2.
// Refuses ir_cutoff = 0 when the integrand carries a non-integrable origin
// power (throws NumericError quoting the fitted logarithmic growth).
double radiated_photon_number(const RadialProfile& profile, const CurrentSpec& current,
                              double ir_cutoff);

struct IrSweep {
  Eigen::ArrayXd epsilon;
  Eigen::ArrayXd n_of_eps;
  double log_coeff = 0.0;  // a in a*ln(1/eps) + b
  double offset = 0.0;     // b
  double r_squared = 0.0;  // quality of the log fit
};

// Photon-number cutoff sweep over a log-spaced epsilon grid with a least
// squares fit against ln(1/eps).
IrSweep ir_sweep(const RadialProfile& profile, const CurrentSpec& current, double eps_min,
                 double eps_max, int points);

struct FourMomentum {
  double energy = 0.0;
  double momentum = 0.0;  // |spatial part|; 0 for isotropic currents
};

// Radiated four-momentum: energy has one extra power of k under the same
// reduction; the spatial part vanishes by the odd angular integrand.
FourMomentum radiated_four_momentum(const RadialProfile& profile, const CurrentSpec& current,
                                    double ir_cutoff = 0.0);

// |D(0, r)|: the equal-time scalar part, zero for every profile representable
// here (the type admits only 3-inversion invariant vacua).
double equal_time_commutator_check(const RadialProfile& profile, double r);

}  // namespace noncanon

#endif
