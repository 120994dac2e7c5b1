#ifndef NONCANON_MODE_SET_HPP
#define NONCANON_MODE_SET_HPP

#include <Eigen/Dense>
#include <json.hpp>
#include <string>
#include <vector>

#include "noncanon/types.hpp"

namespace noncanon {

// Radial measure density after angular integration, with the relativistic
// 1/(2 omega) normalization folded in: dGamma = omega / (4 pi^2) d omega.
// Single source of truth for every radial quadrature in the library.
double radial_measure(double omega);

// Built-in vacuum profile families. The family list is a representative
// choice of regularizers, not a closed taxonomy; Z is used only through
// nonnegative pointwise values and is insensitive to overall scale (the
// weights are normalized).
enum class ProfileFamily { flat_cutoff, power_exp, gaussian };

struct VacuumProfile {
  ProfileFamily family = ProfileFamily::flat_cutoff;
  double cutoff = 1.0;  // flat_cutoff: Z = 1 on (0, cutoff], 0 beyond
  double power = 1.0;   // power_exp: Z = k^power * exp(-k/scale)
  double scale = 1.0;
  double center = 1.0;  // gaussian: Z = exp(-(k-center)^2 / (2 width^2))
  double width = 0.1;

  double operator()(double k) const;  // un-normalized Z(k) >= 0

  static VacuumProfile flat(double cutoff);
  static VacuumProfile powerexp(double power, double scale);
  static VacuumProfile gauss(double center, double width);

  nlohmann::json to_json() const;
  static VacuumProfile from_json(const nlohmann::json& j);
};

// Discrete radial mode ladder: strictly increasing omega_k > 0 with vacuum
// weights z_k >= 0 summing to one. z_k folds profile and measure; all other
// modules treat it as the single quadrature weight.
class ModeSet {
 public:
  ModeSet(std::vector<double> omega, std::vector<double> weight,
          nlohmann::json meta = nlohmann::json::object());

  int size() const { return static_cast<int>(omega_.size()); }
  double omega(int k) const { return omega_[k]; }
  double z(int k) const { return z_[k]; }
  const Eigen::ArrayXd& omegas() const { return omega_; }
  const Eigen::ArrayXd& zs() const { return z_; }
  const nlohmann::json& meta() const { return meta_; }

  nlohmann::json to_json() const;
  // Re-validates: ascending positive omegas, weights >= 0 with |sum - 1|
  // within 1e-12 (then re-normalized exactly).
  static ModeSet from_json(const nlohmann::json& j);

 private:
  Eigen::ArrayXd omega_;
  Eigen::ArrayXd z_;
  nlohmann::json meta_;
};

// Midpoint rule on a uniform omega grid over [omega_min, omega_max];
// z_k proportional to Z(omega_k) * radial_measure(omega_k), normalized.
ModeSet build_mode_set(const VacuumProfile& profile, double omega_min, double omega_max,
                       int modes);

// Mode-helicity amplitude maps are dense (modes x 2) complex matrices,
// column index = helicity.
using ModeAmplitudes = Eigen::Matrix<Complex, Eigen::Dynamic, 2>;

// Weighted scalar product <f|g> = sum_s sum_k z_k conj(f(k,s)) g(k,s).
// Conjugate-symmetric and positive semidefinite by construction.
template <class DerF, class DerG>
Complex z_inner_product(const ModeSet& ms, const Eigen::MatrixBase<DerF>& f,
                        const Eigen::MatrixBase<DerG>& g) {
  if (f.rows() != ms.size() || g.rows() != ms.size() || f.cols() != n_helicities ||
      g.cols() != n_helicities)
    throw std::invalid_argument("z_inner_product: amplitude map shape does not match mode set");
  Complex acc = 0.0;
  for (int s = 0; s < n_helicities; ++s)
    for (int k = 0; k < ms.size(); ++k)
      acc += ms.z(k) * std::conj(Complex(f(k, s))) * Complex(g(k, s));
  return acc;
}

// Coherent displacement amplitudes alpha(k, s) on a mode set.
struct CoherentSpec {
  ModeAmplitudes alpha;

  static CoherentSpec constant(const ModeSet& ms, Complex value);
  void validate(const ModeSet& ms) const;  // shape match, finite entries
  nlohmann::json to_json() const;
  static CoherentSpec from_json(const nlohmann::json& j);
};

// Classical current in the radial reduction: a power-law family
//   |j(k, s)|^2 = |coeff_s|^2 * k^ir_exponent * exp(-k / uv_scale),
// with the small-omega exponent declared up front (uv_scale may be
// infinite). spot_check_ir_exponent verifies the declaration numerically.
struct CurrentSpec {
  Complex coeff[n_helicities] = {1.0, 1.0};
  double ir_exponent = 0.0;
  double uv_scale = std::numeric_limits<double>::infinity();

  Complex j(double k, Helicity s) const;
  double j_squared(double k, Helicity s) const;
  ModeAmplitudes sample(const ModeSet& ms) const;
  bool spot_check_ir_exponent(double k_probe = 1e-6, double rtol = 1e-6) const;

  nlohmann::json to_json() const;
  static CurrentSpec from_json(const nlohmann::json& j);
};

}  // namespace noncanon

#endif
