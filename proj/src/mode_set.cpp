#include "noncanon/mode_set.hpp"

#include <cmath>
#include <limits>

namespace noncanon {

namespace {
constexpr double pi = 3.14159265358979323846;

const char* family_name(ProfileFamily f) {
  switch (f) {
    case ProfileFamily::flat_cutoff: return "flat-cutoff";
    case ProfileFamily::power_exp: return "power-exp";
    case ProfileFamily::gaussian: return "gaussian";
  }
  throw std::invalid_argument("unknown profile family");
}

ProfileFamily family_from_name(const std::string& s) {
  if (s == "flat-cutoff") return ProfileFamily::flat_cutoff;
  if (s == "power-exp") return ProfileFamily::power_exp;
  if (s == "gaussian") return ProfileFamily::gaussian;
  throw std::invalid_argument("unknown profile family '" + s +
                              "' (expected flat-cutoff, power-exp or gaussian)");
}
}  // namespace

double radial_measure(double omega) { return omega / (4.0 * pi * pi); }

double VacuumProfile::operator()(double k) const {
  if (k <= 0.0) return 0.0;
  switch (family) {
    case ProfileFamily::flat_cutoff:
      return k <= cutoff ? 1.0 : 0.0;
    case ProfileFamily::power_exp:
      return std::pow(k, power) * std::exp(-k / scale);
    case ProfileFamily::gaussian: {
      double u = (k - center) / width;
      return std::exp(-0.5 * u * u);
    }
  }
  throw std::invalid_argument("unknown profile family");
}

VacuumProfile VacuumProfile::flat(double cutoff) {
  if (!(cutoff > 0)) throw std::invalid_argument("flat-cutoff profile needs cutoff > 0");
  VacuumProfile p;
  p.family = ProfileFamily::flat_cutoff;
  p.cutoff = cutoff;
  return p;
}

VacuumProfile VacuumProfile::powerexp(double power, double scale) {
  if (!(power >= 0)) throw std::invalid_argument("power-exp profile needs power >= 0");
  if (!(scale > 0)) throw std::invalid_argument("power-exp profile needs scale > 0");
  VacuumProfile p;
  p.family = ProfileFamily::power_exp;
  p.power = power;
  p.scale = scale;
  return p;
}

VacuumProfile VacuumProfile::gauss(double center, double width) {
  if (!(width > 0)) throw std::invalid_argument("gaussian profile needs width > 0");
  if (!(center > 0)) throw std::invalid_argument("gaussian profile needs center > 0");
  VacuumProfile p;
  p.family = ProfileFamily::gaussian;
  p.center = center;
  p.width = width;
  return p;
}

nlohmann::json VacuumProfile::to_json() const {
  nlohmann::json j;
  j["family"] = family_name(family);
  switch (family) {
    case ProfileFamily::flat_cutoff: j["cutoff"] = cutoff; break;
    case ProfileFamily::power_exp:
      j["power"] = power;
      j["scale"] = scale;
      break;
    case ProfileFamily::gaussian:
      j["center"] = center;
      j["width"] = width;
      break;
  }
  return j;
}

VacuumProfile VacuumProfile::from_json(const nlohmann::json& j) {
  ProfileFamily f = family_from_name(j.at("family").get<std::string>());
  switch (f) {
    case ProfileFamily::flat_cutoff: return flat(j.at("cutoff").get<double>());
    case ProfileFamily::power_exp:
      return powerexp(j.at("power").get<double>(), j.at("scale").get<double>());
    case ProfileFamily::gaussian:
      return gauss(j.at("center").get<double>(), j.at("width").get<double>());
  }
  throw std::invalid_argument("unknown profile family");
}

ModeSet::ModeSet(std::vector<double> omega, std::vector<double> weight, nlohmann::json meta)
    : meta_(std::move(meta)) {
  if (omega.empty()) throw std::invalid_argument("mode set needs at least one mode");
  if (omega.size() != weight.size())
    throw std::invalid_argument("mode set: omega and weight arrays differ in length");
  double sum = 0.0;
  for (std::size_t k = 0; k < omega.size(); ++k) {
    if (!(omega[k] > 0) || !std::isfinite(omega[k]))
      throw std::invalid_argument("mode set: frequencies must be finite and > 0");
    if (k > 0 && !(omega[k] > omega[k - 1]))
      throw std::invalid_argument("mode set: frequencies must be strictly increasing");
    if (!(weight[k] >= 0) || !std::isfinite(weight[k]))
      throw std::invalid_argument("mode set: weights must be finite and >= 0");
    sum += weight[k];
  }
  if (!(sum > 0)) throw std::invalid_argument("mode set: weights sum to zero");
  omega_ = Eigen::Map<Eigen::ArrayXd>(omega.data(), static_cast<long>(omega.size()));
  z_ = Eigen::Map<Eigen::ArrayXd>(weight.data(), static_cast<long>(weight.size())) / sum;
}

nlohmann::json ModeSet::to_json() const {
  nlohmann::json j;
  j["modes"] = nlohmann::json::array();
  for (int k = 0; k < size(); ++k) j["modes"].push_back({{"omega", omega_[k]}, {"z", z_[k]}});
  j["meta"] = meta_;
  return j;
}

ModeSet ModeSet::from_json(const nlohmann::json& j) {
  std::vector<double> om, w;
  for (const auto& m : j.at("modes")) {
    om.push_back(m.at("omega").get<double>());
    w.push_back(m.at("z").get<double>());
  }
  double sum = 0.0;
  for (double x : w) sum += x;
  if (std::abs(sum - 1.0) > 1e-12)
    throw std::invalid_argument("mode set JSON: weights must sum to 1 within 1e-12, got " +
                                std::to_string(sum));
  return ModeSet(std::move(om), std::move(w),
                 j.contains("meta") ? j.at("meta") : nlohmann::json::object());
}

ModeSet build_mode_set(const VacuumProfile& profile, double omega_min, double omega_max,
                       int modes) {
  if (!(omega_min >= 0) || !(omega_max > omega_min))
    throw std::invalid_argument("build_mode_set: need 0 <= omega_min < omega_max");
  if (modes < 1) throw std::invalid_argument("build_mode_set: need at least one mode");
  double h = (omega_max - omega_min) / modes;
  std::vector<double> om(modes), w(modes);
  for (int k = 0; k < modes; ++k) {
    om[k] = omega_min + (k + 0.5) * h;
    w[k] = profile(om[k]) * radial_measure(om[k]) * h;
  }
  nlohmann::json meta = {{"profile", profile.to_json()},
                         {"omega_min", omega_min},
                         {"omega_max", omega_max},
                         {"scheme", "midpoint"}};
  return ModeSet(std::move(om), std::move(w), std::move(meta));
}

CoherentSpec CoherentSpec::constant(const ModeSet& ms, Complex value) {
  CoherentSpec spec;
  spec.alpha = ModeAmplitudes::Constant(ms.size(), n_helicities, value);
  return spec;
}

void CoherentSpec::validate(const ModeSet& ms) const {
  if (alpha.rows() != ms.size() || alpha.cols() != n_helicities)
    throw std::invalid_argument("coherent spec: amplitude shape does not match mode set");
  for (int k = 0; k < alpha.rows(); ++k)
    for (int s = 0; s < n_helicities; ++s)
      if (!std::isfinite(alpha(k, s).real()) || !std::isfinite(alpha(k, s).imag()))
        throw std::invalid_argument("coherent spec: non-finite amplitude entry");
}

nlohmann::json CoherentSpec::to_json() const {
  nlohmann::json plus = nlohmann::json::array(), minus = nlohmann::json::array();
  for (int k = 0; k < alpha.rows(); ++k) {
    plus.push_back({alpha(k, 0).real(), alpha(k, 0).imag()});
    minus.push_back({alpha(k, 1).real(), alpha(k, 1).imag()});
  }
  return {{"plus", plus}, {"minus", minus}};
}

CoherentSpec CoherentSpec::from_json(const nlohmann::json& j) {
  const auto& plus = j.at("plus");
  const auto& minus = j.at("minus");
  if (plus.size() != minus.size())
    throw std::invalid_argument("coherent spec: helicity arrays differ in length");
  CoherentSpec spec;
  spec.alpha.resize(static_cast<long>(plus.size()), n_helicities);
  for (std::size_t k = 0; k < plus.size(); ++k) {
    spec.alpha(static_cast<long>(k), 0) = Complex(plus[k].at(0), plus[k].at(1));
    spec.alpha(static_cast<long>(k), 1) = Complex(minus[k].at(0), minus[k].at(1));
  }
  return spec;
}

Complex CurrentSpec::j(double k, Helicity s) const {
  if (!(k > 0)) return 0.0;
  double envelope = std::isinf(uv_scale) ? 1.0 : std::exp(-0.5 * k / uv_scale);
  return coeff[index(s)] * std::pow(k, 0.5 * ir_exponent) * envelope;
}

double CurrentSpec::j_squared(double k, Helicity s) const {
  return std::norm(j(k, s));
}

ModeAmplitudes CurrentSpec::sample(const ModeSet& ms) const {
  ModeAmplitudes out(ms.size(), n_helicities);
  for (int k = 0; k < ms.size(); ++k) {
    out(k, 0) = j(ms.omega(k), Helicity::plus);
    out(k, 1) = j(ms.omega(k), Helicity::minus);
  }
  return out;
}

bool CurrentSpec::spot_check_ir_exponent(double k_probe, double rtol) const {
  // |j|^2 / k^p must tend to |coeff|^2 as k -> 0.
  for (int s = 0; s < n_helicities; ++s) {
    double expect = std::norm(coeff[s]);
    if (expect == 0.0) continue;
    for (double k : {k_probe, 0.5 * k_probe}) {
      double got = j_squared(k, static_cast<Helicity>(s)) / std::pow(k, ir_exponent);
      if (std::abs(got - expect) > rtol * expect) return false;
    }
  }
  return true;
}

nlohmann::json CurrentSpec::to_json() const {
  nlohmann::json j;
  j["coeff_plus"] = {coeff[0].real(), coeff[0].imag()};
  j["coeff_minus"] = {coeff[1].real(), coeff[1].imag()};
  j["ir_exponent"] = ir_exponent;
  if (!std::isinf(uv_scale)) j["uv_scale"] = uv_scale;
  return j;
}

CurrentSpec CurrentSpec::from_json(const nlohmann::json& j) {
  CurrentSpec c;
  auto cp = j.at("coeff_plus");
  auto cm = j.at("coeff_minus");
  c.coeff[0] = Complex(cp.at(0), cp.at(1));
  c.coeff[1] = Complex(cm.at(0), cm.at(1));
  c.ir_exponent = j.at("ir_exponent").get<double>();
  if (j.contains("uv_scale")) {
    c.uv_scale = j.at("uv_scale").get<double>();
    if (!(c.uv_scale > 0)) throw std::invalid_argument("current spec: uv_scale must be > 0");
  }
  return c;
}

}  // namespace noncanon
