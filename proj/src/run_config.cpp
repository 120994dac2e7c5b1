#include "noncanon/run_config.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "noncanon/amplitude.hpp"
#include "noncanon/combinatorics.hpp"
#include "noncanon/csv.hpp"
#include "noncanon/mode_set.hpp"
#include "noncanon/propagator.hpp"
#include "noncanon/types.hpp"

namespace noncanon {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr const char* kVersion = "0.1.0";
constexpr const char* kCommands[] = {"combinatorics", "excitations", "amplitude",
                                     "thermo-limit",  "propagator",  "radiation",
                                     "renorm-sweep"};

// Tracks which keys of an object were consumed; leftovers are config errors
// that name the offending key.
class KeyChecker {
 public:
  KeyChecker(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_ + ": expected a JSON object");
  }

  const json* find(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  const json& require(const std::string& key) {
    const json* p = find(key);
    if (!p) throw ConfigError(path_ + ": missing required key \"" + key + "\"");
    return *p;
  }

  void finish() const {
    for (const auto& item : j_.items())
      if (!seen_.count(item.key()))
        throw ConfigError(path_ + ": unknown key \"" + item.key() + "\"");
  }

  const std::string& path() const { return path_; }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

double as_number(const json& v, const std::string& where) {
  if (!v.is_number()) throw ConfigError(where + ": expected a number");
  return v.get<double>();
}

long long as_int(const json& v, const std::string& where) {
  if (!v.is_number_integer()) throw ConfigError(where + ": expected an integer");
  return v.get<long long>();
}

long long int_range(const json& v, const std::string& where, long long lo, long long hi) {
  long long n = as_int(v, where);
  if (n < lo || n > hi)
    throw ConfigError(where + ": value " + std::to_string(n) + " outside [" +
                      std::to_string(lo) + ", " + std::to_string(hi) + "]");
  return n;
}

double positive_number(const json& v, const std::string& where) {
  double x = as_number(v, where);
  if (!(x > 0) || !std::isfinite(x)) throw ConfigError(where + ": expected a positive number");
  return x;
}

std::string as_string(const json& v, const std::string& where) {
  if (!v.is_string()) throw ConfigError(where + ": expected a string");
  return v.get<std::string>();
}

bool as_bool(const json& v, const std::string& where) {
  if (!v.is_boolean()) throw ConfigError(where + ": expected a boolean");
  return v.get<bool>();
}

std::uint64_t as_seed(const json& v, const std::string& where) {
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
    throw ConfigError(where + ": expected a nonnegative integer");
  return v.get<std::uint64_t>();
}

Complex as_complex(const json& v, const std::string& where) {
  if (!v.is_array() || v.size() != 2)
    throw ConfigError(where + ": expected a [re, im] pair");
  return {as_number(v[0], where + "[0]"), as_number(v[1], where + "[1]")};
}

std::vector<double> as_number_array(const json& v, const std::string& where) {
  if (!v.is_array()) throw ConfigError(where + ": expected an array of numbers");
  std::vector<double> out;
  out.reserve(v.size());
  for (std::size_t i = 0; i < v.size(); ++i)
    out.push_back(as_number(v[i], where + "[" + std::to_string(i) + "]"));
  return out;
}

std::vector<long long> as_int_array(const json& v, const std::string& where, long long lo,
                                    long long hi) {
  if (!v.is_array() || v.empty())
    throw ConfigError(where + ": expected a non-empty array of integers");
  std::vector<long long> out;
  for (std::size_t i = 0; i < v.size(); ++i)
    out.push_back(int_range(v[i], where + "[" + std::to_string(i) + "]", lo, hi));
  return out;
}

// Library constructors signal contract violations with invalid_argument;
// while parsing a config those are configuration mistakes.
template <class F>
auto translated(F&& f) {
  try {
    return f();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

VacuumProfile parse_profile(const json& j, const std::string& path) {
  KeyChecker c(j, path);
  std::string family = as_string(c.require("family"), path + ".family");
  if (family == "flat-cutoff") {
    double cutoff = positive_number(c.require("cutoff"), path + ".cutoff");
    c.finish();
    return VacuumProfile::flat(cutoff);
  }
  if (family == "power-exp") {
    double power = as_number(c.require("power"), path + ".power");
    double scale = positive_number(c.require("scale"), path + ".scale");
    c.finish();
    if (power < 0) throw ConfigError(path + ".power: expected >= 0");
    return VacuumProfile::powerexp(power, scale);
  }
  if (family == "gaussian") {
    double center = positive_number(c.require("center"), path + ".center");
    double width = positive_number(c.require("width"), path + ".width");
    c.finish();
    return VacuumProfile::gauss(center, width);
  }
  throw ConfigError(path + ".family: unknown family \"" + family +
                    "\" (expected flat-cutoff, power-exp or gaussian)");
}

ModeSet parse_mode_set(const json& j, const std::string& path) {
  KeyChecker c(j, path);
  std::string type = as_string(c.require("type"), path + ".type");
  if (type == "explicit") {
    auto omega = as_number_array(c.require("omega"), path + ".omega");
    auto z = as_number_array(c.require("z"), path + ".z");
    c.finish();
    json meta;
    meta["source"] = "explicit";
    return ModeSet(omega, z, meta);
  }
  if (type == "grid") {
    VacuumProfile profile = parse_profile(c.require("profile"), path + ".profile");
    double lo = positive_number(c.require("omega_min"), path + ".omega_min");
    double hi = positive_number(c.require("omega_max"), path + ".omega_max");
    long long count = int_range(c.require("count"), path + ".count", 1, 1000000);
    c.finish();
    if (!(lo < hi)) throw ConfigError(path + ": omega_min must be below omega_max");
    return build_mode_set(profile, lo, hi, static_cast<int>(count));
  }
  throw ConfigError(path + ".type: expected \"explicit\" or \"grid\"");
}

CoherentSpec parse_coherent(const json& j, const std::string& path, const ModeSet& ms) {
  KeyChecker c(j, path);
  if (const json* k = c.find("constant")) {
    Complex v = as_complex(*k, path + ".constant");
    c.finish();
    return CoherentSpec::constant(ms, v);
  }
  const json& plus = c.require("plus");
  const json& minus = c.require("minus");
  c.finish();
  if (!plus.is_array() || !minus.is_array() ||
      plus.size() != static_cast<std::size_t>(ms.size()) || minus.size() != plus.size())
    throw ConfigError(path + ": plus/minus must be [re, im] arrays of mode-set length");
  CoherentSpec out;
  out.alpha.resize(ms.size(), 2);
  for (int k = 0; k < ms.size(); ++k) {
    out.alpha(k, 0) = as_complex(plus[k], path + ".plus[" + std::to_string(k) + "]");
    out.alpha(k, 1) = as_complex(minus[k], path + ".minus[" + std::to_string(k) + "]");
  }
  out.validate(ms);
  return out;
}

CurrentSpec parse_current(const json& j, const std::string& path) {
  KeyChecker c(j, path);
  CurrentSpec cur;
  cur.coeff[0] = as_complex(c.require("coeff_plus"), path + ".coeff_plus");
  cur.coeff[1] = as_complex(c.require("coeff_minus"), path + ".coeff_minus");
  cur.ir_exponent = as_number(c.require("ir_exponent"), path + ".ir_exponent");
  if (const json* u = c.find("uv_scale"))
    cur.uv_scale = positive_number(*u, path + ".uv_scale");
  c.finish();
  return cur;
}

// ---------------------------------------------------------------------------
// Per-command parameter records. Parsing is shared between `validate` and
// `run` so the two can never drift apart.

struct CombinatoricsParams {
  long long N = 0;
  int m = 0;
  bool averaged = false;
  NumberDistribution average;
};

CombinatoricsParams parse_combinatorics(const json& j) {
  KeyChecker c(j, "params");
  CombinatoricsParams p;
  p.m = static_cast<int>(int_range(c.require("m"), "params.m", 1, 10));
  const json* avg = c.find("average_over");
  if (avg) {
    if (c.find("N")) throw ConfigError("params: give either N or average_over, not both");
    if (!avg->is_array() || avg->empty())
      throw ConfigError("params.average_over: expected a non-empty array");
    p.averaged = true;
    for (std::size_t i = 0; i < avg->size(); ++i) {
      std::string where = "params.average_over[" + std::to_string(i) + "]";
      KeyChecker e((*avg)[i], where);
      long long n = int_range(e.require("N"), where + ".N", 1, 1000000);
      const json& w = e.require("weight");
      e.finish();
      if (!w.is_array() || w.size() != 2)
        throw ConfigError(where + ".weight: expected [numerator, denominator]");
      long long num = as_int(w[0], where + ".weight[0]");
      long long den = as_int(w[1], where + ".weight[1]");
      if (num < 0 || den <= 0)
        throw ConfigError(where + ".weight: expected numerator >= 0, denominator > 0");
      p.average.emplace_back(n, Rational(num, den));
    }
  } else {
    p.N = int_range(c.require("N"), "params.N", 1, 1000000);
  }
  c.finish();
  return p;
}

struct ExcitationsParams {
  ModeSet modes;
  CoherentSpec alpha;
  std::vector<long long> n_list;
  int m_max = 0;
  long long boundary_m = 0;  // 0 = skip
};

ExcitationsParams parse_excitations(const json& j) {
  KeyChecker c(j, "params");
  ModeSet ms = parse_mode_set(c.require("mode_set"), "params.mode_set");
  CoherentSpec alpha = parse_coherent(c.require("alpha"), "params.alpha", ms);
  auto n_list = as_int_array(c.require("N_list"), "params.N_list", 1, 1000000);
  int m_max = static_cast<int>(int_range(c.require("m_max"), "params.m_max", 1, 4000));
  long long boundary_m = 0;
  if (const json* b = c.find("boundary_m"))
    boundary_m = int_range(*b, "params.boundary_m", 2, 1000);
  c.finish();
  return {std::move(ms), std::move(alpha), std::move(n_list), m_max, boundary_m};
}

struct AmplitudeParams {
  double C = 0, omega0 = 0;
  ModeSet modes;
  double t_max = 0, dt = 0;
  std::string method;
  double tol = 1e-6;
  double h0 = 0;  // 0 = use default_step
};

AmplitudeParams parse_amplitude_common(KeyChecker& c) {
  AmplitudeParams p{positive_number(c.require("C"), "params.C"),
                    positive_number(c.require("omega0"), "params.omega0"),
                    parse_mode_set(c.require("mode_set"), "params.mode_set"),
                    positive_number(c.require("t_max"), "params.t_max"),
                    positive_number(c.require("dt"), "params.dt"),
                    "both",
                    1e-6,
                    0};
  if (!(p.dt <= p.t_max)) throw ConfigError("params.dt: must not exceed t_max");
  return p;
}

AmplitudeParams parse_amplitude(const json& j) {
  KeyChecker c(j, "params");
  AmplitudeParams p = parse_amplitude_common(c);
  if (const json* m = c.find("method")) {
    p.method = as_string(*m, "params.method");
    if (p.method != "volterra" && p.method != "resolvent" && p.method != "both")
      throw ConfigError("params.method: expected volterra, resolvent or both");
  }
  if (const json* t = c.find("volterra_tol"))
    p.tol = positive_number(*t, "params.volterra_tol");
  if (const json* h = c.find("h")) p.h0 = positive_number(*h, "params.h");
  c.finish();
  return p;
}

struct ThermoParams {
  double C = 0, omega0 = 0;
  ModeSet modes;
  double t_max = 0, dt = 0;
  std::vector<long long> n_list;
  long long samples = 0;
  std::string method;  // exact | mc | auto
};

ThermoParams parse_thermo(const json& j) {
  KeyChecker c(j, "params");
  AmplitudeParams base = parse_amplitude_common(c);
  auto n_list = as_int_array(c.require("N_list"), "params.N_list", 1, 1000000);
  long long samples = int_range(c.require("samples"), "params.samples", 2, 100000000);
  std::string method = "auto";
  if (const json* m = c.find("method")) {
    method = as_string(*m, "params.method");
    if (method != "exact" && method != "mc" && method != "auto")
      throw ConfigError("params.method: expected exact, mc or auto");
  }
  c.finish();
  return {base.C,  base.omega0, std::move(base.modes), base.t_max,
          base.dt, n_list,      samples,               method};
}

struct PropagatorParams {
  VacuumProfile profile;
  std::vector<double> r_list;
  double t_max = 0;
  long long t_count = 0;
  bool lightcone = true;
};

PropagatorParams parse_propagator(const json& j) {
  KeyChecker c(j, "params");
  VacuumProfile profile = parse_profile(c.require("profile"), "params.profile");
  auto r_list = as_number_array(c.require("r_list"), "params.r_list");
  for (double r : r_list)
    if (!(r > 0)) throw ConfigError("params.r_list: radii must be positive");
  double t_max = positive_number(c.require("t_max"), "params.t_max");
  long long t_count = int_range(c.require("t_count"), "params.t_count", 2, 100000);
  bool lightcone = true;
  if (const json* l = c.find("lightcone")) lightcone = as_bool(*l, "params.lightcone");
  c.finish();
  if (r_list.empty()) throw ConfigError("params.r_list: expected at least one radius");
  return {profile, std::move(r_list), t_max, t_count, lightcone};
}

struct RadiationParams {
  VacuumProfile profile;
  CurrentSpec current;
  double eps_min = 0, eps_max = 0;
  long long points = 0;
};

RadiationParams parse_radiation(const json& j) {
  KeyChecker c(j, "params");
  VacuumProfile profile = parse_profile(c.require("profile"), "params.profile");
  CurrentSpec current = parse_current(c.require("current"), "params.current");
  double eps_min = positive_number(c.require("eps_min"), "params.eps_min");
  double eps_max = positive_number(c.require("eps_max"), "params.eps_max");
  long long points = int_range(c.require("points"), "params.points", 3, 10000);
  c.finish();
  if (!(eps_min < eps_max)) throw ConfigError("params.eps_min: must be below eps_max");
  return {profile, current, eps_min, eps_max, points};
}

struct RenormParams {
  double C = 0, Z_scale = 0, omega0 = 0;
  double lambda1 = 0, lambda2 = 0;
  long long doublings = 0;
  double mode_density = 0;
  double t_max = 0, dt = 0;
};

RenormParams parse_renorm(const json& j) {
  KeyChecker c(j, "params");
  RenormParams p;
  p.C = positive_number(c.require("C"), "params.C");
  p.Z_scale = positive_number(c.require("Z_scale"), "params.Z_scale");
  p.omega0 = positive_number(c.require("omega0"), "params.omega0");
  p.lambda1 = positive_number(c.require("lambda1"), "params.lambda1");
  p.lambda2 = positive_number(c.require("lambda2"), "params.lambda2");
  p.doublings = int_range(c.require("doublings"), "params.doublings", 0, 20);
  p.mode_density = positive_number(c.require("mode_density"), "params.mode_density");
  p.t_max = positive_number(c.require("t_max"), "params.t_max");
  p.dt = positive_number(c.require("dt"), "params.dt");
  c.finish();
  if (!(p.lambda1 <= p.lambda2))
    throw ConfigError("params.lambda1: must not exceed lambda2");
  if (!(p.dt <= p.t_max)) throw ConfigError("params.dt: must not exceed t_max");
  return p;
}

struct ParsedTop {
  std::string command;
  std::uint64_t seed = 0;
  std::string out_dir = "out";
  bool emit_plot = false;
  json params;
};

ParsedTop parse_top(const json& config) {
  KeyChecker c(config, "config");
  ParsedTop top;
  top.command = as_string(c.require("command"), "config.command");
  bool known = false;
  for (const char* name : kCommands) known = known || top.command == name;
  if (!known)
    throw ConfigError("config.command: unknown command \"" + top.command +
                      "\" (expected combinatorics, excitations, amplitude, thermo-limit, "
                      "propagator, radiation or renorm-sweep)");
  if (const json* s = c.find("seed")) top.seed = as_seed(*s, "config.seed");
  if (const json* o = c.find("output_dir")) top.out_dir = as_string(*o, "config.output_dir");
  if (const json* p = c.find("emit_plot_script"))
    top.emit_plot = as_bool(*p, "config.emit_plot_script");
  const json& params = c.require("params");
  if (!params.is_object()) throw ConfigError("config.params: expected a JSON object");
  top.params = params;
  c.finish();
  return top;
}

// ---------------------------------------------------------------------------
// Execution

struct RunContext {
  fs::path out;
  std::uint64_t seed = 0;
  std::vector<CsvWriter::FileInfo> files;
  std::vector<std::string> plot_lines;
  json summary = json::object();
};

void emit(RunContext& ctx, const std::string& name, const CsvWriter& w) {
  ctx.files.push_back(w.write_file((ctx.out / name).string()));
  ctx.files.back().path = name;
}

CsvWriter series_csv(const AmplitudeSeries& s, const Eigen::ArrayXd* se = nullptr) {
  std::vector<std::string> cols = {"t", "re_F", "im_F", "abs_F"};
  if (se) cols.push_back("stderr");
  CsvWriter w(cols);
  const long n = s.t.size();
  const long stride = std::max<long>(1, (n + 100000) / 100001);
  for (long i = 0; i < n; i += stride) {
    w.field(s.t[i]).field(s.F[i].real()).field(s.F[i].imag()).field(std::abs(s.F[i]));
    if (se) w.field((*se)[i]);
    w.end_row();
  }
  return w;
}

void run_combinatorics(const CombinatoricsParams& p, RunContext& ctx) {
  ClassProbabilityTable table =
      p.averaged ? averaged_class_probabilities(p.average, p.m) : class_probabilities(p.N, p.m);
  emit(ctx, "class_table.csv", class_table_csv(table));
  emit(ctx, "aggregate_table.csv", aggregate_table_csv(table));
  json agg = json::array();
  for (const Rational& q : table.by_extra_coincidences) agg.push_back(q.to_double());
  ctx.summary["aggregate_probabilities"] = agg;
  ctx.summary["m"] = p.m;
  if (!p.averaged) ctx.summary["N"] = p.N;
}

void run_excitations(const ExcitationsParams& p, RunContext& ctx) {
  const double mean =
      z_inner_product(p.modes, p.alpha.alpha, p.alpha.alpha).real();
  std::vector<std::string> cols = {"N", "mean", "tv_to_poisson"};
  if (p.boundary_m > 0) cols.push_back("boundary_conditional");
  CsvWriter summary(cols);
  for (long long n : p.n_list) {
    ExcitationDistribution dist = excitation_distribution(p.modes, p.alpha, n, p.m_max);
    emit(ctx, "distribution_N" + std::to_string(n) + ".csv", distribution_csv(dist));
    double num_mean = 0.0;
    for (std::size_t m = 0; m < dist.probabilities.size(); ++m)
      num_mean += static_cast<double>(m) * dist.probabilities[m];
    summary.field(n).field(num_mean).field(tv_distance_to_poisson(dist, mean));
    if (p.boundary_m > 0)
      summary.field(boundary_conditional(p.modes, p.alpha, n, static_cast<int>(p.boundary_m)));
    summary.end_row();
  }
  emit(ctx, "summary.csv", summary);
  ctx.summary["analytic_mean"] = mean;
  ctx.plot_lines.push_back(
      "plot 'summary.csv' using 1:3 with linespoints title 'TV distance to Poisson'");
}

void run_amplitude(const AmplitudeParams& p, RunContext& ctx) {
  CouplingModel model(p.C, p.omega0, p.modes);
  Eigen::ArrayXd grid = uniform_grid(p.t_max, p.dt);
  AmplitudeSeries volterra, resolvent;
  if (p.method != "volterra") {
    resolvent = canonical_amplitude(model, grid);
    emit(ctx, "resolvent.csv", series_csv(resolvent));
    ctx.plot_lines.push_back("plot 'resolvent.csv' using 1:4 with lines title '|F| resolvent'");
  }
  if (p.method != "resolvent") {
    double h0 = p.h0 > 0 ? p.h0 : std::min(default_step(model), p.t_max / 8.0);
    RefinedVolterra rv = solve_volterra_refined(model, p.t_max, h0, p.tol);
    volterra = std::move(rv.series);
    emit(ctx, "volterra.csv", series_csv(volterra));
    ctx.summary["volterra"] = {{"h", volterra.h},
                               {"levels", rv.levels},
                               {"order", rv.order},
                               {"error_estimate", volterra.error_estimate},
                               {"refinement_anomaly", volterra.refinement_anomaly}};
    ctx.plot_lines.push_back("plot 'volterra.csv' using 1:4 with lines title '|F| volterra'");
  }
  if (p.method == "both") {
    AmplitudeSeries check = canonical_amplitude(model, volterra.t);
    ctx.summary["cross_check_sup_diff"] = (check.F - volterra.F).abs().maxCoeff();
  }
}

void run_thermo(const ThermoParams& p, RunContext& ctx) {
  CouplingModel model(p.C, p.omega0, p.modes);
  Eigen::ArrayXd grid = uniform_grid(p.t_max, p.dt);
  AmplitudeSeries canonical = canonical_amplitude(model, grid);
  emit(ctx, "canonical.csv", series_csv(canonical));
  CsvWriter disc({"N", "sup_discrepancy", "sup_stderr", "method"});
  for (long long n : p.n_list) {
    bool exact = p.method == "exact" ||
                 (p.method == "auto" &&
                  std::pow(static_cast<double>(p.modes.size()), static_cast<double>(n)) <= 1e6);
    std::string name = "finite_N" + std::to_string(n) + ".csv";
    if (exact) {
      AmplitudeSeries s = noncanonical_amplitude_exact(model, static_cast<int>(n), grid);
      emit(ctx, name, series_csv(s));
      disc.field(n)
          .field((s.F - canonical.F).abs().maxCoeff())
          .field(0.0)
          .field(std::string("exact"));
    } else {
      McAmplitudeSeries s = noncanonical_amplitude_mc(model, static_cast<int>(n),
                                                      static_cast<std::size_t>(p.samples),
                                                      ctx.seed, grid);
      emit(ctx, name, series_csv(s.series, &s.std_error));
      disc.field(n)
          .field((s.series.F - canonical.F).abs().maxCoeff())
          .field(s.std_error.maxCoeff())
          .field(std::string("mc"));
    }
    disc.end_row();
  }
  emit(ctx, "discrepancy.csv", disc);
  ctx.plot_lines.push_back(
      "plot 'discrepancy.csv' using 1:2 with linespoints title 'sup |F_N - F|'");
}

void run_propagator(const PropagatorParams& p, RunContext& ctx) {
  RadialProfile profile(p.profile);
  CsvWriter dz_table({"r", "t", "D"});
  for (double r : p.r_list)
    for (long long i = 0; i < p.t_count; ++i) {
      double t = p.t_max * static_cast<double>(i) / static_cast<double>(p.t_count - 1);
      dz_table.field(r).field(t).field(d_z(profile, {t, r}));
      dz_table.end_row();
    }
  emit(ctx, "dz.csv", dz_table);
  if (p.lightcone) {
    CsvWriter lc({"r", "peak_time", "width", "ambiguous"});
    for (double r : p.r_list) {
      LightconePeak peak = lightcone_deviation(profile, r);
      lc.field(r).field(peak.peak_time).field(peak.width);
      lc.field(static_cast<long long>(peak.ambiguous ? 1 : 0));
      lc.end_row();
    }
    emit(ctx, "lightcone.csv", lc);
  }
  double equal_time = 0.0;
  for (double r : p.r_list)
    equal_time = std::max(equal_time, equal_time_commutator_check(profile, r));
  ctx.summary["coincidence_uv"] = coincidence_uv(profile);
  ctx.summary["equal_time_max"] = equal_time;
  ctx.summary["k_max"] = profile.k_max();
  ctx.plot_lines.push_back("plot 'dz.csv' using 2:3 with lines title 'D(t, r)'");
}

void run_radiation(const RadiationParams& p, RunContext& ctx) {
  RadialProfile profile(p.profile);
  IrSweep sweep = ir_sweep(profile, p.current, p.eps_min, p.eps_max,
                           static_cast<int>(p.points));
  CsvWriter table({"epsilon", "photon_number"});
  for (long i = 0; i < sweep.epsilon.size(); ++i) {
    table.field(sweep.epsilon[i]).field(sweep.n_of_eps[i]);
    table.end_row();
  }
  emit(ctx, "ir_sweep.csv", table);
  ctx.summary["log_fit"] = {{"log_coeff", sweep.log_coeff},
                            {"offset", sweep.offset},
                            {"r_squared", sweep.r_squared}};
  try {
    ctx.summary["photon_number_zero_cutoff"] = radiated_photon_number(profile, p.current, 0.0);
    ctx.summary["ir_divergent"] = false;
  } catch (const NumericError&) {
    ctx.summary["ir_divergent"] = true;
  }
  try {
    FourMomentum pm = radiated_four_momentum(profile, p.current, 0.0);
    ctx.summary["energy"] = pm.energy;
    ctx.summary["momentum"] = pm.momentum;
    ctx.summary["energy_divergent"] = false;
  } catch (const NumericError&) {
    ctx.summary["energy_divergent"] = true;
  }
  ctx.plot_lines.push_back(
      "set logscale x\nplot 'ir_sweep.csv' using 1:2 with linespoints title 'n(eps)'");
}

void run_renorm(const RenormParams& p, RunContext& ctx) {
  Eigen::ArrayXd grid = uniform_grid(p.t_max, p.dt);
  RenormSweep sweep = renormalization_sweep(p.C, p.Z_scale, p.omega0, p.lambda1, p.lambda2,
                                            static_cast<int>(p.doublings), p.mode_density, grid);
  for (std::size_t i = 0; i < sweep.amplitudes.size(); ++i)
    emit(ctx, "window_" + std::to_string(i) + ".csv", series_csv(sweep.amplitudes[i]));
  CsvWriter drift({"step", "window_upper", "drift"});
  for (std::size_t i = 0; i < sweep.drift.size(); ++i) {
    drift.field(static_cast<long long>(i + 1))
        .field(sweep.window_upper[i + 1])
        .field(sweep.drift[i]);
    drift.end_row();
  }
  emit(ctx, "drift.csv", drift);
  if (!sweep.drift.empty()) {
    ctx.summary["final_drift"] = sweep.drift.back();
    bool dec = true;
    for (std::size_t i = 0; i + 1 < sweep.drift.size(); ++i)
      dec = dec && sweep.drift[i + 1] < sweep.drift[i];
    ctx.summary["drift_decreasing"] = dec;
  }
  ctx.plot_lines.push_back("plot 'drift.csv' using 2:3 with linespoints title 'window drift'");
}

std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[v & 0xf];
    v >>= 4;
  }
  return out;
}

}  // namespace

const char* tool_version() { return kVersion; }

json load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
}

std::string validate_config(const json& config) {
  ParsedTop top = translated([&] { return parse_top(config); });
  std::ostringstream report;
  report << "OK: command " << top.command << "\n";
  auto line = [&report](const std::string& s) { report << "  " << s << "\n"; };
  if (top.command == "combinatorics") {
    CombinatoricsParams p = translated([&] { return parse_combinatorics(top.params); });
    if (p.averaged) {
      line("averaged table over " + std::to_string(p.average.size()) + " oscillator counts, m = " +
           std::to_string(p.m));
    } else {
      line("tuple count N^m = " + std::to_string(std::pow(static_cast<double>(p.N), p.m)));
    }
  } else if (top.command == "excitations") {
    ExcitationsParams p = translated([&] { return parse_excitations(top.params); });
    line("modes: " + std::to_string(p.modes.size()) + ", generating polynomial degree " +
         std::to_string(p.m_max + 8));
    line("oscillator counts: " + std::to_string(p.n_list.size()));
  } else if (top.command == "amplitude") {
    AmplitudeParams p = translated([&] { return parse_amplitude(top.params); });
    CouplingModel model(p.C, p.omega0, p.modes);
    double h0 = p.h0 > 0 ? p.h0 : std::min(default_step(model), p.t_max / 8.0);
    line("modes: " + std::to_string(p.modes.size()) + ", resolvent dimension " +
         std::to_string(p.modes.size() + 1));
    line("volterra initial steps: " + std::to_string(static_cast<long long>(p.t_max / h0)));
  } else if (top.command == "thermo-limit") {
    ThermoParams p = translated([&] { return parse_thermo(top.params); });
    for (long long n : p.n_list) {
      double tuples = std::pow(static_cast<double>(p.modes.size()), static_cast<double>(n));
      bool exact = p.method == "exact" || (p.method == "auto" && tuples <= 1e6);
      if (p.method == "exact" && tuples > 1e6)
        line("warning: N=" + std::to_string(n) + " has " + std::to_string(tuples) +
             " tuples, above the 1e6 exact cap");
      else
        line("N=" + std::to_string(n) + ": " + (exact ? "exact enumeration, " : "Monte Carlo, ") +
             (exact ? std::to_string(static_cast<long long>(tuples)) + " tuples"
                    : std::to_string(p.samples) + " samples"));
    }
  } else if (top.command == "propagator") {
    PropagatorParams p = translated([&] { return parse_propagator(top.params); });
    RadialProfile profile(p.profile);
    line("k_max = " + std::to_string(profile.k_max()));
    line("grid evaluations: " + std::to_string(p.r_list.size() * p.t_count));
  } else if (top.command == "radiation") {
    RadiationParams p = translated([&] { return parse_radiation(top.params); });
    line("sweep points: " + std::to_string(p.points));
  } else if (top.command == "renorm-sweep") {
    RenormParams p = translated([&] { return parse_renorm(top.params); });
    double widest = p.lambda2 * std::pow(2.0, static_cast<double>(p.doublings)) - p.lambda1;
    line("widest window mode count: " +
         std::to_string(static_cast<long long>(std::ceil(widest * p.mode_density))));
  }
  return report.str();
}

json run(const json& config, const RunOverrides& overrides) {
  ParsedTop top = translated([&] { return parse_top(config); });
  if (overrides.seed) top.seed = *overrides.seed;
  if (overrides.out_dir) top.out_dir = *overrides.out_dir;

  const auto t_start = std::chrono::steady_clock::now();
  RunContext ctx;
  ctx.out = top.out_dir;
  ctx.seed = top.seed;
  fs::create_directories(ctx.out);

  if (top.command == "combinatorics") {
    run_combinatorics(translated([&] { return parse_combinatorics(top.params); }), ctx);
  } else if (top.command == "excitations") {
    run_excitations(translated([&] { return parse_excitations(top.params); }), ctx);
  } else if (top.command == "amplitude") {
    run_amplitude(translated([&] { return parse_amplitude(top.params); }), ctx);
  } else if (top.command == "thermo-limit") {
    run_thermo(translated([&] { return parse_thermo(top.params); }), ctx);
  } else if (top.command == "propagator") {
    run_propagator(translated([&] { return parse_propagator(top.params); }), ctx);
  } else if (top.command == "radiation") {
    run_radiation(translated([&] { return parse_radiation(top.params); }), ctx);
  } else if (top.command == "renorm-sweep") {
    run_renorm(translated([&] { return parse_renorm(top.params); }), ctx);
  }

  if (!ctx.plot_lines.empty()) {
    std::string script = "# gnuplot script, run from this directory\n"
                         "set datafile separator ','\n"
                         "set key autotitle columnhead\n";
    for (const std::string& l : ctx.plot_lines) script += l + "\npause -1\n";
    if (top.emit_plot) {
      std::ofstream out(ctx.out / "plot.gp", std::ios::binary);
      out << script;
      out.close();
      ctx.files.push_back({"plot.gp", script.size(), fnv1a64(script)});
    }
  }

  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  json manifest;
  manifest["tool"] = "noncanon";
  manifest["version"] = kVersion;
  manifest["command"] = top.command;
  manifest["config"] = config;
  manifest["seed"] = top.seed;
  manifest["threads"] = worker_count();
  manifest["wall_time_seconds"] = wall;
  json outputs = json::array();
  for (const auto& f : ctx.files)
    outputs.push_back({{"file", f.path}, {"bytes", f.bytes}, {"fnv1a64", hex64(f.checksum)}});
  manifest["outputs"] = outputs;
  manifest["summary"] = ctx.summary;

  std::ofstream mf(ctx.out / "run_manifest.json", std::ios::binary);
  if (!mf) throw ConfigError("cannot write into output directory: " + top.out_dir);
  mf << manifest.dump(2) << "\n";
  return manifest;
}

}  // namespace noncanon
