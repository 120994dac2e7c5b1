#include "noncanon/amplitude.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <thread>

#include "noncanon/rng.hpp"

namespace noncanon {

CouplingModel::CouplingModel(double C_, double omega0_, ModeSet ms)
    : C(C_), omega0(omega0_), modes(std::move(ms)) {
  if (!(C > 0)) throw std::invalid_argument("coupling model: need C > 0");
  if (!(omega0 > 0)) throw std::invalid_argument("coupling model: need omega0 > 0");
}

Complex kernel_fZ(const CouplingModel& model, double tau) {
  Complex acc = 0.0;
  for (int k = 0; k < model.modes.size(); ++k) {
    double delta = model.modes.omega(k) - model.omega0;
    acc += model.modes.z(k) * std::exp(Complex(0, -delta * tau)) / model.modes.omega(k);
  }
  return acc;
}

double default_step(const CouplingModel& model) {
  double rate = std::sqrt(model.C * (model.modes.zs() / model.modes.omegas()).maxCoeff());
  double detune = (model.modes.omegas() - model.omega0).abs().maxCoeff();
  return 0.02 / std::max({rate, detune, 1.0});
}

AmplitudeSeries solve_volterra(const CouplingModel& model, double t_max, double h) {
  if (!(t_max > 0)) throw std::invalid_argument("solve_volterra: need t_max > 0");
  if (!(h > 0) || h > t_max) throw std::invalid_argument("solve_volterra: need 0 < h <= t_max");
  const auto n = static_cast<std::size_t>(std::llround(t_max / h));
  if (n < 2) throw std::invalid_argument("solve_volterra: grid too coarse");
  if (n > 1000000)
    throw CapError("solve_volterra: grid of " + std::to_string(n) + " steps exceeds 1e6");

  std::vector<Complex> fz(n + 1), f(n + 1);
  for (std::size_t i = 0; i <= n; ++i) fz[i] = kernel_fZ(model, static_cast<double>(i) * h);
  // f_Z'(0) = -i sum_k z_k Delta_k / omega_k, for the cubic startup term.
  Complex fz_prime0 = 0.0;
  for (int k = 0; k < model.modes.size(); ++k)
    fz_prime0 += Complex(0, -(model.modes.omega(k) - model.omega0)) * model.modes.z(k) /
                 model.modes.omega(k);

  const double c = model.C;
  f[0] = 1.0;
  f[1] = 1.0 - 0.5 * c * fz[0] * h * h - c * fz_prime0 * h * h * h / 6.0;
  for (std::size_t i = 1; i < n; ++i) {
    // Product trapezoid for int_0^{t_i} f_Z(t_i - s) F(s) ds.
    Complex conv = 0.5 * (fz[i] * f[0] + fz[0] * f[i]);
    for (std::size_t j = 1; j < i; ++j) conv += fz[i - j] * f[j];
    conv *= h;
    f[i + 1] = f[i - 1] - 2.0 * h * c * conv;  // explicit midpoint
  }

  AmplitudeSeries out;
  out.t = Eigen::ArrayXd::LinSpaced(static_cast<long>(n) + 1, 0.0, static_cast<double>(n) * h);
  out.F = Eigen::Map<Eigen::ArrayXcd>(f.data(), static_cast<long>(n) + 1);
  out.method = "volterra-midpoint";
  out.h = h;
  return out;
}

RefinedVolterra solve_volterra_refined(const CouplingModel& model, double t_max, double h0,
                                       double tol, int max_levels) {
  if (!(tol > 0)) throw std::invalid_argument("solve_volterra_refined: need tol > 0");
  RefinedVolterra out;
  AmplitudeSeries coarse = solve_volterra(model, t_max, h0);
  // Snap the horizon to the coarse grid so every halving lands on exactly
  // twice the step count; rounding t_max/h independently per level can come
  // out one step short and break the 2:1 index match below.
  const double t_end = coarse.t[coarse.t.size() - 1];
  double prev_err = 0.0;
  double last_ratio = 0.0;
  for (int level = 1; level <= max_levels; ++level) {
    AmplitudeSeries fine = solve_volterra(model, t_end, coarse.h / 2.0);
    double err = 0.0;
    for (long i = 0; i < coarse.F.size(); ++i)
      err = std::max(err, std::abs(fine.F[2 * i] - coarse.F[i]));
    if (prev_err > 0.0 && err > 1e-13) last_ratio = prev_err / err;
    prev_err = err;
    coarse = std::move(fine);
    out.levels = level;
    // Second order: the fine solution is in error by about err / 3.
    if (err / 3.0 <= tol) break;
  }
  out.series = std::move(coarse);
  out.series.error_estimate = prev_err / 3.0;
  out.order = last_ratio > 0.0 ? std::log2(last_ratio) : 0.0;
  out.series.refinement_anomaly = last_ratio > 0.0 && (last_ratio < 3.5 || last_ratio > 4.5);
  if (out.series.error_estimate > tol)
    throw NumericError("solve_volterra_refined: estimate " +
                       std::to_string(out.series.error_estimate) + " above tolerance " +
                       std::to_string(tol) + " after " + std::to_string(out.levels) + " levels");
  return out;
}

namespace {
void validate_couplings(double C, const Eigen::ArrayXd& omega, const Eigen::ArrayXd& w) {
  if (!(C > 0)) throw std::invalid_argument("resolvent: need C > 0");
  if (omega.size() < 1 || omega.size() != w.size())
    throw std::invalid_argument("resolvent: omega/weight arrays empty or mismatched");
  for (long j = 0; j < omega.size(); ++j) {
    if (!(omega[j] > 0)) throw std::invalid_argument("resolvent: frequencies must be > 0");
    if (!(w[j] >= 0)) throw std::invalid_argument("resolvent: weights must be >= 0");
  }
}
}  // namespace

Eigen::MatrixXcd bordered_matrix(double C, const Eigen::ArrayXd& omega, const Eigen::ArrayXd& w,
                                 double omega0) {
  validate_couplings(C, omega, w);
  const long m = omega.size();
  Eigen::MatrixXcd b = Eigen::MatrixXcd::Zero(m + 1, m + 1);
  for (long j = 0; j < m; ++j) {
    double cj = std::sqrt(C * w[j] / omega[j]);
    b(0, j + 1) = -cj;
    b(j + 1, 0) = cj;
    b(j + 1, j + 1) = Complex(0, -(omega[j] - omega0));
  }
  return b;
}

double bordered_reality_defect(const Eigen::MatrixXcd& b) {
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> eig(b, false);
  if (eig.info() != Eigen::Success) throw NumericError("bordered matrix: eigensolver failed");
  return eig.eigenvalues().real().cwiseAbs().maxCoeff();
}

AmplitudeSeries solve_resolvent(double C, const Eigen::ArrayXd& omega, const Eigen::ArrayXd& w,
                                double omega0, const Eigen::ArrayXd& t_grid) {
  validate_couplings(C, omega, w);
  if (t_grid.size() < 1) throw std::invalid_argument("resolvent: empty time grid");
  const long m = omega.size();
  // H = i B is Hermitian; F(t) = sum_l |U_0l|^2 exp(-i lambda_l t).
  Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(m + 1, m + 1);
  for (long j = 0; j < m; ++j) {
    double cj = std::sqrt(C * w[j] / omega[j]);
    h(0, j + 1) = Complex(0, -cj);
    h(j + 1, 0) = Complex(0, cj);
    h(j + 1, j + 1) = omega[j] - omega0;
  }
  AmplitudeSeries out;
  out.t = t_grid;
  out.F.resize(t_grid.size());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(h);
  if (eig.info() == Eigen::Success) {
    Eigen::ArrayXd weight = eig.eigenvectors().row(0).cwiseAbs2().transpose().array();
    weight /= weight.sum();  // exact unit row norm, so F(0) = 1 to rounding
    Eigen::ArrayXd lambda = eig.eigenvalues().array();
    for (long i = 0; i < t_grid.size(); ++i)
      out.F[i] = (weight * (Complex(0, -t_grid[i]) * lambda.cast<Complex>()).exp()).sum();
    out.method = "resolvent-spectral";
  } else {
    Eigen::MatrixXcd b = bordered_matrix(C, omega, w, omega0);
    for (long i = 0; i < t_grid.size(); ++i)
      out.F[i] = (Eigen::MatrixXcd(b * t_grid[i]).exp())(0, 0);
    out.method = "resolvent-expm-fallback";
  }
  return out;
}

AmplitudeSeries canonical_amplitude(const CouplingModel& model, const Eigen::ArrayXd& t_grid) {
  return solve_resolvent(model.C, model.modes.omegas(), model.modes.zs(), model.omega0, t_grid);
}

namespace {
Eigen::ArrayXcd resolvent_eval(double C, const Eigen::ArrayXd& omega, const Eigen::ArrayXd& w,
                               double omega0, const Eigen::ArrayXd& t_grid) {
  return solve_resolvent(C, omega, w, omega0, t_grid).F;
}

// Amplitude of one mode configuration given by per-mode draw counts; equal
// frequencies merge into one coupling with weight count/N.
Eigen::ArrayXcd configuration_amplitude(const CouplingModel& model, const std::vector<int>& counts,
                                        int N, const Eigen::ArrayXd& t_grid) {
  int distinct = 0;
  for (int c : counts) distinct += (c > 0);
  Eigen::ArrayXd om(distinct), w(distinct);
  int j = 0;
  for (std::size_t k = 0; k < counts.size(); ++k)
    if (counts[k] > 0) {
      om[j] = model.modes.omega(static_cast<int>(k));
      w[j] = static_cast<double>(counts[k]) / static_cast<double>(N);
      ++j;
    }
  return resolvent_eval(model.C, om, w, model.omega0, t_grid);
}
}  // namespace

AmplitudeSeries noncanonical_amplitude_exact(const CouplingModel& model, int N,
                                             const Eigen::ArrayXd& t_grid,
                                             std::size_t tuple_cap) {
  if (N < 1) throw std::invalid_argument("noncanonical amplitude: need N >= 1");
  const int m = model.modes.size();
  if (std::pow(static_cast<double>(m), N) > static_cast<double>(tuple_cap))
    throw CapError("noncanonical exact sum: " + std::to_string(m) + "^" + std::to_string(N) +
                   " tuples exceed the cap of " + std::to_string(tuple_cap) +
                   "; use the Monte Carlo estimator instead");
  Eigen::ArrayXcd acc = Eigen::ArrayXcd::Zero(t_grid.size());
  std::vector<int> counts(static_cast<std::size_t>(m), 0);
  // Enumerate multisets; weight = multinomial(N; counts) prod_k z_k^counts.
  auto rec = [&](auto&& self, int mode, int remaining) -> void {
    if (mode == m - 1) {
      counts[static_cast<std::size_t>(mode)] = remaining;
      double log_w = std::lgamma(N + 1.0);
      for (int k = 0; k < m; ++k) {
        int c = counts[static_cast<std::size_t>(k)];
        if (c > 0) log_w += c * std::log(model.modes.z(k)) - std::lgamma(c + 1.0);
        // modes with z = 0 and c = 0 contribute nothing
        if (c > 0 && model.modes.z(k) == 0.0) log_w = -std::numeric_limits<double>::infinity();
      }
      if (std::isfinite(log_w))
        acc += std::exp(log_w) * configuration_amplitude(model, counts, N, t_grid);
      counts[static_cast<std::size_t>(mode)] = 0;
      return;
    }
    for (int c = 0; c <= remaining; ++c) {
      counts[static_cast<std::size_t>(mode)] = c;
      self(self, mode + 1, remaining - c);
    }
    counts[static_cast<std::size_t>(mode)] = 0;
  };
  rec(rec, 0, N);
  AmplitudeSeries out;
  out.t = t_grid;
  out.F = acc;
  out.method = "mixture-exact";
  return out;
}

int worker_count() {
  if (const char* env = std::getenv("NONCANON_THREADS")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1 && v <= 4096) return static_cast<int>(v);
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

namespace {
constexpr std::size_t kChunk = 256;

struct ChunkAccumulator {
  Eigen::ArrayXcd sum;
  Eigen::ArrayXd sum_sq;
};

// Pairwise tree reduction over chunks; the combination order depends only on
// the chunk count, never on the worker layout.
template <class Get, class Acc>
Acc tree_reduce(std::size_t lo, std::size_t hi, const Get& get) {
  if (hi - lo == 1) return get(lo);
  std::size_t mid = lo + (hi - lo) / 2;
  Acc left = tree_reduce<Get, Acc>(lo, mid, get);
  Acc right = tree_reduce<Get, Acc>(mid, hi, get);
  left.sum += right.sum;
  left.sum_sq += right.sum_sq;
  return left;
}
}  // namespace

McAmplitudeSeries noncanonical_amplitude_mc(const CouplingModel& model, int N,
                                            std::size_t samples, std::uint64_t seed,
                                            const Eigen::ArrayXd& t_grid) {
  if (N < 1) throw std::invalid_argument("noncanonical amplitude: need N >= 1");
  if (samples < 2) throw std::invalid_argument("noncanonical amplitude: need samples >= 2");
  const int m = model.modes.size();
  Eigen::ArrayXd cdf(m);
  double acc = 0.0;
  for (int k = 0; k < m; ++k) {
    acc += model.modes.z(k);
    cdf[k] = acc;
  }
  cdf[m - 1] = 1.0;  // guard the final edge against rounding

  const std::size_t n_chunks = (samples + kChunk - 1) / kChunk;
  std::vector<ChunkAccumulator> chunks(n_chunks);
  auto run_chunk = [&](std::size_t c) {
    ChunkAccumulator a;
    a.sum = Eigen::ArrayXcd::Zero(t_grid.size());
    a.sum_sq = Eigen::ArrayXd::Zero(t_grid.size());
    std::size_t first = c * kChunk, last = std::min(samples, first + kChunk);
    std::vector<int> counts(static_cast<std::size_t>(m));
    for (std::size_t i = first; i < last; ++i) {
      SplitMix64 rng = SplitMix64::substream(seed, i);
      std::fill(counts.begin(), counts.end(), 0);
      for (int draw = 0; draw < N; ++draw) {
        double u = rng.uniform();
        int k = static_cast<int>(std::upper_bound(cdf.data(), cdf.data() + m, u) - cdf.data());
        ++counts[static_cast<std::size_t>(std::min(k, m - 1))];
      }
      Eigen::ArrayXcd f = configuration_amplitude(model, counts, N, t_grid);
      a.sum += f;
      a.sum_sq += f.abs2();
    }
    chunks[c] = std::move(a);
  };

  const int workers = std::min<std::size_t>(worker_count(), n_chunks);
  if (workers <= 1) {
    for (std::size_t c = 0; c < n_chunks; ++c) run_chunk(c);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        for (std::size_t c = static_cast<std::size_t>(w); c < n_chunks;
             c += static_cast<std::size_t>(workers))
          run_chunk(c);
      });
    for (auto& th : pool) th.join();
  }

  auto get = [&](std::size_t c) -> ChunkAccumulator { return chunks[c]; };
  ChunkAccumulator total = tree_reduce<decltype(get), ChunkAccumulator>(0, n_chunks, get);
  const auto s = static_cast<double>(samples);
  Eigen::ArrayXcd mean = total.sum / s;
  Eigen::ArrayXd var = ((total.sum_sq / s - mean.abs2()) * (s / (s - 1.0))).max(0.0);

  McAmplitudeSeries out;
  out.series.t = t_grid;
  out.series.F = mean;
  out.series.method = "mixture-monte-carlo";
  out.std_error = (var / s).sqrt();
  out.samples = samples;
  out.seed = seed;
  return out;
}

RenormSweep renormalization_sweep(double C, double Z_scale, double omega0, double lambda1,
                                  double lambda2, int doublings, double mode_density,
                                  const Eigen::ArrayXd& t_grid) {
  if (!(C > 0) || !(Z_scale > 0)) throw std::invalid_argument("renorm sweep: need C, Z_scale > 0");
  if (!(lambda1 > 0) || !(lambda2 >= lambda1))
    throw std::invalid_argument("renorm sweep: need 0 < lambda1 <= lambda2");
  if (doublings < 0) throw std::invalid_argument("renorm sweep: need doublings >= 0");
  if (lambda2 > lambda1 && !(mode_density > 0))
    throw std::invalid_argument("renorm sweep: need mode_density > 0");
  RenormSweep sweep;
  for (int step = 0; step <= doublings; ++step) {
    double upper = lambda2 * std::pow(2.0, step);
    Eigen::ArrayXd om, w;
    if (upper == lambda1) {
      // Degenerate window: one cavity mode carrying the whole plateau weight.
      om = Eigen::ArrayXd::Constant(1, lambda1);
      w = Eigen::ArrayXd::Constant(1, Z_scale);
    } else {
      double width = upper - lambda1;
      int modes = std::max(1, static_cast<int>(std::ceil(width * mode_density)));
      if (modes > 2000000) throw CapError("renorm sweep: mode count above cap");
      double h = width / modes;
      om.resize(modes);
      w.resize(modes);
      for (int k = 0; k < modes; ++k) {
        om[k] = lambda1 + (k + 0.5) * h;
        w[k] = Z_scale * radial_measure(om[k]) * h;  // couplings see only C * Z_scale
      }
    }
    sweep.window_upper.push_back(upper);
    sweep.amplitudes.push_back(solve_resolvent(C, om, w, omega0, t_grid));
  }
  for (std::size_t i = 0; i + 1 < sweep.amplitudes.size(); ++i)
    sweep.drift.push_back(
        (sweep.amplitudes[i + 1].F - sweep.amplitudes[i].F).abs().maxCoeff());
  return sweep;
}

Eigen::ArrayXd uniform_grid(double t_max, double dt) {
  if (!(t_max > 0) || !(dt > 0) || dt > t_max)
    throw std::invalid_argument("time grid: need 0 < dt <= t_max");
  auto n = static_cast<long>(std::llround(t_max / dt));
  Eigen::ArrayXd t(n + 1);
  for (long i = 0; i <= n; ++i) t[i] = static_cast<double>(i) * dt;
  return t;
}

}  // namespace noncanon
