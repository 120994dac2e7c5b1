#include "noncanon/propagator.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace noncanon {

namespace {

// Gauss-Legendre nodes (positive half) and weights on [-1, 1].
constexpr double kGl8X[4] = {0.1834346424956498, 0.5255324099163290, 0.7966664774136267,
                             0.9602898564975363};
constexpr double kGl8W[4] = {0.3626837833783620, 0.3137066458778873, 0.2223810344533745,
                             0.1012285362903763};
constexpr double kGl16X[8] = {0.0950125098376374, 0.2816035507792589, 0.4580167776572274,
                              0.6178762444026438, 0.7554044083550030, 0.8656312023878318,
                              0.9445750230732326, 0.9894009349916499};
constexpr double kGl16W[8] = {0.1894506104550685, 0.1826034150449236, 0.1691565193950025,
                              0.1495959888165767, 0.1246289712555339, 0.0951585116824928,
                              0.0622535239386479, 0.0271524594117541};

template <int m>
double gauss(const std::function<double(double)>& f, double a, double b, const double* x,
             const double* w) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  double s = 0.0;
  for (int i = 0; i < m; ++i) s += w[i] * (f(c - h * x[i]) + f(c + h * x[i]));
  return s * h;
}

double gl8(const std::function<double(double)>& f, double a, double b) {
  return gauss<4>(f, a, b, kGl8X, kGl8W);
}
double gl16(const std::function<double(double)>& f, double a, double b) {
  return gauss<8>(f, a, b, kGl16X, kGl16W);
}

constexpr long kPanelCap = 500000;
constexpr int kDepthCap = 48;

// Panel width that resolves internal structure of a profile even where the
// caller's oscillation rate alone would allow one giant panel.
double feature_rate(const VacuumProfile& s) {
  constexpr double two_pi = 6.283185307179586;
  switch (s.family) {
    case ProfileFamily::power_exp:
      return two_pi / s.scale;
    case ProfileFamily::gaussian:
      return two_pi / s.width;
    default:
      return 0.0;
  }
}

}  // namespace

PaneledIntegral paneled_integral(const std::function<double(double)>& f, double a, double b,
                                 long n) {
  if (!(b >= a)) throw std::invalid_argument("paneled_integral: need a <= b");
  if (n < 1) throw std::invalid_argument("paneled_integral: need n >= 1");
  PaneledIntegral out;
  const double w = (b - a) / static_cast<double>(n);
  for (long i = 0; i < n; ++i) {
    double x0 = a + i * w, x1 = i + 1 == n ? b : a + (i + 1) * w;
    double hi = gl16(f, x0, x1);
    out.value += hi;
    out.error += std::abs(hi - gl8(f, x0, x1));
  }
  return out;
}

double adaptive_integral(const std::function<double(double)>& f, double a, double b,
                         double phase_rate, double tol, QuadratureDiagnostics* diag) {
  if (!(b >= a)) throw std::invalid_argument("adaptive_integral: need a <= b");
  if (!(tol > 0)) throw std::invalid_argument("adaptive_integral: need tol > 0");
  if (a == b) {
    if (diag) *diag = {};
    return 0.0;
  }
  const double len = b - a;
  constexpr double two_pi = 6.283185307179586;
  long n0 = 16;
  if (phase_rate > 0)
    n0 = std::max<long>(n0, static_cast<long>(std::ceil(len * phase_rate / two_pi)));
  n0 = std::min<long>(n0, 1 << 16);

  struct Panel {
    double a, b;
    int depth;
  };
  std::vector<Panel> stack;
  stack.reserve(static_cast<std::size_t>(n0) + 64);
  const double w0 = len / static_cast<double>(n0);
  for (long i = n0 - 1; i >= 0; --i)
    stack.push_back({a + i * w0, i + 1 == n0 ? b : a + (i + 1) * w0, 0});

  double total = 0.0, err = 0.0;
  long panels = 0;
  while (!stack.empty()) {
    Panel p = stack.back();
    stack.pop_back();
    if (++panels > kPanelCap)
      throw NumericError("adaptive_integral: panel budget exhausted, accumulated error bound " +
                         std::to_string(err));
    double hi = gl16(f, p.a, p.b);
    double e = std::abs(hi - gl8(f, p.a, p.b));
    bool floor = p.depth >= kDepthCap || (p.b - p.a) <= 1e-15 * len;
    if (e <= tol * (p.b - p.a) / len || floor) {
      total += hi;
      err += e;
    } else {
      double mid = 0.5 * (p.a + p.b);
      stack.push_back({mid, p.b, p.depth + 1});
      stack.push_back({p.a, mid, p.depth + 1});
    }
  }
  if (diag) {
    diag->error = err;
    diag->panels = panels;
  }
  if (!(err <= tol))
    throw NumericError("adaptive_integral: tolerance " + std::to_string(tol) +
                       " not met, achieved error bound " + std::to_string(err));
  return total;
}

double fixed_grid_integral(const std::function<double(double)>& f, double a, double b, long n) {
  if (!(b >= a)) throw std::invalid_argument("fixed_grid_integral: need a <= b");
  if (n < 2) throw std::invalid_argument("fixed_grid_integral: need n >= 2");
  if (n % 2) ++n;
  const double h = (b - a) / static_cast<double>(n);
  double s = f(a) + f(b);
  for (long i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

RadialProfile::RadialProfile(const VacuumProfile& shape) : shape_(shape) {
  switch (shape.family) {
    case ProfileFamily::flat_cutoff:
      k_max_ = shape.cutoff;
      break;
    case ProfileFamily::power_exp:
      // Tail of k^{p+1} e^{-k/s} beyond s (p + 50) is far below 1e-10 of the mass.
      k_max_ = shape.scale * (shape.power + 50.0);
      break;
    case ProfileFamily::gaussian:
      k_max_ = shape.center + 15.0 * shape.width;
      break;
  }
  auto density_shape = [this](double k) { return shape_(k) * radial_measure(k); };
  double rough = paneled_integral(density_shape, 0.0, k_max_, 1024).value;
  if (!(rough > 0) || !std::isfinite(rough))
    throw std::invalid_argument("radial profile carries no integrable weight");
  double norm = adaptive_integral(density_shape, 0.0, k_max_, feature_rate(shape_),
                                  1e-12 * rough);
  scale_ = 1.0 / norm;
}

double d_z(const RadialProfile& profile, const SpacetimePoint& p, double tol,
           QuadratureDiagnostics* diag) {
  if (!(p.r >= 0)) throw std::invalid_argument("d_z: need r >= 0");
  constexpr double inv_two_pi_sq = 1.0 / (2.0 * 9.869604401089358);  // 1 / (2 pi^2)
  const double rate = std::abs(p.t) + p.r + feature_rate(profile.shape());
  std::function<double(double)> f;
  if (p.r == 0.0) {
    f = [&profile, &p](double k) { return profile.z(k) * k * std::sin(k * p.t); };
  } else {
    f = [&profile, &p](double k) {
      return profile.z(k) * std::sin(k * p.r) * std::sin(k * p.t) / p.r;
    };
  }
  return inv_two_pi_sq * adaptive_integral(f, 0.0, profile.k_max(), rate, tol, diag);
}

LightconePeak lightcone_deviation(const RadialProfile& profile, double r) {
  if (!(r > 0)) throw std::invalid_argument("lightcone_deviation: need r > 0");
  const double k_max = profile.k_max();
  double z_max = 0.0;
  for (int i = 1; i <= 2048; ++i) z_max = std::max(z_max, profile.z(k_max * i / 2049.0));
  const double bound = z_max * k_max / (2.0 * 9.869604401089358 * r);
  const double tol = std::max(1e-300, 1e-8 * bound);
  auto amp = [&](double t) { return std::abs(d_z(profile, {t, r}, tol)); };

  const double t_hi = 2.0 * r;
  long n_t = std::clamp<long>(static_cast<long>(std::ceil(2.0 * t_hi * k_max / 3.141592653589793)),
                              512, 40000);
  std::vector<double> ts(static_cast<std::size_t>(n_t) + 1), vals(ts.size());
  for (std::size_t i = 0; i < ts.size(); ++i) {
    ts[i] = t_hi * static_cast<double>(i) / static_cast<double>(n_t);
    vals[i] = amp(ts[i]);
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < ts.size(); ++i)
    if (vals[i] > vals[best]) best = i;
  if (!(vals[best] > 1e-10 * bound) || vals[best] <= 0.0)
    throw NumericError("lightcone_deviation: no peak above the noise floor");

  // Golden-section refinement inside the bracketing grid cells.
  double lo = ts[best > 0 ? best - 1 : 0];
  double hi = ts[std::min(best + 1, ts.size() - 1)];
  constexpr double kInvPhi = 0.6180339887498949;
  double x1 = hi - kInvPhi * (hi - lo), x2 = lo + kInvPhi * (hi - lo);
  double f1 = amp(x1), f2 = amp(x2);
  for (int it = 0; it < 80 && hi - lo > 1e-12 * t_hi; ++it) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + kInvPhi * (hi - lo);
      f2 = amp(x2);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - kInvPhi * (hi - lo);
      f1 = amp(x1);
    }
  }
  LightconePeak out;
  out.peak_time = 0.5 * (lo + hi);
  const double peak = amp(out.peak_time);
  const double half = 0.5 * peak;

  auto cross = [&](std::size_t from, int step) -> double {
    std::size_t i = from;
    while (true) {
      if ((step < 0 && i == 0) || (step > 0 && i + 1 == ts.size())) return -1.0;
      std::size_t j = static_cast<std::size_t>(static_cast<long>(i) + step);
      if (vals[j] < half) {
        double a = ts[std::min(i, j)], b = ts[std::max(i, j)];
        for (int it = 0; it < 60; ++it) {
          double mid = 0.5 * (a + b);
          bool above = amp(mid) >= half;
          // keep the crossing bracketed with the above-half side toward the peak
          if ((step > 0) == above)
            a = mid;
          else
            b = mid;
        }
        return 0.5 * (a + b);
      }
      i = j;
    }
  };
  double left = cross(best, -1), right = cross(best, +1);
  if (left < 0.0 || right < 0.0) {
    out.ambiguous = true;
    out.width = 0.0;
  } else {
    out.width = right - left;
  }

  // Rival local maxima of comparable height far from the peak mean the
  // landscape is oscillatory rather than localized.
  const double sep = out.width > 0 ? 2.0 * out.width : 8.0 * t_hi / static_cast<double>(n_t);
  for (std::size_t i = 1; i + 1 < ts.size(); ++i)
    if (vals[i] >= vals[i - 1] && vals[i] >= vals[i + 1] && vals[i] >= 0.8 * peak &&
        std::abs(ts[i] - out.peak_time) > sep)
      out.ambiguous = true;
  return out;
}

double coincidence_uv(const RadialProfile& profile) {
  auto f = [&profile](double k) { return profile.density(k); };
  return 2.0 * adaptive_integral(f, 0.0, profile.k_max(), feature_rate(profile.shape()), 1e-9);
}

namespace {

double origin_exponent(const VacuumProfile& s) {
  return s.family == ProfileFamily::power_exp ? s.power : 0.0;
}

// Integral over (0, hi] of f with known origin behavior f ~ k^q (q > -1):
// substitute k = e^v on the first stretch so the endpoint is regular.
double origin_integral(const std::function<double(double)>& f, double hi, double q, double rate,
                       double tol) {
  const double delta = std::min(1.0, 0.5 * hi);
  const double v_hi = std::log(delta);
  const double v_lo = v_hi - 45.0 / (q + 1.0);
  auto g = [&f](double v) {
    double k = std::exp(v);
    return f(k) * k;
  };
  return adaptive_integral(g, v_lo, v_hi, 0.0, 0.5 * tol) +
         adaptive_integral(f, delta, hi, rate, 0.5 * tol);
}

double radiated_integral(const RadialProfile& profile, const CurrentSpec& current,
                         double ir_cutoff, int extra_k_power, double tol) {
  auto f = [&](double k) {
    double js = current.j_squared(k, Helicity::plus) + current.j_squared(k, Helicity::minus);
    return profile.density(k) * js * (extra_k_power ? k : 1.0);
  };
  const double hi = profile.k_max();
  const double rate = feature_rate(profile.shape());
  const double q =
      1.0 + origin_exponent(profile.shape()) + current.ir_exponent + extra_k_power;
  if (ir_cutoff > 0.0) {
    if (!(ir_cutoff < hi)) return 0.0;
    return adaptive_integral(f, ir_cutoff, hi, rate, tol);
  }
  if (q <= -1.0 + 1e-12) {
    IrSweep fit = ir_sweep(profile, current, 1e-6, 1e-2, 9);
    throw NumericError(
        "radiated integral is infrared-divergent at zero cutoff; over eps in [1e-6, 1e-2] it "
        "fits " +
        std::to_string(fit.log_coeff) + " * ln(1/eps) + " + std::to_string(fit.offset) +
        "; pass a positive ir_cutoff");
  }
  if (q < 0.5) return origin_integral(f, hi, q, rate, tol);
  return adaptive_integral(f, 0.0, hi, rate, tol);
}

}  // namespace

double radiated_photon_number(const RadialProfile& profile, const CurrentSpec& current,
                              double ir_cutoff) {
  if (!(ir_cutoff >= 0)) throw std::invalid_argument("radiated_photon_number: need cutoff >= 0");
  return radiated_integral(profile, current, ir_cutoff, 0, 1e-11);
}

IrSweep ir_sweep(const RadialProfile& profile, const CurrentSpec& current, double eps_min,
                 double eps_max, int points) {
  if (!(eps_min > 0) || !(eps_max > eps_min))
    throw std::invalid_argument("ir_sweep: need 0 < eps_min < eps_max");
  if (points < 3) throw std::invalid_argument("ir_sweep: need at least 3 points");
  IrSweep out;
  out.epsilon.resize(points);
  out.n_of_eps.resize(points);
  const double step = std::log(eps_max / eps_min) / (points - 1);
  for (int i = 0; i < points; ++i) {
    out.epsilon[i] = eps_min * std::exp(step * i);
    out.n_of_eps[i] = radiated_photon_number(profile, current, out.epsilon[i]);
  }
  Eigen::ArrayXd x = (1.0 / out.epsilon).log();
  Eigen::ArrayXd y = out.n_of_eps;
  const double xm = x.mean(), ym = y.mean();
  const double sxx = ((x - xm) * (x - xm)).sum();
  const double sxy = ((x - xm) * (y - ym)).sum();
  out.log_coeff = sxx > 0 ? sxy / sxx : 0.0;
  out.offset = ym - out.log_coeff * xm;
  const double ss_tot = ((y - ym) * (y - ym)).sum();
  const double ss_res = (y - out.log_coeff * x - out.offset).square().sum();
  out.r_squared = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
  return out;
}

FourMomentum radiated_four_momentum(const RadialProfile& profile, const CurrentSpec& current,
                                    double ir_cutoff) {
  if (!(ir_cutoff >= 0))
    throw std::invalid_argument("radiated_four_momentum: need cutoff >= 0");
  FourMomentum out;
  out.energy = radiated_integral(profile, current, ir_cutoff, 1, 1e-11);
  out.momentum = 0.0;  // odd angular integrand for an isotropic current
  return out;
}

double equal_time_commutator_check(const RadialProfile& profile, double r) {
  if (!(r >= 0)) throw std::invalid_argument("equal_time_commutator_check: need r >= 0");
  return std::abs(d_z(profile, {0.0, r}, 1e-12));
}

}  // namespace noncanon
