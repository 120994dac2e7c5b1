#include "noncanon/combinatorics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace noncanon {

void validate_class(const CoincidenceClass& parts) {
  if (parts.empty()) throw std::invalid_argument("coincidence class needs at least one part");
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (parts[i] < 1) throw std::invalid_argument("coincidence class parts must be >= 1");
    if (i > 0 && parts[i] > parts[i - 1])
      throw std::invalid_argument("coincidence class parts must be non-increasing");
  }
}

std::string class_to_string(const CoincidenceClass& parts) {
  std::string s;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) s += '+';
    s += std::to_string(parts[i]);
  }
  return s;
}

std::vector<CoincidenceClass> partitions_of(int m) {
  if (m < 1) throw std::invalid_argument("partitions_of: need m >= 1");
  std::vector<CoincidenceClass> out;
  CoincidenceClass cur;
  // Non-increasing parts, depth-first.
  auto rec = [&](auto&& self, int remaining, int max_part) -> void {
    if (remaining == 0) {
      out.push_back(cur);
      return;
    }
    for (int p = std::min(remaining, max_part); p >= 1; --p) {
      cur.push_back(p);
      self(self, remaining - p, p);
      cur.pop_back();
    }
  };
  rec(rec, m, m);
  std::sort(out.begin(), out.end());  // lexicographic ascending
  return out;
}

std::vector<std::vector<std::vector<int>>> set_partitions(int m) {
  if (m < 1) throw std::invalid_argument("set_partitions: need m >= 1");
  std::vector<std::vector<std::vector<int>>> out;
  std::vector<std::vector<int>> blocks;
  auto rec = [&](auto&& self, int next) -> void {
    if (next == m) {
      out.push_back(blocks);
      return;
    }
    // Index-based: the recursive call grows `blocks`, which may reallocate
    // and would invalidate range-for iterators.
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      blocks[i].push_back(next);
      self(self, next + 1);
      blocks[i].pop_back();
    }
    blocks.push_back({next});
    self(self, next + 1);
    blocks.pop_back();
  };
  rec(rec, 0);
  return out;
}

namespace {
long long checked_mul(long long a, long long b, const char* what) {
  __int128 p = static_cast<__int128>(a) * b;
  if (p > INT64_MAX || p < -static_cast<__int128>(INT64_MAX)) throw CapError(what);
  return static_cast<long long>(p);
}
}  // namespace

long long binomial(long long n, long long k) {
  if (k < 0 || n < 0) throw std::invalid_argument("binomial: negative argument");
  if (k > n) return 0;
  k = std::min(k, n - k);
  long long r = 1;
  for (long long i = 1; i <= k; ++i) {
    // r * (n - k + i) is divisible by i at every step.
    r = checked_mul(r, n - k + i, "binomial overflow") / i;
  }
  return r;
}

long long factorial(int n) {
  if (n < 0) throw std::invalid_argument("factorial: negative argument");
  long long r = 1;
  for (int i = 2; i <= n; ++i) r = checked_mul(r, i, "factorial overflow");
  return r;
}

long long falling_factorial(long long n, int k) {
  if (n < 0 || k < 0) throw std::invalid_argument("falling_factorial: negative argument");
  long long r = 1;
  for (int i = 0; i < k; ++i) {
    if (n - i <= 0) return 0;
    r = checked_mul(r, n - i, "falling factorial overflow");
  }
  return r;
}

namespace {
long long multiplicity_factor(const CoincidenceClass& parts) {
  std::map<int, int> mult;
  for (int p : parts) ++mult[p];
  long long f = 1;
  for (auto& [v, c] : mult) {
    (void)v;
    f = checked_mul(f, factorial(c), "multiplicity factor overflow");
  }
  return f;
}
}  // namespace

long long set_partition_count(const CoincidenceClass& parts) {
  validate_class(parts);
  int m = 0;
  for (int p : parts) m += p;
  long long c = factorial(m);
  for (int p : parts) c /= factorial(p);
  return c / multiplicity_factor(parts);
}

long long count_occupancy(long long N, const CoincidenceClass& parts) {
  validate_class(parts);
  if (N < 1) throw std::invalid_argument("count_occupancy: need N >= 1");
  auto k = static_cast<long long>(parts.size());
  long long arrangements = factorial(static_cast<int>(k)) / multiplicity_factor(parts);
  return checked_mul(binomial(N, k), arrangements, "occupancy count overflow");
}

ClassProbabilityTable class_probabilities(long long N, int m) {
  if (N < 1) throw std::invalid_argument("class_probabilities: need N >= 1");
  if (m < 1 || m > 10)
    throw std::invalid_argument("class_probabilities: need 1 <= m <= 10 on the exact path");
  ClassProbabilityTable table;
  table.N = N;
  table.m = m;
  Rational total_tuples = Rational::pow(N, m);  // throws CapError past 64-bit range
  table.by_extra_coincidences.assign(static_cast<std::size_t>(m), Rational(0));
  Rational sum(0);
  for (const auto& parts : partitions_of(m)) {
    auto k = static_cast<int>(parts.size());
    long long count =
        checked_mul(set_partition_count(parts), falling_factorial(N, k), "class count overflow");
    Rational prob = Rational(count) / total_tuples;
    table.entries.push_back({parts, count, prob});
    table.by_extra_coincidences[static_cast<std::size_t>(m - k)] += prob;
    sum += prob;
  }
  if (sum != Rational(1)) throw NumericError("class probabilities failed to sum to one exactly");
  return table;
}

Rational inverse_moment(const NumberDistribution& p, int j) {
  Rational acc(0);
  for (const auto& [N, pN] : p) acc += pN / Rational::pow(N, j);
  return acc;
}

ClassProbabilityTable averaged_class_probabilities(const NumberDistribution& p, int m) {
  if (p.empty()) throw std::invalid_argument("averaged_class_probabilities: empty distribution");
  Rational norm(0);
  for (const auto& [N, pN] : p) {
    if (N < 1) throw std::invalid_argument("averaged_class_probabilities: need N >= 1");
    if (pN < Rational(0)) throw std::invalid_argument("averaged_class_probabilities: negative weight");
    norm += pN;
  }
  if (norm != Rational(1))
    throw std::invalid_argument("averaged_class_probabilities: weights must sum to 1 exactly, got " +
                                norm.to_string());
  ClassProbabilityTable table;
  table.N = 0;
  table.m = m;
  table.averaged = true;
  auto parts_list = partitions_of(m);
  table.by_extra_coincidences.assign(static_cast<std::size_t>(m), Rational(0));
  for (const auto& parts : parts_list) table.entries.push_back({parts, 0, Rational(0)});
  for (const auto& [N, pN] : p) {
    ClassProbabilityTable fixed = class_probabilities(N, m);
    for (std::size_t i = 0; i < fixed.entries.size(); ++i)
      table.entries[i].probability += pN * fixed.entries[i].probability;
  }
  for (const auto& e : table.entries) {
    auto k = static_cast<int>(e.partition.size());
    table.by_extra_coincidences[static_cast<std::size_t>(m - k)] += e.probability;
  }
  return table;
}

namespace {
constexpr int kGuardBand = 8;

// Per-oscillator excitation pmf q_n, n = 0..degree: z-mixture of Poissons
// with the helicity-summed intensity lambda_k.
std::vector<double> per_oscillator_pmf(const ModeSet& ms, const CoherentSpec& alpha, long long N,
                                       int degree) {
  alpha.validate(ms);
  std::vector<double> q(static_cast<std::size_t>(degree) + 1, 0.0);
  for (int k = 0; k < ms.size(); ++k) {
    double lambda = (std::norm(alpha.alpha(k, 0)) + std::norm(alpha.alpha(k, 1))) /
                    static_cast<double>(N);
    double pois = std::exp(-lambda);
    for (int n = 0; n <= degree; ++n) {
      q[static_cast<std::size_t>(n)] += ms.z(k) * pois;
      pois *= lambda / (n + 1);
    }
  }
  return q;
}

// Truncated polynomial product; coefficients up to the truncation degree are
// exact because higher-order cross terms cannot reach them.
std::vector<double> poly_mul(const std::vector<double>& a, const std::vector<double>& b,
                             std::size_t degree) {
  std::vector<double> c(degree + 1, 0.0);
  for (std::size_t i = 0; i < a.size() && i <= degree; ++i) {
    if (a[i] == 0.0) continue;
    std::size_t jmax = std::min(degree - i, b.size() - 1);
    for (std::size_t j = 0; j <= jmax; ++j) c[i + j] += a[i] * b[j];
  }
  return c;
}

std::vector<double> poly_pow(std::vector<double> base, long long n, std::size_t degree) {
  std::vector<double> acc(degree + 1, 0.0);
  acc[0] = 1.0;
  while (n > 0) {
    if (n & 1) acc = poly_mul(acc, base, degree);
    n >>= 1;
    if (n > 0) base = poly_mul(base, base, degree);
  }
  return acc;
}
}  // namespace

ExcitationDistribution excitation_distribution(const ModeSet& ms, const CoherentSpec& alpha,
                                               long long N, int m_max) {
  if (N < 1) throw std::invalid_argument("excitation_distribution: need N >= 1");
  if (m_max < 0) throw std::invalid_argument("excitation_distribution: need m_max >= 0");
  int degree = m_max + kGuardBand;
  auto q = per_oscillator_pmf(ms, alpha, N, degree);
  auto total = poly_pow(q, N, static_cast<std::size_t>(degree));
  ExcitationDistribution dist;
  dist.N = N;
  dist.probabilities.assign(total.begin(), total.begin() + m_max + 1);
  double covered = 0.0;
  for (double p : dist.probabilities) covered += p;
  dist.tail_mass = std::max(0.0, 1.0 - covered);
  return dist;
}

double tv_distance_to_poisson(const ExcitationDistribution& dist, double lambda) {
  double tv = 0.0;
  double pois = std::exp(-lambda);
  double pois_covered = 0.0;
  for (std::size_t n = 0; n < dist.probabilities.size(); ++n) {
    tv += std::abs(dist.probabilities[n] - pois);
    pois_covered += pois;
    pois *= lambda / static_cast<double>(n + 1);
  }
  tv += std::abs(dist.tail_mass - (1.0 - pois_covered));
  return 0.5 * tv;
}

double boundary_conditional(const ModeSet& ms, const CoherentSpec& alpha, long long N, int m) {
  if (m < 1) throw std::invalid_argument("boundary_conditional: need m >= 1");
  if (N < 1) throw std::invalid_argument("boundary_conditional: need N >= 1");
  if (N < m) return 1.0;  // fewer oscillators than excitations forces a coincidence
  int degree = m + kGuardBand;
  auto q = per_oscillator_pmf(ms, alpha, N, degree);
  auto total = poly_pow(q, N, static_cast<std::size_t>(degree));
  double p_m = total[static_cast<std::size_t>(m)];
  if (p_m <= 0.0)
    throw NumericError("boundary_conditional: P(m excitations) vanishes, conditional undefined");
  double interior = static_cast<double>(binomial(N, m)) * std::pow(q[1], m) *
                    std::pow(q[0], static_cast<double>(N - m));
  double val = 1.0 - interior / p_m;
  return std::clamp(val, 0.0, 1.0);
}

CsvWriter class_table_csv(const ClassProbabilityTable& table) {
  CsvWriter w({"partition", "count", "probability"});
  for (const auto& e : table.entries) {
    w.field(class_to_string(e.partition));
    if (table.averaged)
      w.empty_field();
    else
      w.field(e.count);
    w.field(e.probability.to_double());
    w.end_row();
  }
  return w;
}

CsvWriter aggregate_table_csv(const ClassProbabilityTable& table) {
  CsvWriter w({"extra_coincidences", "probability"});
  for (std::size_t j = 0; j < table.by_extra_coincidences.size(); ++j) {
    w.field(static_cast<long long>(j));
    w.field(table.by_extra_coincidences[j].to_double());
    w.end_row();
  }
  return w;
}

CsvWriter distribution_csv(const ExcitationDistribution& dist) {
  CsvWriter w({"m", "probability"});
  for (std::size_t n = 0; n < dist.probabilities.size(); ++n) {
    w.field(static_cast<long long>(n));
    w.field(dist.probabilities[n]);
    w.end_row();
  }
  return w;
}

}  // namespace noncanon
