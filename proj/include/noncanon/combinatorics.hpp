#ifndef NONCANON_COMBINATORICS_HPP
#define NONCANON_COMBINATORICS_HPP

#include <vector>

#include "noncanon/csv.hpp"
#include "noncanon/mode_set.hpp"
#include "noncanon/rational.hpp"
#include "noncanon/types.hpp"

namespace noncanon {

// A coincidence class: which multiplicities occur when m excitations land on
// oscillators. Canonical form is non-increasing positive parts summing to m.
using CoincidenceClass = std::vector<int>;

void validate_class(const CoincidenceClass& parts);
std::string class_to_string(const CoincidenceClass& parts);

// All partitions of m, each in canonical form, lexicographically ascending
// as sequences: (1,1,1) < (2,1) < (3). Deterministic row order for tables.
std::vector<CoincidenceClass> partitions_of(int m);

// Set partitions of {0..m-1} as lists of blocks (restricted growth order).
std::vector<std::vector<std::vector<int>>> set_partitions(int m);

// Exact helpers. All throw CapError on 64-bit overflow.
long long binomial(long long n, long long k);
long long factorial(int n);
long long falling_factorial(long long n, int k);  // n (n-1) ... (n-k+1)
// Number of set partitions of {1..m} with the given block sizes:
// m! / (prod_i parts[i]!) / (prod_v mult_v!).
long long set_partition_count(const CoincidenceClass& parts);

// Number of ways to lay out the class on N distinguishable oscillators with
// increasing oscillator labels: binomial(N, k) * k! / prod_v mult_v!.
long long count_occupancy(long long N, const CoincidenceClass& parts);

struct ClassEntry {
  CoincidenceClass partition;
  long long count;  // ordered m-tuples over {1..N} realizing the partition; 0 when averaged
  Rational probability;
};

struct ClassProbabilityTable {
  long long N = 0;  // 0 marks an averaged table
  int m = 0;
  bool averaged = false;
  std::vector<ClassEntry> entries;            // ascending partitions
  std::vector<Rational> by_extra_coincidences;  // index j = m - #parts, j = 0..m-1
};

// Classify all N^m ordered assignments of m excitations to N oscillators by
// coincidence partition; exact probabilities count / N^m. Requires
// 1 <= m <= 10 and N^m within 64-bit range.
ClassProbabilityTable class_probabilities(long long N, int m);

// Oscillator-number distribution p: entries (N, p_N), p_N >= 0, sum = 1
// exactly. Averaged table = sum_N p_N * class_probabilities(N, m); equal to
// substituting moments <1/N^j> into the fixed-N polynomials.
using NumberDistribution = std::vector<std::pair<long long, Rational>>;

ClassProbabilityTable averaged_class_probabilities(const NumberDistribution& p, int m);

// <1/N^j> under p.
Rational inverse_moment(const NumberDistribution& p, int j);

// Distribution of the total excitation number of N oscillators, each an
// independent z-mixture of helicity-summed Poissons with per-oscillator
// intensity lambda_k = sum_s |alpha(k,s)|^2 / N. Computed through the
// per-oscillator probability generating function raised to the N-th power,
// truncated at m_max plus a guard band (coefficients up to m_max are exact).
struct ExcitationDistribution {
  long long N = 0;
  std::vector<double> probabilities;  // index m = 0..m_max
  double tail_mass = 0.0;             // 1 - sum(probabilities); not a failure
};

ExcitationDistribution excitation_distribution(const ModeSet& ms, const CoherentSpec& alpha,
                                               long long N, int m_max);

// Total variation distance to Poisson(lambda), tails compared in aggregate.
double tv_distance_to_poisson(const ExcitationDistribution& dist, double lambda);

// P(boundary | m excitations observed) = 1 - P(all m on distinct
// oscillators) / P(m total). Equals 1 when N < m; requires P(m total) > 0.
double boundary_conditional(const ModeSet& ms, const CoherentSpec& alpha, long long N, int m);

// CSV emitters (deterministic row order).
CsvWriter class_table_csv(const ClassProbabilityTable& table);
CsvWriter aggregate_table_csv(const ClassProbabilityTable& table);
CsvWriter distribution_csv(const ExcitationDistribution& dist);

}  // namespace noncanon

#endif
