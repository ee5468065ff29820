#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace secvm {

// A probability kept as log10 so that values like 1e-173411 survive.
struct LogProb {
  double log10 = 0.0;
  bool zero = false;

  static LogProb from_ln(double ln_value);
  static LogProb from_log10(double value) { return LogProb{value, false}; }
  static LogProb exact_zero() { return LogProb{0.0, true}; }

  double ln() const;
  // Plain double; underflows to 0 for tiny values.
  double value() const;
  // "4.87e-427" style, exponent not limited by double range.
  std::string scientific(int digits = 3) const;
};

// Upper bound on P(some feature alone in its bin): m((n-1)/n)^(m-1).
LogProb lemma1a_bound(std::uint64_t m, std::uint64_t n);
// Upper bound on P(some of k designated features alone): k((n-1)/n)^(m-1).
LogProb lemma1b_bound(std::uint64_t m, std::uint64_t n, std::uint64_t k);

struct Lemma2Result {
  bool applicable = true;  // false when k > m/n; then the lower bound is 0
  LogProb complement;      // the subtracted term, exact_zero when not applicable
  double lower_bound = 0.0;  // max(0, 1 - complement)
};

// Lower bound on P(every feature shares its bin with at least k-1 others).
Lemma2Result lemma2_bound(std::uint64_t m, std::uint64_t n, std::uint64_t k);

// ln of the largest single-outcome probability of the sum of mf uniform
// one-hot vectors in d dims: (mf)!/(q!^(d-r) (q+1)!^r) / d^mf with q, r the
// quotient and remainder of mf/d.
double lemma3_log_p(std::uint64_t m, std::uint64_t f, std::uint64_t d);
// max{p(M,F,d), p(M-1,F,d)}^K
LogProb lemma3_bound(std::uint64_t M, std::uint64_t F, std::uint64_t d, std::uint64_t K);

// ---- collision oracle ------------------------------------------------------

struct Exhaustive {};
// Exact, enumerating set partitions (restricted growth strings) weighted by
// the number of bin labelings. Same answers as Exhaustive, far fewer states.
struct Partition {};
struct MonteCarlo {
  std::uint64_t trials = 100000;
  std::uint64_t seed = 0;
};
using OracleMode = std::variant<Exhaustive, Partition, MonteCarlo>;

struct CollisionOracleResult {
  std::uint64_t m = 0;
  std::uint64_t n = 0;
  bool exact = true;
  std::uint64_t samples = 0;  // n^m when exact, trials otherwise
  double p_some_alone = 0.0;
  // Index k-1: P(one of features 0..k-1 is alone), k = 1..m.
  std::vector<double> p_first_k_alone;
  // Index k-1: P(every feature has >= k-1 binmates), k = 1..m.
  std::vector<double> p_min_binmates;

  double first_k_alone(std::uint64_t k) const;
  double min_binmates(std::uint64_t k) const;
};

// Exhaustive requires n^m <= 1e7, Partition requires m <= 24.
CollisionOracleResult collision_oracle(std::uint64_t m, std::uint64_t n, const OracleMode& mode);

// ---- splitting oracles ------------------------------------------------------

struct SplittingComparison {
  double max_difference = 0.0;  // max over outcomes of |P_world1 - P_world2|
  LogProb bound;
  double allowance = 0.0;  // sampling slack, 0 for exact
  std::uint64_t outcomes = 0;
  bool holds() const;
};

// World 1: all M users send F uniform one-hot vectors in d dims per round.
// World 2: M-1 random users plus the known vector v[k] (l1 norm F, entries >= 0)
// in round k. Rounds are independent; v.size() is K.
SplittingComparison splitting_exact(std::uint64_t M, std::uint64_t F, std::uint64_t d,
                                    const std::vector<std::vector<std::int64_t>>& v);
SplittingComparison splitting_monte_carlo(std::uint64_t M, std::uint64_t F, std::uint64_t d,
                                          const std::vector<std::vector<std::int64_t>>& v,
                                          std::uint64_t trials, std::uint64_t seed);

// ---- bin planner -------------------------------------------------------------

struct MaxP1 {
  double log10 = 0.0;
};
struct MaxP2 {
  std::uint64_t k = 1;
  double log10 = 0.0;
};
struct MinCollisions {
  std::uint64_t k = 1;
  double log10 = 0.0;  // ceiling on the complement of the lemma 2 bound
};
using PlanTarget = std::variant<MaxP1, MaxP2, MinCollisions>;

struct PlanResult {
  std::uint64_t n = 0;
  LogProb at_n;
  LogProb at_n_plus_1;  // exact_zero if n+1 is outside the lemma's domain
  std::uint64_t probes = 0;
};

// Largest n >= 2 whose bound meets the target. DomainError if none does or
// if every n does (nothing to plan).
PlanResult plan_bins(std::uint64_t m, const PlanTarget& target);

// "1e-400", "0.99", "5e-19" -> log10 of the value without going through a double.
double parse_log10_probability(std::string_view text);

}  // namespace secvm
