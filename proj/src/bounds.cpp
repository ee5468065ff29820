#include "secvm/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <optional>

#include "secvm/error.hpp"
#include "secvm/random.hpp"

namespace secvm {

namespace {

constexpr double kLn10 = 2.302585092994045684;

// ln((n-1)/n) without cancellation for large n.
double ln_one_minus_inv(std::uint64_t n) { return std::log1p(-1.0 / static_cast<double>(n)); }

void require_hashing(std::uint64_t m, std::uint64_t n) {
  if (m < 1) throw DomainError("m must be >= 1");
  if (n < 2) throw DomainError("n must be >= 2, got " + std::to_string(n));
}

double ln_choose(double a, double b) { return std::lgamma(a + 1) - std::lgamma(b + 1) - std::lgamma(a - b + 1); }

}  // namespace

// ---- LogProb -------------------------------------------------------------------

LogProb LogProb::from_ln(double ln_value) { return LogProb{ln_value / kLn10, false}; }

double LogProb::ln() const { return zero ? -std::numeric_limits<double>::infinity() : log10 * kLn10; }

double LogProb::value() const { return zero ? 0.0 : std::pow(10.0, log10); }

std::string LogProb::scientific(int digits) const {
  if (zero) return "0";
  digits = std::max(digits, 1);
  double e = std::floor(log10);
  double mant = std::pow(10.0, log10 - e);
  // rounding can carry the mantissa up to 10
  const double scale = std::pow(10.0, digits - 1);
  if (std::round(mant * scale) / scale >= 10.0) {
    mant /= 10.0;
    e += 1.0;
  }
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*fe%s%02lld", digits - 1, mant, e < 0 ? "-" : "+",
                static_cast<long long>(std::fabs(e)));
  return buf;
}

// ---- lemmata -----------------------------------------------------------------------

LogProb lemma1a_bound(std::uint64_t m, std::uint64_t n) {
  require_hashing(m, n);
  return LogProb::from_ln(std::log(static_cast<double>(m)) + static_cast<double>(m - 1) * ln_one_minus_inv(n));
}

LogProb lemma1b_bound(std::uint64_t m, std::uint64_t n, std::uint64_t k) {
  require_hashing(m, n);
  if (k < 1 || k > m) throw DomainError("k must lie in [1, m], got k=" + std::to_string(k));
  return LogProb::from_ln(std::log(static_cast<double>(k)) + static_cast<double>(m - 1) * ln_one_minus_inv(n));
}

Lemma2Result lemma2_bound(std::uint64_t m, std::uint64_t n, std::uint64_t k) {
  require_hashing(m, n);
  if (k < 1) throw DomainError("k must be >= 1");
  Lemma2Result r;
  // k <= m/n, in integers
  if (k > m / n) {
    r.applicable = false;
    r.complement = LogProb::exact_zero();
    r.lower_bound = 0.0;
    return r;
  }
  const double md = static_cast<double>(m), nd = static_cast<double>(n), kd = static_cast<double>(k);
  // C(m, k-1) (n-1)^(m-k+1) / n^(m-1) (m-k+2)/(m-nk+n+1)
  const double ln_c = ln_choose(md, kd - 1) + (md - kd + 1) * std::log(nd - 1) - (md - 1) * std::log(nd) +
                      std::log(md - kd + 2) - std::log(md - nd * kd + nd + 1);
  r.complement = LogProb::from_ln(ln_c);
  r.lower_bound = std::max(0.0, -std::expm1(ln_c));
  return r;
}

double lemma3_log_p(std::uint64_t m, std::uint64_t f, std::uint64_t d) {
  if (d < 1) throw DomainError("d must be > 0");
  // Most likely outcome of mf uniform one-hot draws: r = mf mod d bins get q+1,
  // the rest q. Reduces to (mf)!/(q!)^d / d^mf when d divides mf.
  const std::uint64_t mf = m * f, q = mf / d, r = mf % d;
  const double mfd = static_cast<double>(mf), qd = static_cast<double>(q);
  return std::lgamma(mfd + 1) - static_cast<double>(d - r) * std::lgamma(qd + 1) -
         static_cast<double>(r) * std::lgamma(qd + 2) - mfd * std::log(static_cast<double>(d));
}

LogProb lemma3_bound(std::uint64_t M, std::uint64_t F, std::uint64_t d, std::uint64_t K) {
  if (M < 2) throw DomainError("M must be > 1");
  if (F < 1) throw DomainError("F must be > 0");
  if (d < 1) throw DomainError("d must be > 0");
  if (K < 1) throw DomainError("K must be > 0");
  const double worst = std::max(lemma3_log_p(M, F, d), lemma3_log_p(M - 1, F, d));
  return LogProb::from_ln(static_cast<double>(K) * worst);
}

// ---- collision oracle ------------------------------------------------------------

double CollisionOracleResult::first_k_alone(std::uint64_t k) const {
  if (k < 1 || k > p_first_k_alone.size()) throw DomainError("k must lie in [1, m]");
  return p_first_k_alone[k - 1];
}

double CollisionOracleResult::min_binmates(std::uint64_t k) const {
  if (k < 1) throw DomainError("k must be >= 1");
  if (k > p_min_binmates.size()) return 0.0;
  return p_min_binmates[k - 1];
}

namespace {

// Accumulates per-assignment statistics: the first feature that is alone (m if
// none) and the smallest occupied bin.
struct OracleTally {
  std::uint64_t m;
  std::vector<double> first_alone;  // size m+1
  std::vector<double> min_size;     // size m+1
  double total = 0.0;

  explicit OracleTally(std::uint64_t m_) : m(m_), first_alone(m_ + 1, 0.0), min_size(m_ + 1, 0.0) {}

  void add(std::uint64_t first, std::uint64_t smallest, double weight) {
    first_alone[first] += weight;
    min_size[smallest] += weight;
    total += weight;
  }

  CollisionOracleResult finish(std::uint64_t n, bool exact, std::uint64_t samples) const {
    CollisionOracleResult r;
    r.m = m;
    r.n = n;
    r.exact = exact;
    r.samples = samples;
    r.p_first_k_alone.resize(m);
    double run = 0.0;
    for (std::uint64_t k = 1; k <= m; ++k) {
      run += first_alone[k - 1];
      r.p_first_k_alone[k - 1] = run / total;
    }
    r.p_some_alone = r.p_first_k_alone[m - 1];
    // every feature has >= k-1 binmates  <=>  smallest bin >= k
    r.p_min_binmates.resize(m);
    double tail = 0.0;
    for (std::uint64_t k = m; k >= 1; --k) {
      tail += min_size[k];
      r.p_min_binmates[k - 1] = tail / total;
    }
    return r;
  }
};

std::optional<std::uint64_t> checked_pow(std::uint64_t n, std::uint64_t m, std::uint64_t limit) {
  std::uint64_t p = 1;
  for (std::uint64_t i = 0; i < m; ++i) {
    if (p > limit / n) return std::nullopt;
    p *= n;
  }
  return p;
}

CollisionOracleResult oracle_exhaustive(std::uint64_t m, std::uint64_t n) {
  constexpr std::uint64_t kLimit = 10'000'000;
  const auto total = checked_pow(n, m, kLimit);
  if (!total)
    throw DomainError("exhaustive oracle needs n^m <= 1e7 (m=" + std::to_string(m) + ", n=" + std::to_string(n) +
                      "); use monte_carlo or partition mode");
  OracleTally tally(m);
  std::vector<std::uint64_t> a(m, 0);
  std::vector<std::uint32_t> count(n, 0);
  count[0] = static_cast<std::uint32_t>(m);
  for (std::uint64_t s = 0; s < *total; ++s) {
    std::uint64_t first = m, smallest = m;
    for (std::uint64_t j = 0; j < m; ++j) {
      const std::uint64_t c = count[a[j]];
      if (c == 1 && first == m) first = j;
      smallest = std::min(smallest, c);
    }
    tally.add(first, smallest, 1.0);
    // odometer step
    for (std::uint64_t j = 0; j < m; ++j) {
      --count[a[j]];
      if (++a[j] < n) {
        ++count[a[j]];
        break;
      }
      a[j] = 0;
      ++count[0];
    }
  }
  return tally.finish(n, true, *total);
}

CollisionOracleResult oracle_partition(std::uint64_t m, std::uint64_t n) {
  if (m > 24) throw DomainError("partition oracle supports m <= 24; use monte_carlo");
  constexpr std::uint64_t kMaxLeaves = 50'000'000;
  const std::uint64_t max_blocks = std::min(m, n);

  // Weight of a partition with b blocks: n(n-1)...(n-b+1) labelings out of n^m.
  // Integer arithmetic when n^m fits, so small cases are exact.
  const auto total = checked_pow(n, m, std::uint64_t{1} << 62);
  std::vector<double> weight(max_blocks + 1, 0.0);
  for (std::uint64_t b = 1; b <= max_blocks; ++b) {
    if (total) {
      std::uint64_t f = 1;
      for (std::uint64_t i = 0; i < b; ++i) f *= (n - i);
      weight[b] = static_cast<double>(f);
    } else {
      double ln_w = 0.0;
      for (std::uint64_t i = 0; i < b; ++i) ln_w += std::log(static_cast<double>(n - i));
      weight[b] = std::exp(ln_w - static_cast<double>(m) * std::log(static_cast<double>(n)));
    }
  }

  OracleTally tally(m);
  std::vector<std::uint64_t> rgs(m, 0);
  std::vector<std::uint64_t> size(max_blocks, 0);
  std::uint64_t leaves = 0;

  std::function<void(std::uint64_t, std::uint64_t)> rec = [&](std::uint64_t j, std::uint64_t blocks) {
    if (j == m) {
      if (++leaves > kMaxLeaves) throw DomainError("partition oracle state space too large; use monte_carlo");
      std::uint64_t first = m, smallest = m;
      for (std::uint64_t i = 0; i < m; ++i) {
        const std::uint64_t c = size[rgs[i]];
        if (c == 1 && first == m) first = i;
      }
      for (std::uint64_t b = 0; b < blocks; ++b) smallest = std::min(smallest, size[b]);
      tally.add(first, smallest, weight[blocks]);
      return;
    }
    const std::uint64_t limit = std::min(blocks + 1, max_blocks);
    for (std::uint64_t b = 0; b < limit; ++b) {
      rgs[j] = b;
      ++size[b];
      rec(j + 1, std::max(blocks, b + 1));
      --size[b];
    }
  };
  // feature 0 always opens block 0
  rgs[0] = 0;
  size[0] = 1;
  rec(1, 1);
  return tally.finish(n, true, total.value_or(0));
}

CollisionOracleResult oracle_monte_carlo(std::uint64_t m, std::uint64_t n, const MonteCarlo& mc) {
  if (mc.trials < 1) throw DomainError("monte_carlo trials must be >= 1");
  Rng rng(derive_seed(mc.seed, "collision-oracle"));
  OracleTally tally(m);
  std::vector<std::pair<std::uint64_t, std::uint64_t>> bins(m);
  std::vector<std::uint64_t> sz(m);
  for (std::uint64_t t = 0; t < mc.trials; ++t) {
    for (std::uint64_t j = 0; j < m; ++j) bins[j] = {rng.below(n), j};
    std::sort(bins.begin(), bins.end());
    std::uint64_t smallest = m;
    for (std::uint64_t i = 0; i < m;) {
      std::uint64_t e = i;
      while (e < m && bins[e].first == bins[i].first) ++e;
      for (std::uint64_t x = i; x < e; ++x) sz[bins[x].second] = e - i;
      smallest = std::min(smallest, e - i);
      i = e;
    }
    std::uint64_t first = m;
    for (std::uint64_t j = 0; j < m; ++j)
      if (sz[j] == 1) {
        first = j;
        break;
      }
    tally.add(first, smallest, 1.0);
  }
  return tally.finish(n, false, mc.trials);
}

}  // namespace

CollisionOracleResult collision_oracle(std::uint64_t m, std::uint64_t n, const OracleMode& mode) {
  require_hashing(m, n);
  return std::visit(
      [&](const auto& md) -> CollisionOracleResult {
        using T = std::decay_t<decltype(md)>;
        if constexpr (std::is_same_v<T, Exhaustive>) return oracle_exhaustive(m, n);
        else if constexpr (std::is_same_v<T, Partition>) return oracle_partition(m, n);
        else return oracle_monte_carlo(m, n, md);
      },
      mode);
}

// ---- splitting -------------------------------------------------------------------

bool SplittingComparison::holds() const { return max_difference <= bound.value() + allowance; }

namespace {

void validate_splitting(std::uint64_t M, std::uint64_t F, std::uint64_t d,
                        const std::vector<std::vector<std::int64_t>>& v) {
  if (M < 2) throw DomainError("M must be > 1");
  if (F < 1) throw DomainError("F must be > 0");
  if (d < 1) throw DomainError("d must be > 0");
  if (v.empty()) throw DomainError("K must be > 0 (no known vectors given)");
  for (const auto& vk : v) {
    if (vk.size() != d) throw DomainError("known vector has " + std::to_string(vk.size()) + " entries, d=" + std::to_string(d));
    std::int64_t sum = 0;
    for (auto x : vk) {
      if (x < 0) throw DomainError("known vector entries must be >= 0");
      sum += x;
    }
    if (static_cast<std::uint64_t>(sum) != F) throw DomainError("known vector must have l1 norm F");
  }
}

// All compositions of total into d nonnegative parts.
void compositions(std::uint64_t total, std::uint64_t d, std::vector<std::vector<std::int64_t>>& out,
                  std::uint64_t limit) {
  std::vector<std::int64_t> cur(d, 0);
  std::function<void(std::uint64_t, std::uint64_t)> rec = [&](std::uint64_t i, std::uint64_t left) {
    if (i + 1 == d) {
      cur[i] = static_cast<std::int64_t>(left);
      if (out.size() >= limit) throw DomainError("splitting_exact outcome space too large; use monte carlo");
      out.push_back(cur);
      return;
    }
    for (std::uint64_t x = 0; x <= left; ++x) {
      cur[i] = static_cast<std::int64_t>(x);
      rec(i + 1, left - x);
    }
  };
  rec(0, total);
}

double multinomial_uniform(const std::vector<std::int64_t>& s, std::uint64_t draws, std::uint64_t d) {
  double ln_p = std::lgamma(static_cast<double>(draws) + 1) - static_cast<double>(draws) * std::log(static_cast<double>(d));
  for (auto x : s) {
    if (x < 0) return 0.0;
    ln_p -= std::lgamma(static_cast<double>(x) + 1);
  }
  return std::exp(ln_p);
}

}  // namespace

SplittingComparison splitting_exact(std::uint64_t M, std::uint64_t F, std::uint64_t d,
                                    const std::vector<std::vector<std::int64_t>>& v) {
  validate_splitting(M, F, d, v);
  constexpr std::uint64_t kLimit = 2'000'000;
  std::vector<std::vector<std::int64_t>> outcomes;
  compositions(M * F, d, outcomes, kLimit);

  // per round: (p_world1, p_world2) for every outcome
  std::vector<std::vector<std::pair<double, double>>> rounds;
  for (const auto& vk : v) {
    std::vector<std::pair<double, double>> pr;
    pr.reserve(outcomes.size());
    for (const auto& s : outcomes) {
      std::vector<std::int64_t> rest(d);
      for (std::uint64_t i = 0; i < d; ++i) rest[i] = s[i] - vk[i];
      pr.emplace_back(multinomial_uniform(s, M * F, d), multinomial_uniform(rest, (M - 1) * F, d));
    }
    rounds.push_back(std::move(pr));
  }

  double total_outcomes = 1.0;
  for (std::size_t k = 0; k < v.size(); ++k) total_outcomes *= static_cast<double>(outcomes.size());
  if (total_outcomes > static_cast<double>(kLimit)) throw DomainError("splitting_exact outcome space too large; use monte carlo");

  SplittingComparison out;
  out.bound = lemma3_bound(M, F, d, v.size());
  out.outcomes = static_cast<std::uint64_t>(total_outcomes);
  std::function<void(std::size_t, double, double)> rec = [&](std::size_t k, double a, double b) {
    if (k == rounds.size()) {
      out.max_difference = std::max(out.max_difference, std::fabs(a - b));
      return;
    }
    for (const auto& [pa, pb] : rounds[k]) rec(k + 1, a * pa, b * pb);
  };
  rec(0, 1.0, 1.0);
  return out;
}

SplittingComparison splitting_monte_carlo(std::uint64_t M, std::uint64_t F, std::uint64_t d,
                                          const std::vector<std::vector<std::int64_t>>& v,
                                          std::uint64_t trials, std::uint64_t seed) {
  validate_splitting(M, F, d, v);
  if (trials < 1) throw DomainError("trials must be >= 1");
  Rng rng(derive_seed(seed, "splitting-oracle"));
  const std::size_t K = v.size();
  std::map<std::vector<std::int64_t>, std::pair<std::uint64_t, std::uint64_t>> freq;
  std::vector<std::int64_t> key(K * d);
  for (int world = 0; world < 2; ++world) {
    for (std::uint64_t t = 0; t < trials; ++t) {
      std::fill(key.begin(), key.end(), 0);
      for (std::size_t k = 0; k < K; ++k) {
        const std::uint64_t draws = world == 0 ? M * F : (M - 1) * F;
        for (std::uint64_t i = 0; i < draws; ++i) ++key[k * d + rng.below(d)];
        if (world == 1)
          for (std::uint64_t i = 0; i < d; ++i) key[k * d + i] += v[k][i];
      }
      auto& slot = freq[key];
      (world == 0 ? slot.first : slot.second) += 1;
    }
  }
  SplittingComparison out;
  out.bound = lemma3_bound(M, F, d, K);
  out.outcomes = freq.size();
  const double tr = static_cast<double>(trials);
  double p_max = 0.0;
  for (const auto& [_, c] : freq) {
    const double a = static_cast<double>(c.first) / tr, b = static_cast<double>(c.second) / tr;
    out.max_difference = std::max(out.max_difference, std::fabs(a - b));
    p_max = std::max({p_max, a, b});
  }
  // five standard deviations of a difference of two frequencies, plus the max-over-outcomes slack
  out.allowance = 5.0 * std::sqrt(2.0 * std::max(p_max, 1.0 / tr) / tr);
  return out;
}

// ---- planner -------------------------------------------------------------------

double parse_log10_probability(std::string_view text) {
  std::string s(text);
  s.erase(0, s.find_first_not_of(" \t"));
  s.erase(s.find_last_not_of(" \t") + 1);
  if (s.empty()) throw DomainError("empty probability");
  const auto epos = s.find_first_of("eE");
  const std::string mant_str = s.substr(0, epos);
  double mant = 0.0;
  long long exp10 = 0;
  try {
    std::size_t used = 0;
    mant = std::stod(mant_str, &used);
    if (used != mant_str.size()) throw std::invalid_argument("trailing");
    if (epos != std::string::npos) {
      const std::string exp_str = s.substr(epos + 1);
      exp10 = std::stoll(exp_str, &used);
      if (used != exp_str.size()) throw std::invalid_argument("trailing");
    }
  } catch (const std::exception&) {
    throw DomainError("cannot parse probability '" + s + "'");
  }
  if (!(mant > 0.0) || !std::isfinite(mant)) throw DomainError("probability must be > 0: '" + s + "'");
  return std::log10(mant) + static_cast<double>(exp10);
}

PlanResult plan_bins(std::uint64_t m, const PlanTarget& target) {
  if (m < 1) throw DomainError("m must be >= 1");
  double goal = 0.0;
  std::uint64_t hi = std::uint64_t{1} << 53;  // beyond this n is not exactly representable
  bool capped_by_domain = false;
  std::function<LogProb(std::uint64_t)> eval;

  if (const auto* t = std::get_if<MaxP1>(&target)) {
    goal = t->log10;
    eval = [m](std::uint64_t n) { return lemma1a_bound(m, n); };
  } else if (const auto* t2 = std::get_if<MaxP2>(&target)) {
    goal = t2->log10;
    const std::uint64_t k = t2->k;
    if (k < 1 || k > m) throw DomainError("k must lie in [1, m]");
    eval = [m, k](std::uint64_t n) { return lemma1b_bound(m, n, k); };
  } else {
    const auto& t3 = std::get<MinCollisions>(target);
    goal = t3.log10;
    const std::uint64_t k = t3.k;
    if (k < 1) throw DomainError("k must be >= 1");
    hi = m / k;
    capped_by_domain = true;
    if (hi < 2) throw DomainError("min-collisions target unachievable: k <= m/n fails already at n=2");
    eval = [m, k](std::uint64_t n) { return lemma2_bound(m, n, k).complement; };
  }

  std::map<std::uint64_t, LogProb> probes;
  auto ok = [&](std::uint64_t n) {
    auto it = probes.find(n);
    if (it == probes.end()) it = probes.emplace(n, eval(n)).first;
    return it->second.zero || it->second.log10 <= goal;
  };

  if (!ok(2)) throw DomainError("target unachievable: bound at n=2 is " + probes.at(2).scientific());
  std::uint64_t lo = 2;
  if (ok(hi)) {
    if (!capped_by_domain) throw DomainError("target is met for every n; the bound never exceeds it");
    lo = hi;
  } else {
    // invariant: ok(lo), !ok(hi)
    while (hi - lo > 1) {
      const std::uint64_t mid = lo + (hi - lo) / 2;
      (ok(mid) ? lo : hi) = mid;
    }
  }

  // the bound must be nondecreasing in n over every probed point
  double prev = -std::numeric_limits<double>::infinity();
  for (const auto& [n, lp] : probes) {
    const double x = lp.zero ? -std::numeric_limits<double>::infinity() : lp.log10;
    if (x < prev - 1e-9 * std::max(1.0, std::fabs(prev)))
      throw InvariantError("bound not monotone in n near n=" + std::to_string(n));
    prev = x;
  }

  PlanResult r;
  r.n = lo;
  r.at_n = eval(lo);
  r.probes = probes.size();
  if (capped_by_domain && lo + 1 > m / std::get<MinCollisions>(target).k)
    r.at_n_plus_1 = LogProb::exact_zero();
  else
    r.at_n_plus_1 = eval(lo + 1);
  return r;
}

}  // namespace secvm
