#include "secvm/synthetic.hpp"

#include <algorithm>
#include <cmath>

#include "secvm/error.hpp"
#include "secvm/random.hpp"

namespace secvm {

void SyntheticSpec::validate() const {
  if (num_samples < 1) throw ConfigError("synthetic.num_samples must be >= 1");
  if (num_features < 4 || num_features > (std::uint64_t{1} << 32))
    throw ConfigError("synthetic.num_features must lie in [4, 2^32]");
  if (!(positive_fraction > 0.0 && positive_fraction < 1.0))
    throw ConfigError("synthetic.positive_fraction must lie in (0,1)");
  if (mean_tokens < 1) throw ConfigError("synthetic.mean_tokens must be >= 1");
  if (!(informative_fraction > 0.0 && informative_fraction < 1.0))
    throw ConfigError("synthetic.informative_fraction must lie in (0,1)");
  if (!(signal >= 0.0 && signal <= 1.0)) throw ConfigError("synthetic.signal must lie in [0,1]");
  if (!(zipf_exponent >= 0.0)) throw ConfigError("synthetic.zipf_exponent must be >= 0");
}

namespace {

class ZipfTable {
 public:
  ZipfTable(std::uint64_t size, double exponent) : cdf_(size) {
    double acc = 0.0;
    for (std::uint64_t r = 0; r < size; ++r) {
      acc += std::pow(static_cast<double>(r + 1), -exponent);
      cdf_[r] = acc;
    }
    for (double& c : cdf_) c /= acc;
  }

  std::uint64_t draw(Rng& rng) const {
    const double u = rng.uniform01();
    auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    return std::min<std::uint64_t>(static_cast<std::uint64_t>(it - cdf_.begin()), cdf_.size() - 1);
  }

 private:
  std::vector<double> cdf_;
};

}  // namespace

Dataset generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
  spec.validate();
  const std::uint64_t block = std::max<std::uint64_t>(
      1, static_cast<std::uint64_t>(std::llround(spec.informative_fraction * static_cast<double>(spec.num_features) / 2.0)));
  const std::uint64_t shared = spec.num_features - 2 * block;
  const ZipfTable informative(block, spec.zipf_exponent);
  const ZipfTable neutral(shared, spec.zipf_exponent);

  Rng rng(derive_seed(seed, "synthetic"));
  Dataset ds{{}, spec.num_features};
  ds.samples.reserve(spec.num_samples);
  const std::uint64_t lo = std::max<std::uint64_t>(1, spec.mean_tokens / 2);
  const std::uint64_t hi = spec.mean_tokens + spec.mean_tokens / 2;
  for (std::uint64_t i = 0; i < spec.num_samples; ++i) {
    const Label y = rng.bernoulli(spec.positive_fraction) ? Label::Positive : Label::Negative;
    const std::uint64_t tokens = lo + rng.below(hi - lo + 1);
    std::vector<SparseEntry> entries;
    entries.reserve(tokens);
    for (std::uint64_t t = 0; t < tokens; ++t) {
      std::uint64_t idx;
      if (rng.bernoulli(spec.signal))
        idx = (y == Label::Positive ? 0 : block) + informative.draw(rng);
      else
        idx = 2 * block + neutral.draw(rng);
      entries.push_back({static_cast<std::uint32_t>(idx), 1});
    }
    ds.samples.push_back({SparseVector::from_entries(std::move(entries)), y});
  }
  return ds;
}

SyntheticSpec synthetic_spec_from_json(const nlohmann::json& j) {
  SyntheticSpec s;
  auto field = [&](const char* name, auto& target) {
    if (!j.contains(name)) return;
    try {
      j.at(name).get_to(target);
    } catch (const nlohmann::json::exception&) {
      throw ConfigError(std::string("synthetic.") + name + ": wrong type");
    }
  };
  field("num_samples", s.num_samples);
  field("num_features", s.num_features);
  field("positive_fraction", s.positive_fraction);
  field("mean_tokens", s.mean_tokens);
  field("informative_fraction", s.informative_fraction);
  field("signal", s.signal);
  field("zipf_exponent", s.zipf_exponent);
  s.validate();
  return s;
}

nlohmann::json synthetic_spec_to_json(const SyntheticSpec& s) {
  return {{"num_samples", s.num_samples},       {"num_features", s.num_features},
          {"positive_fraction", s.positive_fraction}, {"mean_tokens", s.mean_tokens},
          {"informative_fraction", s.informative_fraction}, {"signal", s.signal},
          {"zipf_exponent", s.zipf_exponent}};
}

}  // namespace secvm
