#pragma once

#include <cstdint>

#include <json.hpp>

#include "secvm/data.hpp"

namespace secvm {

// Sparse count data with class-correlated vocabulary. The first
// informative_fraction/2 of the feature space leans positive, the next
// block leans negative, the rest is shared. Within each block feature
// popularity follows a Zipf law, so a few features carry most of the mass,
// as with word counts.
struct SyntheticSpec {
  std::uint64_t num_samples = 1000;
  std::uint64_t num_features = 10000;
  double positive_fraction = 0.5;
  std::uint32_t mean_tokens = 40;      // tokens per sample, uniform in [mean/2, 3 mean/2]
  double informative_fraction = 0.2;   // share of the vocabulary tied to a class
  double signal = 0.3;                 // probability a token comes from the own-class block
  double zipf_exponent = 1.0;

  void validate() const;
};

Dataset generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed);

SyntheticSpec synthetic_spec_from_json(const nlohmann::json& j);
nlohmann::json synthetic_spec_to_json(const SyntheticSpec& spec);

}  // namespace secvm
