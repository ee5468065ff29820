#pragma once

#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace secvm {

enum class Label : std::int8_t { Negative = -1, Positive = 1 };

constexpr int to_int(Label y) noexcept { return static_cast<int>(y); }

// Throws ConfigError for anything other than -1 or +1.
Label label_from_int(long long v);

struct SparseEntry {
  std::uint32_t index;
  std::int64_t value;

  friend bool operator==(const SparseEntry&, const SparseEntry&) = default;
};

// Integer-valued sparse vector. Entries are kept sorted by index, indices are
// unique and no stored value is zero.
class SparseVector {
 public:
  SparseVector() = default;
  SparseVector(std::initializer_list<SparseEntry> entries);

  // Sorts, sums duplicate indices, drops entries that end up zero.
  static SparseVector from_entries(std::vector<SparseEntry> entries);

  std::span<const SparseEntry> entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }

  std::int64_t at(std::uint32_t index) const noexcept;
  std::uint64_t l1_norm() const noexcept;
  // 1 + largest index, 0 when empty.
  std::uint64_t extent() const noexcept;

  SparseVector scaled(std::int64_t factor) const;

  friend SparseVector operator+(const SparseVector& a, const SparseVector& b);
  friend bool operator==(const SparseVector&, const SparseVector&) = default;

 private:
  std::vector<SparseEntry> entries_;
};

struct Sample {
  SparseVector features;
  Label label = Label::Positive;

  friend bool operator==(const Sample&, const Sample&) = default;
};

struct Dataset {
  std::vector<Sample> samples;
  std::uint64_t num_raw_features = 0;

  std::size_t size() const noexcept { return samples.size(); }
  bool empty() const noexcept { return samples.empty(); }

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

// Line format: "<label> <idx>:<val> ...", label in {+1, -1, 1}. Lines starting
// with '#' are comments, except "#d <n>" which fixes the raw dimension.
// Throws ParseError naming the offending line.
Dataset parse_dataset(std::string_view text);

// Reads and parses a corpus file. Throws IoError when it cannot be opened.
Dataset load_dataset(const std::filesystem::path& path);

// Canonical text form: a "#d" header then one sample per line, entries in
// index order, positive label written as "+1".
std::string serialize_dataset(const Dataset& dataset);

// Independent Bernoulli(p) assignment of each sample to train.
std::pair<Dataset, Dataset> split_train_test(const Dataset& dataset, double p,
                                             std::uint64_t seed);

}  // namespace secvm
