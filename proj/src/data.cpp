#include "secvm/data.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "secvm/error.hpp"
#include "secvm/random.hpp"

namespace secvm {

Label label_from_int(long long v) {
  if (v == 1) return Label::Positive;
  if (v == -1) return Label::Negative;
  throw ConfigError("label must be -1 or +1, got " + std::to_string(v));
}

SparseVector::SparseVector(std::initializer_list<SparseEntry> entries)
    : SparseVector(from_entries(std::vector<SparseEntry>(entries))) {}

SparseVector SparseVector::from_entries(std::vector<SparseEntry> entries) {
  std::sort(entries.begin(), entries.end(),
            [](const SparseEntry& a, const SparseEntry& b) { return a.index < b.index; });
  SparseVector out;
  out.entries_.reserve(entries.size());
  for (const auto& e : entries) {
    if (!out.entries_.empty() && out.entries_.back().index == e.index) {
      out.entries_.back().value += e.value;
    } else {
      if (!out.entries_.empty() && out.entries_.back().value == 0) out.entries_.pop_back();
      out.entries_.push_back(e);
    }
  }
  if (!out.entries_.empty() && out.entries_.back().value == 0) out.entries_.pop_back();
  return out;
}

std::int64_t SparseVector::at(std::uint32_t index) const noexcept {
  auto it = std::lower_bound(entries_.begin(), entries_.end(), index,
                             [](const SparseEntry& e, std::uint32_t i) { return e.index < i; });
  return (it != entries_.end() && it->index == index) ? it->value : 0;
}

std::uint64_t SparseVector::l1_norm() const noexcept {
  std::uint64_t s = 0;
  for (const auto& e : entries_) s += static_cast<std::uint64_t>(e.value < 0 ? -e.value : e.value);
  return s;
}

std::uint64_t SparseVector::extent() const noexcept {
  return entries_.empty() ? 0 : std::uint64_t{entries_.back().index} + 1;
}

SparseVector SparseVector::scaled(std::int64_t factor) const {
  if (factor == 0) return {};
  SparseVector out = *this;
  for (auto& e : out.entries_) e.value *= factor;
  return out;
}

SparseVector operator+(const SparseVector& a, const SparseVector& b) {
  std::vector<SparseEntry> merged;
  merged.reserve(a.size() + b.size());
  merged.insert(merged.end(), a.entries_.begin(), a.entries_.end());
  merged.insert(merged.end(), b.entries_.begin(), b.entries_.end());
  return SparseVector::from_entries(std::move(merged));
}

namespace {

template <class T>
bool parse_number(std::string_view s, T& out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size();
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> tokens;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
    if (j > i) tokens.push_back(line.substr(i, j - i));
    i = j;
  }
  return tokens;
}

}  // namespace

Dataset parse_dataset(std::string_view text) {
  Dataset ds;
  bool have_header = false;
  std::uint64_t header_d = 0;
  std::uint64_t max_extent = 0;
  std::size_t line_no = 0;

  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

    auto tokens = split_ws(line);
    if (tokens.empty()) {
      if (eol == text.size()) break;
      continue;
    }
    if (tokens.front().front() == '#') {
      if (tokens.front() == "#d") {
        if (tokens.size() != 2 || !parse_number(tokens[1], header_d))
          throw ParseError(line_no, "malformed dimension header, expected \"#d <n>\"");
        if (!ds.samples.empty()) throw ParseError(line_no, "dimension header must precede samples");
        have_header = true;
      }
      continue;
    }

    long long raw_label = 0;
    if (!parse_number(tokens[0], raw_label) || (raw_label != 1 && raw_label != -1))
      throw ParseError(line_no, "label must be +1, 1 or -1, got \"" + std::string(tokens[0]) + "\"");

    std::vector<SparseEntry> entries;
    entries.reserve(tokens.size() - 1);
    for (std::size_t t = 1; t < tokens.size(); ++t) {
      auto tok = tokens[t];
      auto colon = tok.find(':');
      std::uint32_t idx = 0;
      std::int64_t val = 0;
      if (colon == std::string_view::npos || tok.front() == '+' || tok.front() == '-' ||
          !parse_number(tok.substr(0, colon), idx) || !parse_number(tok.substr(colon + 1), val))
        throw ParseError(line_no, "malformed feature token \"" + std::string(tok) + "\"");
      if (val == 0) throw ParseError(line_no, "zero feature value at index " + std::to_string(idx));
      if (have_header && idx >= header_d)
        throw ParseError(line_no, "feature index " + std::to_string(idx) + " exceeds #d " +
                                      std::to_string(header_d));
      entries.push_back({idx, val});
      max_extent = std::max<std::uint64_t>(max_extent, std::uint64_t{idx} + 1);
    }
    ds.samples.push_back({SparseVector::from_entries(std::move(entries)), label_from_int(raw_label)});
    if (eol == text.size()) break;
  }
  ds.num_raw_features = have_header ? header_d : max_extent;
  return ds;
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open dataset " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_dataset(buf.str());
  } catch (const ParseError& e) {
    throw ParseError(e.line(), path.string() + ": " + e.what());
  }
}

std::string serialize_dataset(const Dataset& dataset) {
  std::string out = "#d " + std::to_string(dataset.num_raw_features) + "\n";
  for (const auto& s : dataset.samples) {
    out += s.label == Label::Positive ? "+1" : "-1";
    for (const auto& e : s.features.entries()) {
      out += ' ';
      out += std::to_string(e.index);
      out += ':';
      out += std::to_string(e.value);
    }
    out += '\n';
  }
  return out;
}

std::pair<Dataset, Dataset> split_train_test(const Dataset& dataset, double p, std::uint64_t seed) {
  if (!(p > 0.0 && p < 1.0)) throw ConfigError("train fraction must lie in (0,1)");
  Rng rng(derive_seed(seed, "split"));
  Dataset train{{}, dataset.num_raw_features};
  Dataset test{{}, dataset.num_raw_features};
  for (const auto& s : dataset.samples) (rng.bernoulli(p) ? train : test).samples.push_back(s);
  return {std::move(train), std::move(test)};
}

}  // namespace secvm
