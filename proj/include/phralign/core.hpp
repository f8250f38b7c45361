#ifndef PHRALIGN_CORE_HPP
#define PHRALIGN_CORE_HPP

// Shared domain types. Every public interface speaks 1-based positions;
// position 0 stands for the virtual empty word on either side.

#include <algorithm>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "phralign/detail/strings.hpp"
#include "phralign/error.hpp"

namespace phralign {

struct SourceSentence {
  std::vector<std::string> tokens;

  std::size_t size() const noexcept { return tokens.size(); }
  /// 1-based access.
  const std::string& at(std::size_t i) const { return tokens.at(i - 1); }
  bool operator==(const SourceSentence&) const = default;
};

struct TargetSentence {
  std::vector<std::string> tokens;

  std::size_t size() const noexcept { return tokens.size(); }
  const std::string& at(std::size_t j) const { return tokens.at(j - 1); }
  bool operator==(const TargetSentence&) const = default;
};

inline SourceSentence make_source(std::string_view line) { return {detail::split_ws(line)}; }
inline TargetSentence make_target(std::string_view line) { return {detail::split_ws(line)}; }

/// Inclusive 1-based span; (0,0) denotes the empty word.
struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;

  bool empty_word() const noexcept { return begin == 0 && end == 0; }
  std::size_t length() const noexcept { return empty_word() ? 0 : end - begin + 1; }
  bool contains(const Span& o) const noexcept { return begin <= o.begin && o.end <= end; }
  bool intersects(const Span& o) const noexcept { return begin <= o.end && o.begin <= end; }
  auto operator<=>(const Span&) const = default;
};

struct AlignmentLink {
  std::size_t src_begin = 0;
  std::size_t src_end = 0;
  std::size_t tgt_begin = 0;
  std::size_t tgt_end = 0;

  bool empty_source() const noexcept { return src_begin == 0 && src_end == 0; }
  bool empty_target() const noexcept { return tgt_begin == 0 && tgt_end == 0; }
  Span source_span() const noexcept { return {src_begin, src_end}; }
  Span target_span() const noexcept { return {tgt_begin, tgt_end}; }
  bool operator==(const AlignmentLink&) const = default;
};

/// Links in the order their target phrases were generated.
struct PhraseAlignment {
  std::vector<AlignmentLink> links;

  std::size_t size() const noexcept { return links.size(); }
  bool operator==(const PhraseAlignment&) const = default;
};

/// Word-level alignment points (source position, target position), both 1-based.
using WordAlignment = std::vector<std::pair<std::size_t, std::size_t>>;

class CoverageVector {
 public:
  CoverageVector() = default;

  explicit CoverageVector(std::size_t length) : length_(length), words_((length + 63) / 64, 0) {
    if (length == 0) throw Error(ErrorKind::invalid_argument, "coverage vector length must be positive");
  }

  /// Vector of `length` with exactly positions [span.begin, span.end] set.
  static CoverageVector with_span(std::size_t length, Span span) {
    CoverageVector c(length);
    if (!span.empty_word()) {
      if (span.begin < 1 || span.end < span.begin || span.end > length)
        throw Error(ErrorKind::invalid_argument, "span outside coverage vector");
      for (std::size_t i = span.begin; i <= span.end; ++i) c.set(i);
    }
    return c;
  }

  std::size_t size() const noexcept { return length_; }
  std::size_t covered_count() const noexcept { return count_; }
  bool full() const noexcept { return count_ == length_; }

  bool test(std::size_t i) const {
    check(i);
    return (words_[(i - 1) / 64] >> ((i - 1) % 64)) & 1u;
  }

  bool any_in(Span s) const {
    for (std::size_t i = s.begin; i <= s.end; ++i)
      if (test(i)) return true;
    return false;
  }
  bool all_in(Span s) const {
    for (std::size_t i = s.begin; i <= s.end; ++i)
      if (!test(i)) return false;
    return true;
  }

  bool disjoint(const CoverageVector& o) const {
    if (o.length_ != length_) throw Error(ErrorKind::invalid_argument, "coverage length mismatch");
    for (std::size_t w = 0; w < words_.size(); ++w)
      if (words_[w] & o.words_[w]) return false;
    return true;
  }

  std::vector<std::uint8_t> bits() const {
    std::vector<std::uint8_t> out(length_);
    for (std::size_t i = 1; i <= length_; ++i) out[i - 1] = test(i) ? 1 : 0;
    return out;
  }

  std::size_t hash() const noexcept {
    std::size_t h = length_;
    for (auto w : words_) h ^= std::hash<std::uint64_t>{}(w) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    return h;
  }

  bool operator==(const CoverageVector&) const = default;

  friend CoverageVector coverage_merge(const CoverageVector& a, const CoverageVector& b);

 private:
  void check(std::size_t i) const {
    if (i < 1 || i > length_) throw Error(ErrorKind::invalid_argument, "coverage position out of range");
  }
  void set(std::size_t i) {
    auto& w = words_[(i - 1) / 64];
    auto bit = std::uint64_t{1} << ((i - 1) % 64);
    if (!(w & bit)) {
      w |= bit;
      ++count_;
    }
  }

  std::size_t length_ = 0;
  std::size_t count_ = 0;
  std::vector<std::uint64_t> words_;
};

inline CoverageVector coverage_new(std::size_t length) { return CoverageVector(length); }

/// Bitwise OR of two disjoint coverage vectors.
inline CoverageVector coverage_merge(const CoverageVector& a, const CoverageVector& b) {
  if (a.length_ != b.length_) throw Error(ErrorKind::invalid_argument, "coverage length mismatch");
  CoverageVector out = a;
  for (std::size_t w = 0; w < a.words_.size(); ++w) {
    if (a.words_[w] & b.words_[w])
      throw Error(ErrorKind::coverage_conflict, "source position covered twice");
    out.words_[w] |= b.words_[w];
  }
  out.count_ = a.count_ + b.count_;
  return out;
}

enum class ViolationKind { gap, overlap, out_of_range, double_empty, multiword_omission };

struct Violation {
  ViolationKind kind;
  std::string message;
};

struct AlignmentReport {
  std::vector<Violation> violations;

  bool ok() const noexcept { return violations.empty(); }
  bool has(ViolationKind kind) const {
    return std::any_of(violations.begin(), violations.end(),
                       [kind](const Violation& v) { return v.kind == kind; });
  }
};

/// Checks that `z` partitions source positions 1..I and target positions 1..J.
inline AlignmentReport alignment_validate(const PhraseAlignment& z, std::size_t I, std::size_t J) {
  AlignmentReport report;
  auto add = [&](ViolationKind k, std::string msg) { report.violations.push_back({k, std::move(msg)}); };
  std::vector<int> src_hits(I + 1, 0), tgt_hits(J + 1, 0);

  for (std::size_t k = 0; k < z.links.size(); ++k) {
    const auto& l = z.links[k];
    std::string where = "link " + std::to_string(k + 1);
    bool src_ok = l.empty_source() || (1 <= l.src_begin && l.src_begin <= l.src_end && l.src_end <= I);
    bool tgt_ok = l.empty_target() || (1 <= l.tgt_begin && l.tgt_begin <= l.tgt_end && l.tgt_end <= J);
    if (l.empty_source() && l.empty_target()) {
      add(ViolationKind::double_empty, where + ": both sides empty");
      continue;
    }
    if (!src_ok) add(ViolationKind::out_of_range, where + ": source span out of range");
    if (!tgt_ok) add(ViolationKind::out_of_range, where + ": target span out of range");
    if (src_ok && l.empty_target() && l.src_begin != l.src_end)
      add(ViolationKind::multiword_omission, where + ": omitted source phrase longer than one word");
    if (src_ok && !l.empty_source())
      for (std::size_t i = l.src_begin; i <= l.src_end; ++i) ++src_hits[i];
    if (tgt_ok && !l.empty_target())
      for (std::size_t j = l.tgt_begin; j <= l.tgt_end; ++j) ++tgt_hits[j];
  }
  for (std::size_t i = 1; i <= I; ++i) {
    if (src_hits[i] == 0) add(ViolationKind::gap, "source position " + std::to_string(i) + " uncovered");
    if (src_hits[i] > 1) add(ViolationKind::overlap, "source position " + std::to_string(i) + " covered more than once");
  }
  for (std::size_t j = 1; j <= J; ++j) {
    if (tgt_hits[j] == 0) add(ViolationKind::gap, "target position " + std::to_string(j) + " uncovered");
    if (tgt_hits[j] > 1) add(ViolationKind::overlap, "target position " + std::to_string(j) + " covered more than once");
  }
  return report;
}

/// `i_b:i_e-j_b:j_e` tuples separated by single spaces.
inline std::string format_alignment(const PhraseAlignment& z) {
  std::string out;
  for (std::size_t k = 0; k < z.links.size(); ++k) {
    const auto& l = z.links[k];
    if (k) out += ' ';
    out += std::to_string(l.src_begin) + ':' + std::to_string(l.src_end) + '-' +
           std::to_string(l.tgt_begin) + ':' + std::to_string(l.tgt_end);
  }
  return out;
}

inline PhraseAlignment parse_alignment(std::string_view line, std::size_t line_no = 0) {
  PhraseAlignment z;
  for (const auto& tok : detail::split_ws(line)) {
    auto halves = detail::split_on(tok, "-");
    if (halves.size() != 2) throw Error(ErrorKind::format_error, "bad alignment link '" + tok + "'", line_no);
    std::size_t v[4];
    for (int h = 0; h < 2; ++h) {
      auto parts = detail::split_on(halves[h], ":");
      if (parts.size() != 2) throw Error(ErrorKind::format_error, "bad alignment link '" + tok + "'", line_no);
      for (int p = 0; p < 2; ++p) {
        auto n = detail::parse_int(parts[p]);
        if (!n || *n < 0) throw Error(ErrorKind::format_error, "bad alignment link '" + tok + "'", line_no);
        v[h * 2 + p] = static_cast<std::size_t>(*n);
      }
    }
    z.links.push_back({v[0], v[1], v[2], v[3]});
  }
  return z;
}

}  // namespace phralign

#endif
