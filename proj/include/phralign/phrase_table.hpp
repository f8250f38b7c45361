#ifndef PHRALIGN_PHRASE_TABLE_HPP
#define PHRALIGN_PHRASE_TABLE_HPP

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "phralign/core.hpp"
#include "phralign/empty_model.hpp"

namespace phralign {

struct ParallelExample {
  SourceSentence source;
  TargetSentence target;
  WordAlignment alignment;
};

/// Parses Pharaoh-style `i-j` pairs. `base` is 0 or 1; output is always 1-based.
inline WordAlignment parse_word_alignment(std::string_view line, int base = 1, std::size_t line_no = 0) {
  if (base != 0 && base != 1) throw Error(ErrorKind::invalid_argument, "alignment base must be 0 or 1");
  WordAlignment out;
  for (const auto& tok : detail::split_ws(line)) {
    auto parts = detail::split_on(tok, "-");
    auto s = parts.size() == 2 ? detail::parse_int(parts[0]) : std::nullopt;
    auto t = parts.size() == 2 ? detail::parse_int(parts[1]) : std::nullopt;
    if (!s || !t || *s < base || *t < base)
      throw Error(ErrorKind::malformed_alignment, "bad alignment point '" + tok + "'", line_no);
    out.emplace_back(static_cast<std::size_t>(*s - base + 1), static_cast<std::size_t>(*t - base + 1));
  }
  return out;
}

inline void check_alignment_range(const ParallelExample& ex, std::size_t line_no) {
  for (auto [s, t] : ex.alignment) {
    if (s < 1 || s > ex.source.size() || t < 1 || t > ex.target.size())
      throw Error(ErrorKind::malformed_corpus,
                  "alignment point " + std::to_string(s) + "-" + std::to_string(t) + " out of range", line_no);
  }
}

struct PhraseTableEntry {
  std::vector<std::string> source;
  std::vector<std::string> target;
  double forward_prob = 1.0;
};

class PhraseTable {
 public:
  /// Inserts an entry; a duplicate (source, target) keeps the larger probability.
  void add(PhraseTableEntry entry) {
    if (entry.source.empty() || entry.target.empty())
      throw Error(ErrorKind::invalid_argument, "phrase table entries need non-empty phrases");
    if (!(entry.forward_prob > 0.0 && entry.forward_prob <= 1.0))
      throw Error(ErrorKind::invalid_argument, "phrase probability must lie in (0,1]");
    max_source_len_ = std::max(max_source_len_, entry.source.size());
    auto& bucket = entries_[entry.source];
    for (auto& e : bucket) {
      if (e.target == entry.target) {
        e.forward_prob = std::max(e.forward_prob, entry.forward_prob);
        sort_bucket(bucket);
        return;
      }
    }
    bucket.push_back(std::move(entry));
    sort_bucket(bucket);
    ++size_;
  }

  /// Entries with exactly this source phrase, best first.
  const std::vector<PhraseTableEntry>& lookup(const std::vector<std::string>& source) const {
    static const std::vector<PhraseTableEntry> none;
    auto it = entries_.find(source);
    return it == entries_.end() ? none : it->second;
  }

  std::size_t max_source_len() const noexcept { return max_source_len_; }
  std::size_t size() const noexcept { return size_; }
  bool empty() const noexcept { return size_ == 0; }

  template <class F>
  void for_each(F&& f) const {
    for (const auto& [src, bucket] : entries_)
      for (const auto& e : bucket) f(e);
  }

 private:
  static void sort_bucket(std::vector<PhraseTableEntry>& bucket) {
    std::sort(bucket.begin(), bucket.end(), [](const auto& a, const auto& b) {
      if (a.forward_prob != b.forward_prob) return a.forward_prob > b.forward_prob;
      return a.target < b.target;
    });
  }

  std::map<std::vector<std::string>, std::vector<PhraseTableEntry>> entries_;
  std::size_t max_source_len_ = 0;
  std::size_t size_ = 0;
};

/// Enumerates phrase pairs consistent with the word alignment. Both phrase
/// edges must be aligned on each side, so unaligned words are only absorbed
/// when they sit strictly inside a consistent pair.
inline std::vector<std::pair<Span, Span>> consistent_phrase_pairs(const ParallelExample& ex,
                                                                  std::size_t max_phrase_len) {
  const std::size_t I = ex.source.size(), J = ex.target.size();
  std::vector<std::vector<std::size_t>> by_src(I + 1);
  std::vector<bool> src_aligned(I + 1, false);
  for (auto [s, t] : ex.alignment) {
    by_src[s].push_back(t);
    src_aligned[s] = true;
  }
  std::vector<std::pair<Span, Span>> out;
  for (std::size_t s1 = 1; s1 <= I; ++s1) {
    if (!src_aligned[s1]) continue;
    for (std::size_t s2 = s1; s2 <= I && s2 - s1 + 1 <= max_phrase_len; ++s2) {
      if (!src_aligned[s2]) continue;
      std::size_t t1 = J + 1, t2 = 0;
      for (std::size_t s = s1; s <= s2; ++s)
        for (auto t : by_src[s]) {
          t1 = std::min(t1, t);
          t2 = std::max(t2, t);
        }
      if (t2 - t1 + 1 > max_phrase_len) continue;
      bool consistent = true;
      for (auto [s, t] : ex.alignment)
        if (t >= t1 && t <= t2 && (s < s1 || s > s2)) {
          consistent = false;
          break;
        }
      if (consistent) out.push_back({{s1, s2}, {t1, t2}});
    }
  }
  return out;
}

inline PhraseTable extract_phrase_table(const std::vector<ParallelExample>& corpus, std::size_t max_phrase_len) {
  if (max_phrase_len < 1) throw Error(ErrorKind::invalid_argument, "max phrase length must be at least 1");
  using Phrase = std::vector<std::string>;
  std::map<Phrase, std::map<Phrase, std::size_t>> pair_counts;
  for (std::size_t n = 0; n < corpus.size(); ++n) {
    const auto& ex = corpus[n];
    check_alignment_range(ex, n + 1);
    for (auto [src, tgt] : consistent_phrase_pairs(ex, max_phrase_len)) {
      Phrase s(ex.source.tokens.begin() + (src.begin - 1), ex.source.tokens.begin() + src.end);
      Phrase t(ex.target.tokens.begin() + (tgt.begin - 1), ex.target.tokens.begin() + tgt.end);
      ++pair_counts[s][t];
    }
  }
  PhraseTable table;
  for (auto& [s, targets] : pair_counts) {
    std::size_t total = 0;
    for (auto& [t, c] : targets) total += c;
    for (auto& [t, c] : targets)
      table.add({s, t, static_cast<double>(c) / static_cast<double>(total)});
  }
  return table;
}

/// Reads `source ||| target ||| prob [||| ...]` lines. Blank lines are skipped.
inline PhraseTable load_phrase_table(std::istream& in) {
  PhraseTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    auto fields = detail::split_on(line, "|||");
    if (fields.size() < 3) throw Error(ErrorKind::format_error, "expected 'src ||| tgt ||| prob'", line_no);
    PhraseTableEntry e;
    e.source = detail::split_ws(fields[0]);
    e.target = detail::split_ws(fields[1]);
    auto p = detail::parse_double(fields[2]);
    if (!p) throw Error(ErrorKind::format_error, "unparseable probability", line_no);
    if (e.source.empty() || e.target.empty()) throw Error(ErrorKind::format_error, "empty phrase", line_no);
    if (!(*p > 0.0 && *p <= 1.0)) throw Error(ErrorKind::format_error, "probability outside (0,1]", line_no);
    e.forward_prob = *p;
    table.add(std::move(e));
  }
  return table;
}

inline void write_phrase_table(std::ostream& out, const PhraseTable& table) {
  char buf[64];
  table.for_each([&](const PhraseTableEntry& e) {
    std::snprintf(buf, sizeof buf, "%.10g", e.forward_prob);
    out << detail::join(e.source) << " ||| " << detail::join(e.target) << " ||| " << buf << '\n';
  });
}

/// Target words allowed as insertions (aligned to the empty source word),
/// most frequent first.
struct InsertionVocab {
  std::vector<std::pair<std::string, double>> words;

  bool contains(const std::string& w) const {
    return std::any_of(words.begin(), words.end(), [&](const auto& p) { return p.first == w; });
  }
  std::size_t size() const noexcept { return words.size(); }
};

inline InsertionVocab build_insertion_vocab(const std::vector<ParallelExample>& corpus, double threshold,
                                            std::size_t max_words) {
  if (!(threshold >= 0.0 && threshold <= 1.0))
    throw Error(ErrorKind::invalid_argument, "insertion threshold must lie in [0,1]");
  std::map<std::string, std::pair<std::size_t, std::size_t>> counts;  // occurrences, unaligned
  for (std::size_t n = 0; n < corpus.size(); ++n) {
    const auto& ex = corpus[n];
    check_alignment_range(ex, n + 1);
    std::vector<bool> aligned(ex.target.size() + 1, false);
    for (auto [s, t] : ex.alignment) aligned[t] = true;
    for (std::size_t j = 1; j <= ex.target.size(); ++j) {
      auto& c = counts[ex.target.at(j)];
      ++c.first;
      if (!aligned[j]) ++c.second;
    }
  }
  struct Candidate {
    std::string word;
    std::size_t freq;
    double prob;
  };
  std::vector<Candidate> cands;
  for (auto& [w, c] : counts) {
    double p = static_cast<double>(c.second) / static_cast<double>(c.first);
    if (p > threshold) cands.push_back({w, c.first, p});
  }
  std::stable_sort(cands.begin(), cands.end(), [](const auto& a, const auto& b) { return a.freq > b.freq; });
  if (cands.size() > max_words) cands.resize(max_words);
  InsertionVocab vocab;
  for (auto& c : cands) vocab.words.emplace_back(std::move(c.word), c.prob);
  return vocab;
}

/// Reads `word<TAB>prob` lines.
inline InsertionVocab load_insertion_vocab(std::istream& in) {
  InsertionVocab vocab;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    auto fields = detail::split_on(line, "\t");
    auto p = fields.size() == 2 ? detail::parse_double(fields[1]) : std::nullopt;
    if (!p || detail::trim(fields[0]).empty())
      throw Error(ErrorKind::format_error, "expected 'word<TAB>prob'", line_no);
    vocab.words.emplace_back(std::string(detail::trim(fields[0])), *p);
  }
  return vocab;
}

inline void write_insertion_vocab(std::ostream& out, const InsertionVocab& vocab) {
  char buf[64];
  for (const auto& [w, p] : vocab.words) {
    std::snprintf(buf, sizeof buf, "%.10g", p);
    out << w << '\t' << buf << '\n';
  }
}

enum class OptionKind { regular, omission, insertion };

inline const char* to_string(OptionKind k) {
  switch (k) {
    case OptionKind::regular: return "regular";
    case OptionKind::omission: return "omission";
    case OptionKind::insertion: return "insertion";
  }
  return "?";
}

/// A candidate translation of one source span. Options carry no score of
/// their own; the decoder prices them when they are applied.
struct TranslationOption {
  Span span;
  std::vector<std::string> target;
  OptionKind kind = OptionKind::regular;
  CoverageVector coverage;

  static TranslationOption regular(std::size_t I, Span span, std::vector<std::string> target) {
    return {span, std::move(target), OptionKind::regular, CoverageVector::with_span(I, span)};
  }
  static TranslationOption omission(std::size_t I, std::size_t i) {
    return {{i, i}, {}, OptionKind::omission, CoverageVector::with_span(I, {i, i})};
  }
  static TranslationOption insertion(std::size_t I, std::string word) {
    return {{0, 0}, {std::move(word)}, OptionKind::insertion, CoverageVector(I)};
  }

  bool operator==(const TranslationOption& o) const {
    return span == o.span && target == o.target && kind == o.kind;
  }
};

struct OptionLattice {
  std::size_t sentence_length = 0;
  std::vector<TranslationOption> options;

  /// Restores the canonical order: by span, then kind, then target.
  void normalize() {
    std::stable_sort(options.begin(), options.end(), [](const auto& a, const auto& b) {
      if (a.span != b.span) return a.span < b.span;
      if (a.kind != b.kind) return a.kind < b.kind;
      return a.target < b.target;
    });
    options.erase(std::unique(options.begin(), options.end()), options.end());
  }

  std::vector<const TranslationOption*> at(Span span) const {
    std::vector<const TranslationOption*> out;
    for (const auto& o : options)
      if (o.span == span) out.push_back(&o);
    return out;
  }

  std::size_t count(OptionKind kind) const {
    return static_cast<std::size_t>(
        std::count_if(options.begin(), options.end(), [kind](const auto& o) { return o.kind == kind; }));
  }

  std::size_t size() const noexcept { return options.size(); }
  bool empty() const noexcept { return options.empty(); }
};

struct OptionConfig {
  std::size_t options_per_span = 20;
};

inline OptionLattice collect_options(const SourceSentence& x, const PhraseTable& table,
                                     const InsertionVocab& insertions, const OptionConfig& config = {}) {
  const std::size_t I = x.size();
  if (I == 0) throw Error(ErrorKind::invalid_argument, "cannot collect options for an empty sentence");
  OptionLattice lattice{I, {}};
  for (std::size_t b = 1; b <= I; ++b) {
    std::vector<std::string> phrase;
    for (std::size_t e = b; e <= I && e - b + 1 <= table.max_source_len(); ++e) {
      phrase.push_back(x.at(e));
      const auto& entries = table.lookup(phrase);
      for (std::size_t k = 0; k < entries.size() && k < config.options_per_span; ++k)
        lattice.options.push_back(TranslationOption::regular(I, {b, e}, entries[k].target));
    }
  }
  for (const auto& [w, p] : insertions.words) lattice.options.push_back(TranslationOption::insertion(I, w));
  lattice.normalize();
  return lattice;
}

template <EmptyPhraseModel Model>
OptionLattice add_omission_options(OptionLattice lattice, const SourceSentence& x, const Model& model,
                                   double threshold) {
  for (std::size_t i = 1; i <= x.size(); ++i) {
    if (model.score_omission(x, i) >= threshold)
      lattice.options.push_back(TranslationOption::omission(lattice.sentence_length, i));
  }
  lattice.normalize();
  return lattice;
}

}  // namespace phralign

#endif
