#ifndef PHRALIGN_SCORER_HPP
#define PHRALIGN_SCORER_HPP

// Incremental target-side scorers. A scorer prices each target word given
// the source and the target prefix; the decoder only talks to it through
// begin/extend/end, so any model obeying that contract can be plugged in.

#include <cmath>
#include <concepts>
#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "phralign/core.hpp"

namespace phralign {

/// Opaque incremental state. Equal states must score every continuation
/// identically; the decoder recombines hypotheses on that basis.
struct ScorerState {
  std::vector<std::int32_t> context;
  std::size_t length = 0;  // target words consumed so far

  bool operator==(const ScorerState&) const = default;

  std::size_t hash() const noexcept {
    std::size_t h = length * 0x100000001b3ULL;
    for (auto c : context) h ^= std::hash<std::int32_t>{}(c) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    return h;
  }
};

template <class S>
concept SequenceScorer = requires(const S& s, const SourceSentence& x, const ScorerState& st, std::string_view tok) {
  { s.begin(x) } -> std::same_as<ScorerState>;
  { s.extend(st, tok) } -> std::same_as<std::pair<ScorerState, double>>;
  { s.end(st) } -> std::convertible_to<double>;
};

/// Sum of extend log probabilities over `tokens` plus the end-of-sentence term.
template <SequenceScorer S>
double score_sequence(const S& scorer, const SourceSentence& x, const std::vector<std::string>& tokens) {
  auto state = scorer.begin(x);
  double total = 0.0;
  for (const auto& t : tokens) {
    auto [next, lp] = scorer.extend(state, t);
    total += lp;
    state = std::move(next);
  }
  return total + scorer.end(state);
}

/// Every word (and end-of-sentence) has probability 1/(V+1).
class UniformScorer {
 public:
  explicit UniformScorer(std::size_t vocab_size) : logp_(-std::log(static_cast<double>(vocab_size) + 1.0)) {
    if (vocab_size == 0) throw Error(ErrorKind::invalid_argument, "uniform scorer needs a non-empty vocabulary");
  }

  ScorerState begin(const SourceSentence&) const { return {}; }
  std::pair<ScorerState, double> extend(const ScorerState& st, std::string_view) const {
    return {ScorerState{{}, st.length + 1}, logp_};
  }
  double end(const ScorerState&) const { return logp_; }

 private:
  double logp_;
};

/// Add-k smoothed n-gram model with backoff to shorter contexts when a
/// context was never observed. The vocabulary is the training words plus
/// a reserved unknown symbol; end-of-sentence is an extra outcome.
class NgramScorer {
 public:
  static constexpr std::int32_t kUnk = 0;
  static constexpr std::int32_t kBos = 1;
  static constexpr std::int32_t kEos = 2;
  static constexpr const char* kUnkToken = "<unk>";
  static constexpr const char* kBosToken = "<s>";
  static constexpr const char* kEosToken = "</s>";

  using Ngram = std::vector<std::int32_t>;

  NgramScorer(std::size_t order, double k) : order_(order), k_(k) {
    if (order < 1) throw Error(ErrorKind::invalid_argument, "n-gram order must be at least 1");
    if (!(k > 0.0)) throw Error(ErrorKind::invalid_argument, "smoothing constant must be positive");
    words_ = {kUnkToken, kBosToken, kEosToken};
    for (std::int32_t id = 0; id < 3; ++id) ids_.emplace(words_[id], id);
  }

  std::size_t order() const noexcept { return order_; }
  double k() const noexcept { return k_; }
  /// Vocabulary size V, counting the unknown symbol but not sentence markers.
  std::size_t vocab_size() const noexcept { return words_.size() - 2; }

  std::int32_t id(std::string_view word) const {
    auto it = ids_.find(std::string(word));
    return it == ids_.end() ? kUnk : it->second;
  }
  const std::string& word(std::int32_t id) const { return words_.at(static_cast<std::size_t>(id)); }

  void add_sentence(const std::vector<std::string>& tokens) {
    std::vector<std::int32_t> seq(order_ - 1, kBos);
    for (const auto& t : tokens) seq.push_back(intern(t));
    seq.push_back(kEos);
    for (std::size_t p = order_ - 1; p < seq.size(); ++p) {
      for (std::size_t m = 1; m <= order_; ++m) {
        Ngram g(seq.begin() + static_cast<std::ptrdiff_t>(p + 1 - m), seq.begin() + static_cast<std::ptrdiff_t>(p + 1));
        add_count(g, 1.0);
      }
    }
  }

  /// Adds raw counts (used when loading a counts file).
  void add_count(const Ngram& g, double c) {
    counts_[g] += c;
    Ngram h(g.begin(), g.end() - 1);
    context_totals_[h] += c;
  }

  double prob(Ngram context, std::int32_t w) const {
    if (context.size() > order_ - 1) context.erase(context.begin(), context.end() - static_cast<std::ptrdiff_t>(order_ - 1));
    const double outcomes = static_cast<double>(vocab_size() + 1);
    for (;;) {
      auto ct = context_totals_.find(context);
      if (ct != context_totals_.end() && ct->second > 0.0) {
        Ngram g = context;
        g.push_back(w);
        auto c = counts_.find(g);
        double num = (c == counts_.end() ? 0.0 : c->second) + k_;
        return num / (ct->second + k_ * outcomes);
      }
      if (context.empty()) return 1.0 / outcomes;
      context.erase(context.begin());
    }
  }

  ScorerState begin(const SourceSentence&) const {
    return ScorerState{std::vector<std::int32_t>(order_ - 1, kBos), 0};
  }

  std::pair<ScorerState, double> extend(const ScorerState& st, std::string_view token) const {
    std::int32_t w = id(token);
    double lp = std::log(prob(st.context, w));
    ScorerState next{st.context, st.length + 1};
    if (!next.context.empty()) {
      next.context.erase(next.context.begin());
      next.context.push_back(w);
    }
    return {std::move(next), lp};
  }

  double end(const ScorerState& st) const { return std::log(prob(st.context, kEos)); }

  /// Every word id that extend can produce, plus end-of-sentence.
  std::vector<std::int32_t> outcomes() const {
    std::vector<std::int32_t> out{kUnk, kEos};
    for (std::int32_t id = 3; id < static_cast<std::int32_t>(words_.size()); ++id) out.push_back(id);
    return out;
  }

  const std::map<Ngram, double>& counts() const noexcept { return counts_; }

  std::int32_t intern(const std::string& w) {
    auto [it, inserted] = ids_.emplace(w, static_cast<std::int32_t>(words_.size()));
    if (inserted) words_.push_back(w);
    return it->second;
  }

 private:
  std::size_t order_;
  double k_;
  std::vector<std::string> words_;
  std::unordered_map<std::string, std::int32_t> ids_;
  std::map<Ngram, double> counts_;
  std::map<Ngram, double> context_totals_;
};

inline NgramScorer train_ngram_scorer(const std::vector<TargetSentence>& corpus, std::size_t order, double k) {
  if (corpus.empty()) throw Error(ErrorKind::no_data, "cannot train an n-gram scorer on an empty corpus");
  NgramScorer scorer(order, k);
  for (const auto& s : corpus) scorer.add_sentence(s.tokens);
  return scorer;
}

inline void write_ngram_scorer(std::ostream& out, const NgramScorer& scorer) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", scorer.k());
  out << "#phralign-ngram-counts v1\n";
  out << "order\t" << scorer.order() << '\n';
  out << "k\t" << buf << '\n';
  for (const auto& [g, c] : scorer.counts()) {
    for (std::size_t m = 0; m < g.size(); ++m) out << (m ? " " : "") << scorer.word(g[m]);
    std::snprintf(buf, sizeof buf, "%.17g", c);
    out << '\t' << buf << '\n';
  }
}

inline NgramScorer load_ngram_scorer(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  auto next_line = [&]() -> std::string {
    if (!std::getline(in, line)) throw Error(ErrorKind::format_error, "truncated n-gram counts header", line_no + 1);
    ++line_no;
    return line;
  };
  if (next_line() != "#phralign-ngram-counts v1")
    throw Error(ErrorKind::format_error, "missing n-gram counts header", line_no);
  auto header_value = [&](const char* key) {
    const std::string text = next_line();
    auto f = detail::split_on(text, "\t");
    auto v = f.size() == 2 && f[0] == key ? detail::parse_double(f[1]) : std::nullopt;
    if (!v) throw Error(ErrorKind::format_error, std::string("expected '") + key + "<TAB>value'", line_no);
    return *v;
  };
  double order = header_value("order");
  double k = header_value("k");
  if (order < 1 || order != std::floor(order)) throw Error(ErrorKind::format_error, "bad n-gram order", 2);

  // Two passes: words first so that ids are assigned in unigram order.
  std::vector<std::pair<std::vector<std::string>, double>> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    auto f = detail::split_on(line, "\t");
    auto c = f.size() == 2 ? detail::parse_double(f[1]) : std::nullopt;
    auto toks = f.size() == 2 ? detail::split_ws(f[0]) : std::vector<std::string>{};
    if (!c || toks.empty() || toks.size() > static_cast<std::size_t>(order))
      throw Error(ErrorKind::format_error, "expected 'ngram<TAB>count'", line_no);
    rows.emplace_back(std::move(toks), *c);
  }
  NgramScorer scorer(static_cast<std::size_t>(order), k);
  for (const auto& [toks, c] : rows) {
    NgramScorer::Ngram g;
    for (const auto& t : toks) g.push_back(scorer.intern(t));
    scorer.add_count(g, c);
  }
  return scorer;
}

/// Scorer whose log probabilities are read from an explicit table keyed by
/// (last `context_len` tokens, token). Lookups that miss fall back to the
/// defaults. It makes no normalization promise and exists so that search
/// results can be checked against hand-computed or brute-force values.
class TableScorer {
 public:
  static constexpr std::int32_t kUnknown = -1;
  static constexpr std::int32_t kStart = -2;

  TableScorer(std::size_t context_len, double default_logp, double default_end_logp)
      : context_len_(context_len), default_logp_(default_logp), default_end_(default_end_logp) {
    if (default_logp > 0.0 || default_end_logp > 0.0)
      throw Error(ErrorKind::invalid_argument, "log probabilities must be <= 0");
  }

  /// `context` holds the preceding tokens, most recent last; shorter than
  /// `context_len` only at the start of the sentence.
  void set(const std::vector<std::string>& context, const std::string& token, double logp) {
    check(logp);
    table_[key(context, intern(token))] = logp;
  }
  void set_end(const std::vector<std::string>& context, double logp) {
    check(logp);
    table_[key(context, kEnd)] = logp;
  }

  ScorerState begin(const SourceSentence&) const {
    return ScorerState{std::vector<std::int32_t>(context_len_, kStart), 0};
  }

  std::pair<ScorerState, double> extend(const ScorerState& st, std::string_view token) const {
    auto it = ids_.find(std::string(token));
    std::int32_t w = it == ids_.end() ? kUnknown : it->second;
    double lp = lookup(st.context, w, default_logp_);
    ScorerState next{st.context, st.length + 1};
    if (!next.context.empty()) {
      next.context.erase(next.context.begin());
      next.context.push_back(w);
    }
    return {std::move(next), lp};
  }

  double end(const ScorerState& st) const { return lookup(st.context, kEnd, default_end_); }

 private:
  static constexpr std::int32_t kEnd = -3;

  static void check(double logp) {
    if (!(logp <= 0.0)) throw Error(ErrorKind::invalid_argument, "log probabilities must be <= 0");
  }

  std::int32_t intern(const std::string& w) {
    auto [it, inserted] = ids_.emplace(w, static_cast<std::int32_t>(ids_.size()));
    return it->second;
  }

  std::vector<std::int32_t> key(const std::vector<std::string>& context, std::int32_t w) {
    if (context.size() > context_len_) throw Error(ErrorKind::invalid_argument, "context longer than context_len");
    std::vector<std::int32_t> k(context_len_ - context.size(), kStart);
    for (const auto& c : context) k.push_back(intern(c));
    k.push_back(w);
    return k;
  }

  double lookup(const std::vector<std::int32_t>& context, std::int32_t w, double fallback) const {
    std::vector<std::int32_t> k = context;
    k.push_back(w);
    auto it = table_.find(k);
    return it == table_.end() ? fallback : it->second;
  }

  std::size_t context_len_;
  double default_logp_;
  double default_end_;
  std::unordered_map<std::string, std::int32_t> ids_;
  std::map<std::vector<std::int32_t>, double> table_;
};

}  // namespace phralign

#endif
