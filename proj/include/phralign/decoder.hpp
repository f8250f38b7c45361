#ifndef PHRALIGN_DECODER_HPP
#define PHRALIGN_DECODER_HPP

// Deductive decoding over a phrase lattice. Items grow through three rules:
// Translate (apply a translation option), Push (put a constraint tag on the
// stack and emit it) and Pop (discard a matched open/close pair). Push of a
// close tag and the following Pop are forced moves and happen as soon as a
// constraint is fully covered; open tags are pushed together with the first
// Translate into their constraint.
//
// Items are organized by (covered source words, generated target words).
// The beam search visits target lengths in increasing order and expands only
// the best `beam_size` items of each length, across all coverage counts.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <optional>
#include <queue>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "phralign/constraints.hpp"
#include "phralign/core.hpp"
#include "phralign/empty_model.hpp"
#include "phralign/phrase_table.hpp"
#include "phralign/scorer.hpp"

namespace phralign {

struct DecoderConfig {
  std::size_t beam_size = 10;
  std::size_t max_target_len = 0;  // 0 means 2I + 10
  double length_penalty_alpha = 0.6;
  std::optional<std::size_t> max_insertions;  // unset means ceil(I/2)
  std::size_t max_consecutive_insertions = 2;
  double omission_threshold = 0.5;
  std::size_t options_per_span = 20;
  std::size_t oracle_cap = 10'000'000;  // brute-force item limit

  void validate() const {
    if (beam_size < 1) throw Error(ErrorKind::invalid_argument, "beam size must be at least 1");
    if (!(length_penalty_alpha >= 0.0)) throw Error(ErrorKind::invalid_argument, "alpha must be non-negative");
    if (!(omission_threshold >= 0.0)) throw Error(ErrorKind::invalid_argument, "omission threshold must be >= 0");
  }

  std::size_t target_limit(std::size_t I) const { return max_target_len ? max_target_len : 2 * I + 10; }
  std::size_t insertion_limit(std::size_t I) const { return max_insertions ? *max_insertions : (I + 1) / 2; }
};

/// Length-normalized score: raw / ((5 + n) / 6)^alpha.
inline double final_score(double raw_logp, std::size_t word_count, double alpha) {
  return raw_logp / std::pow((5.0 + static_cast<double>(word_count)) / 6.0, alpha);
}

struct TagToken {
  std::size_t node = 0;
  bool close = false;
  bool operator==(const TagToken&) const = default;
};

/// Marks target tokens that are constraint tags; node < 0 for ordinary words.
struct TagMark {
  int node = -1;
  bool close = false;
  bool is_tag() const noexcept { return node >= 0; }
  bool operator==(const TagMark&) const = default;
};

struct DecoderItem {
  CoverageVector coverage;
  std::vector<TagToken> tag_stack;
  std::vector<std::string> target_prefix;  // words and emitted tags
  std::vector<TagMark> prefix_marks;       // parallel to target_prefix
  PhraseAlignment alignment;               // target positions count words only
  ScorerState scorer_state;
  double logp = 0.0;
  std::size_t word_count = 0;
  std::size_t insertions = 0;
  std::size_t consecutive_insertions = 0;
};

struct Derivation {
  TargetSentence translation;  // tags included, in emission order
  std::vector<TagMark> marks;  // parallel to translation
  PhraseAlignment alignment;
  double score = 0.0;
  double raw_logp = 0.0;
  std::size_t word_count = 0;
  std::size_t insertions = 0;

  TargetSentence words() const {
    TargetSentence out;
    for (std::size_t k = 0; k < translation.size(); ++k)
      if (!marks[k].is_tag()) out.tokens.push_back(translation.tokens[k]);
    return out;
  }
};

struct DecodeStats {
  std::size_t items_created = 0;
  std::size_t items_pruned = 0;
  std::size_t items_recombined = 0;
  std::size_t items_expanded = 0;
  std::size_t translate_applications = 0;
  std::size_t push_applications = 0;
  std::size_t pop_applications = 0;
  std::size_t completed = 0;
};

/// Everything a rule needs besides the item: the sentence, its options and
/// constraints, the models, and per-sentence limits.
template <SequenceScorer Scorer, EmptyPhraseModel Empty>
class DecodeContext {
 public:
  DecodeContext(const SourceSentence& x, const OptionLattice& lattice, const ConstraintTree& tree,
                const Scorer& scorer, const Empty& empty_model, const DecoderConfig& config,
                const std::vector<std::string>* forced_target = nullptr)
      : x_(x), lattice_(lattice), tree_(tree), scorer_(scorer), config_(config), forced_(forced_target) {
    config.validate();
    if (x.size() == 0) throw Error(ErrorKind::invalid_argument, "cannot decode an empty sentence");
    if (lattice.sentence_length != x.size() || tree.sentence_length() != x.size())
      throw Error(ErrorKind::invalid_argument, "lattice, tree and sentence disagree on length");
    max_target_len_ = forced_ ? forced_->size() : config.target_limit(x.size());
    max_insertions_ = config.insertion_limit(x.size());
    omission_logp_.assign(x.size() + 1, -std::numeric_limits<double>::infinity());
    option_node_.resize(lattice.options.size(), ConstraintTree::root());
    for (std::size_t o = 0; o < lattice.options.size(); ++o) {
      const auto& opt = lattice.options[o];
      if (opt.kind == OptionKind::insertion) continue;
      if (opt.span.begin < 1 || opt.span.end > x.size())
        throw Error(ErrorKind::invalid_argument, "option span outside sentence");
      option_node_[o] = tree.innermost_for_span(opt.span);
      if (opt.kind == OptionKind::omission) omission_logp_[opt.span.begin] = std::log(empty_model.score_omission(x, opt.span.begin));
    }
  }

  const SourceSentence& source() const noexcept { return x_; }
  const OptionLattice& lattice() const noexcept { return lattice_; }
  const ConstraintTree& tree() const noexcept { return tree_; }
  const Scorer& scorer() const noexcept { return scorer_; }
  const DecoderConfig& config() const noexcept { return config_; }
  const std::vector<std::string>* forced_target() const noexcept { return forced_; }
  std::size_t max_target_len() const noexcept { return max_target_len_; }
  std::size_t max_insertions() const noexcept { return max_insertions_; }
  double omission_logp(std::size_t i) const { return omission_logp_.at(i); }
  std::size_t option_node(std::size_t o) const { return option_node_.at(o); }

  DecoderItem initial() const {
    DecoderItem item;
    item.coverage = CoverageVector(x_.size());
    item.tag_stack.push_back({ConstraintTree::root(), false});
    item.scorer_state = scorer_.begin(x_);
    return item;
  }

 private:
  const SourceSentence& x_;
  const OptionLattice& lattice_;
  const ConstraintTree& tree_;
  const Scorer& scorer_;
  const DecoderConfig& config_;
  const std::vector<std::string>* forced_;
  std::size_t max_target_len_ = 0;
  std::size_t max_insertions_ = 0;
  std::vector<double> omission_logp_;
  std::vector<std::size_t> option_node_;
};

namespace detail {

template <class Ctx>
std::optional<DecoderItem> translate_impl(const DecoderItem& item, const TranslationOption& opt, const Ctx& ctx,
                                          const char** why) {
  auto fail = [&](const char* reason) -> std::optional<DecoderItem> {
    if (why) *why = reason;
    return std::nullopt;
  };
  if (item.tag_stack.empty() || item.tag_stack.back().close) return fail("no open constraint on top of the stack");
  const std::size_t top = item.tag_stack.back().node;
  const std::size_t added_words = opt.target.size();
  if (item.word_count + added_words > ctx.max_target_len()) return fail("target length limit reached");

  if (opt.kind == OptionKind::insertion) {
    if (item.insertions + 1 > ctx.max_insertions()) return fail("insertion limit reached");
    if (item.consecutive_insertions + 1 > ctx.config().max_consecutive_insertions)
      return fail("consecutive insertion limit reached");
  } else {
    if (opt.span.begin < 1 || opt.span.end > item.coverage.size()) return fail("span outside sentence");
    if (!item.coverage.disjoint(opt.coverage)) return fail("source words already covered");
    if (ctx.tree().innermost_for_span(opt.span) != top) return fail("span not within the constraint on top of the stack");
  }
  if (const auto* forced = ctx.forced_target()) {
    for (std::size_t l = 0; l < added_words; ++l)
      if ((*forced)[item.word_count + l] != opt.target[l]) return fail("does not match the forced target");
  }

  DecoderItem next = item;
  if (opt.kind == OptionKind::omission) {
    next.logp += ctx.omission_logp(opt.span.begin);
    next.alignment.links.push_back({opt.span.begin, opt.span.end, 0, 0});
  } else {
    for (const auto& w : opt.target) {
      auto [state, lp] = ctx.scorer().extend(next.scorer_state, w);
      next.scorer_state = std::move(state);
      next.logp += lp;
      next.target_prefix.push_back(w);
      next.prefix_marks.push_back({});
    }
    const std::size_t jb = item.word_count + 1, je = item.word_count + added_words;
    if (opt.kind == OptionKind::insertion)
      next.alignment.links.push_back({0, 0, jb, je});
    else
      next.alignment.links.push_back({opt.span.begin, opt.span.end, jb, je});
  }
  if (!(next.logp > -std::numeric_limits<double>::infinity())) return fail("zero-probability step");
  if (opt.kind != OptionKind::insertion) next.coverage = coverage_merge(item.coverage, opt.coverage);
  next.word_count += added_words;
  if (opt.kind == OptionKind::insertion) {
    ++next.insertions;
    ++next.consecutive_insertions;
  } else {
    next.consecutive_insertions = 0;
  }
  return next;
}

template <class Ctx>
std::optional<DecoderItem> push_impl(const DecoderItem& item, TagToken tag, const Ctx& ctx, const char** why) {
  auto fail = [&](const char* reason) -> std::optional<DecoderItem> {
    if (why) *why = reason;
    return std::nullopt;
  };
  const auto& tree = ctx.tree();
  if (tag.node == ConstraintTree::root() || tag.node >= tree.size()) return fail("not a pushable constraint tag");
  if (item.tag_stack.empty() || item.tag_stack.back().close) return fail("no open constraint on top of the stack");
  const auto& node = tree.node(tag.node);
  const std::size_t top = item.tag_stack.back().node;
  if (!tag.close) {
    if (node.parent != top) return fail("constraint is not a child of the constraint on top of the stack");
    if (item.coverage.any_in(node.span)) return fail("constraint already has covered words");
  } else {
    if (top != tag.node) return fail("close tag does not match the constraint on top of the stack");
    if (!item.coverage.all_in(node.span)) return fail("constraint still has uncovered words");
  }
  DecoderItem next = item;
  next.tag_stack.push_back(tag);
  next.target_prefix.push_back(tag.close ? node.close_token : node.open_token);
  next.prefix_marks.push_back({static_cast<int>(tag.node), tag.close});
  return next;
}

inline std::optional<DecoderItem> pop_impl(const DecoderItem& item, const char** why) {
  const auto& s = item.tag_stack;
  if (s.size() < 2 || !s.back().close || s[s.size() - 2].close || s.back().node != s[s.size() - 2].node) {
    if (why) *why = "top two stack elements are not a matched open/close pair";
    return std::nullopt;
  }
  DecoderItem next = item;
  next.tag_stack.resize(s.size() - 2);
  return next;
}

}  // namespace detail

template <class Ctx>
std::optional<DecoderItem> try_translate(const DecoderItem& item, const TranslationOption& opt, const Ctx& ctx) {
  return detail::translate_impl(item, opt, ctx, nullptr);
}

/// Translate rule; throws rule-not-applicable when its preconditions fail.
template <class Ctx>
DecoderItem rule_translate(const DecoderItem& item, const TranslationOption& opt, const Ctx& ctx) {
  const char* why = "";
  auto r = detail::translate_impl(item, opt, ctx, &why);
  if (!r) throw Error(ErrorKind::rule_not_applicable, std::string("translate: ") + why);
  return std::move(*r);
}

template <class Ctx>
std::optional<DecoderItem> try_push(const DecoderItem& item, TagToken tag, const Ctx& ctx) {
  return detail::push_impl(item, tag, ctx, nullptr);
}

template <class Ctx>
DecoderItem rule_push(const DecoderItem& item, TagToken tag, const Ctx& ctx) {
  const char* why = "";
  auto r = detail::push_impl(item, tag, ctx, &why);
  if (!r) throw Error(ErrorKind::rule_not_applicable, std::string("push: ") + why);
  return std::move(*r);
}

inline std::optional<DecoderItem> try_pop(const DecoderItem& item) { return detail::pop_impl(item, nullptr); }

inline DecoderItem rule_pop(const DecoderItem& item) {
  const char* why = "";
  auto r = detail::pop_impl(item, &why);
  if (!r) throw Error(ErrorKind::rule_not_applicable, std::string("pop: ") + why);
  return std::move(*r);
}

namespace detail {

/// Applies the forced close-tag pushes and pops after a Translate.
template <class Ctx>
void close_finished_constraints(DecoderItem& item, const Ctx& ctx, DecodeStats& stats) {
  while (item.tag_stack.size() > 1 && !item.tag_stack.back().close) {
    std::size_t top = item.tag_stack.back().node;
    auto pushed = try_push(item, TagToken{top, true}, ctx);
    if (!pushed) return;
    ++stats.push_applications;
    item = std::move(*try_pop(*pushed));
    ++stats.pop_applications;
  }
}

/// Every successor of `item` reachable by one Translate, including the
/// fused open-tag pushes before it and the forced closes after it.
template <class Ctx, class Sink>
void expand(const DecoderItem& item, const Ctx& ctx, DecodeStats& stats, Sink&& sink) {
  if (item.tag_stack.empty() || item.tag_stack.back().close) return;
  const std::size_t top = item.tag_stack.back().node;
  const auto& tree = ctx.tree();
  const auto& options = ctx.lattice().options;
  for (std::size_t o = 0; o < options.size(); ++o) {
    const auto& opt = options[o];
    std::optional<DecoderItem> next;
    if (opt.kind == OptionKind::insertion) {
      next = try_translate(item, opt, ctx);
    } else {
      const std::size_t target_node = ctx.option_node(o);
      if (!tree.is_ancestor_or_self(top, target_node)) continue;
      if (!item.coverage.disjoint(opt.coverage)) continue;
      if (target_node == top) {
        next = try_translate(item, opt, ctx);
      } else {
        std::optional<DecoderItem> cur = item;
        std::size_t pushes = 0;
        for (std::size_t k : tree.path_below(top, target_node)) {
          cur = try_push(*cur, TagToken{k, false}, ctx);
          if (!cur) break;
          ++pushes;
        }
        if (!cur) continue;
        next = try_translate(*cur, opt, ctx);
        if (next) stats.push_applications += pushes;
      }
    }
    if (!next) continue;
    ++stats.translate_applications;
    close_finished_constraints(*next, ctx, stats);
    ++stats.items_created;
    sink(std::move(*next));
  }
}

inline bool target_less(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

/// Preference between finished derivations: score, then fewer insertions,
/// then lexicographic target order.
inline bool better_derivation(const Derivation& a, const Derivation& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.insertions != b.insertions) return a.insertions < b.insertions;
  return target_less(a.translation.tokens, b.translation.tokens);
}

inline bool better_item(const DecoderItem& a, const DecoderItem& b) {
  if (a.logp != b.logp) return a.logp > b.logp;
  if (a.insertions != b.insertions) return a.insertions < b.insertions;
  return target_less(a.target_prefix, b.target_prefix);
}

template <class Ctx>
std::optional<Derivation> complete(const DecoderItem& item, const Ctx& ctx) {
  if (!item.coverage.full() || item.tag_stack.size() != 1) return std::nullopt;
  if (const auto* forced = ctx.forced_target(); forced && item.word_count != forced->size()) return std::nullopt;
  Derivation d;
  d.translation.tokens = item.target_prefix;
  d.marks = item.prefix_marks;
  d.alignment = item.alignment;
  d.raw_logp = item.logp + ctx.scorer().end(item.scorer_state);
  if (!(d.raw_logp > -std::numeric_limits<double>::infinity())) return std::nullopt;
  d.word_count = item.word_count;
  d.insertions = item.insertions;
  d.score = final_score(d.raw_logp, d.word_count, ctx.config().length_penalty_alpha);
  return d;
}

struct RecombinationKey {
  CoverageVector coverage;
  std::vector<TagToken> tag_stack;
  ScorerState scorer_state;
  std::size_t insertions = 0;
  std::size_t consecutive_insertions = 0;

  explicit RecombinationKey(const DecoderItem& it)
      : coverage(it.coverage),
        tag_stack(it.tag_stack),
        scorer_state(it.scorer_state),
        insertions(it.insertions),
        consecutive_insertions(it.consecutive_insertions) {}

  bool operator==(const RecombinationKey&) const = default;
};

struct RecombinationKeyHash {
  std::size_t operator()(const RecombinationKey& k) const noexcept {
    std::size_t h = k.coverage.hash();
    auto mix = [&h](std::size_t v) { h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2); };
    mix(k.scorer_state.hash());
    for (const auto& t : k.tag_stack) mix(t.node * 2 + (t.close ? 1 : 0));
    mix(k.insertions);
    mix(k.consecutive_insertions * 7919);
    return h;
  }
};

/// All items with one target length. Replaced items stay in `items` but are
/// marked dead so heap entries can keep referring to stable slots.
struct ItemRow {
  std::vector<DecoderItem> items;
  std::vector<char> alive;
  std::vector<char> expanded;
  std::unordered_map<RecombinationKey, std::size_t, RecombinationKeyHash> index;

  /// Returns the slot of the inserted item, or nullopt when recombined away.
  std::optional<std::size_t> add(DecoderItem item, DecodeStats& stats) {
    RecombinationKey key(item);
    auto it = index.find(key);
    if (it != index.end()) {
      std::size_t old = it->second;
      ++stats.items_recombined;
      if (expanded[old] || !better_item(item, items[old])) return std::nullopt;
      alive[old] = 0;
      it->second = items.size();
    } else {
      index.emplace(std::move(key), items.size());
    }
    items.push_back(std::move(item));
    alive.push_back(1);
    expanded.push_back(0);
    return items.size() - 1;
  }

  void clear() {
    items = {};
    alive = {};
    expanded = {};
    index = {};
  }
};

template <class Ctx>
[[noreturn]] void throw_no_derivation(const Ctx& ctx, const CoverageVector* best_partial) {
  const std::size_t I = ctx.source().size();
  std::vector<bool> reachable(I + 1, false);
  for (const auto& o : ctx.lattice().options)
    if (o.kind != OptionKind::insertion)
      for (std::size_t i = o.span.begin; i <= o.span.end; ++i) reachable[i] = true;
  std::string list;
  for (std::size_t i = 1; i <= I; ++i)
    if (!reachable[i]) list += (list.empty() ? "" : ",") + std::to_string(i);
  std::string msg;
  if (!list.empty()) {
    msg = "no translation option covers source positions " + list;
  } else {
    std::string left;
    if (best_partial)
      for (std::size_t i = 1; i <= I; ++i)
        if (!best_partial->test(i)) left += (left.empty() ? "" : ",") + std::to_string(i);
    msg = "search ended without a complete derivation; best partial hypothesis leaves source positions " +
          (left.empty() ? std::string("(none)") : left) + " uncovered";
  }
  throw Error(ErrorKind::no_derivation, msg);
}

template <class Ctx>
Derivation beam_search(const Ctx& ctx, DecodeStats* stats_out) {
  DecodeStats stats;
  const std::size_t max_j = ctx.max_target_len();
  const std::size_t beam = ctx.config().beam_size;
  std::vector<ItemRow> rows(max_j + 1);
  rows[0].add(ctx.initial(), stats);
  ++stats.items_created;

  std::optional<Derivation> best = complete(rows[0].items[0], ctx);
  std::optional<CoverageVector> best_partial;
  if (best) ++stats.completed;

  for (std::size_t j = 0; j <= max_j; ++j) {
    ItemRow& row = rows[j];
    auto worse = [&row](std::size_t a, std::size_t b) {
      if (better_item(row.items[b], row.items[a])) return true;
      if (better_item(row.items[a], row.items[b])) return false;
      return a > b;
    };
    std::priority_queue<std::size_t, std::vector<std::size_t>, decltype(worse)> heap(worse);
    for (std::size_t s = 0; s < row.items.size(); ++s)
      if (row.alive[s]) heap.push(s);

    std::size_t popped = 0;
    while (!heap.empty() && popped < beam) {
      std::size_t slot = heap.top();
      heap.pop();
      if (!row.alive[slot]) continue;
      row.expanded[slot] = 1;
      ++popped;
      ++stats.items_expanded;
      // Copy: expansion may grow row.items and invalidate references.
      const DecoderItem item = row.items[slot];
      if (!best_partial || item.coverage.covered_count() > best_partial->covered_count()) best_partial = item.coverage;
      // Finished items are scored when created, so a completion that lands
      // in an already exhausted row is not lost to pruning.
      expand(item, ctx, stats, [&](DecoderItem next) {
        if (auto d = complete(next, ctx)) {
          ++stats.completed;
          if (!best || better_derivation(*d, *best)) best = std::move(*d);
        }
        std::size_t nj = next.word_count;
        auto added = rows[nj].add(std::move(next), stats);
        if (added && nj == j) heap.push(*added);
      });
    }
    while (!heap.empty()) {
      if (row.alive[heap.top()]) ++stats.items_pruned;
      heap.pop();
    }
    row.clear();
  }
  if (stats_out) *stats_out = stats;
  if (!best) throw_no_derivation(ctx, best_partial ? &*best_partial : nullptr);
  return std::move(*best);
}

template <class Ctx>
Derivation exhaustive_search(const Ctx& ctx, DecodeStats* stats_out) {
  DecodeStats stats;
  std::optional<Derivation> best;
  std::optional<CoverageVector> best_partial;
  const std::size_t cap = ctx.config().oracle_cap;

  std::function<void(const DecoderItem&)> visit = [&](const DecoderItem& item) {
    ++stats.items_expanded;
    if (!best_partial || item.coverage.covered_count() > best_partial->covered_count()) best_partial = item.coverage;
    if (auto d = complete(item, ctx)) {
      ++stats.completed;
      if (!best || better_derivation(*d, *best)) best = std::move(*d);
    }
    expand(item, ctx, stats, [&](DecoderItem next) {
      if (stats.items_created > cap)
        throw Error(ErrorKind::oracle_too_large, "search space exceeds " + std::to_string(cap) + " items");
      visit(next);
    });
  };
  stats.items_created = 1;
  visit(ctx.initial());
  if (stats_out) *stats_out = stats;
  if (!best) throw_no_derivation(ctx, best_partial ? &*best_partial : nullptr);
  return std::move(*best);
}

}  // namespace detail

/// Beam search for the best constrained derivation. The lattice must
/// already be filtered by the lexical and structural constraints.
template <SequenceScorer Scorer, EmptyPhraseModel Empty>
Derivation decode(const SourceSentence& x, const OptionLattice& lattice, const ConstraintTree& tree,
                  const Scorer& scorer, const Empty& empty_model, const DecoderConfig& config,
                  DecodeStats* stats = nullptr) {
  DecodeContext ctx(x, lattice, tree, scorer, empty_model, config);
  return detail::beam_search(ctx, stats);
}

/// Exhaustive depth-first search over every derivation, without pruning or
/// recombination. Testing oracle for decode; throws oracle-too-large past
/// config.oracle_cap items.
template <SequenceScorer Scorer, EmptyPhraseModel Empty>
Derivation brute_force_decode(const SourceSentence& x, const OptionLattice& lattice, const ConstraintTree& tree,
                              const Scorer& scorer, const Empty& empty_model, const DecoderConfig& config,
                              DecodeStats* stats = nullptr) {
  DecodeContext ctx(x, lattice, tree, scorer, empty_model, config);
  return detail::exhaustive_search(ctx, stats);
}

/// Best derivation whose words are exactly `reference` (forced decoding).
template <SequenceScorer Scorer, EmptyPhraseModel Empty>
Derivation align_reference(const SourceSentence& x, const TargetSentence& reference, const OptionLattice& lattice,
                           const ConstraintTree& tree, const Scorer& scorer, const Empty& empty_model,
                           const DecoderConfig& config, DecodeStats* stats = nullptr) {
  DecodeContext ctx(x, lattice, tree, scorer, empty_model, config, &reference.tokens);
  return detail::beam_search(ctx, stats);
}

/// Recomputes a derivation's raw log probability link by link.
template <SequenceScorer Scorer, EmptyPhraseModel Empty>
double replay_logp(const Derivation& d, const SourceSentence& x, const Scorer& scorer, const Empty& empty_model) {
  const TargetSentence words = d.words();
  auto state = scorer.begin(x);
  double logp = 0.0;
  for (const auto& link : d.alignment.links) {
    if (link.empty_target()) {
      logp += std::log(empty_model.score_omission(x, link.src_begin));
      continue;
    }
    for (std::size_t j = link.tgt_begin; j <= link.tgt_end; ++j) {
      auto [next, lp] = scorer.extend(state, words.at(j));
      state = std::move(next);
      logp += lp;
    }
  }
  return logp + scorer.end(state);
}

/// Lists every way `d` violates the sentence's constraints: alignment
/// validity, lexical constraints, and tag structure. Empty means satisfied.
inline std::vector<std::string> verify_derivation(const Derivation& d, const SourceSentence& x,
                                                  const ConstraintTree& tree,
                                                  const std::vector<LexicalConstraint>& lexical = {}) {
  std::vector<std::string> problems;
  const TargetSentence words = d.words();
  if (d.marks.size() != d.translation.size()) {
    problems.push_back("tag marks do not match the translation");
    return problems;
  }
  for (const auto& v : alignment_validate(d.alignment, x.size(), words.size()).violations)
    problems.push_back("alignment: " + v.message);

  for (const auto& c : lexical) {
    bool found = false;
    for (const auto& l : d.alignment.links) {
      if (l.source_span() != c.source_span) continue;
      std::vector<std::string> seg;
      if (!l.empty_target())
        for (std::size_t j = l.tgt_begin; j <= l.tgt_end && j <= words.size(); ++j) seg.push_back(words.at(j));
      found = seg == c.target;
      break;
    }
    if (!found) problems.push_back("lexical constraint on " + std::to_string(c.source_span.begin) + ":" +
                                   std::to_string(c.source_span.end) + " not realized as its target phrase");
  }

  // Tag structure: every non-root node opens and closes exactly once, tags
  // nest like the tree, and words inside a tag pair come from inside its span.
  std::vector<int> opened(tree.size(), 0), closed(tree.size(), 0);
  std::vector<std::size_t> stack{ConstraintTree::root()};
  std::vector<std::size_t> word_node;  // innermost output node of each word
  for (std::size_t k = 0; k < d.translation.size(); ++k) {
    const auto& m = d.marks[k];
    if (!m.is_tag()) {
      word_node.push_back(stack.back());
      continue;
    }
    auto node = static_cast<std::size_t>(m.node);
    if (node == 0 || node >= tree.size()) {
      problems.push_back("tag refers to an unknown constraint");
      continue;
    }
    const auto& n = tree.node(node);
    if (d.translation.tokens[k] != (m.close ? n.close_token : n.open_token))
      problems.push_back("tag token text does not match constraint " + n.id);
    if (!m.close) {
      ++opened[node];
      if (n.parent != stack.back()) problems.push_back("constraint " + n.id + " opened outside its parent");
      stack.push_back(node);
    } else {
      ++closed[node];
      if (stack.back() != node)
        problems.push_back("constraint " + n.id + " closed out of order");
      else
        stack.pop_back();
    }
  }
  if (stack.size() != 1) problems.push_back("unclosed tags at end of translation");
  for (std::size_t k = 1; k < tree.size(); ++k)
    if (opened[k] != 1 || closed[k] != 1)
      problems.push_back("constraint " + tree.node(k).id + " emitted " + std::to_string(opened[k]) + " open and " +
                         std::to_string(closed[k]) + " close tags");
  for (const auto& l : d.alignment.links) {
    if (l.empty_source() || l.empty_target()) continue;
    for (std::size_t j = l.tgt_begin; j <= l.tgt_end && j <= word_node.size(); ++j) {
      if (!tree.node(word_node[j - 1]).span.contains(l.source_span()))
        problems.push_back("target word " + std::to_string(j) + " lies inside a tag pair whose source span excludes its source");
    }
  }
  return problems;
}

/// `translation<TAB>alignment<TAB>score` with the score to six decimals.
inline std::string format_result_record(const Derivation& d, bool strip_tags = false) {
  std::vector<std::string> toks = strip_tags ? d.words().tokens : d.translation.tokens;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", d.score);
  return detail::join(toks) + '\t' + format_alignment(d.alignment) + '\t' + buf;
}

}  // namespace phralign

#endif
