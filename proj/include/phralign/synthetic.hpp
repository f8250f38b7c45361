#ifndef PHRALIGN_SYNTHETIC_HPP
#define PHRALIGN_SYNTHETIC_HPP

// Seeded random decoding problems small enough for exhaustive search.

#include <algorithm>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "phralign/constraints.hpp"
#include "phralign/decoder.hpp"
#include "phralign/phrase_table.hpp"
#include "phralign/scorer.hpp"

namespace phralign {

/// Omission probability looked up by the word being omitted.
struct WordTableEmptyModel {
  std::map<std::string, double> probability;
  double fallback = 0.1;

  double score_omission(const SourceSentence& x, std::size_t i) const {
    if (i < 1 || i > x.size()) throw Error(ErrorKind::invalid_argument, "position outside sentence");
    auto it = probability.find(x.at(i));
    return it == probability.end() ? fallback : it->second;
  }
};

struct InstanceOptions {
  std::size_t min_length = 1;
  std::size_t max_length = 6;
  std::size_t max_entries = 12;
  std::size_t source_vocab = 10;
  std::size_t target_vocab = 10;
  std::size_t max_tag_depth = 0;  // 0: untagged
  std::size_t min_lexical = 0;
  std::size_t max_lexical = 0;
  std::size_t max_insertion_words = 2;
  double omission_rate = 0.3;
};

struct RandomInstance {
  SourceSentence source;
  ConstraintTree tree;
  std::string tagged_source;
  std::vector<LexicalConstraint> lexical;
  PhraseTable table;
  InsertionVocab insertions;
  WordTableEmptyModel empty_model;
  TableScorer scorer{1, -2.0, -1.0};
  OptionLattice lattice;
  DecoderConfig config;
};

namespace detail {

inline void random_tagged(std::mt19937_64& rng, std::size_t lo, std::size_t hi, std::size_t depth,
                          std::size_t max_depth, std::size_t& next_id, const SourceSentence& x,
                          std::vector<std::string>& out) {
  std::size_t p = lo;
  while (p <= hi) {
    if (depth < max_depth && std::uniform_real_distribution<double>(0, 1)(rng) < 0.35) {
      std::size_t len = std::uniform_int_distribution<std::size_t>(1, hi - p + 1)(rng);
      std::string id = "c" + std::to_string(next_id++);
      out.push_back("<" + id + ">");
      random_tagged(rng, p, p + len - 1, depth + 1, max_depth, next_id, x, out);
      out.push_back("</" + id + ">");
      p += len;
    } else {
      out.push_back(x.at(p));
      ++p;
    }
  }
}

}  // namespace detail

inline RandomInstance make_random_instance(std::uint64_t seed, const InstanceOptions& opt = {}) {
  std::mt19937_64 rng(seed);
  auto uniform_int = [&](std::size_t lo, std::size_t hi) { return std::uniform_int_distribution<std::size_t>(lo, hi)(rng); };
  auto uniform = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  auto src_word = [&] { return "s" + std::to_string(uniform_int(1, opt.source_vocab)); };
  auto tgt_word = [&] { return "t" + std::to_string(uniform_int(1, opt.target_vocab)); };
  auto tgt_phrase = [&] {
    std::vector<std::string> p(uniform_int(1, 2));
    for (auto& w : p) w = tgt_word();
    return p;
  };

  RandomInstance inst;
  const std::size_t I = uniform_int(opt.min_length, opt.max_length);
  for (std::size_t i = 0; i < I; ++i) inst.source.tokens.push_back(src_word());

  if (opt.max_tag_depth > 0) {
    std::vector<std::string> tagged;
    std::size_t next_id = 1;
    detail::random_tagged(rng, 1, I, 0, opt.max_tag_depth, next_id, inst.source, tagged);
    inst.tagged_source = phralign::detail::join(tagged);
    auto parsed = parse_tagged(inst.tagged_source);
    inst.tree = std::move(parsed.second);
  } else {
    inst.tagged_source = phralign::detail::join(inst.source.tokens);
    inst.tree = ConstraintTree::flat(I);
  }

  // Random phrases taken from the sentence, then single-word entries for
  // any position left without one so a derivation always exists.
  std::size_t budget = opt.max_entries > I ? opt.max_entries - I : 0;
  std::size_t random_entries = uniform_int(0, budget);
  for (std::size_t n = 0; n < random_entries; ++n) {
    std::size_t b = uniform_int(1, I);
    std::size_t e = std::min(I, b + uniform_int(0, 2));
    std::vector<std::string> src(inst.source.tokens.begin() + static_cast<std::ptrdiff_t>(b - 1),
                                 inst.source.tokens.begin() + static_cast<std::ptrdiff_t>(e));
    inst.table.add({src, tgt_phrase(), uniform(0.05, 1.0)});
  }
  for (std::size_t i = 1; i <= I; ++i)
    if (inst.table.lookup({inst.source.at(i)}).empty()) inst.table.add({{inst.source.at(i)}, tgt_phrase(), uniform(0.05, 1.0)});

  std::size_t n_ins = uniform_int(0, opt.max_insertion_words);
  for (std::size_t n = 0; n < n_ins; ++n) {
    auto w = tgt_word();
    if (!inst.insertions.contains(w)) inst.insertions.words.emplace_back(w, uniform(0.21, 0.9));
  }

  for (std::size_t v = 1; v <= opt.source_vocab; ++v)
    inst.empty_model.probability["s" + std::to_string(v)] =
        uniform(0, 1) < opt.omission_rate ? uniform(0.5, 0.99) : uniform(0.01, 0.45);

  std::vector<std::string> contexts{""};
  for (std::size_t v = 1; v <= opt.target_vocab; ++v) contexts.push_back("t" + std::to_string(v));
  for (const auto& c : contexts) {
    std::vector<std::string> ctx = c.empty() ? std::vector<std::string>{} : std::vector<std::string>{c};
    for (std::size_t v = 1; v <= opt.target_vocab; ++v) inst.scorer.set(ctx, "t" + std::to_string(v), uniform(-3.0, -0.05));
    inst.scorer.set_end(ctx, uniform(-2.0, -0.05));
  }

  std::size_t n_lex = uniform_int(opt.min_lexical, opt.max_lexical);
  for (std::size_t attempt = 0; inst.lexical.size() < n_lex && attempt < 20; ++attempt) {
    std::size_t b = uniform_int(1, I);
    std::size_t e = std::min(I, b + uniform_int(0, 1));
    Span s{b, e};
    bool clash = std::any_of(inst.lexical.begin(), inst.lexical.end(),
                             [&](const LexicalConstraint& c) { return c.source_span.intersects(s); });
    if (!clash) inst.lexical.push_back({s, tgt_phrase()});
  }

  inst.config.max_target_len = 2 * I + 2;
  inst.config.max_insertions = uniform_int(0, 2);
  inst.config.beam_size = 4;

  inst.lattice = collect_options(inst.source, inst.table, inst.insertions, {inst.config.options_per_span});
  inst.lattice = add_omission_options(std::move(inst.lattice), inst.source, inst.empty_model, inst.config.omission_threshold);
  inst.lattice = apply_lexical(std::move(inst.lattice), inst.lexical);
  inst.lattice = apply_structural(std::move(inst.lattice), inst.tree);
  return inst;
}

struct OracleCheckResult {
  std::size_t passed = 0;
  std::size_t failed = 0;
  std::size_t work_bound_violations = 0;
  std::size_t largest_oracle = 0;
  std::vector<std::string> failures;
};

/// Decodes each instance with a beam at least as large as the exhaustive
/// search's item count and compares final scores.
inline OracleCheckResult run_oracle_check(std::size_t instances, std::uint64_t seed, double tolerance = 1e-9,
                                          const InstanceOptions& opt = {}) {
  OracleCheckResult r;
  for (std::size_t n = 0; n < instances; ++n) {
    auto inst = make_random_instance(seed + n, opt);
    std::string tag = "instance " + std::to_string(n) + " (seed " + std::to_string(seed + n) + ")";
    try {
      DecodeStats oracle_stats;
      auto oracle = brute_force_decode(inst.source, inst.lattice, inst.tree, inst.scorer, inst.empty_model,
                                       inst.config, &oracle_stats);
      r.largest_oracle = std::max(r.largest_oracle, oracle_stats.items_created);
      DecoderConfig full = inst.config;
      full.beam_size = std::max<std::size_t>(1, oracle_stats.items_created);
      DecodeStats stats;
      auto best = decode(inst.source, inst.lattice, inst.tree, inst.scorer, inst.empty_model, full, &stats);
      const std::size_t bound = full.beam_size * full.target_limit(inst.source.size()) * inst.lattice.size();
      if (stats.translate_applications > bound) ++r.work_bound_violations;
      if (std::abs(best.score - oracle.score) <= tolerance &&
          verify_derivation(best, inst.source, inst.tree, inst.lexical).empty()) {
        ++r.passed;
      } else {
        ++r.failed;
        r.failures.push_back(tag + ": decode " + std::to_string(best.score) + " vs oracle " + std::to_string(oracle.score));
      }
    } catch (const Error& e) {
      ++r.failed;
      r.failures.push_back(tag + ": " + e.what());
    }
  }
  return r;
}

}  // namespace phralign

#endif
