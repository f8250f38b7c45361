#ifndef PHRALIGN_PIPELINE_HPP
#define PHRALIGN_PIPELINE_HPP

// Per-sentence and per-corpus drivers that chain option collection,
// constraint filtering and decoding. Used by the command-line tool.

#include <atomic>
#include <cstdio>
#include <istream>
#include <optional>
#include <string>
#include <thread>
#include <unordered_set>
#include <variant>
#include <vector>

#include "phralign/constraints.hpp"
#include "phralign/decoder.hpp"
#include "phralign/empty_model.hpp"
#include "phralign/phrase_table.hpp"
#include "phralign/scorer.hpp"

namespace phralign {

using AnyScorer = std::variant<UniformScorer, NgramScorer>;

struct DecodeResources {
  PhraseTable table;
  InsertionVocab insertions;
  std::optional<LogLinearEmptyModel> empty_model;  // omission disabled when unset
  AnyScorer scorer = UniformScorer(1);
  std::vector<LexicalConstraintSpec> lexical;
};

struct DecodeOptions {
  DecoderConfig decoder;
  bool structured = false;
  bool strip_tags = false;
  std::size_t occurrence = 0;  // 0: constrain every occurrence
};

struct SentenceResult {
  std::string record;
  bool ok = true;
  std::vector<std::string> warnings;
  DecodeStats stats;
};

/// Target vocabulary size reachable through the table and insertion vocab,
/// plus one for the unknown symbol.
inline std::size_t target_vocab_size(const PhraseTable& table, const InsertionVocab& insertions) {
  std::unordered_set<std::string> words;
  table.for_each([&](const PhraseTableEntry& e) { words.insert(e.target.begin(), e.target.end()); });
  for (const auto& [w, p] : insertions.words) words.insert(w);
  return words.size() + 1;
}

inline std::string diagnostic_record(std::size_t line_no, const std::string& message) {
  return "#ERROR\tline " + std::to_string(line_no) + '\t' + message;
}

inline SentenceResult decode_line(std::string_view line, std::size_t line_no, const DecodeResources& res,
                                  const DecodeOptions& opt) {
  SentenceResult out;
  try {
    SourceSentence x;
    ConstraintTree tree;
    if (opt.structured) {
      auto parsed = parse_tagged(line);
      x = std::move(parsed.first);
      tree = std::move(parsed.second);
    } else {
      x = make_source(line);
    }
    if (x.size() == 0) throw Error(ErrorKind::invalid_input, "empty input sentence");
    if (!opt.structured) tree = ConstraintTree::flat(x.size());

    OptionLattice lattice = collect_options(x, res.table, res.insertions, {opt.decoder.options_per_span});
    if (res.empty_model) lattice = add_omission_options(std::move(lattice), x, *res.empty_model, opt.decoder.omission_threshold);
    std::vector<std::string> unmatched;
    auto lexical = resolve_lexical_constraints(x, line_no, res.lexical, opt.occurrence, &unmatched);
    for (const auto& u : unmatched)
      out.warnings.push_back("line " + std::to_string(line_no) + ": constraint source '" + u + "' not found");
    lattice = apply_lexical(std::move(lattice), lexical);
    lattice = apply_structural(std::move(lattice), tree);

    const ConstantEmptyModel no_omission{0.0};
    Derivation d = std::visit(
        [&](const auto& scorer) {
          if (res.empty_model) return decode(x, lattice, tree, scorer, *res.empty_model, opt.decoder, &out.stats);
          return decode(x, lattice, tree, scorer, no_omission, opt.decoder, &out.stats);
        },
        res.scorer);
    out.record = format_result_record(d, opt.strip_tags);
  } catch (const Error& e) {
    out.ok = false;
    out.record = diagnostic_record(line_no, e.what());
  }
  return out;
}

/// Decodes every line with a pool of `workers` threads; results come back
/// in input order.
inline std::vector<SentenceResult> decode_corpus(const std::vector<std::string>& lines, const DecodeResources& res,
                                                 const DecodeOptions& opt, std::size_t workers = 1) {
  std::vector<SentenceResult> results(lines.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t n = next++; n < lines.size(); n = next++) results[n] = decode_line(lines[n], n + 1, res, opt);
  };
  workers = std::max<std::size_t>(1, std::min(workers, lines.size()));
  if (workers == 1) {
    work();
    return results;
  }
  std::vector<std::jthread> pool;
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  pool.clear();
  return results;
}

inline std::vector<std::string> read_lines(std::istream& in) {
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    out.push_back(std::move(line));
  }
  return out;
}

/// Zips source, target and alignment lines into a word-aligned corpus.
inline std::vector<ParallelExample> make_parallel_corpus(const std::vector<std::string>& source,
                                                         const std::vector<std::string>& target,
                                                         const std::vector<std::string>& alignments, int base) {
  if (source.size() != target.size() || source.size() != alignments.size())
    throw Error(ErrorKind::corpus_mismatch, "line counts differ: source " + std::to_string(source.size()) +
                                                ", target " + std::to_string(target.size()) + ", alignments " +
                                                std::to_string(alignments.size()));
  std::vector<ParallelExample> corpus;
  corpus.reserve(source.size());
  for (std::size_t n = 0; n < source.size(); ++n) {
    ParallelExample ex{make_source(source[n]), make_target(target[n]), {}};
    try {
      ex.alignment = parse_word_alignment(alignments[n], base, n + 1);
    } catch (const Error& e) {
      throw Error(ErrorKind::malformed_corpus, e.what(), n + 1);
    }
    check_alignment_range(ex, n + 1);
    corpus.push_back(std::move(ex));
  }
  return corpus;
}

/// Source sentences paired with their unaligned-word indicators.
inline std::vector<LabeledSentence> make_labeled_corpus(const std::vector<std::string>& source,
                                                        const std::vector<std::string>& alignments, int base) {
  if (source.size() != alignments.size())
    throw Error(ErrorKind::corpus_mismatch, "line counts differ: source " + std::to_string(source.size()) +
                                                ", alignments " + std::to_string(alignments.size()));
  std::vector<LabeledSentence> out;
  for (std::size_t n = 0; n < source.size(); ++n) {
    auto x = make_source(source[n]);
    auto a = parse_word_alignment(alignments[n], base, n + 1);
    try {
      out.push_back({x, mark_unaligned(a, x.size())});
    } catch (const Error& e) {
      throw Error(ErrorKind::malformed_alignment, e.what(), n + 1);
    }
  }
  return out;
}

}  // namespace phralign

#endif
