// phralign: command-line front end for extraction, empty-model training,
// constrained decoding, BLEU and the decoder self-check.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "phralign/bleu.hpp"
#include "phralign/pipeline.hpp"
#include "phralign/synthetic.hpp"

namespace {

using namespace phralign;

enum Exit { kOk = 0, kSentenceFailed = 1, kUsage = 2, kDataFormat = 3 };

std::vector<std::string> read_file_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::invalid_argument, "cannot open " + path);
  return read_lines(in);
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::invalid_argument, "cannot open " + path);
  return in;
}

// Settings from a subcommand's --config file are spliced in as flags right
// after the subcommand name, so later command-line flags override them.
std::vector<std::string> expand_config(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  std::string path;
  for (std::size_t k = 1; k < args.size(); ++k) {
    if (args[k] == "--config" && k + 1 < args.size()) path = args[k + 1];
    if (args[k].rfind("--config=", 0) == 0) path = args[k].substr(9);
  }
  if (path.empty() || args.empty()) return args;
  std::ifstream in(path);
  if (!in) return args;  // the ExistingFile check reports it
  std::vector<std::string> extra;
  for (const auto& item : CLI::ConfigINI().from_config(in)) {
    if (item.name == "++" || item.name == "--" || item.name == "config") continue;
    for (const auto& v : item.inputs) extra.push_back("--" + item.name + "=" + v);
  }
  args.insert(args.begin() + 1, extra.begin(), extra.end());
  return args;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::invalid_argument, "cannot write " + path);
  return out;
}

struct DecodeArgs {
  std::string input = "-";
  std::string output = "-";
  std::string phrase_table;
  std::string insertion_vocab;
  std::string empty_model;
  std::string scorer = "uniform";
  std::string lexical;
  std::size_t occurrence = 0;
  std::size_t beam = 10;
  double alpha = 0.6;
  std::size_t max_target_len = 0;
  int max_insertions = -1;
  std::size_t max_consecutive = 2;
  double omission_threshold = 0.5;
  std::size_t options_per_span = 20;
  bool structured = false;
  bool strip_tags = false;
  bool allow_failures = false;
  bool stats = false;
  std::size_t workers = 1;
};

int run_decode(const DecodeArgs& a) {
  DecodeOptions opt;
  opt.decoder.beam_size = a.beam;
  opt.decoder.length_penalty_alpha = a.alpha;
  opt.decoder.max_target_len = a.max_target_len;
  if (a.max_insertions >= 0) opt.decoder.max_insertions = static_cast<std::size_t>(a.max_insertions);
  opt.decoder.max_consecutive_insertions = a.max_consecutive;
  opt.decoder.omission_threshold = a.omission_threshold;
  opt.decoder.options_per_span = a.options_per_span;
  opt.structured = a.structured;
  opt.strip_tags = a.strip_tags;
  opt.occurrence = a.occurrence;
  opt.decoder.validate();

  DecodeResources res;
  {
    auto in = open_in(a.phrase_table);
    res.table = load_phrase_table(in);
  }
  if (!a.insertion_vocab.empty()) {
    auto in = open_in(a.insertion_vocab);
    res.insertions = load_insertion_vocab(in);
  }
  if (!a.empty_model.empty()) {
    auto in = open_in(a.empty_model);
    res.empty_model = load_empty_model(in);
  }
  if (a.scorer == "uniform") {
    res.scorer = UniformScorer(target_vocab_size(res.table, res.insertions));
  } else {
    auto in = open_in(a.scorer);
    res.scorer = load_ngram_scorer(in);
  }
  if (!a.lexical.empty()) {
    auto in = open_in(a.lexical);
    res.lexical = load_lexical_constraints(in);
  }

  std::vector<std::string> lines;
  if (a.input == "-") {
    lines = read_lines(std::cin);
  } else {
    lines = read_file_lines(a.input);
  }
  auto results = decode_corpus(lines, res, opt, a.workers);

  std::ofstream file;
  if (a.output != "-") file = open_out(a.output);
  std::ostream& out = a.output == "-" ? std::cout : file;
  std::size_t failed = 0;
  for (std::size_t n = 0; n < results.size(); ++n) {
    const auto& r = results[n];
    out << r.record << '\n';
    for (const auto& w : r.warnings) std::cerr << "warning: " << w << '\n';
    if (!r.ok) {
      ++failed;
      std::cerr << (a.allow_failures ? "warning: " : "error: ") << r.record.substr(r.record.find('\t') + 1) << '\n';
    }
    if (a.stats) {
      const auto& s = r.stats;
      std::cerr << "stats line " << n + 1 << ": created=" << s.items_created << " pruned=" << s.items_pruned
                << " recombined=" << s.items_recombined << " expanded=" << s.items_expanded
                << " translate=" << s.translate_applications << " push=" << s.push_applications
                << " pop=" << s.pop_applications << '\n';
    }
  }
  out.flush();
  if (failed) std::cerr << failed << " of " << results.size() << " sentences failed\n";
  return failed && !a.allow_failures ? kSentenceFailed : kOk;
}

struct ExtractArgs {
  std::string source, target, alignments;
  std::string table_out = "phrase-table.txt";
  std::string vocab_out = "insertion-vocab.txt";
  int align_base = 1;
  std::size_t max_phrase_len = 7;
  double threshold = 0.2;
  std::size_t max_words = 50;
};

int run_extract(const ExtractArgs& a) {
  auto corpus = make_parallel_corpus(read_file_lines(a.source), read_file_lines(a.target),
                                     read_file_lines(a.alignments), a.align_base);
  auto table = extract_phrase_table(corpus, a.max_phrase_len);
  auto vocab = build_insertion_vocab(corpus, a.threshold, a.max_words);
  auto t = open_out(a.table_out);
  write_phrase_table(t, table);
  auto v = open_out(a.vocab_out);
  write_insertion_vocab(v, vocab);
  std::cerr << "extracted " << table.size() << " phrase pairs, " << vocab.size() << " insertion words\n";
  return kOk;
}

struct TrainEmptyArgs {
  std::string source, alignments;
  std::string output = "empty-model.txt";
  int align_base = 1;
  std::size_t epochs = 200;
  double step = 1.0;
  std::size_t window = 2;
  double heldout = 0.1;
};

int run_train_empty(const TrainEmptyArgs& a) {
  auto corpus = make_labeled_corpus(read_file_lines(a.source), read_file_lines(a.alignments), a.align_base);
  if (corpus.empty()) throw Error(ErrorKind::no_data, "empty training corpus");
  std::size_t n_held = static_cast<std::size_t>(a.heldout * static_cast<double>(corpus.size()));
  if (n_held >= corpus.size()) n_held = 0;
  std::vector<LabeledSentence> train(corpus.begin(), corpus.end() - static_cast<std::ptrdiff_t>(n_held));
  std::vector<LabeledSentence> held(corpus.end() - static_cast<std::ptrdiff_t>(n_held), corpus.end());

  if (a.epochs == 0) std::cerr << "warning: zero epochs requested, writing initial parameters\n";
  EmptyTrainConfig cfg;
  cfg.window = a.window;
  cfg.step = a.step;
  cfg.max_epochs = a.epochs;
  auto result = train_empty_model(train, cfg);
  auto out = open_out(a.output);
  write_empty_model(out, result.model);

  std::printf("epochs %zu\nfinal loss %.6f\ntrain accuracy %.4f\n", result.loss_curve.size() - 1,
              result.loss_curve.back(), omission_accuracy(result.model, train));
  if (!held.empty()) std::printf("held-out accuracy %.4f (%zu sentences)\n", omission_accuracy(result.model, held), held.size());
  return kOk;
}

struct TrainLmArgs {
  std::string target;
  std::string output = "lm-counts.txt";
  std::size_t order = 3;
  double k = 1.0;
};

int run_train_lm(const TrainLmArgs& a) {
  std::vector<TargetSentence> corpus;
  for (const auto& line : read_file_lines(a.target)) corpus.push_back(make_target(line));
  auto lm = train_ngram_scorer(corpus, a.order, a.k);
  auto out = open_out(a.output);
  write_ngram_scorer(out, lm);
  return kOk;
}

struct BleuArgs {
  std::string hyp, ref;
  std::string mode = "wo-tag";
};

int run_bleu(const BleuArgs& a) {
  auto mode = parse_tag_mode(a.mode);
  if (!mode) throw Error(ErrorKind::invalid_argument, "unknown BLEU mode '" + a.mode + "'");
  auto tokenize = [](const std::vector<std::string>& lines) {
    std::vector<std::vector<std::string>> out;
    for (const auto& l : lines) out.push_back(lex_markup(l));
    return out;
  };
  auto r = compute_bleu(tokenize(read_file_lines(a.hyp)), tokenize(read_file_lines(a.ref)), *mode);
  std::printf("BLEU = %.2f, %.1f/%.1f/%.1f/%.1f (BP=%.3f, hyp_len=%zu, ref_len=%zu)\n", r.bleu,
              100 * r.precisions[0], 100 * r.precisions[1], 100 * r.precisions[2], 100 * r.precisions[3],
              r.brevity_penalty, r.hyp_length, r.ref_length);
  if (r.zero_precision_order) std::printf("zero %zu-gram precision\n", *r.zero_precision_order);
  return kOk;
}

struct OracleArgs {
  std::size_t instances = 500;
  std::uint64_t seed = 1;
  std::size_t max_tag_depth = 0;
  std::size_t max_lexical = 0;
};

int run_oracle_check(const OracleArgs& a) {
  InstanceOptions opt;
  opt.max_tag_depth = a.max_tag_depth;
  opt.max_lexical = a.max_lexical;
  auto r = run_oracle_check(a.instances, a.seed, 1e-9, opt);
  for (const auto& f : r.failures) std::printf("FAIL %s\n", f.c_str());
  std::printf("passed %zu failed %zu work-bound-violations %zu largest-oracle %zu\n", r.passed, r.failed,
              r.work_bound_violations, r.largest_oracle);
  return r.failed || r.work_bound_violations ? kSentenceFailed : kOk;
}

int exit_code_for(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::invalid_argument:
      return kUsage;
    default:
      return kDataFormat;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Phrase-aligned constrained decoding toolkit", "phralign"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  DecodeArgs dec;
  auto* decode_cmd = app.add_subcommand("decode", "Decode source sentences, one per line");
  decode_cmd->add_option("--config", "key = value file; command-line flags take precedence")->check(CLI::ExistingFile);
  decode_cmd->add_option("-i,--input", dec.input, "Source file, '-' for stdin");
  decode_cmd->add_option("-o,--output", dec.output, "Output file, '-' for stdout");
  decode_cmd->add_option("--phrase-table", dec.phrase_table, "Phrase table")->required()->check(CLI::ExistingFile);
  decode_cmd->add_option("--insertion-vocab", dec.insertion_vocab, "Insertion vocabulary")->check(CLI::ExistingFile);
  decode_cmd->add_option("--empty-model", dec.empty_model, "Omission model; omitted words disabled without it")
      ->check(CLI::ExistingFile);
  decode_cmd->add_option("--scorer", dec.scorer, "'uniform' or an n-gram counts file");
  decode_cmd->add_option("--lexical-constraints", dec.lexical, "Lines of 'source ||| target [||| sentence]'")
      ->check(CLI::ExistingFile);
  decode_cmd->add_option("--constraint-occurrence", dec.occurrence, "Constrain only the k-th match (0: all)");
  decode_cmd->add_option("--beam", dec.beam, "Beam size per target length")->check(CLI::PositiveNumber);
  decode_cmd->add_option("--alpha", dec.alpha, "Length penalty exponent")->check(CLI::NonNegativeNumber);
  decode_cmd->add_option("--max-target-len", dec.max_target_len, "Maximum target words (0: 2I+10)");
  decode_cmd->add_option("--max-insertions", dec.max_insertions, "Maximum inserted words (-1: ceil(I/2))");
  decode_cmd->add_option("--max-consecutive-insertions", dec.max_consecutive);
  decode_cmd->add_option("--omission-threshold", dec.omission_threshold)->check(CLI::Range(0.0, 1.0));
  decode_cmd->add_option("--options-per-span", dec.options_per_span)->check(CLI::PositiveNumber);
  decode_cmd->add_flag("--structured", dec.structured, "Parse markup tags as structural constraints");
  decode_cmd->add_flag("--strip-tags", dec.strip_tags, "Emit translations without tag tokens");
  decode_cmd->add_flag("--allow-failures", dec.allow_failures, "Report failed sentences as warnings");
  decode_cmd->add_flag("--stats", dec.stats, "Print search counters to stderr");
  decode_cmd->add_option("--workers", dec.workers, "Worker threads")->check(CLI::PositiveNumber);

  ExtractArgs ext;
  auto* extract_cmd = app.add_subcommand("extract", "Extract a phrase table and insertion vocabulary");
  extract_cmd->add_option("--config", "key = value file; command-line flags take precedence")->check(CLI::ExistingFile);
  extract_cmd->add_option("--source", ext.source)->required()->check(CLI::ExistingFile);
  extract_cmd->add_option("--target", ext.target)->required()->check(CLI::ExistingFile);
  extract_cmd->add_option("--alignments", ext.alignments, "Lines of i-j pairs")->required()->check(CLI::ExistingFile);
  extract_cmd->add_option("--align-base", ext.align_base)->check(CLI::IsMember({0, 1}));
  extract_cmd->add_option("--phrase-table", ext.table_out, "Output phrase table");
  extract_cmd->add_option("--insertion-vocab", ext.vocab_out, "Output insertion vocabulary");
  extract_cmd->add_option("--max-phrase-len", ext.max_phrase_len)->check(CLI::PositiveNumber);
  extract_cmd->add_option("--threshold", ext.threshold, "Minimum unaligned rate for insertion words")
      ->check(CLI::Range(0.0, 1.0));
  extract_cmd->add_option("--max-insertion-words", ext.max_words);

  TrainEmptyArgs te;
  auto* train_cmd = app.add_subcommand("train-empty", "Train the omission model from unaligned source words");
  train_cmd->add_option("--config", "key = value file; command-line flags take precedence")->check(CLI::ExistingFile);
  train_cmd->add_option("--source", te.source)->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--alignments", te.alignments)->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--align-base", te.align_base)->check(CLI::IsMember({0, 1}));
  train_cmd->add_option("-o,--output", te.output);
  train_cmd->add_option("--epochs", te.epochs);
  train_cmd->add_option("--step", te.step)->check(CLI::PositiveNumber);
  train_cmd->add_option("--window", te.window);
  train_cmd->add_option("--heldout", te.heldout, "Fraction of trailing sentences held out")->check(CLI::Range(0.0, 0.9));

  TrainLmArgs lm;
  auto* lm_cmd = app.add_subcommand("train-lm", "Count n-grams for the target scorer");
  lm_cmd->add_option("--target", lm.target)->required()->check(CLI::ExistingFile);
  lm_cmd->add_option("-o,--output", lm.output);
  lm_cmd->add_option("--order", lm.order)->check(CLI::PositiveNumber);
  lm_cmd->add_option("--k", lm.k, "Add-k smoothing constant")->check(CLI::PositiveNumber);

  BleuArgs bl;
  auto* bleu_cmd = app.add_subcommand("bleu", "Corpus BLEU-4 with tag handling modes");
  bleu_cmd->add_option("--hyp", bl.hyp)->required()->check(CLI::ExistingFile);
  bleu_cmd->add_option("--ref", bl.ref)->required()->check(CLI::ExistingFile);
  bleu_cmd->add_option("--mode", bl.mode, "wo-tag, w-tag or in-tag");

  OracleArgs orc;
  auto* oracle_cmd = app.add_subcommand("oracle-check", "Compare beam search with exhaustive search on random instances");
  oracle_cmd->add_option("--instances", orc.instances);
  oracle_cmd->add_option("--seed", orc.seed);
  oracle_cmd->add_option("--max-tag-depth", orc.max_tag_depth);
  oracle_cmd->add_option("--max-lexical", orc.max_lexical);

  try {
    auto args = expand_config(argc, argv);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*decode_cmd) return run_decode(dec);
    if (*extract_cmd) return run_extract(ext);
    if (*train_cmd) return run_train_empty(te);
    if (*lm_cmd) return run_train_lm(lm);
    if (*bleu_cmd) return run_bleu(bl);
    if (*oracle_cmd) return run_oracle_check(orc);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e);
  }
  return kUsage;
}
