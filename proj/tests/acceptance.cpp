// Acceptance runner: one PASS/FAIL line per acceptance criterion, with the
// tolerances used. Exit status is nonzero when any criterion fails.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "phralign/bleu.hpp"
#include "phralign/pipeline.hpp"
#include "phralign/synthetic.hpp"
#include "test_support.hpp"

using namespace phralign;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(bool ok, const std::string& name, const std::string& detail) {
  std::printf("%s %s: %s\n", ok ? "PASS" : "FAIL", name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// 500 random instances, beam set to the exhaustive search's item count,
// scores compared at 1e-9; also counts work-bound violations.
bool oracle_and_work_bound() {
  auto start = std::chrono::steady_clock::now();
  auto r = run_oracle_check(500, 1, 1e-9);
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  for (const auto& f : r.failures) std::printf("  %s\n", f.c_str());
  report(r.failed == 0 && r.passed == 500 && secs < 60.0, "oracle-equivalence",
         fmt("%zu/500 instances match brute force within 1e-9 (largest oracle %zu items), %.1fs (limit 60s)", r.passed,
             r.largest_oracle, secs));
  report(r.work_bound_violations == 0 && r.passed + r.failed == 500, "work-bound",
         fmt("%zu of 500 instances exceed translate applications <= beam x max_target_len x lattice size",
             r.work_bound_violations));
  return r.failed == 0;
}

void lexical_soundness() {
  std::size_t ok = 0, constraints = 0, realized = 0, overlaps = 0, positions = 0;
  for (std::uint64_t n = 0; n < 200; ++n) {
    InstanceOptions io;
    io.min_lexical = 1;
    io.max_lexical = 3;
    auto inst = make_random_instance(50000 + n, io);
    auto cfg = inst.config;
    cfg.beam_size = 10;
    try {
      auto d = decode(inst.source, inst.lattice, inst.tree, inst.scorer, inst.empty_model, cfg);
      auto problems = verify_derivation(d, inst.source, inst.tree, inst.lexical);
      constraints += inst.lexical.size();
      std::size_t missing = 0;
      for (const auto& p : problems) missing += p.rfind("lexical constraint", 0) == 0;
      realized += inst.lexical.size() - missing;
      auto report = alignment_validate(d.alignment, inst.source.size(), d.word_count);
      std::vector<int> hits(inst.source.size() + 1, 0);
      for (const auto& l : d.alignment.links)
        if (!l.empty_source())
          for (std::size_t i = l.src_begin; i <= l.src_end; ++i) ++hits[i];
      for (std::size_t i = 1; i <= inst.source.size(); ++i) overlaps += hits[i] > 1;
      positions += inst.source.size();
      if (problems.empty() && report.ok() && !inst.lexical.empty()) ++ok;
    } catch (const Error& e) {
      std::printf("  instance %lu: %s\n", static_cast<unsigned long>(n), e.what());
    }
  }
  report(ok == 200 && realized == constraints && overlaps == 0, "lexical-constraint-soundness",
         fmt("%zu/200 outputs sound; %zu/%zu constraints realized on exactly their span; %zu/%zu source positions "
             "covered more than once (required 0)",
             ok, realized, constraints, overlaps, positions));
}

void structural_soundness() {
  std::size_t ok = 0, tagged = 0, max_depth = 0;
  for (std::uint64_t n = 0; n < 200; ++n) {
    InstanceOptions io;
    io.max_tag_depth = 3;
    io.max_length = 6;
    auto inst = make_random_instance(70000 + n, io);
    max_depth = std::max(max_depth, inst.tree.max_depth());
    tagged += inst.tree.size() > 1;
    auto cfg = inst.config;
    cfg.beam_size = 10;
    try {
      auto d = decode(inst.source, inst.lattice, inst.tree, inst.scorer, inst.empty_model, cfg);
      auto problems = verify_derivation(d, inst.source, inst.tree);
      bool valid = alignment_validate(d.alignment, inst.source.size(), d.word_count).ok();
      // Tag multiset of the output equals the input's.
      std::vector<std::string> in_tags, out_tags;
      for (std::size_t k = 1; k < inst.tree.size(); ++k) {
        in_tags.push_back(inst.tree.node(k).open_token);
        in_tags.push_back(inst.tree.node(k).close_token);
      }
      for (std::size_t k = 0; k < d.translation.size(); ++k)
        if (d.marks[k].is_tag()) out_tags.push_back(d.translation.tokens[k]);
      std::sort(in_tags.begin(), in_tags.end());
      std::sort(out_tags.begin(), out_tags.end());
      bool nested = tags_well_nested(d.translation.tokens);
      if (problems.empty() && valid && in_tags == out_tags && nested) ++ok;
      else
        for (const auto& p : problems) std::printf("  instance %lu: %s\n", static_cast<unsigned long>(n), p.c_str());
    } catch (const Error& e) {
      std::printf("  instance %lu: %s\n", static_cast<unsigned long>(n), e.what());
    }
  }
  report(ok == 200 && max_depth <= 3, "structural-constraint-soundness",
         fmt("%zu/200 outputs well-nested with matching tag multiset, nesting and in-span alignment (%zu with tags, "
             "max depth %zu <= 3)",
             ok, tagged, max_depth));
}

// Corpus log probability of held-out references under forced decoding,
// with empty phrases on both sides enabled versus disabled.
void empty_phrase_ablation() {
  auto train = fixtures::function_word_corpus(400, 31);
  auto held = fixtures::function_word_corpus(100, 32);
  auto table = extract_phrase_table(train, 7);
  auto insertions = build_insertion_vocab(train, 0.2, 50);
  auto empty = train_empty_model(fixtures::labeled_from(train)).model;
  std::vector<TargetSentence> targets;
  for (const auto& ex : train) targets.push_back(ex.target);
  auto lm = train_ngram_scorer(targets, 2, 0.1);

  auto corpus_logp = [&](bool enabled, std::size_t& reachable) {
    double total = 0.0;
    reachable = 0;
    DecoderConfig cfg;
    cfg.beam_size = 50;
    cfg.max_insertions = 1000;
    cfg.max_consecutive_insertions = 1000;
    for (const auto& ex : held) {
      auto lat = collect_options(ex.source, table, enabled ? insertions : InsertionVocab{});
      if (enabled) lat = add_omission_options(std::move(lat), ex.source, empty, cfg.omission_threshold);
      auto tree = ConstraintTree::flat(ex.source.size());
      try {
        auto d = enabled ? align_reference(ex.source, ex.target, lat, tree, lm, empty, cfg)
                         : align_reference(ex.source, ex.target, lat, tree, lm, ConstantEmptyModel{0.0}, cfg);
        total += d.raw_logp;
        ++reachable;
      } catch (const Error&) {
        total = -std::numeric_limits<double>::infinity();
      }
    }
    return total;
  };
  std::size_t reach_on = 0, reach_off = 0;
  double on = corpus_logp(true, reach_on);
  double off = corpus_logp(false, reach_off);
  report(on > off && std::isfinite(on), "empty-phrase-ablation",
         fmt("reference log probability %.3f with empty phrases (%zu/100 references derivable) vs %.3f without "
             "(%zu/100 derivable); direction only, no tolerance",
             on, reach_on, off, reach_off));
}

void empty_model_training() {
  std::mt19937 rng(77);
  std::normal_distribution<double> noise(0.0, 0.5);
  double worst = 0.0;
  for (std::uint64_t s = 0; s < 5; ++s) {
    auto corpus = fixtures::separable_empty_corpus(20, 900 + s);
    for (auto& ex : corpus)
      for (auto& u : ex.unaligned.u)
        if (std::uniform_int_distribution<int>(0, 9)(rng) == 0) u = 1 - u;
    EmptyModelObjective obj(corpus, 2);
    std::vector<double> params(obj.dimension());
    for (auto& p : params) p = noise(rng);
    worst = std::max(worst, fixtures::max_gradient_rel_error(obj, params));
  }
  auto result = train_empty_model(fixtures::separable_empty_corpus(1000, 901));
  double acc = omission_accuracy(result.model, fixtures::separable_empty_corpus(300, 902));
  double worst_rise = 0.0;
  for (std::size_t e = 1; e < result.loss_curve.size(); ++e)
    worst_rise = std::max(worst_rise, result.loss_curve[e] - result.loss_curve[e - 1]);
  report(worst < 1e-4 && acc >= 0.99 && worst_rise <= 1e-9, "empty-model-training",
         fmt("gradient rel. error %.2e (limit 1e-4); held-out accuracy %.4f (min 0.99); max per-epoch loss rise "
             "%.2e over %zu epochs (limit 1e-9)",
             worst, acc, worst_rise, result.loss_curve.size() - 1));
}

void bleu_correctness() {
  auto toks = [](std::initializer_list<const char*> lines) {
    std::vector<std::vector<std::string>> out;
    for (auto l : lines) out.push_back(lex_markup(l));
    return out;
  };
  auto same = toks({"the red house is big", "<b> a small </b> dog"});
  double identity = compute_bleu(same, same, TagMode::without_tags).bleu;
  double identity_tags = compute_bleu(same, same, TagMode::with_tags).bleu;
  auto r = compute_bleu(toks({"a b c d"}), toks({"a b c d e"}), TagMode::without_tags);
  double expected = 100.0 * std::exp(1.0 - 5.0 / 4.0);
  auto hyp = toks({"the <b> red </b> house is big", "a <i> small </i> dog"});
  auto ref = toks({"the <b> red house </b> is very big", "a <i> small dog </i>"});
  auto strip = [](auto c) {
    for (auto& s : c) s = bleu_view(s, TagMode::without_tags);
    return c;
  };
  bool modes = compute_bleu(strip(hyp), strip(ref), TagMode::with_tags).bleu ==
                   compute_bleu(hyp, ref, TagMode::without_tags).bleu &&
               compute_bleu(strip(hyp), strip(ref), TagMode::with_tags).bleu ==
                   compute_bleu(strip(hyp), strip(ref), TagMode::without_tags).bleu;
  report(identity == 100.0 && identity_tags == 100.0 && std::abs(r.bleu - expected) <= 0.01 && modes,
         "bleu-correctness",
         fmt("identity %.4f (exact 100); \"a b c d\" vs \"a b c d e\" %.4f vs %.4f (tol 0.01); stripped-tag modes equal: "
             "%s",
             identity, r.bleu, expected, modes ? "yes" : "no"));
}

int run_cli(const fs::path& dir, const std::string& args, std::string& out) {
  std::string cmd = "cd '" + dir.string() + "' && '" PHRALIGN_CLI "' " + args + " > out.txt 2> /dev/null";
  int raw = std::system(cmd.c_str());
  std::ifstream in(dir / "out.txt");
  std::stringstream s;
  s << in.rdbuf();
  out = s.str();
  return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

void determinism() {
  fs::path dir = fs::temp_directory_path() / "phralign-acceptance";
  fs::remove_all(dir);
  fs::create_directories(dir);
  auto corpus = fixtures::function_word_corpus(300, 41);
  {
    std::ofstream s(dir / "src.txt"), t(dir / "table.txt"), v(dir / "ins.txt"), e(dir / "empty.txt");
    for (const auto& ex : corpus) s << detail::join(ex.source.tokens) << '\n';
    write_phrase_table(t, extract_phrase_table(corpus, 7));
    write_insertion_vocab(v, build_insertion_vocab(corpus, 0.2, 50));
    write_empty_model(e, train_empty_model(fixtures::labeled_from(corpus)).model);
  }
  const std::string args = "decode --phrase-table table.txt --insertion-vocab ins.txt --empty-model empty.txt -i src.txt";
  std::string first, second, parallel;
  int s1 = run_cli(dir, args, first);
  int s2 = run_cli(dir, args, second);
  int s3 = run_cli(dir, args + " --workers 4", parallel);
  fs::remove_all(dir);
  report(s1 == 0 && s2 == 0 && s3 == 0 && first == second && first == parallel && !first.empty(), "determinism",
         fmt("two runs and a 4-worker run over 300 sentences: %s (%zu bytes, exit %d/%d/%d)",
             first == second && first == parallel ? "byte-identical" : "DIFFERENT", first.size(), s1, s2, s3));
}

}  // namespace

int main() {
  oracle_and_work_bound();
  lexical_soundness();
  structural_soundness();
  empty_phrase_ablation();
  empty_model_training();
  bleu_correctness();
  determinism();
  // The published BLEU figures need corpora and models that are not part of
  // this repository; the criteria above stand in for them.
  report(failures == 0, "published-numbers-substitution",
         "published corpus-scale BLEU figures are not reproducible here; substitute property criteria above all pass");
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
