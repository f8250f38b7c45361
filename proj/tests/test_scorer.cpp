#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "phralign/scorer.hpp"

using namespace phralign;

namespace {

std::vector<TargetSentence> corpus_of(std::initializer_list<const char*> lines) {
  std::vector<TargetSentence> out;
  for (auto l : lines) out.push_back(make_target(l));
  return out;
}

std::vector<std::string> random_tokens(std::mt19937& rng, int max_len, int vocab) {
  std::vector<std::string> out(std::uniform_int_distribution<int>(0, max_len)(rng));
  for (auto& t : out) t = "w" + std::to_string(std::uniform_int_distribution<int>(1, vocab)(rng));
  return out;
}

const SourceSentence kAnySource = make_source("x");

}  // namespace

TEST(Scorer, BeginIsEmptyAndDeterministic) {
  auto lm = train_ngram_scorer(corpus_of({"X Y"}), 3, 1.0);
  auto a = lm.begin(kAnySource);
  EXPECT_EQ(a.length, 0u);
  EXPECT_EQ(a, lm.begin(make_source("other sentence")));
  EXPECT_EQ(UniformScorer(4).begin(kAnySource).length, 0u);
}

TEST(Scorer, Uniform) {
  UniformScorer u(9);
  auto [st, lp] = u.extend(u.begin(kAnySource), "anything");
  EXPECT_DOUBLE_EQ(lp, std::log(1.0 / 10.0));
  EXPECT_DOUBLE_EQ(u.end(st), std::log(1.0 / 10.0));
  EXPECT_EQ(st.length, 1u);
  EXPECT_THROW(UniformScorer(0), Error);
}

TEST(Scorer, BigramAddOne) {
  auto lm = train_ngram_scorer(corpus_of({"X Y"}), 2, 1.0);
  ASSERT_EQ(lm.vocab_size(), 3u);  // <unk>, X, Y
  auto [st, lp] = lm.extend(lm.begin(kAnySource), "X");
  EXPECT_DOUBLE_EQ(lp, std::log(2.0 / 5.0));
  // Empty prefix: P(</s> | <s>) = (0 + 1) / (1 + 4).
  EXPECT_DOUBLE_EQ(lm.end(lm.begin(kAnySource)), std::log(1.0 / 5.0));
  // Unknown words share the reserved symbol's mass.
  EXPECT_DOUBLE_EQ(lm.extend(st, "Q").second, lm.extend(st, "R").second);
}

TEST(Scorer, UnigramClosedForm) {
  auto lm = train_ngram_scorer(corpus_of({"X"}), 1, 1.0);
  EXPECT_DOUBLE_EQ(lm.prob({}, lm.id("X")), 0.4);
  EXPECT_DOUBLE_EQ(lm.prob({}, NgramScorer::kEos), 0.4);
  EXPECT_DOUBLE_EQ(lm.prob({}, NgramScorer::kUnk), 0.2);
}

TEST(Scorer, EmptyCorpusRejected) {
  try {
    train_ngram_scorer({}, 2, 1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::no_data);
  }
}

TEST(Scorer, UnseenContextBacksOff) {
  auto lm = train_ngram_scorer(corpus_of({"X Y", "Y Y"}), 2, 1.0);
  auto x = lm.id("X");
  // Context "Q" (unknown) was never followed by anything.
  EXPECT_DOUBLE_EQ(lm.prob({NgramScorer::kUnk}, x), lm.prob({}, x));
}

TEST(Scorer, TableFixture) {
  TableScorer t(1, -5.0, -4.0);
  t.set({}, "X", -0.1);
  t.set({"X"}, "Y", -0.2);
  t.set_end({"Y"}, -0.3);
  auto s0 = t.begin(kAnySource);
  auto [s1, a] = t.extend(s0, "X");
  auto [s2, b] = t.extend(s1, "Y");
  EXPECT_DOUBLE_EQ(a, -0.1);
  EXPECT_DOUBLE_EQ(b, -0.2);
  EXPECT_DOUBLE_EQ(t.end(s2), -0.3);
  EXPECT_DOUBLE_EQ(t.extend(s0, "Y").second, -5.0);
  EXPECT_DOUBLE_EQ(t.end(s0), -4.0);
  EXPECT_THROW(t.set({}, "Z", 0.5), Error);
}

TEST(Scorer, CountsFileRoundTrip) {
  auto lm = train_ngram_scorer(corpus_of({"a b c", "a c", "b b a"}), 3, 0.5);
  std::stringstream buf;
  write_ngram_scorer(buf, lm);
  auto back = load_ngram_scorer(buf);
  EXPECT_EQ(back.order(), 3u);
  EXPECT_DOUBLE_EQ(back.k(), 0.5);
  for (const char* s : {"a b c", "c c c q", "", "b a"}) {
    auto toks = make_target(s).tokens;
    EXPECT_DOUBLE_EQ(score_sequence(back, kAnySource, toks), score_sequence(lm, kAnySource, toks)) << s;
  }
}

TEST(Scorer, CountsFileErrors) {
  for (const char* text : {"", "#phralign-ngram-counts v1\norder\tx\n", "#phralign-ngram-counts v1\norder\t2\nk\t1\na b c\t1\n"}) {
    std::istringstream in(text);
    try {
      load_ngram_scorer(in);
      FAIL() << text;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::format_error);
    }
  }
}

// Summing extends plus end equals scoring the sequence in one pass, and
// identical paths give bitwise identical values.
TEST(ScorerProperty, IncrementalConsistency) {
  std::mt19937 rng(17);
  std::vector<TargetSentence> corpus;
  for (int n = 0; n < 30; ++n) corpus.push_back({random_tokens(rng, 6, 5)});
  for (std::size_t order : {1u, 2u, 3u, 4u}) {
    auto lm = train_ngram_scorer(corpus, order, 0.7);
    for (int trial = 0; trial < 50; ++trial) {
      auto toks = random_tokens(rng, 8, 6);
      auto st = lm.begin(kAnySource);
      double sum = 0.0;
      for (const auto& t : toks) {
        auto [next, lp] = lm.extend(st, t);
        sum += lp;
        st = next;
      }
      sum += lm.end(st);
      EXPECT_EQ(sum, score_sequence(lm, kAnySource, toks));
      EXPECT_EQ(score_sequence(lm, kAnySource, toks), score_sequence(lm, kAnySource, toks));
    }
  }
}

// Probabilities over all outcomes sum to one in every context reachable
// from the vocabulary.
TEST(ScorerProperty, Normalized) {
  std::mt19937 rng(23);
  std::vector<TargetSentence> corpus;
  for (int n = 0; n < 20; ++n) corpus.push_back({random_tokens(rng, 5, 4)});
  for (std::size_t order : {1u, 2u, 3u}) {
    auto lm = train_ngram_scorer(corpus, order, 1.0);
    auto outcomes = lm.outcomes();
    std::vector<NgramScorer::Ngram> contexts{NgramScorer::Ngram(order - 1, NgramScorer::kBos)};
    for (int trial = 0; trial < 40; ++trial) {
      NgramScorer::Ngram c(order - 1);
      for (auto& w : c) w = outcomes[std::uniform_int_distribution<std::size_t>(0, outcomes.size() - 1)(rng)];
      contexts.push_back(c);
    }
    for (const auto& c : contexts) {
      double total = 0.0;
      for (auto w : outcomes) total += lm.prob(c, w);
      EXPECT_NEAR(total, 1.0, 1e-6);
    }
  }
}
