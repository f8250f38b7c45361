#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "phralign/empty_model.hpp"
#include "test_support.hpp"

using namespace phralign;

TEST(MarkUnaligned, Examples) {
  EXPECT_EQ(mark_unaligned({{1, 1}, {3, 2}}, 3).u, (std::vector<std::uint8_t>{0, 1, 0}));
  EXPECT_EQ(mark_unaligned({}, 3).u, (std::vector<std::uint8_t>{1, 1, 1}));
  EXPECT_EQ(mark_unaligned({{1, 1}, {2, 1}, {3, 5}}, 3).u, (std::vector<std::uint8_t>{0, 0, 0}));
  try {
    mark_unaligned({{4, 1}}, 3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::malformed_alignment);
  }
}

TEST(EmptyModel, ZeroWeightsGiveHalf) {
  LogLinearEmptyModel m;
  auto x = make_source("a b c");
  for (std::size_t i = 1; i <= 3; ++i) EXPECT_DOUBLE_EQ(m.score_omission(x, i), 0.5);
  EXPECT_THROW(m.score_omission(x, 0), Error);
  EXPECT_THROW(m.score_omission(x, 4), Error);
}

TEST(EmptyModel, FeaturesUsePaddedWindow) {
  LogLinearEmptyModel m(1);
  EXPECT_EQ(m.features(make_source("a b"), 1), (std::vector<std::string>{"bias", "w[-1]=<s>", "w[0]=a", "w[+1]=b"}));
  EXPECT_EQ(m.features(make_source("a b"), 2), (std::vector<std::string>{"bias", "w[-1]=a", "w[0]=b", "w[+1]=</s>"}));
}

TEST(EmptyModel, EmptyCorpusRejected) {
  try {
    train_empty_model({});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::no_data);
  }
}

TEST(EmptyModel, SingleExampleProbabilityRises) {
  std::vector<LabeledSentence> corpus{{make_source("a b"), {{0, 1}}}};
  EmptyModelObjective obj(corpus, 2);
  std::vector<double> params(obj.dimension(), 0.0);
  double prev = obj.to_model(params).score_omission(corpus[0].source, 2);
  for (int epoch = 0; epoch < 20; ++epoch) {
    auto g = obj.gradient(params);
    for (std::size_t f = 0; f < params.size(); ++f) params[f] -= 0.1 * g[f];
    double now = obj.to_model(params).score_omission(corpus[0].source, 2);
    EXPECT_GT(now, prev);
    prev = now;
  }
}

TEST(EmptyModel, SeparableCorpus) {
  auto train = fixtures::separable_empty_corpus(1000, 1);
  auto held = fixtures::separable_empty_corpus(200, 2);
  auto r = train_empty_model(train);
  EXPECT_GE(omission_accuracy(r.model, held), 0.99);
  auto f = make_source("w1 f w2");
  auto w = make_source("w1 w3 w2");
  EXPECT_GT(r.model.score_omission(f, 2), 0.9);
  EXPECT_LT(r.model.score_omission(w, 2), 0.1);
}

TEST(EmptyModel, AllZeroLabels) {
  auto corpus = fixtures::separable_empty_corpus(50, 3);
  for (auto& ex : corpus) std::fill(ex.unaligned.u.begin(), ex.unaligned.u.end(), 0);
  auto r = train_empty_model(corpus);
  for (const auto& ex : corpus)
    for (std::size_t i = 1; i <= ex.source.size(); ++i) EXPECT_LT(r.model.score_omission(ex.source, i), 0.5);
}

TEST(EmptyModel, LossNonIncreasing) {
  auto r = train_empty_model(fixtures::separable_empty_corpus(300, 4));
  ASSERT_GT(r.loss_curve.size(), 2u);
  for (std::size_t e = 1; e < r.loss_curve.size(); ++e) EXPECT_LE(r.loss_curve[e], r.loss_curve[e - 1] + 1e-9);
}

TEST(EmptyModel, ZeroEpochsKeepsInitialParameters) {
  EmptyTrainConfig cfg;
  cfg.max_epochs = 0;
  auto r = train_empty_model(fixtures::separable_empty_corpus(20, 5), cfg);
  EXPECT_TRUE(r.model.weights().empty());
  EXPECT_EQ(r.loss_curve.size(), 1u);
  EXPECT_NEAR(r.loss_curve[0], std::log(2.0), 1e-12);
}

// Analytic gradient against central differences at random parameters.
TEST(EmptyModelProperty, GradientMatchesFiniteDifferences) {
  std::mt19937 rng(9);
  std::normal_distribution<double> n(0.0, 0.5);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto corpus = fixtures::separable_empty_corpus(15, 100 + seed);
    for (auto& ex : corpus)
      for (auto& u : ex.unaligned.u)
        if (std::uniform_int_distribution<int>(0, 9)(rng) == 0) u = 1 - u;
    EmptyModelObjective obj(corpus, 2);
    std::vector<double> params(obj.dimension());
    for (auto& p : params) p = n(rng);
    EXPECT_LT(fixtures::max_gradient_rel_error(obj, params), 1e-4);
  }
}

TEST(EmptyModel, FileRoundTrip) {
  auto r = train_empty_model(fixtures::separable_empty_corpus(50, 6));
  std::stringstream buf;
  write_empty_model(buf, r.model);
  auto back = load_empty_model(buf);
  EXPECT_EQ(back.window(), r.model.window());
  EXPECT_EQ(back.weights(), r.model.weights());
  std::istringstream bad("#phralign-empty-model v1\nwindow\t2\nbias\tnope\n");
  try {
    load_empty_model(bad);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::format_error);
    EXPECT_EQ(e.line(), 3u);
  }
}
