#ifndef PHRALIGN_EMPTY_MODEL_HPP
#define PHRALIGN_EMPTY_MODEL_HPP

// Probability that a source word is left untranslated (aligned to the empty
// target word), given the word and its surrounding source context.

#include <cmath>
#include <concepts>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "phralign/core.hpp"

namespace phralign {

template <class M>
concept EmptyPhraseModel = requires(const M& m, const SourceSentence& x, std::size_t i) {
  { m.score_omission(x, i) } -> std::convertible_to<double>;
};

/// u_i = 1 iff source word i has no alignment point.
struct UnalignedIndicator {
  std::vector<std::uint8_t> u;

  std::size_t size() const noexcept { return u.size(); }
  bool operator==(const UnalignedIndicator&) const = default;
};

inline UnalignedIndicator mark_unaligned(const WordAlignment& alignment, std::size_t I) {
  UnalignedIndicator ind{std::vector<std::uint8_t>(I, 1)};
  for (auto [s, t] : alignment) {
    if (s < 1 || s > I)
      throw Error(ErrorKind::malformed_alignment, "source position " + std::to_string(s) + " out of range");
    ind.u[s - 1] = 0;
  }
  return ind;
}

namespace detail {

inline double sigmoid(double s) {
  if (s >= 0) return 1.0 / (1.0 + std::exp(-s));
  double e = std::exp(s);
  return e / (1.0 + e);
}

/// log(sigmoid(s)) without overflow.
inline double log_sigmoid(double s) { return s >= 0 ? -std::log1p(std::exp(-s)) : s - std::log1p(std::exp(s)); }

}  // namespace detail

/// Logistic classifier over position-tagged words in a symmetric window
/// around the scored position, plus a bias feature.
class LogLinearEmptyModel {
 public:
  explicit LogLinearEmptyModel(std::size_t window = 2) : window_(window) {}

  std::size_t window() const noexcept { return window_; }
  const std::map<std::string, double>& weights() const noexcept { return weights_; }
  void set_weight(const std::string& feature, double w) { weights_[feature] = w; }

  /// Feature names active at 1-based position i.
  std::vector<std::string> features(const SourceSentence& x, std::size_t i) const {
    check_position(x, i);
    std::vector<std::string> out{"bias"};
    const auto I = static_cast<long long>(x.size());
    const auto w = static_cast<long long>(window_);
    for (long long d = -w; d <= w; ++d) {
      long long p = static_cast<long long>(i) + d;
      const std::string& tok = p < 1 ? kLeftPad : p > I ? kRightPad : x.at(static_cast<std::size_t>(p));
      out.push_back("w[" + (d > 0 ? "+" + std::to_string(d) : std::to_string(d)) + "]=" + tok);
    }
    return out;
  }

  double linear_score(const SourceSentence& x, std::size_t i) const {
    double s = 0.0;
    for (const auto& f : features(x, i)) {
      auto it = weights_.find(f);
      if (it != weights_.end()) s += it->second;
    }
    return s;
  }

  double score_omission(const SourceSentence& x, std::size_t i) const { return detail::sigmoid(linear_score(x, i)); }

 private:
  static inline const std::string kLeftPad = "<s>";
  static inline const std::string kRightPad = "</s>";

  static void check_position(const SourceSentence& x, std::size_t i) {
    if (i < 1 || i > x.size())
      throw Error(ErrorKind::invalid_argument, "position " + std::to_string(i) + " outside sentence");
  }

  std::size_t window_;
  std::map<std::string, double> weights_;
};

struct LabeledSentence {
  SourceSentence source;
  UnalignedIndicator unaligned;
};

/// Mean per-position cross entropy of the omission classifier over a corpus,
/// with features compiled to dense indices.
class EmptyModelObjective {
 public:
  EmptyModelObjective(const std::vector<LabeledSentence>& corpus, std::size_t window) : window_(window) {
    if (corpus.empty()) throw Error(ErrorKind::no_data, "cannot train the empty-phrase model on an empty corpus");
    LogLinearEmptyModel probe(window);
    for (std::size_t n = 0; n < corpus.size(); ++n) {
      const auto& ex = corpus[n];
      if (ex.unaligned.size() != ex.source.size())
        throw Error(ErrorKind::invalid_argument, "indicator length does not match sentence length", n + 1);
      for (std::size_t i = 1; i <= ex.source.size(); ++i) {
        Row row;
        for (const auto& f : probe.features(ex.source, i)) {
          auto [it, inserted] = index_.emplace(f, names_.size());
          if (inserted) names_.push_back(f);
          row.features.push_back(it->second);
        }
        row.label = ex.unaligned.u[i - 1] ? 1.0 : 0.0;
        rows_.push_back(std::move(row));
      }
    }
    if (rows_.empty()) throw Error(ErrorKind::no_data, "corpus has no source words");
  }

  std::size_t dimension() const noexcept { return names_.size(); }
  std::size_t positions() const noexcept { return rows_.size(); }

  double loss(std::span<const double> params) const {
    double total = 0.0;
    for (const auto& r : rows_) {
      double s = score(r, params);
      total -= r.label * detail::log_sigmoid(s) + (1.0 - r.label) * detail::log_sigmoid(-s);
    }
    return total / static_cast<double>(rows_.size());
  }

  std::vector<double> gradient(std::span<const double> params) const {
    std::vector<double> g(names_.size(), 0.0);
    for (const auto& r : rows_) {
      double d = detail::sigmoid(score(r, params)) - r.label;
      for (auto f : r.features) g[f] += d;
    }
    for (auto& v : g) v /= static_cast<double>(rows_.size());
    return g;
  }

  LogLinearEmptyModel to_model(std::span<const double> params) const {
    LogLinearEmptyModel m(window_);
    for (std::size_t f = 0; f < names_.size(); ++f)
      if (params[f] != 0.0) m.set_weight(names_[f], params[f]);
    return m;
  }

  std::vector<double> from_model(const LogLinearEmptyModel& m) const {
    std::vector<double> p(names_.size(), 0.0);
    for (std::size_t f = 0; f < names_.size(); ++f) {
      auto it = m.weights().find(names_[f]);
      if (it != m.weights().end()) p[f] = it->second;
    }
    return p;
  }

 private:
  struct Row {
    std::vector<std::size_t> features;
    double label = 0.0;
  };

  static double score(const Row& r, std::span<const double> params) {
    double s = 0.0;
    for (auto f : r.features) s += params[f];
    return s;
  }

  std::size_t window_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<std::string> names_;
  std::vector<Row> rows_;
};

struct EmptyTrainConfig {
  std::size_t window = 2;
  double step = 1.0;
  std::size_t max_epochs = 200;
  double tolerance = 1e-6;  // stop once an epoch improves the loss by less
};

struct EmptyTrainResult {
  LogLinearEmptyModel model;
  std::vector<double> loss_curve;  // loss before the first epoch, then after each
};

/// Plain full-batch gradient descent on the mean cross entropy.
inline EmptyTrainResult train_empty_model(const std::vector<LabeledSentence>& corpus,
                                          const EmptyTrainConfig& config = {}) {
  EmptyModelObjective objective(corpus, config.window);
  std::vector<double> params(objective.dimension(), 0.0);
  EmptyTrainResult result{LogLinearEmptyModel(config.window), {objective.loss(params)}};
  for (std::size_t epoch = 0; epoch < config.max_epochs; ++epoch) {
    auto g = objective.gradient(params);
    for (std::size_t f = 0; f < params.size(); ++f) params[f] -= config.step * g[f];
    result.loss_curve.push_back(objective.loss(params));
    auto n = result.loss_curve.size();
    if (result.loss_curve[n - 2] - result.loss_curve[n - 1] < config.tolerance) break;
  }
  result.model = objective.to_model(params);
  return result;
}

/// Fraction of positions where thresholding the model at 0.5 matches the label.
template <EmptyPhraseModel Model>
double omission_accuracy(const Model& model, const std::vector<LabeledSentence>& corpus) {
  std::size_t right = 0, total = 0;
  for (const auto& ex : corpus)
    for (std::size_t i = 1; i <= ex.source.size(); ++i) {
      bool predicted = model.score_omission(ex.source, i) >= 0.5;
      right += predicted == (ex.unaligned.u[i - 1] != 0);
      ++total;
    }
  return total ? static_cast<double>(right) / static_cast<double>(total) : 0.0;
}

inline void write_empty_model(std::ostream& out, const LogLinearEmptyModel& model) {
  char buf[64];
  out << "#phralign-empty-model v1\n";
  out << "window\t" << model.window() << '\n';
  for (const auto& [f, w] : model.weights()) {
    std::snprintf(buf, sizeof buf, "%.17g", w);
    out << f << '\t' << buf << '\n';
  }
}

inline LogLinearEmptyModel load_empty_model(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "#phralign-empty-model v1")
    throw Error(ErrorKind::format_error, "missing empty-model header", 1);
  if (!std::getline(in, line)) throw Error(ErrorKind::format_error, "missing window line", 2);
  auto head = detail::split_on(line, "\t");
  auto window = head.size() == 2 && head[0] == "window" ? detail::parse_int(head[1]) : std::nullopt;
  if (!window || *window < 0) throw Error(ErrorKind::format_error, "expected 'window<TAB>n'", 2);
  LogLinearEmptyModel model(static_cast<std::size_t>(*window));
  std::size_t line_no = 2;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto f = detail::split_on(line, "\t");
    auto w = f.size() == 2 ? detail::parse_double(f[1]) : std::nullopt;
    if (!w) throw Error(ErrorKind::format_error, "expected 'feature<TAB>weight'", line_no);
    model.set_weight(std::string(f[0]), *w);
  }
  return model;
}

/// Constant omission probability; handy for fixtures and ablations.
struct ConstantEmptyModel {
  double probability = 0.5;
  double score_omission(const SourceSentence& x, std::size_t i) const {
    if (i < 1 || i > x.size()) throw Error(ErrorKind::invalid_argument, "position outside sentence");
    return probability;
  }
};

}  // namespace phralign

#endif
