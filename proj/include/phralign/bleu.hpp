#ifndef PHRALIGN_BLEU_HPP
#define PHRALIGN_BLEU_HPP

// Corpus-level case-insensitive BLEU-4 following the multi-bleu.perl
// convention, with three ways of treating inline tags.

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "phralign/detail/strings.hpp"
#include "phralign/error.hpp"
#include "phralign/markup.hpp"

namespace phralign {

enum class TagMode {
  without_tags,  // tag tokens removed from both sides
  with_tags,     // tags scored as ordinary tokens
  in_tags,       // only words enclosed by some tag pair
};

inline std::optional<TagMode> parse_tag_mode(std::string_view s) {
  if (s == "wo-tag" || s == "w/o-tag" || s == "without") return TagMode::without_tags;
  if (s == "w-tag" || s == "w/-tag" || s == "with") return TagMode::with_tags;
  if (s == "in-tag" || s == "in") return TagMode::in_tags;
  return std::nullopt;
}

struct BleuReport {
  double bleu = 0.0;  // percentage
  std::array<double, 4> precisions{};
  double brevity_penalty = 0.0;
  std::size_t hyp_length = 0;
  std::size_t ref_length = 0;
  std::optional<std::size_t> zero_precision_order;  // first n with no matches
};

/// Tokens of one line as seen under `mode`, lower-cased.
inline std::vector<std::string> bleu_view(const std::vector<std::string>& tokens, TagMode mode) {
  std::vector<std::string> out;
  int depth = 0;
  for (const auto& t : tokens) {
    auto kind = classify_tag(t).kind;
    if (mode == TagMode::with_tags) {
      out.push_back(detail::to_lower(t));
      continue;
    }
    if (kind == TagKind::open) {
      ++depth;
      continue;
    }
    if (kind == TagKind::close) {
      depth = std::max(0, depth - 1);
      continue;
    }
    if (kind == TagKind::standalone) continue;
    if (mode == TagMode::without_tags || depth > 0) out.push_back(detail::to_lower(t));
  }
  return out;
}

inline BleuReport compute_bleu(const std::vector<std::vector<std::string>>& hypotheses,
                               const std::vector<std::vector<std::string>>& references, TagMode mode) {
  if (hypotheses.size() != references.size())
    throw Error(ErrorKind::invalid_input, "hypothesis and reference line counts differ (" +
                                              std::to_string(hypotheses.size()) + " vs " +
                                              std::to_string(references.size()) + ")");
  if (mode == TagMode::in_tags) {
    bool any = std::any_of(references.begin(), references.end(), [](const auto& r) {
      return std::any_of(r.begin(), r.end(), [](const auto& t) { return is_paired_tag(t); });
    });
    if (!any) throw Error(ErrorKind::invalid_input, "in-tag mode needs tagged references");
  }
  std::array<double, 4> matched{}, total{};
  BleuReport rep;
  for (std::size_t s = 0; s < hypotheses.size(); ++s) {
    auto hyp = bleu_view(hypotheses[s], mode);
    auto ref = bleu_view(references[s], mode);
    rep.hyp_length += hyp.size();
    rep.ref_length += ref.size();
    for (std::size_t n = 1; n <= 4; ++n) {
      std::map<std::vector<std::string>, std::size_t> ref_counts;
      for (std::size_t k = 0; k + n <= ref.size(); ++k) ++ref_counts[{ref.begin() + k, ref.begin() + k + n}];
      std::map<std::vector<std::string>, std::size_t> hyp_counts;
      for (std::size_t k = 0; k + n <= hyp.size(); ++k) ++hyp_counts[{hyp.begin() + k, hyp.begin() + k + n}];
      for (const auto& [g, c] : hyp_counts) {
        auto it = ref_counts.find(g);
        matched[n - 1] += static_cast<double>(std::min(c, it == ref_counts.end() ? 0 : it->second));
        total[n - 1] += static_cast<double>(c);
      }
    }
  }
  double log_sum = 0.0;
  for (std::size_t n = 0; n < 4; ++n) {
    rep.precisions[n] = total[n] > 0 ? matched[n] / total[n] : 0.0;
    if (matched[n] == 0 && !rep.zero_precision_order) rep.zero_precision_order = n + 1;
    if (rep.precisions[n] > 0) log_sum += std::log(rep.precisions[n]);
  }
  if (rep.hyp_length == 0) {
    rep.brevity_penalty = 0.0;
    rep.bleu = 0.0;
    return rep;
  }
  rep.brevity_penalty = rep.hyp_length < rep.ref_length
                            ? std::exp(1.0 - static_cast<double>(rep.ref_length) / static_cast<double>(rep.hyp_length))
                            : 1.0;
  rep.bleu = rep.zero_precision_order ? 0.0 : 100.0 * rep.brevity_penalty * std::exp(log_sum / 4.0);
  return rep;
}

}  // namespace phralign

#endif
