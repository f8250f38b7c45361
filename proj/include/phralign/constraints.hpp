#ifndef PHRALIGN_CONSTRAINTS_HPP
#define PHRALIGN_CONSTRAINTS_HPP

#include <algorithm>
#include <istream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "phralign/core.hpp"
#include "phralign/markup.hpp"
#include "phralign/phrase_table.hpp"

namespace phralign {

/// The source span must be translated as one contiguous segment equal to `target`.
struct LexicalConstraint {
  Span source_span;
  std::vector<std::string> target;
  bool operator==(const LexicalConstraint&) const = default;
};

struct ConstraintNode {
  std::string id;
  Span span;
  std::vector<std::size_t> children;  // indices into the owning tree, in source order
  std::optional<std::size_t> parent;
  std::string open_token;
  std::string close_token;
  std::size_t depth = 0;  // root is 0
};

/// Nested structural constraints over a sentence. Node 0 is the root and
/// spans the whole sentence; its tags are never emitted.
class ConstraintTree {
 public:
  ConstraintTree() = default;

  /// Root-only tree for an untagged sentence of length I.
  static ConstraintTree flat(std::size_t I) {
    ConstraintTree t;
    t.nodes_.push_back({"s", {1, I}, {}, std::nullopt, "<s>", "</s>", 0});
    t.innermost_.assign(I, 0);
    return t;
  }

  static constexpr std::size_t root() noexcept { return 0; }
  std::size_t size() const noexcept { return nodes_.size(); }
  const ConstraintNode& node(std::size_t k) const { return nodes_.at(k); }
  const std::vector<ConstraintNode>& nodes() const noexcept { return nodes_; }
  std::size_t sentence_length() const noexcept { return innermost_.size(); }

  std::size_t max_depth() const {
    std::size_t d = 0;
    for (const auto& n : nodes_) d = std::max(d, n.depth);
    return d;
  }

  /// Innermost node enclosing source position i (1-based).
  std::size_t innermost(std::size_t i) const { return innermost_.at(i - 1); }

  /// Deepest node whose span contains `s`.
  std::size_t innermost_for_span(Span s) const {
    std::size_t k = innermost(s.begin);
    while (!nodes_[k].span.contains(s)) k = *nodes_[k].parent;
    return k;
  }

  bool is_ancestor_or_self(std::size_t ancestor, std::size_t k) const {
    for (std::optional<std::size_t> cur = k; cur; cur = nodes_[*cur].parent)
      if (*cur == ancestor) return true;
    return false;
  }

  /// Nodes strictly below `ancestor` down to and including `k`, outermost first.
  std::vector<std::size_t> path_below(std::size_t ancestor, std::size_t k) const {
    std::vector<std::size_t> out;
    for (std::size_t cur = k; cur != ancestor; cur = *nodes_[cur].parent) out.push_back(cur);
    std::reverse(out.begin(), out.end());
    return out;
  }

 private:
  friend std::pair<SourceSentence, ConstraintTree> parse_tagged(std::string_view line);

  std::vector<ConstraintNode> nodes_;
  std::vector<std::size_t> innermost_;
};

/// Strips paired tags from a line and records their nesting. `<cN>` keeps
/// its name as the node id; any other paired tag gets a fresh `cK` id by
/// order of appearance. Standalone tags (`<br>`, `<img .../>`) are ordinary tokens.
inline std::pair<SourceSentence, ConstraintTree> parse_tagged(std::string_view line) {
  SourceSentence x;
  ConstraintTree tree;
  tree.nodes_.push_back({"s", {1, 0}, {}, std::nullopt, "<s>", "</s>", 0});
  std::vector<std::size_t> open{0};
  std::vector<std::string> open_names{""};
  std::size_t fresh = 0;

  for (auto& tok : lex_markup(line)) {
    auto info = classify_tag(tok);
    if (info.kind == TagKind::open) {
      ConstraintNode n;
      bool numbered = info.name.size() > 1 && info.name[0] == 'c' &&
                      std::all_of(info.name.begin() + 1, info.name.end(), [](char c) { return c >= '0' && c <= '9'; });
      ++fresh;
      n.id = numbered ? info.name : "c" + std::to_string(fresh);
      n.span = {x.size() + 1, x.size()};
      n.parent = open.back();
      n.open_token = tok;
      n.close_token = "</" + info.name + ">";
      n.depth = open.size();
      tree.nodes_.push_back(std::move(n));
      std::size_t k = tree.nodes_.size() - 1;
      tree.nodes_[open.back()].children.push_back(k);
      open.push_back(k);
      open_names.push_back(info.name);
    } else if (info.kind == TagKind::close) {
      if (open.size() == 1) throw Error(ErrorKind::malformed_markup, "close tag " + tok + " without open tag");
      if (open_names.back() != info.name)
        throw Error(ErrorKind::malformed_markup,
                    "crossing tags: " + tok + " closes " + tree.nodes_[open.back()].open_token);
      auto& n = tree.nodes_[open.back()];
      n.span.end = x.size();
      if (n.span.end < n.span.begin) throw Error(ErrorKind::malformed_markup, "empty tag pair " + n.open_token + tok);
      n.close_token = tok;
      open.pop_back();
      open_names.pop_back();
    } else {
      x.tokens.push_back(std::move(tok));
      tree.innermost_.push_back(open.back());
    }
  }
  if (open.size() > 1)
    throw Error(ErrorKind::malformed_markup, "unclosed tag " + tree.nodes_[open.back()].open_token);
  tree.nodes_[0].span = {1, x.size()};
  return {std::move(x), std::move(tree)};
}

/// Inverse of parse_tagged on well-formed input (single-space separated).
inline std::string to_tagged_string(const SourceSentence& x, const ConstraintTree& tree) {
  std::vector<std::string> out;
  for (std::size_t i = 1; i <= x.size(); ++i) {
    for (std::size_t k = 1; k < tree.size(); ++k)  // nodes are stored in opening order
      if (tree.node(k).span.begin == i) out.push_back(tree.node(k).open_token);
    out.push_back(x.at(i));
    std::vector<std::size_t> closing;
    for (std::size_t k = 1; k < tree.size(); ++k)
      if (tree.node(k).span.end == i) closing.push_back(k);
    for (auto it = closing.rbegin(); it != closing.rend(); ++it) out.push_back(tree.node(*it).close_token);
  }
  return detail::join(out);
}

inline std::vector<Span> locate_constraint_occurrences(const SourceSentence& x,
                                                       const std::vector<std::string>& phrase) {
  if (phrase.empty()) throw Error(ErrorKind::invalid_argument, "constraint phrase must be non-empty");
  std::vector<Span> out;
  if (phrase.size() > x.size()) return out;
  for (std::size_t b = 1; b + phrase.size() - 1 <= x.size(); ++b)
    if (std::equal(phrase.begin(), phrase.end(), x.tokens.begin() + static_cast<std::ptrdiff_t>(b - 1)))
      out.push_back({b, b + phrase.size() - 1});
  return out;
}

inline void check_lexical_constraints(const std::vector<LexicalConstraint>& constraints, std::size_t I) {
  for (const auto& c : constraints) {
    if (c.source_span.begin < 1 || c.source_span.end < c.source_span.begin || c.source_span.end > I)
      throw Error(ErrorKind::invalid_argument, "lexical constraint span outside sentence");
    if (c.target.empty()) throw Error(ErrorKind::invalid_argument, "lexical constraint has an empty target");
  }
  for (std::size_t a = 0; a < constraints.size(); ++a)
    for (std::size_t b = a + 1; b < constraints.size(); ++b)
      if (constraints[a].source_span.intersects(constraints[b].source_span))
        throw Error(ErrorKind::conflicting_constraints, "lexical constraints overlap on the source side");
}

/// Forces each constrained span to be translated by exactly its target
/// phrase and nothing else. Insertion options are left alone.
inline OptionLattice apply_lexical(OptionLattice lattice, const std::vector<LexicalConstraint>& constraints) {
  check_lexical_constraints(constraints, lattice.sentence_length);
  for (const auto& c : constraints) {
    std::erase_if(lattice.options, [&](const TranslationOption& o) {
      return o.kind != OptionKind::insertion && o.span.intersects(c.source_span);
    });
    lattice.options.push_back(TranslationOption::regular(lattice.sentence_length, c.source_span, c.target));
  }
  lattice.normalize();
  return lattice;
}

/// Drops options whose span straddles a constraint boundary.
inline OptionLattice apply_structural(OptionLattice lattice, const ConstraintTree& tree) {
  std::erase_if(lattice.options, [&](const TranslationOption& o) {
    if (o.kind == OptionKind::insertion) return false;
    for (std::size_t k = 1; k < tree.size(); ++k) {
      const Span& s = tree.node(k).span;
      if (o.span.intersects(s) && !s.contains(o.span)) return true;
    }
    return false;
  });
  return lattice;
}

/// One line of a lexical constraints file: `source ||| target [||| sentence]`.
/// Without a sentence number the constraint applies wherever it matches.
struct LexicalConstraintSpec {
  std::vector<std::string> source;
  std::vector<std::string> target;
  std::optional<std::size_t> sentence;  // 1-based input line
};

inline std::vector<LexicalConstraintSpec> load_lexical_constraints(std::istream& in) {
  std::vector<LexicalConstraintSpec> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    auto f = detail::split_on(line, "|||");
    if (f.size() < 2 || f.size() > 3) throw Error(ErrorKind::format_error, "expected 'source ||| target'", line_no);
    LexicalConstraintSpec spec{detail::split_ws(f[0]), detail::split_ws(f[1]), std::nullopt};
    if (spec.source.empty() || spec.target.empty())
      throw Error(ErrorKind::format_error, "empty side in lexical constraint", line_no);
    if (f.size() == 3) {
      auto n = detail::parse_int(f[2]);
      if (!n || *n < 1) throw Error(ErrorKind::format_error, "bad sentence number", line_no);
      spec.sentence = static_cast<std::size_t>(*n);
    }
    out.push_back(std::move(spec));
  }
  return out;
}

/// Turns constraint specs into spans for sentence number `sentence`.
/// `occurrence` 0 constrains every match, k constrains only the k-th.
/// Specs pinned to this sentence that match nothing are reported in `unmatched`.
inline std::vector<LexicalConstraint> resolve_lexical_constraints(const SourceSentence& x, std::size_t sentence,
                                                                  const std::vector<LexicalConstraintSpec>& specs,
                                                                  std::size_t occurrence = 0,
                                                                  std::vector<std::string>* unmatched = nullptr) {
  std::vector<LexicalConstraint> out;
  for (const auto& spec : specs) {
    if (spec.sentence && *spec.sentence != sentence) continue;
    auto spans = locate_constraint_occurrences(x, spec.source);
    if (spans.empty() && spec.sentence && unmatched) unmatched->push_back(detail::join(spec.source));
    for (std::size_t k = 0; k < spans.size(); ++k)
      if (occurrence == 0 || occurrence == k + 1) out.push_back({spans[k], spec.target});
  }
  return out;
}

}  // namespace phralign

#endif
