#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "phralign/constraints.hpp"
#include "phralign/synthetic.hpp"

using namespace phralign;

namespace {

OptionLattice lattice_with(std::size_t I, std::initializer_list<std::pair<Span, const char*>> opts) {
  OptionLattice lat{I, {}};
  for (auto [s, t] : opts) lat.options.push_back(TranslationOption::regular(I, s, make_target(t).tokens));
  lat.normalize();
  return lat;
}

ErrorKind kind_of(std::string_view tagged) {
  try {
    parse_tagged(tagged);
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::invalid_input;
}

}  // namespace

TEST(ParseTagged, NestedExample) {
  auto [x, tree] = parse_tagged("<c1> American poet <c2> Edgar Allan Poe </c2> </c1>");
  EXPECT_EQ(x.tokens, (std::vector<std::string>{"American", "poet", "Edgar", "Allan", "Poe"}));
  ASSERT_EQ(tree.size(), 3u);
  EXPECT_EQ(tree.node(1).id, "c1");
  EXPECT_EQ(tree.node(1).span, (Span{1, 5}));
  EXPECT_EQ(tree.node(2).id, "c2");
  EXPECT_EQ(tree.node(2).span, (Span{3, 5}));
  EXPECT_EQ(tree.node(2).parent, std::optional<std::size_t>{1});
  EXPECT_EQ(tree.node(tree.innermost(3)).id, "c2");
  EXPECT_EQ(tree.node(tree.innermost(2)).id, "c1");
  EXPECT_EQ(tree.max_depth(), 2u);
}

TEST(ParseTagged, UntaggedIsRootOnly) {
  auto [x, tree] = parse_tagged("a b c");
  ASSERT_EQ(tree.size(), 1u);
  EXPECT_EQ(tree.node(0).span, (Span{1, 3}));
}

TEST(ParseTagged, MalformedMarkup) {
  EXPECT_EQ(kind_of("<c1> a <c2> b </c1> </c2>"), ErrorKind::malformed_markup);
  EXPECT_EQ(kind_of("<c1> a"), ErrorKind::malformed_markup);
  EXPECT_EQ(kind_of("a </c1>"), ErrorKind::malformed_markup);
  EXPECT_EQ(kind_of("a <c1> </c1> b"), ErrorKind::malformed_markup);
}

TEST(ParseTagged, HtmlTagsGetFreshIds) {
  auto [x, tree] = parse_tagged("see <a href=\"x.html\"> the <b> page </b> </a> <br> now");
  EXPECT_EQ(x.tokens, (std::vector<std::string>{"see", "the", "page", "<br>", "now"}));
  ASSERT_EQ(tree.size(), 3u);
  EXPECT_EQ(tree.node(1).id, "c1");
  EXPECT_EQ(tree.node(1).open_token, "<a href=\"x.html\">");
  EXPECT_EQ(tree.node(1).close_token, "</a>");
  EXPECT_EQ(tree.node(2).id, "c2");
  EXPECT_EQ(tree.node(2).span, (Span{3, 3}));
}

TEST(ParseTagged, TagsWithoutSpaces) {
  auto [x, tree] = parse_tagged("<b>bold</b> text");
  EXPECT_EQ(x.tokens, (std::vector<std::string>{"bold", "text"}));
  ASSERT_EQ(tree.size(), 2u);
  EXPECT_EQ(tree.node(1).span, (Span{1, 1}));
}

// Serializing the parsed tree reproduces the tag structure.
TEST(ParseTaggedProperty, RoundTrip) {
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    InstanceOptions io;
    io.max_tag_depth = 3;
    io.max_length = 8;
    auto inst = make_random_instance(seed, io);
    EXPECT_EQ(to_tagged_string(inst.source, inst.tree), inst.tagged_source);
    auto [x, tree] = parse_tagged(to_tagged_string(inst.source, inst.tree));
    EXPECT_EQ(x, inst.source);
    ASSERT_EQ(tree.size(), inst.tree.size());
    for (std::size_t k = 0; k < tree.size(); ++k) {
      EXPECT_EQ(tree.node(k).span, inst.tree.node(k).span);
      EXPECT_EQ(tree.node(k).parent, inst.tree.node(k).parent);
    }
  }
}

TEST(ApplyLexical, ReplacesOverlappingOptions) {
  auto lat = lattice_with(5, {{{4, 4}, "a"}, {{5, 5}, "b"}, {{3, 5}, "c"}, {{4, 5}, "d"}, {{1, 1}, "e"}});
  lat.options.push_back(TranslationOption::omission(5, 4));
  lat.options.push_back(TranslationOption::insertion(5, "de"));
  lat.normalize();
  auto out = apply_lexical(lat, {{{4, 5}, {"ailunpo"}}});
  for (const auto& o : out.options) {
    if (o.kind == OptionKind::insertion) continue;
    if (o.span.intersects({4, 5})) {
      EXPECT_EQ(o.span, (Span{4, 5}));
      EXPECT_EQ(o.target, (std::vector<std::string>{"ailunpo"}));
    }
  }
  EXPECT_EQ(out.at({4, 5}).size(), 1u);
  EXPECT_EQ(out.at({1, 1}).size(), 1u);
  EXPECT_EQ(out.count(OptionKind::insertion), 1u);
  EXPECT_EQ(out.count(OptionKind::omission), 0u);
}

TEST(ApplyLexical, EmptyListAndInjection) {
  auto lat = lattice_with(3, {{{1, 1}, "a"}, {{2, 3}, "b"}});
  EXPECT_EQ(apply_lexical(lat, {}).options, lat.options);
  auto lat2 = lattice_with(3, {{{1, 1}, "a"}});
  auto out = apply_lexical(lat2, {{{3, 3}, {"z"}}});
  EXPECT_EQ(out.size(), 2u);
  EXPECT_EQ(out.at({3, 3}).size(), 1u);
}

TEST(ApplyLexical, OverlappingConstraintsConflict) {
  try {
    apply_lexical(OptionLattice{4, {}}, {{{1, 2}, {"a"}}, {{2, 3}, {"b"}}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::conflicting_constraints);
  }
}

TEST(ApplyStructural, BoundaryCrossingRemoved) {
  auto [x, tree] = parse_tagged("a b <c1> c d e </c1>");
  auto lat = lattice_with(5, {{{2, 3}, "p"}, {{3, 5}, "q"}, {{4, 4}, "r"}, {{1, 2}, "s"}});
  auto out = apply_structural(lat, tree);
  EXPECT_TRUE(out.at({2, 3}).empty());
  EXPECT_EQ(out.at({3, 5}).size(), 1u);
  EXPECT_EQ(out.size(), 3u);
  auto flat = ConstraintTree::flat(5);
  EXPECT_EQ(apply_structural(lat, flat).options, lat.options);
}

// After filtering, lexical spans hold exactly one option with nothing
// partially overlapping, structural nodes are never straddled, and both
// filters are idempotent.
TEST(ConstraintsProperty, FilterInvariants) {
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    InstanceOptions io;
    io.max_tag_depth = 2;
    io.max_lexical = 3;
    io.max_entries = 25;
    auto inst = make_random_instance(seed, io);
    auto base = collect_options(inst.source, inst.table, inst.insertions);
    base = add_omission_options(std::move(base), inst.source, inst.empty_model, 0.5);
    auto lex = apply_lexical(base, inst.lexical);
    for (const auto& c : inst.lexical) {
      EXPECT_EQ(lex.at(c.source_span).size(), 1u);
      for (const auto& o : lex.options) {
        if (o.kind != OptionKind::insertion && o.span.intersects(c.source_span)) {
          EXPECT_EQ(o.span, c.source_span);
        }
      }
    }
    EXPECT_EQ(apply_lexical(lex, inst.lexical).options, lex.options);
    auto st = apply_structural(lex, inst.tree);
    for (const auto& o : st.options) {
      if (o.kind == OptionKind::insertion) continue;
      for (const auto& n : inst.tree.nodes()) EXPECT_TRUE(n.span.contains(o.span) || !n.span.intersects(o.span));
    }
    EXPECT_EQ(apply_structural(st, inst.tree).options, st.options);
  }
}

TEST(LocateOccurrences, Examples) {
  auto x = make_source("a b a b");
  EXPECT_EQ(locate_constraint_occurrences(x, {"a", "b"}), (std::vector<Span>{{1, 2}, {3, 4}}));
  EXPECT_TRUE(locate_constraint_occurrences(x, {"c"}).empty());
  EXPECT_EQ(locate_constraint_occurrences(x, {"a", "b", "a", "b"}), (std::vector<Span>{{1, 4}}));
}

TEST(LexicalFile, LoadAndResolve) {
  std::istringstream in("a b ||| X\n\nc ||| Y ||| 2\nq ||| Z ||| 1\n");
  auto specs = load_lexical_constraints(in);
  ASSERT_EQ(specs.size(), 3u);
  auto x = make_source("a b c a b");
  std::vector<std::string> unmatched;
  auto all = resolve_lexical_constraints(x, 1, specs, 0, &unmatched);
  EXPECT_EQ(all, (std::vector<LexicalConstraint>{{{1, 2}, {"X"}}, {{4, 5}, {"X"}}}));
  EXPECT_EQ(unmatched, (std::vector<std::string>{"q"}));
  auto second = resolve_lexical_constraints(x, 2, specs, 2);
  EXPECT_EQ(second, (std::vector<LexicalConstraint>{{{4, 5}, {"X"}}}));
  auto line2 = resolve_lexical_constraints(x, 2, specs);
  EXPECT_EQ(line2.size(), 3u);

  std::istringstream bad("a b X\n");
  try {
    load_lexical_constraints(bad);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::format_error);
    EXPECT_EQ(e.line(), 1u);
  }
}
