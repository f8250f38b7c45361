#ifndef PHRALIGN_MARKUP_HPP
#define PHRALIGN_MARKUP_HPP

// Lexing and classification of inline tags in tokenized text.

#include <algorithm>
#include <array>
#include <cctype>
#include <string>
#include <string_view>
#include <vector>

#include "phralign/detail/strings.hpp"

namespace phralign {

enum class TagKind { none, open, close, standalone };

struct TagInfo {
  TagKind kind = TagKind::none;
  std::string name;  // lower-cased element name
};

inline TagInfo classify_tag(std::string_view tok) {
  if (tok.size() < 3 || tok.front() != '<' || tok.back() != '>') return {};
  std::string_view body = tok.substr(1, tok.size() - 2);
  if (body.starts_with("!") || body.starts_with("?")) return {TagKind::standalone, ""};
  bool close = body.starts_with("/");
  if (close) body.remove_prefix(1);
  if (body.empty() || !std::isalpha(static_cast<unsigned char>(body.front()))) return {};
  std::size_t n = 0;
  while (n < body.size() && (std::isalnum(static_cast<unsigned char>(body[n])) || body[n] == '-' || body[n] == '_' || body[n] == ':'))
    ++n;
  std::string name = detail::to_lower(body.substr(0, n));
  if (close) return {TagKind::close, name};
  static constexpr std::array<std::string_view, 14> kVoid = {"area", "base", "br", "col", "embed", "hr", "img",
                                                             "input", "link", "meta", "param", "source", "track", "wbr"};
  if (body.ends_with("/") || std::find(kVoid.begin(), kVoid.end(), name) != kVoid.end())
    return {TagKind::standalone, name};
  return {TagKind::open, name};
}

/// True for tokens that open or close a paired tag.
inline bool is_paired_tag(std::string_view tok) {
  auto k = classify_tag(tok).kind;
  return k == TagKind::open || k == TagKind::close;
}

/// Whitespace tokenization that also splits `<...>` tags off adjacent text
/// and keeps a tag with internal spaces (attributes) as one token.
inline std::vector<std::string> lex_markup(std::string_view line) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) out.push_back(std::move(cur));
    cur.clear();
  };
  std::size_t i = 0;
  while (i < line.size()) {
    char c = line[i];
    if (c == '<') {
      auto close = line.find('>', i);
      auto next_open = line.find('<', i + 1);
      if (close != std::string_view::npos && (next_open == std::string_view::npos || close < next_open)) {
        std::string tag(line.substr(i, close - i + 1));
        if (classify_tag(tag).kind != TagKind::none) {
          flush();
          // Collapse internal whitespace runs so the token is stable.
          std::string norm;
          for (char t : tag) {
            if (detail::is_space(t)) {
              if (!norm.empty() && norm.back() != ' ') norm += ' ';
            } else {
              norm += t;
            }
          }
          out.push_back(std::move(norm));
          i = close + 1;
          continue;
        }
      }
    }
    if (detail::is_space(c)) {
      flush();
    } else {
      cur += c;
    }
    ++i;
  }
  flush();
  return out;
}

/// Paired tags in `tokens` close in reverse order of opening, by name.
inline bool tags_well_nested(const std::vector<std::string>& tokens) {
  std::vector<std::string> stack;
  for (const auto& t : tokens) {
    auto info = classify_tag(t);
    if (info.kind == TagKind::open) {
      stack.push_back(info.name);
    } else if (info.kind == TagKind::close) {
      if (stack.empty() || stack.back() != info.name) return false;
      stack.pop_back();
    }
  }
  return stack.empty();
}

}  // namespace phralign

#endif
