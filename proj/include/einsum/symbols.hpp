#pragma once

#include <cctype>
#include <compare>
#include <cstdint>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "einsum/errors.hpp"

namespace einsum {

// An index symbol is either a letter (a-z, A-Z) or a non-negative integer tag,
// written `{n}`. The two namespaces are disjoint; letters order before tags so
// rendered output is deterministic.
class IndexSymbol {
 public:
  static IndexSymbol letter(char c) {
    if (c >= 'a' && c <= 'z') return IndexSymbol(c - 'a');
    if (c >= 'A' && c <= 'Z') return IndexSymbol(26 + (c - 'A'));
    fail(Errc::syntax_error, std::string("not an index letter: '") + c + "'");
  }

  static IndexSymbol tag(std::int64_t n) {
    if (n < 0) fail(Errc::syntax_error, "index tags must be non-negative");
    return IndexSymbol(kTagBase + n);
  }

  bool is_letter() const noexcept { return code_ < kTagBase; }
  bool is_tag() const noexcept { return code_ >= kTagBase; }

  char letter_value() const {
    if (!is_letter()) fail(Errc::syntax_error, "symbol is not a letter");
    return code_ < 26 ? static_cast<char>('a' + code_) : static_cast<char>('A' + (code_ - 26));
  }

  std::int64_t tag_value() const {
    if (!is_tag()) fail(Errc::syntax_error, "symbol is not a tag");
    return code_ - kTagBase;
  }

  std::string str() const {
    if (is_letter()) return std::string(1, letter_value());
    return "{" + std::to_string(tag_value()) + "}";
  }

  auto operator<=>(const IndexSymbol&) const = default;

 private:
  static constexpr std::int64_t kTagBase = 52;
  explicit IndexSymbol(std::int64_t code) : code_(code) {}
  std::int64_t code_;
};

using SymbolSet = std::set<IndexSymbol>;

// Ordered sequence of index symbols; duplicates allowed, may be empty.
class IndexString {
 public:
  IndexString() = default;
  explicit IndexString(std::vector<IndexSymbol> symbols) : symbols_(std::move(symbols)) {}

  // Small literal helper: "ij{10}k". Throws on anything but letters and tags.
  static IndexString of(std::string_view text) {
    std::vector<IndexSymbol> syms;
    std::size_t i = 0;
    while (i < text.size()) {
      char c = text[i];
      if (std::isspace(static_cast<unsigned char>(c))) {
        ++i;
      } else if (std::isalpha(static_cast<unsigned char>(c))) {
        syms.push_back(IndexSymbol::letter(c));
        ++i;
      } else if (c == '{') {
        std::size_t close = text.find('}', i);
        if (close == std::string_view::npos)
          fail(Errc::syntax_error, "unterminated index tag");
        std::int64_t n = 0;
        if (close == i + 1) fail(Errc::syntax_error, "empty index tag");
        for (std::size_t j = i + 1; j < close; ++j) {
          if (!std::isdigit(static_cast<unsigned char>(text[j])))
            fail(Errc::syntax_error, "index tag must be an integer");
          n = n * 10 + (text[j] - '0');
        }
        syms.push_back(IndexSymbol::tag(n));
        i = close + 1;
      } else {
        fail(Errc::syntax_error, std::string("bad character in index string: '") + c + "'");
      }
    }
    return IndexString(std::move(syms));
  }

  std::size_t size() const noexcept { return symbols_.size(); }
  bool empty() const noexcept { return symbols_.empty(); }
  const IndexSymbol& operator[](std::size_t i) const { return symbols_[i]; }
  const std::vector<IndexSymbol>& symbols() const noexcept { return symbols_; }
  auto begin() const noexcept { return symbols_.begin(); }
  auto end() const noexcept { return symbols_.end(); }

  bool contains(IndexSymbol s) const {
    for (const auto& t : symbols_)
      if (t == s) return true;
    return false;
  }

  std::string str() const {
    std::string out;
    for (const auto& s : symbols_) out += s.str();
    return out;
  }

  auto operator<=>(const IndexString&) const = default;

 private:
  std::vector<IndexSymbol> symbols_;
};

// De-duplicated symbol set of an index string.
inline SymbolSet sigma(const IndexString& s) {
  return SymbolSet(s.begin(), s.end());
}

inline bool subset_of(const SymbolSet& a, const SymbolSet& b) {
  for (const auto& s : a)
    if (!b.count(s)) return false;
  return true;
}

inline SymbolSet set_union(const SymbolSet& a, const SymbolSet& b) {
  SymbolSet out = a;
  out.insert(b.begin(), b.end());
  return out;
}

inline SymbolSet set_intersection(const SymbolSet& a, const SymbolSet& b) {
  SymbolSet out;
  for (const auto& s : a)
    if (b.count(s)) out.insert(s);
  return out;
}

}  // namespace einsum
