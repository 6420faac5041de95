#include "core/text.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <set>
#include <unordered_set>

#include "core/error.hpp"

namespace dgrag {

namespace {

bool IsSpace(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool IsWordByte(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
         c >= 0x80;
}

char Lower(char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c; }

}  // namespace

std::string NormalizeEntityName(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  bool pending_space = false;
  for (char c : raw) {
    if (IsSpace(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(Lower(c));
  }
  return out;
}

std::string RequireEntityName(std::string_view raw) {
  std::string n = NormalizeEntityName(raw);
  if (n.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "entity name is empty after normalization");
  }
  return n;
}

std::vector<std::string> WordTokens(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (IsWordByte(static_cast<unsigned char>(c))) {
      cur.push_back(Lower(c));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::vector<std::string> ChunkTokens(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    while (i < n && IsSpace(text[i])) ++i;
    if (i >= n) break;
    std::size_t start = i;
    bool in_annotation = false;
    while (i < n) {
      if (!in_annotation && IsSpace(text[i])) break;
      if (!in_annotation && text[i] == '@' && i + 2 < n && (text[i + 1] == 'E' || text[i + 1] == 'R') &&
          text[i + 2] == '[') {
        in_annotation = true;
        i += 3;
        continue;
      }
      if (in_annotation && text[i] == ']') in_annotation = false;
      ++i;
    }
    out.emplace_back(text.substr(start, i - start));
  }
  return out;
}

std::uint32_t CountTokens(std::string_view text) {
  return static_cast<std::uint32_t>(ChunkTokens(text).size());
}

bool IsStopword(std::string_view w) {
  static const std::unordered_set<std::string_view> kStop = {
      "a",     "about", "after",  "all",    "also",   "am",    "an",     "and",   "any",
      "are",   "as",    "at",     "be",     "been",   "being", "between", "both",  "but",
      "by",    "can",   "could",  "describe", "describes", "did", "do",  "does",  "doing",
      "during", "each", "explain", "for",   "from",   "had",   "has",    "have",  "having",
      "he",    "her",   "here",   "him",    "his",    "how",   "i",      "if",    "in",
      "into",  "is",    "it",     "its",    "me",     "more",  "most",   "my",    "no",
      "nor",   "not",   "of",     "on",     "or",     "other", "our",    "out",   "over",
      "relate", "relates", "role", "same",  "she",    "should", "so",    "some",  "such",
      "tell",  "than",  "that",   "the",    "their",  "them",  "then",   "there", "these",
      "they",  "this",  "those",  "through", "to",    "too",   "under",  "up",    "use",
      "used",  "very",  "was",    "we",     "were",   "what",  "when",   "where", "which",
      "while", "who",   "whom",   "why",    "will",   "with",  "would",  "you",   "your",
  };
  return kStop.count(w) > 0;
}

std::vector<std::string> ContentWords(std::string_view text) {
  std::vector<std::string> out;
  for (auto& w : WordTokens(text)) {
    if (!IsStopword(w)) out.push_back(std::move(w));
  }
  return out;
}

std::vector<std::string> SplitSentences(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    std::string s = NormalizeEntityName(cur);
    if (!s.empty()) out.push_back(std::move(s));
    cur.clear();
  };
  for (char c : text) {
    if (c == '.' || c == '!' || c == '?' || c == '\n') {
      flush();
    } else {
      cur.push_back(c);
    }
  }
  flush();
  return out;
}

double JaccardOfSets(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::set<std::string> sa(a.begin(), a.end());
  std::set<std::string> sb(b.begin(), b.end());
  if (sa.empty() && sb.empty()) return 1.0;
  std::size_t inter = 0;
  for (const auto& x : sa) inter += sb.count(x);
  const std::size_t uni = sa.size() + sb.size() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

std::uint64_t Fnv1a64(std::string_view data, std::uint64_t seed) {
  std::uint64_t h = 0xcbf29ce484222325ULL ^ (seed * 0x9e3779b97f4a7c15ULL);
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  // final avalanche (splitmix64 tail) so low bits are usable as bucket ids
  h ^= h >> 30;
  h *= 0xbf58476d1ce4e5b9ULL;
  h ^= h >> 27;
  h *= 0x94d049bb133111ebULL;
  h ^= h >> 31;
  return h;
}

std::string HexDigest(std::uint64_t v) {
  std::array<char, 17> buf{};
  std::snprintf(buf.data(), buf.size(), "%016llx", static_cast<unsigned long long>(v));
  return std::string(buf.data(), 16);
}

std::string Join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out.append(sep);
    out.append(parts[i]);
  }
  return out;
}

}  // namespace dgrag
