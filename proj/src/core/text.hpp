#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace dgrag {

// Casefolds ASCII letters, collapses whitespace runs to one space, trims.
// Idempotent. May return an empty string; see RequireEntityName.
std::string NormalizeEntityName(std::string_view raw);
// NormalizeEntityName that throws Error(kInvalidArgument) on empty output.
std::string RequireEntityName(std::string_view raw);

// Lowercased alphanumeric words. Bytes >= 0x80 count as word characters so
// UTF-8 text is kept intact.
std::vector<std::string> WordTokens(std::string_view text);

// Whitespace-delimited tokens used for chunking and token counting. An inline
// annotation "@E[...]" / "@R[...]" is kept as one token even if it contains
// spaces.
std::vector<std::string> ChunkTokens(std::string_view text);
std::uint32_t CountTokens(std::string_view text);

bool IsStopword(std::string_view lower_word);
std::vector<std::string> ContentWords(std::string_view text);

// Sentences split on . ! ? and newlines, normalized with
// NormalizeEntityName, empties dropped.
std::vector<std::string> SplitSentences(std::string_view text);

// |A n B| / |A u B| over sets; two empty sets give 1.
double JaccardOfSets(const std::vector<std::string>& a, const std::vector<std::string>& b);

std::uint64_t Fnv1a64(std::string_view data, std::uint64_t seed = 0);
std::string HexDigest(std::uint64_t v);

std::string Join(const std::vector<std::string>& parts, std::string_view sep);

}  // namespace dgrag
