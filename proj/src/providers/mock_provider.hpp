#pragma once

#include <cstdint>

#include "providers/provider.hpp"

namespace dgrag {

// Deterministic stand-in for every model capability.
//
// Extraction reads inline annotations @E[name|type|description] and
// @R[src|dst|description|kw1;kw2]; chunks without annotations fall back to a
// capitalized-phrase heuristic. Embeddings are seeded feature hashes of word
// unigrams. Generation lists the context entities and, for entities the query
// names, their descriptions; when nothing in the context is named by the query
// each candidate carries a different speculative claim, so a batch disagrees
// with itself.
class MockProvider final : public Provider {
 public:
  MockProvider(int embedding_dim, std::uint64_t seed, int summary_top_entities = 8);

  ProviderProfile Profile() const override;
  ExtractionResult ExtractElements(std::string_view chunk_text) const override;
  Embedding Embed(std::string_view text) const override;
  std::vector<std::string> GenerateBatch(std::string_view context, std::string_view query,
                                         int n) const override;
  std::string Summarize(std::string_view subgraph_text) const override;
  KeywordSet ExtractKeywords(std::string_view query) const override;
  bool JudgeConfidence(const std::vector<std::string>& candidates) const override;
  double JudgeClaimConsistency(const std::vector<std::string>& candidates) const override;
  PairwiseVerdict JudgePairwise(std::string_view query, std::string_view answer_a,
                                std::string_view answer_b) const override;

  // Hash bucket a word lands in; exposed so tests can build vocabularies
  // with verified-disjoint buckets.
  std::size_t Bucket(std::string_view word) const;

 private:
  int dim_;
  std::uint64_t seed_;
  int summary_top_;
};

}  // namespace dgrag
