#pragma once

#include <condition_variable>
#include <mutex>

#include "json.hpp"
#include "providers/provider.hpp"

namespace dgrag {

// Chat-completion style HTTP backend (OpenAI-compatible wire format):
//   POST {endpoint}/chat/completions  {"model", "messages", "temperature"}
//   POST {endpoint}/embeddings        {"model", "input"}
// Every request carries the header X-Dgrag-Schema: 1. See
// docs/provider_protocol.md.
class HttpProvider final : public Provider {
 public:
  HttpProvider(ProviderConfig pc, int embedding_dim);

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

  std::string Chat(const std::string& system, const std::string& user, double temperature) const;

 private:
  nlohmann::json Post(const std::string& path, const nlohmann::json& body) const;
  void Acquire() const;
  void Release() const;

  ProviderConfig pc_;
  int dim_;
  std::string host_;    // scheme://host:port
  std::string prefix_;  // path prefix, no trailing slash
  std::string api_key_;

  mutable std::mutex mu_;
  mutable std::condition_variable cv_;
  mutable int in_flight_ = 0;
};

}  // namespace dgrag
