#pragma once

#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "core/config.hpp"
#include "core/types.hpp"

namespace dgrag {

struct ExtractedEntity {
  std::string name;
  std::string type_label;
  std::string description;

  bool operator==(const ExtractedEntity&) const = default;
};

struct ExtractedRelation {
  std::string src_name;
  std::string dst_name;
  std::string description;
  std::vector<std::string> keywords;

  bool operator==(const ExtractedRelation&) const = default;
};

struct ExtractionResult {
  ChunkId chunk_id;  // filled by the pipeline, not the provider
  std::vector<ExtractedEntity> entities;
  std::vector<ExtractedRelation> relations;
};

struct KeywordSet {
  std::vector<std::string> low_level;
  std::vector<std::string> high_level;

  bool operator==(const KeywordSet&) const = default;
};

struct ProviderProfile {
  std::string name;
  bool deterministic = false;
  int embedding_dim = 0;
};

inline constexpr const char* kJudgeMetrics[] = {"Comprehensiveness", "Diversity", "Empowerment",
                                                "Overall"};

struct MetricVerdict {
  std::string winner;  // "A" or "B"
  std::string explanation;
};

// Keyed by the names in kJudgeMetrics.
using PairwiseVerdict = std::map<std::string, MetricVerdict>;

inline constexpr const char* kInsufficientAnswer = "Insufficient information. I don't know.";

// Every model-backed capability. Implementations are stateless after
// construction and safe to call concurrently.
class Provider {
 public:
  virtual ~Provider() = default;

  virtual ProviderProfile Profile() const = 0;
  virtual ExtractionResult ExtractElements(std::string_view chunk_text) const = 0;
  virtual Embedding Embed(std::string_view text) const = 0;
  virtual std::vector<std::string> GenerateBatch(std::string_view context, std::string_view query,
                                                 int n) const = 0;
  virtual std::string Summarize(std::string_view subgraph_text) const = 0;
  virtual KeywordSet ExtractKeywords(std::string_view query) const = 0;
  // true means low confidence
  virtual bool JudgeConfidence(const std::vector<std::string>& candidates) const = 0;
  virtual double JudgeClaimConsistency(const std::vector<std::string>& candidates) const = 0;
  virtual PairwiseVerdict JudgePairwise(std::string_view query, std::string_view answer_a,
                                        std::string_view answer_b) const = 0;
};

std::unique_ptr<Provider> MakeProvider(const ProviderConfig& pc, const SystemConfig& cfg);

// Prompt context layout shared by every generator:
//
//   -----Entities-----
//   name (type): description
//   -----Relations-----
//   src — dst: description
//   -----Sources-----
//   [chunk id] text
//
// Sections with no rows are omitted; an empty bundle gives "".
std::string FormatContext(const KnowledgeBundle& bundle);

struct ContextEntity {
  std::string name;
  std::string description;
};

struct ParsedContext {
  std::vector<ContextEntity> entities;
  std::vector<std::pair<std::string, std::string>> sources;  // (chunk id, text)
};

ParsedContext ParseContext(std::string_view context);

// Case-insensitive phrase test used by the mock confidence judge.
bool ContainsInsufficiencyPhrase(std::string_view text);

// Pairwise JSON verdict as produced by a judging model; throws
// Error(kJudging) on schema violations.
PairwiseVerdict ParsePairwiseVerdict(std::string_view model_output);

}  // namespace dgrag
