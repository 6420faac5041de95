#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "core/config.hpp"
#include "core/types.hpp"
#include "providers/provider.hpp"
#include "stores/edge_kb.hpp"

namespace dgrag {

struct SimilarityReport {
  double cosine_mean = 0.0;
  double jaccard_mean = 0.0;
  double claim_consistency = 0.0;
  double final_score = 0.0;
};

struct LocalQueryTrace {
  std::string query;
  KeywordSet keywords;
  KnowledgeBundle bundle;
  std::vector<CandidateResponse> candidates;
  GateDecision decision;
  std::optional<SimilarityReport> report;
  std::map<std::string, double> phase_timings;  // local_query, gate
};

// Keeps the longest prefix of (entities, relations, chunks), in that order,
// whose rendered context lines fit in token_budget. Sets truncated when
// anything was dropped. A larger budget never keeps fewer elements.
KnowledgeBundle TruncateBundle(KnowledgeBundle bundle, int token_budget);

// Low-level keywords are matched against the entity index and high-level
// keywords against the relation index. Matched entities are expanded by one
// hop through the graph store (skipped under vector_only); matched relations
// always bring their endpoints. Chunks are the sources of every element kept.
KnowledgeBundle DualLevelRetrieve(std::string_view query, const EdgeKB& kb, const Provider& provider,
                                  const SystemConfig& cfg, KeywordSet* keywords_out = nullptr);

// Cross-edge service: the same retrieval, without generation.
KnowledgeBundle ServeRetrieval(std::string_view query, const EdgeKB& kb, const Provider& provider,
                               const SystemConfig& cfg);

// n_batch candidates (one under single_inference), each embedded.
std::vector<CandidateResponse> GenerateCandidates(std::string_view query, const KnowledgeBundle& bundle,
                                                  const Provider& provider, const SystemConfig& cfg);

// |A n B| / |A u B| over normalized word sets; two empty texts give 1.
double Jaccard(std::string_view a, std::string_view b);

// Per-pair similarity across a batch. Symmetric, unit diagonal.
struct PairwiseSimilarity {
  std::vector<std::vector<double>> cosine, jaccard, claim, fused;
};
PairwiseSimilarity ComparePairs(const std::vector<CandidateResponse>& candidates, const Provider& provider,
                                const SimilarityWeights& weights);

SimilarityReport MakeSimilarityReport(const std::vector<CandidateResponse>& candidates, const Provider& provider,
                                      const SystemConfig& cfg);

GateDecision GateDecide(const std::vector<CandidateResponse>& candidates, const Provider& provider,
                        const SystemConfig& cfg, std::optional<SimilarityReport>* report_out = nullptr);

// Retrieval, batch generation and the gate for one query.
LocalQueryTrace RunLocalQuery(std::string_view query, const EdgeKB& kb, const Provider& provider,
                              const SystemConfig& cfg);

}  // namespace dgrag
