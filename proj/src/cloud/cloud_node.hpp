#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "core/config.hpp"
#include "core/types.hpp"
#include "providers/provider.hpp"
#include "stores/vector_index.hpp"
#include "transport/carrier.hpp"

namespace dgrag {

struct SummaryMatch {
  SubgraphSummary summary;
  double score = 0.0;
};

// Global summary store: an exact vector index over summary embeddings plus
// the summaries themselves, keyed by "edge#community". Concurrent readers,
// exclusive writers.
class SummaryRegistry {
 public:
  explicit SummaryRegistry(int dim) : index_(dim) {}
  SummaryRegistry(SummaryRegistry&& other) noexcept;
  SummaryRegistry& operator=(SummaryRegistry&& other) noexcept;

  // Upserts every summary; returns how many were written.
  std::size_t Register(const EdgeId& edge_id, const std::vector<SubgraphSummary>& summaries);
  std::vector<SummaryMatch> Match(const Embedding& query, std::size_t m) const;

  std::size_t size() const;
  int dim() const { return index_.dim(); }
  std::vector<SubgraphSummary> All() const;  // ordered by id
  std::map<EdgeId, std::vector<std::string>> IdsByEdge() const;

  std::string Encode() const;
  static SummaryRegistry Decode(const std::string& payload);
  void Save(const std::filesystem::path& path) const;
  static SummaryRegistry Load(const std::filesystem::path& path);

 private:
  mutable std::shared_mutex mu_;
  VectorIndex index_;
  std::map<std::string, SubgraphSummary> summaries_;
};

// Embeds the query and returns the exact top-m summaries, ties by id.
// Throws Error(kRouting) when the registry is empty.
std::vector<SummaryMatch> MatchSummaries(std::string_view query, std::size_t m, const SummaryRegistry& registry,
                                         const Provider& provider);

// Distinct owning edges in order of first appearance, at most k.
std::vector<EdgeId> SelectEdges(const std::vector<SummaryMatch>& matches, int k);

// Concatenates bundles in the given order, drops repeated element ids, then
// applies the token budget. The result's edge_id lists the sources joined by
// ",".
KnowledgeBundle AggregateBundles(const std::vector<KnowledgeBundle>& bundles, int token_budget);

struct GlobalAnswer {
  std::string query_id;
  std::string text;
  std::vector<EdgeId> contributing_edges;
  std::vector<EdgeId> failed_edges;
  std::map<std::string, double> phase_timings;  // summary_matching, knowledge_retrieval, cloud_generation
  std::vector<TransmissionRecord> transmission_log;

  double SimulatedNetworkSeconds() const;
};

// Shared with summary persistence on edges.
std::string EncodeSummaries(const std::vector<SubgraphSummary>& summaries);
std::vector<SubgraphSummary> DecodeSummaries(const std::string& payload);

class CloudNode {
 public:
  CloudNode(std::string name, SystemConfig cfg, std::shared_ptr<const Provider> provider, Carrier* carrier,
            SummaryRegistry registry);

  const std::string& name() const { return name_; }
  SummaryRegistry& registry() { return registry_; }
  const SummaryRegistry& registry() const { return registry_; }

  // Top-m match, fan-out to the top-k owning edges, aggregation and final
  // generation. Edges that fail or time out are dropped as long as one
  // answers; otherwise Error(kRouting).
  GlobalAnswer CrossEdgeAnswer(const GlobalQuery& query);

  // Carrier entry point: RegisterSummaries and GlobalQuery.
  Message Handle(const std::string& from, const Message& request);

  // The reply frame sent for a finished answer.
  static FinalAnswer ToFinalAnswer(const GlobalAnswer& a);

 private:
  std::string name_;
  SystemConfig cfg_;
  std::shared_ptr<const Provider> provider_;
  Carrier* carrier_;
  SummaryRegistry registry_;
};

}  // namespace dgrag
