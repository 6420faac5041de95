#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "core/types.hpp"
#include "providers/provider.hpp"

namespace dgrag {

// Undirected weighted graph over dense node indices, no self-loops. Built
// from a KnowledgeGraph with one unit of weight per relation.
struct CommunityGraph {
  std::vector<EntityId> nodes;  // index -> entity id (sorted)
  std::vector<std::vector<std::pair<int, double>>> adj;
  double total_weight = 0.0;  // M, each undirected edge counted once

  int size() const { return static_cast<int>(nodes.size()); }
  int IndexOf(const EntityId& id) const;

  static CommunityGraph FromKnowledgeGraph(const KnowledgeGraph& kg);
  // Nodes are named "0".."n-1" (zero padded so they sort numerically).
  static CommunityGraph FromEdges(int n, const std::vector<std::pair<int, int>>& edges);
};

// Q = sum_c [ in_c / 2M - gamma * (tot_c / 2M)^2 ], in_c counting internal
// edge weight twice. Zero for an edgeless graph.
double Modularity(const CommunityGraph& g, const std::vector<int>& membership, double gamma);
double Modularity(const CommunityGraph& g, const Partition& p, double gamma);

struct LeidenOptions {
  double gamma = 1.0;
  std::uint64_t seed = 0;
  double randomness = 0.01;  // refinement temperature
  int max_iterations = 64;   // full iterations before giving up on stability
};

struct LeidenTrace {
  std::vector<double> modularity_per_iteration;
  int iterations = 0;
};

// Leiden community detection (fast local moving, refinement, aggregation),
// repeated until an iteration leaves the partition unchanged. Returns dense
// community ids numbered by first appearance in node order.
std::vector<int> LeidenMembership(const CommunityGraph& g, const LeidenOptions& opts,
                                  LeidenTrace* trace = nullptr);
Partition LeidenPartition(const CommunityGraph& g, double gamma, std::uint64_t seed);

Partition ToPartition(const CommunityGraph& g, const std::vector<int>& membership);
std::vector<int> ToMembership(const CommunityGraph& g, const Partition& p);

// Connected components of each community's induced subgraph; a valid Leiden
// result has exactly one per community.
bool CommunitiesConnected(const CommunityGraph& g, const std::vector<int>& membership);

struct MergeStats {
  int merges = 0;
  int isolated_undersized = 0;  // undersized communities with no neighbor
};

// Repeatedly folds the lowest-id community smaller than size_threshold that
// has a neighbor into the neighbor sharing the most edge weight (ties to the
// smaller id), renumbering densely after each merge.
Partition MergeSmall(const Partition& p, const CommunityGraph& g, int size_threshold, MergeStats* stats = nullptr);

// Sorted "name (type): description" lines, then sorted
// "src — dst: description" lines for relations inside the community.
std::string SubgraphToText(const KnowledgeGraph& kg, const std::vector<EntityId>& community);

std::vector<SubgraphSummary> SummarizeAll(const KnowledgeGraph& kg, const Partition& p, const Provider& provider,
                                          const EdgeId& edge_id);

}  // namespace dgrag
