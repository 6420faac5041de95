#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace dgrag {

using EntityId = std::string;
using RelationId = std::string;
using ChunkId = std::string;
using EdgeId = std::string;
using Embedding = std::vector<float>;

struct Chunk {
  ChunkId id;
  std::string doc_id;
  std::uint32_t index = 0;
  std::string text;
  std::uint32_t token_count = 0;

  bool operator==(const Chunk&) const = default;
};

struct Entity {
  EntityId id;
  std::string name;
  std::string type_label;
  std::string description;
  std::set<ChunkId> source_chunk_ids;

  bool operator==(const Entity&) const = default;
};

struct Relation {
  RelationId id;
  EntityId src;
  EntityId dst;
  std::string description;
  std::vector<std::string> keywords;
  std::set<ChunkId> source_chunk_ids;

  bool operator==(const Relation&) const = default;
};

struct KnowledgeGraph {
  std::map<EntityId, Entity> entities;
  std::map<RelationId, Relation> relations;

  bool operator==(const KnowledgeGraph&) const = default;
};

// Returns every broken invariant; empty means the graph is well formed.
std::vector<std::string> CheckGraph(const KnowledgeGraph& kg);

struct Partition {
  std::map<EntityId, int> assignment;
  int community_count = 0;

  std::vector<std::vector<EntityId>> Members() const;
  bool operator==(const Partition&) const = default;
};

std::vector<std::string> CheckPartition(const Partition& p,
                                        const KnowledgeGraph& kg);

struct SubgraphSummary {
  std::string id;
  EdgeId edge_id;
  int community_id = 0;
  std::string text;
  Embedding embedding;
  std::uint32_t entity_count = 0;
  std::uint32_t relation_count = 0;

  bool operator==(const SubgraphSummary&) const = default;
};

std::string SummaryId(const EdgeId& edge_id, int community_id);

struct CandidateResponse {
  std::string text;
  Embedding embedding;
};

enum class Route { kLocal, kGlobal };

struct GateDecision {
  Route route = Route::kGlobal;
  std::size_t selected_index = 0;  // meaningful only for kLocal
  bool low_confidence = false;
  std::optional<double> similarity_score;

  bool operator==(const GateDecision&) const = default;
};

struct KnowledgeBundle {
  EdgeId edge_id;
  std::vector<Entity> entities;
  std::vector<Relation> relations;
  std::vector<Chunk> chunks;
  bool truncated = false;

  bool empty() const {
    return entities.empty() && relations.empty() && chunks.empty();
  }
  bool operator==(const KnowledgeBundle&) const = default;
};

std::vector<std::string> CheckBundle(const KnowledgeBundle& b);

}  // namespace dgrag
