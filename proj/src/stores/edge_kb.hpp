#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "core/types.hpp"
#include "stores/vector_index.hpp"

namespace dgrag {

// Undirected adjacency mirroring a KnowledgeGraph.
class GraphStore {
 public:
  using Adjacency = std::map<EntityId, std::set<std::pair<RelationId, EntityId>>>;

  GraphStore() = default;
  explicit GraphStore(const KnowledgeGraph& kg);

  const Adjacency& adjacency() const { return adj_; }
  bool IsSymmetric() const;

  bool operator==(const GraphStore&) const = default;

 private:
  Adjacency adj_;
};

struct Triple {
  EntityId src;
  RelationId relation;
  EntityId dst;

  auto operator<=>(const Triple&) const = default;
};

struct EdgeKB {
  EdgeId edge_id;
  KnowledgeGraph kg;
  std::map<ChunkId, Chunk> chunks;
  VectorIndex entity_index;
  VectorIndex relation_index;
  VectorIndex chunk_index;
  GraphStore graph;

  bool operator==(const EdgeKB&) const = default;
};

// Text embedded for each kind of element.
std::string EntityEmbeddingText(const Entity& e);
std::string RelationEmbeddingText(const Relation& r);

// Index <-> content bijection, graph mirror and reference integrity.
std::vector<std::string> CheckEdgeKb(const EdgeKB& kb);

// One-hop triples around the seeds, each oriented as stored (src, rel, dst)
// so a triple reached from either endpoint is the same value.
std::set<Triple> Neighbors(const EdgeKB& kb, const std::set<EntityId>& seeds);

// Union of source chunks of the given entities and relations, deduplicated,
// in source order (doc id, then index).
std::vector<Chunk> ChunksFor(const EdgeKB& kb, const std::vector<std::string>& element_ids);

// One file per store under dir, each with a versioned header and a CRC32 of
// the payload:
//   entities.vec relations.vec chunks.vec  (vector indexes)
//   graph.kg                               (edge id + knowledge graph)
//   chunks.dat                             (chunk contents)
void PersistEdgeKb(const EdgeKB& kb, const std::filesystem::path& dir);
EdgeKB LoadEdgeKb(const std::filesystem::path& dir);

// Framed single-store files, shared with the cloud registry.
inline constexpr std::uint32_t kStoreFormatVersion = 1;
enum class StoreKind : std::uint32_t {
  kVectorIndex = 1,
  kGraph = 2,
  kChunks = 3,
  kSummaries = 4,
};
void WriteStoreFile(const std::filesystem::path& path, StoreKind kind, const std::string& payload);
std::string ReadStoreFile(const std::filesystem::path& path, StoreKind kind);

std::string EncodeVectorIndex(const VectorIndex& index);
VectorIndex DecodeVectorIndex(const std::string& payload);

}  // namespace dgrag
