#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "core/config.hpp"
#include "core/types.hpp"
#include "providers/provider.hpp"
#include "stores/edge_kb.hpp"

namespace dgrag {

// Splits a document into windows of chunk_size tokens; window i starts at
// token i * (chunk_size - overlap). The last window may be shorter. Chunk
// text is the window's tokens joined by single spaces.
std::vector<Chunk> ChunkDocument(const std::string& doc_id, std::string_view text, int chunk_size,
                                 int overlap);

std::string ChunkIdFor(const std::string& doc_id, std::uint32_t index);

// One result per chunk in input order, each tagged with its chunk id.
std::vector<ExtractionResult> ExtractGraph(const std::vector<Chunk>& chunks, const Provider& provider);

EntityId EntityIdFor(const std::string& normalized_name);
RelationId RelationIdFor(const EntityId& a, const EntityId& b, const std::string& description);

// Folds extraction results into a graph. Entities merge by normalized name
// (first type label wins, distinct descriptions are joined with " | ",
// source chunks union); relations merge by unordered endpoint pair plus
// description. Self-referential relations are dropped. Idempotent.
KnowledgeGraph MergeIntoGraph(const std::vector<ExtractionResult>& results, KnowledgeGraph existing,
                              std::size_t* dropped_self_loops = nullptr);

struct BuildStats {
  std::size_t documents = 0;
  std::size_t chunks = 0;
  std::size_t entities = 0;
  std::size_t relations = 0;
  std::size_t dropped_self_loops = 0;
};

struct BuiltEdge {
  EdgeKB kb;
  BuildStats stats;
};

// Reads every regular, non-hidden file under corpus_dir (sorted by path) as a
// UTF-8 document and runs chunk -> extract -> merge -> index.
BuiltEdge BuildEdgeKb(const std::filesystem::path& corpus_dir, const EdgeId& edge_id, const Provider& provider,
                      const SystemConfig& cfg);

// Same pipeline over in-memory documents given as (doc name, text).
BuiltEdge BuildEdgeKbFromDocuments(const std::vector<std::pair<std::string, std::string>>& docs,
                                   const EdgeId& edge_id, const Provider& provider, const SystemConfig& cfg);

}  // namespace dgrag
