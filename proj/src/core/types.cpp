#include "core/types.hpp"

#include <set>
#include <tuple>

#include "core/error.hpp"

namespace dgrag {

const char* ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kConfig: return "config";
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kExtraction: return "extraction";
    case ErrorCode::kIntegrity: return "integrity";
    case ErrorCode::kDanglingReference: return "dangling_reference";
    case ErrorCode::kProvider: return "provider";
    case ErrorCode::kRetryable: return "retryable";
    case ErrorCode::kUnsupported: return "unsupported";
    case ErrorCode::kJudging: return "judging";
    case ErrorCode::kRouting: return "routing";
    case ErrorCode::kTransport: return "transport";
    case ErrorCode::kTimeout: return "timeout";
    case ErrorCode::kDecode: return "decode";
    case ErrorCode::kVersion: return "version";
    case ErrorCode::kChecksum: return "checksum";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kSchema: return "schema";
  }
  return "unknown";
}

std::vector<std::string> CheckGraph(const KnowledgeGraph& kg) {
  std::vector<std::string> v;
  std::set<std::string> names;
  for (const auto& [id, e] : kg.entities) {
    if (id != e.id) v.push_back("entity key/id mismatch: " + id);
    if (e.name.empty()) v.push_back("entity with empty name: " + id);
    if (e.source_chunk_ids.empty()) v.push_back("entity without source chunks: " + id);
    if (!names.insert(e.name).second) v.push_back("duplicate entity name: " + e.name);
  }
  std::set<std::tuple<std::string, std::string, std::string>> triples;
  for (const auto& [id, r] : kg.relations) {
    if (id != r.id) v.push_back("relation key/id mismatch: " + id);
    if (!kg.entities.count(r.src)) v.push_back("relation " + id + " has dangling src " + r.src);
    if (!kg.entities.count(r.dst)) v.push_back("relation " + id + " has dangling dst " + r.dst);
    if (r.src == r.dst) v.push_back("self-loop relation: " + id);
    const auto& lo = std::min(r.src, r.dst);
    const auto& hi = std::max(r.src, r.dst);
    if (!triples.emplace(lo, hi, r.description).second) v.push_back("duplicate relation: " + id);
  }
  return v;
}

std::vector<std::vector<EntityId>> Partition::Members() const {
  std::vector<std::vector<EntityId>> out(static_cast<std::size_t>(community_count));
  for (const auto& [id, c] : assignment) {
    if (c >= 0 && c < community_count) out[static_cast<std::size_t>(c)].push_back(id);
  }
  return out;
}

std::vector<std::string> CheckPartition(const Partition& p, const KnowledgeGraph& kg) {
  std::vector<std::string> v;
  for (const auto& [id, _] : kg.entities) {
    if (!p.assignment.count(id)) v.push_back("entity not assigned: " + id);
  }
  std::vector<int> sizes(static_cast<std::size_t>(std::max(p.community_count, 0)), 0);
  for (const auto& [id, c] : p.assignment) {
    if (!kg.entities.count(id)) v.push_back("assignment for unknown entity: " + id);
    if (c < 0 || c >= p.community_count) {
      v.push_back("community id out of range for " + id);
    } else {
      ++sizes[static_cast<std::size_t>(c)];
    }
  }
  for (std::size_t c = 0; c < sizes.size(); ++c) {
    if (sizes[c] == 0) v.push_back("empty community " + std::to_string(c));
  }
  return v;
}

std::string SummaryId(const EdgeId& edge_id, int community_id) {
  return edge_id + "#" + std::to_string(community_id);
}

std::vector<std::string> CheckBundle(const KnowledgeBundle& b) {
  std::vector<std::string> v;
  std::set<EntityId> ents;
  std::set<ChunkId> chunks;
  for (const auto& e : b.entities) ents.insert(e.id);
  for (const auto& c : b.chunks) chunks.insert(c.id);
  for (const auto& r : b.relations) {
    if (!ents.count(r.src) || !ents.count(r.dst)) {
      v.push_back("relation endpoint missing from bundle: " + r.id);
    }
  }
  if (!b.truncated) {
    auto check = [&](const std::set<ChunkId>& ids, const std::string& owner) {
      for (const auto& id : ids) {
        if (!chunks.count(id)) v.push_back("chunk " + id + " of " + owner + " missing");
      }
    };
    for (const auto& e : b.entities) check(e.source_chunk_ids, e.id);
    for (const auto& r : b.relations) check(r.source_chunk_ids, r.id);
  }
  return v;
}

}  // namespace dgrag
