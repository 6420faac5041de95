#include "kg/construct.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "core/error.hpp"
#include "core/text.hpp"

namespace dgrag {

namespace {

constexpr std::string_view kDescriptionSep = " | ";

bool HasSegment(std::string_view joined, std::string_view segment) {
  while (true) {
    const std::size_t end = joined.find(kDescriptionSep);
    if (joined.substr(0, end) == segment) return true;
    if (end == std::string_view::npos) return false;
    joined.remove_prefix(end + kDescriptionSep.size());
  }
}

void AppendDescription(std::string& joined, const std::string& d) {
  if (d.empty() || HasSegment(joined, d)) return;
  if (!joined.empty()) joined.append(kDescriptionSep);
  joined.append(d);
}

}  // namespace

std::string ChunkIdFor(const std::string& doc_id, std::uint32_t index) {
  std::array<char, 16> buf{};
  std::snprintf(buf.data(), buf.size(), "%06u", index);
  return doc_id + "#" + buf.data();
}

std::vector<Chunk> ChunkDocument(const std::string& doc_id, std::string_view text, int chunk_size, int overlap) {
  if (chunk_size <= 0 || overlap < 0 || overlap >= chunk_size) {
    throw Error(ErrorCode::kInvalidArgument, "chunking requires chunk_size > overlap >= 0");
  }
  const auto tokens = ChunkTokens(text);
  if (tokens.empty()) throw Error(ErrorCode::kInvalidArgument, "document " + doc_id + " is empty");
  const std::size_t size = static_cast<std::size_t>(chunk_size);
  const std::size_t step = static_cast<std::size_t>(chunk_size - overlap);
  std::vector<Chunk> out;
  for (std::size_t start = 0;; start += step) {
    const std::size_t end = std::min(start + size, tokens.size());
    Chunk c;
    c.doc_id = doc_id;
    c.index = static_cast<std::uint32_t>(out.size());
    c.id = ChunkIdFor(doc_id, c.index);
    c.token_count = static_cast<std::uint32_t>(end - start);
    for (std::size_t i = start; i < end; ++i) {
      if (i > start) c.text.push_back(' ');
      c.text += tokens[i];
    }
    out.push_back(std::move(c));
    if (end == tokens.size()) break;
  }
  return out;
}

std::vector<ExtractionResult> ExtractGraph(const std::vector<Chunk>& chunks, const Provider& provider) {
  std::vector<ExtractionResult> out;
  out.reserve(chunks.size());
  for (const auto& c : chunks) {
    try {
      ExtractionResult r = provider.ExtractElements(c.text);
      r.chunk_id = c.id;
      out.push_back(std::move(r));
    } catch (const Error& e) {
      throw Error(e.code(), "extraction failed for chunk " + c.id + ": " + e.what());
    }
  }
  return out;
}

EntityId EntityIdFor(const std::string& normalized_name) {
  return "ent-" + HexDigest(Fnv1a64(normalized_name));
}

RelationId RelationIdFor(const EntityId& a, const EntityId& b, const std::string& description) {
  const auto& lo = std::min(a, b);
  const auto& hi = std::max(a, b);
  return "rel-" + HexDigest(Fnv1a64(lo + '\x1f' + hi + '\x1f' + description));
}

KnowledgeGraph MergeIntoGraph(const std::vector<ExtractionResult>& results, KnowledgeGraph kg,
                              std::size_t* dropped_self_loops) {
  std::size_t dropped = 0;
  for (const auto& res : results) {
    for (const auto& x : res.entities) {
      const std::string name = RequireEntityName(x.name);
      const EntityId id = EntityIdFor(name);
      auto [it, inserted] = kg.entities.try_emplace(id);
      Entity& e = it->second;
      if (inserted) {
        e.id = id;
        e.name = name;
        e.type_label = x.type_label;
      } else if (e.name != name) {
        throw Error(ErrorCode::kIntegrity, "entity id collision between '" + e.name + "' and '" + name + "'");
      }
      AppendDescription(e.description, x.description);
      if (!res.chunk_id.empty()) e.source_chunk_ids.insert(res.chunk_id);
    }
  }
  for (const auto& res : results) {
    for (const auto& x : res.relations) {
      const std::string src_name = RequireEntityName(x.src_name);
      const std::string dst_name = RequireEntityName(x.dst_name);
      const EntityId src = EntityIdFor(src_name);
      const EntityId dst = EntityIdFor(dst_name);
      for (const auto& [id, name] : {std::pair{src, src_name}, std::pair{dst, dst_name}}) {
        if (!kg.entities.count(id)) {
          throw Error(ErrorCode::kDanglingReference, "relation references unknown entity '" + name + "'");
        }
      }
      if (src == dst) {
        ++dropped;
        continue;
      }
      const RelationId id = RelationIdFor(src, dst, x.description);
      auto [it, inserted] = kg.relations.try_emplace(id);
      Relation& r = it->second;
      if (inserted) {
        r.id = id;
        r.src = src;
        r.dst = dst;
        r.description = x.description;
      }
      for (const auto& kw : x.keywords) {
        if (std::find(r.keywords.begin(), r.keywords.end(), kw) == r.keywords.end()) r.keywords.push_back(kw);
      }
      if (!res.chunk_id.empty()) r.source_chunk_ids.insert(res.chunk_id);
    }
  }
  // entities that only gained relations still need provenance; inherit the
  // relation's chunks so every entity keeps a source
  for (auto& [id, e] : kg.entities) {
    if (!e.source_chunk_ids.empty()) continue;
    for (const auto& [_, r] : kg.relations) {
      if (r.src == id || r.dst == id) e.source_chunk_ids.insert(r.source_chunk_ids.begin(), r.source_chunk_ids.end());
    }
  }
  if (dropped_self_loops) *dropped_self_loops += dropped;
  return kg;
}

BuiltEdge BuildEdgeKbFromDocuments(const std::vector<std::pair<std::string, std::string>>& docs,
                                   const EdgeId& edge_id, const Provider& provider, const SystemConfig& cfg) {
  if (docs.empty()) throw Error(ErrorCode::kInvalidArgument, "edge " + edge_id + " has no documents");
  BuiltEdge out;
  EdgeKB& kb = out.kb;
  kb.edge_id = edge_id;
  kb.entity_index = VectorIndex(cfg.embedding_dim);
  kb.relation_index = VectorIndex(cfg.embedding_dim);
  kb.chunk_index = VectorIndex(cfg.embedding_dim);

  std::vector<ExtractionResult> results;
  for (const auto& [name, text] : docs) {
    const std::string doc_id = edge_id + "/" + name;
    try {
      auto chunks = ChunkDocument(doc_id, text, cfg.chunk_size, cfg.chunk_overlap);
      auto extracted = ExtractGraph(chunks, provider);
      results.insert(results.end(), std::make_move_iterator(extracted.begin()),
                     std::make_move_iterator(extracted.end()));
      for (auto& c : chunks) kb.chunks.emplace(c.id, std::move(c));
    } catch (const Error& e) {
      throw Error(e.code(), "document " + doc_id + ": " + e.what());
    }
  }
  kb.kg = MergeIntoGraph(results, {}, &out.stats.dropped_self_loops);
  kb.graph = GraphStore(kb.kg);

  for (const auto& [id, e] : kb.kg.entities) kb.entity_index.Upsert(id, provider.Embed(EntityEmbeddingText(e)));
  for (const auto& [id, r] : kb.kg.relations) {
    kb.relation_index.Upsert(id, provider.Embed(RelationEmbeddingText(r)));
  }
  for (const auto& [id, c] : kb.chunks) {
    try {
      kb.chunk_index.Upsert(id, provider.Embed(c.text));
    } catch (const Error& e) {
      throw Error(e.code(), "chunk " + id + ": " + e.what());
    }
  }
  if (auto v = CheckEdgeKb(kb); !v.empty()) {
    throw Error(ErrorCode::kIntegrity, "edge " + edge_id + " failed integrity check: " + v.front());
  }
  out.stats.documents = docs.size();
  out.stats.chunks = kb.chunks.size();
  out.stats.entities = kb.kg.entities.size();
  out.stats.relations = kb.kg.relations.size();
  return out;
}

BuiltEdge BuildEdgeKb(const std::filesystem::path& corpus_dir, const EdgeId& edge_id, const Provider& provider,
                      const SystemConfig& cfg) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(corpus_dir)) throw Error(ErrorCode::kIo, "not a directory: " + corpus_dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(corpus_dir)) {
    if (!entry.is_regular_file()) continue;
    if (entry.path().filename().string().rfind('.', 0) == 0) continue;
    files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<std::pair<std::string, std::string>> docs;
  for (const auto& f : files) {
    std::ifstream in(f, std::ios::binary);
    if (!in) throw Error(ErrorCode::kIo, "cannot read " + f.string());
    std::stringstream ss;
    ss << in.rdbuf();
    docs.emplace_back(fs::relative(f, corpus_dir).generic_string(), ss.str());
  }
  return BuildEdgeKbFromDocuments(docs, edge_id, provider, cfg);
}

}  // namespace dgrag
