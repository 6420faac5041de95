#include "stores/edge_kb.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "core/binary.hpp"
#include "core/error.hpp"
#include "core/text.hpp"

namespace dgrag {

namespace {

constexpr char kMagic[8] = {'D', 'G', 'R', 'G', 'S', 'T', 'O', 'R'};

std::string EncodeGraph(const EdgeKB& kb) {
  ByteWriter w;
  w.Str(kb.edge_id);
  w.U32(static_cast<std::uint32_t>(kb.kg.entities.size()));
  for (const auto& [_, e] : kb.kg.entities) WriteEntity(w, e);
  w.U32(static_cast<std::uint32_t>(kb.kg.relations.size()));
  for (const auto& [_, r] : kb.kg.relations) WriteRelation(w, r);
  return w.Take();
}

std::string EncodeChunks(const std::map<ChunkId, Chunk>& chunks) {
  ByteWriter w;
  w.U32(static_cast<std::uint32_t>(chunks.size()));
  for (const auto& [_, c] : chunks) WriteChunk(w, c);
  return w.Take();
}

void ExpectDone(const ByteReader& r, const std::filesystem::path& path) {
  if (!r.done()) throw Error(ErrorCode::kDecode, "trailing bytes in " + path.string());
}

}  // namespace

GraphStore::GraphStore(const KnowledgeGraph& kg) {
  for (const auto& [id, _] : kg.entities) adj_[id];
  for (const auto& [id, r] : kg.relations) {
    adj_[r.src].emplace(id, r.dst);
    adj_[r.dst].emplace(id, r.src);
  }
}

bool GraphStore::IsSymmetric() const {
  for (const auto& [a, edges] : adj_) {
    for (const auto& [rel, b] : edges) {
      auto it = adj_.find(b);
      if (it == adj_.end() || !it->second.count({rel, a})) return false;
    }
  }
  return true;
}

std::string EntityEmbeddingText(const Entity& e) { return e.name + " " + e.description; }

std::string RelationEmbeddingText(const Relation& r) {
  return r.description + " " + Join(r.keywords, " ");
}

std::vector<std::string> CheckEdgeKb(const EdgeKB& kb) {
  std::vector<std::string> v = CheckGraph(kb.kg);
  auto bijection = [&](const VectorIndex& idx, const auto& content, const char* kind) {
    if (idx.size() != content.size()) {
      v.push_back(std::string(kind) + " index size " + std::to_string(idx.size()) + " != content size " +
                  std::to_string(content.size()));
    }
    for (const auto& [id, _] : content) {
      if (!idx.Contains(id)) v.push_back(std::string(kind) + " not indexed: " + id);
    }
  };
  bijection(kb.entity_index, kb.kg.entities, "entity");
  bijection(kb.relation_index, kb.kg.relations, "relation");
  bijection(kb.chunk_index, kb.chunks, "chunk");
  if (!(kb.graph == GraphStore(kb.kg))) v.push_back("graph store does not mirror the knowledge graph");
  auto check_chunks = [&](const std::set<ChunkId>& ids, const std::string& owner) {
    for (const auto& c : ids) {
      if (!kb.chunks.count(c)) v.push_back(owner + " references unknown chunk " + c);
    }
  };
  for (const auto& [id, e] : kb.kg.entities) check_chunks(e.source_chunk_ids, id);
  for (const auto& [id, r] : kb.kg.relations) check_chunks(r.source_chunk_ids, id);
  return v;
}

std::set<Triple> Neighbors(const EdgeKB& kb, const std::set<EntityId>& seeds) {
  std::set<Triple> out;
  const auto& adj = kb.graph.adjacency();
  for (const auto& seed : seeds) {
    auto it = adj.find(seed);
    if (it == adj.end()) throw Error(ErrorCode::kInvalidArgument, "unknown entity id " + seed);
    for (const auto& [rel_id, _] : it->second) {
      const Relation& r = kb.kg.relations.at(rel_id);
      out.insert({r.src, r.id, r.dst});
    }
  }
  return out;
}

std::vector<Chunk> ChunksFor(const EdgeKB& kb, const std::vector<std::string>& element_ids) {
  std::set<ChunkId> ids;
  for (const auto& el : element_ids) {
    if (auto e = kb.kg.entities.find(el); e != kb.kg.entities.end()) {
      ids.insert(e->second.source_chunk_ids.begin(), e->second.source_chunk_ids.end());
    } else if (auto r = kb.kg.relations.find(el); r != kb.kg.relations.end()) {
      ids.insert(r->second.source_chunk_ids.begin(), r->second.source_chunk_ids.end());
    } else {
      throw Error(ErrorCode::kInvalidArgument, "unknown element id " + el);
    }
  }
  std::vector<Chunk> out;
  for (const auto& id : ids) {
    auto it = kb.chunks.find(id);
    if (it == kb.chunks.end()) throw Error(ErrorCode::kIntegrity, "dangling chunk reference " + id);
    out.push_back(it->second);
  }
  std::sort(out.begin(), out.end(), [](const Chunk& a, const Chunk& b) {
    if (a.doc_id != b.doc_id) return a.doc_id < b.doc_id;
    return a.index < b.index;
  });
  return out;
}

void WriteStoreFile(const std::filesystem::path& path, StoreKind kind, const std::string& payload) {
  ByteWriter w;
  w.Raw(std::string_view(kMagic, sizeof(kMagic)));
  w.U32(kStoreFormatVersion);
  w.U32(static_cast<std::uint32_t>(kind));
  w.U64(payload.size());
  w.Raw(payload);
  w.U32(Crc32(payload));
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out.write(w.bytes().data(), static_cast<std::streamsize>(w.bytes().size()));
  if (!out) throw Error(ErrorCode::kIo, "write failed: " + path.string());
}

std::string ReadStoreFile(const std::filesystem::path& path, StoreKind kind) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string data = ss.str();
  ByteReader r(data);
  if (data.size() < sizeof(kMagic) || data.compare(0, sizeof(kMagic), kMagic, sizeof(kMagic)) != 0) {
    throw Error(ErrorCode::kDecode, "bad magic in " + path.string());
  }
  for (std::size_t i = 0; i < sizeof(kMagic); ++i) r.U8();
  const std::uint32_t version = r.U32();
  if (version != kStoreFormatVersion) {
    throw Error(ErrorCode::kVersion, "unsupported store version " + std::to_string(version) + " in " + path.string());
  }
  if (r.U32() != static_cast<std::uint32_t>(kind)) {
    throw Error(ErrorCode::kDecode, "unexpected store kind in " + path.string());
  }
  const std::uint64_t len = r.U64();
  if (len + 4 != r.remaining()) throw Error(ErrorCode::kDecode, "length mismatch in " + path.string());
  std::string payload = data.substr(data.size() - r.remaining(), len);
  ByteReader tail(std::string_view(data).substr(data.size() - 4));
  if (tail.U32() != Crc32(payload)) throw Error(ErrorCode::kChecksum, "checksum mismatch in " + path.string());
  return payload;
}

std::string EncodeVectorIndex(const VectorIndex& index) {
  ByteWriter w;
  w.U32(static_cast<std::uint32_t>(index.dim()));
  w.U32(static_cast<std::uint32_t>(index.size()));
  for (const auto& [id, v] : index.entries()) {
    w.Str(id);
    for (float f : v) w.F32(f);
  }
  return w.Take();
}

VectorIndex DecodeVectorIndex(const std::string& payload) {
  ByteReader r(payload);
  const int dim = static_cast<int>(r.U32());
  VectorIndex index(dim);
  for (std::uint32_t i = 0, n = r.Count(); i < n; ++i) {
    std::string id = r.Str();
    Embedding v(static_cast<std::size_t>(dim));
    for (auto& f : v) f = r.F32();
    index.Upsert(id, std::move(v));
  }
  if (!r.done()) throw Error(ErrorCode::kDecode, "trailing bytes in vector index");
  return index;
}

void PersistEdgeKb(const EdgeKB& kb, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  WriteStoreFile(dir / "entities.vec", StoreKind::kVectorIndex, EncodeVectorIndex(kb.entity_index));
  WriteStoreFile(dir / "relations.vec", StoreKind::kVectorIndex, EncodeVectorIndex(kb.relation_index));
  WriteStoreFile(dir / "chunks.vec", StoreKind::kVectorIndex, EncodeVectorIndex(kb.chunk_index));
  WriteStoreFile(dir / "graph.kg", StoreKind::kGraph, EncodeGraph(kb));
  WriteStoreFile(dir / "chunks.dat", StoreKind::kChunks, EncodeChunks(kb.chunks));
}

EdgeKB LoadEdgeKb(const std::filesystem::path& dir) {
  EdgeKB kb;
  kb.entity_index = DecodeVectorIndex(ReadStoreFile(dir / "entities.vec", StoreKind::kVectorIndex));
  kb.relation_index = DecodeVectorIndex(ReadStoreFile(dir / "relations.vec", StoreKind::kVectorIndex));
  kb.chunk_index = DecodeVectorIndex(ReadStoreFile(dir / "chunks.vec", StoreKind::kVectorIndex));
  {
    const std::string payload = ReadStoreFile(dir / "graph.kg", StoreKind::kGraph);
    ByteReader r(payload);
    kb.edge_id = r.Str();
    for (std::uint32_t i = 0, n = r.Count(); i < n; ++i) {
      Entity e = ReadEntity(r);
      kb.kg.entities.emplace(e.id, std::move(e));
    }
    for (std::uint32_t i = 0, n = r.Count(); i < n; ++i) {
      Relation rel = ReadRelation(r);
      kb.kg.relations.emplace(rel.id, std::move(rel));
    }
    ExpectDone(r, dir / "graph.kg");
  }
  {
    const std::string payload = ReadStoreFile(dir / "chunks.dat", StoreKind::kChunks);
    ByteReader r(payload);
    for (std::uint32_t i = 0, n = r.Count(); i < n; ++i) {
      Chunk c = ReadChunk(r);
      kb.chunks.emplace(c.id, std::move(c));
    }
    ExpectDone(r, dir / "chunks.dat");
  }
  kb.graph = GraphStore(kb.kg);
  if (auto v = CheckEdgeKb(kb); !v.empty()) {
    throw Error(ErrorCode::kIntegrity, "loaded knowledge base is inconsistent: " + v.front());
  }
  return kb;
}

}  // namespace dgrag
