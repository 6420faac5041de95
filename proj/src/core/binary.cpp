#include "core/binary.hpp"

#include <zlib.h>

namespace dgrag {

void WriteChunk(ByteWriter& w, const Chunk& c) {
  w.Str(c.id);
  w.Str(c.doc_id);
  w.U32(c.index);
  w.Str(c.text);
  w.U32(c.token_count);
}

Chunk ReadChunk(ByteReader& r) {
  Chunk c;
  c.id = r.Str();
  c.doc_id = r.Str();
  c.index = r.U32();
  c.text = r.Str();
  c.token_count = r.U32();
  return c;
}

void WriteEntity(ByteWriter& w, const Entity& e) {
  w.Str(e.id);
  w.Str(e.name);
  w.Str(e.type_label);
  w.Str(e.description);
  w.StrSet(e.source_chunk_ids);
}

Entity ReadEntity(ByteReader& r) {
  Entity e;
  e.id = r.Str();
  e.name = r.Str();
  e.type_label = r.Str();
  e.description = r.Str();
  e.source_chunk_ids = r.StrSet();
  return e;
}

void WriteRelation(ByteWriter& w, const Relation& rel) {
  w.Str(rel.id);
  w.Str(rel.src);
  w.Str(rel.dst);
  w.Str(rel.description);
  w.StrList(rel.keywords);
  w.StrSet(rel.source_chunk_ids);
}

Relation ReadRelation(ByteReader& r) {
  Relation rel;
  rel.id = r.Str();
  rel.src = r.Str();
  rel.dst = r.Str();
  rel.description = r.Str();
  rel.keywords = r.StrList();
  rel.source_chunk_ids = r.StrSet();
  return rel;
}

void WriteSummary(ByteWriter& w, const SubgraphSummary& s) {
  w.Str(s.id);
  w.Str(s.edge_id);
  w.I32(s.community_id);
  w.Str(s.text);
  w.Vec(s.embedding);
  w.U32(s.entity_count);
  w.U32(s.relation_count);
}

SubgraphSummary ReadSummary(ByteReader& r) {
  SubgraphSummary s;
  s.id = r.Str();
  s.edge_id = r.Str();
  s.community_id = r.I32();
  s.text = r.Str();
  s.embedding = r.Vec();
  s.entity_count = r.U32();
  s.relation_count = r.U32();
  return s;
}

void WriteBundle(ByteWriter& w, const KnowledgeBundle& b) {
  w.Str(b.edge_id);
  w.U32(static_cast<std::uint32_t>(b.entities.size()));
  for (const auto& e : b.entities) WriteEntity(w, e);
  w.U32(static_cast<std::uint32_t>(b.relations.size()));
  for (const auto& r : b.relations) WriteRelation(w, r);
  w.U32(static_cast<std::uint32_t>(b.chunks.size()));
  for (const auto& c : b.chunks) WriteChunk(w, c);
  w.Bool(b.truncated);
}

KnowledgeBundle ReadBundle(ByteReader& r) {
  KnowledgeBundle b;
  b.edge_id = r.Str();
  for (std::uint32_t i = 0, n = r.Count(); i < n; ++i) b.entities.push_back(ReadEntity(r));
  for (std::uint32_t i = 0, n = r.Count(); i < n; ++i) b.relations.push_back(ReadRelation(r));
  for (std::uint32_t i = 0, n = r.Count(); i < n; ++i) b.chunks.push_back(ReadChunk(r));
  b.truncated = r.Bool();
  return b;
}

std::uint32_t Crc32(std::string_view data) {
  uLong crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, reinterpret_cast<const Bytef*>(data.data()), static_cast<uInt>(data.size()));
  return static_cast<std::uint32_t>(crc);
}

}  // namespace dgrag
