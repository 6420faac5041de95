#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "core/types.hpp"

namespace dgrag {

struct BenchQuery {
  std::string id;
  std::string text;
  std::string domain_label;
  EdgeId origin_edge;

  bool operator==(const BenchQuery&) const = default;
};

// One JSON object per line with keys id, text, domain, origin_edge.
std::vector<BenchQuery> LoadQueries(const std::filesystem::path& path);
void SaveQueries(const std::filesystem::path& path, const std::vector<BenchQuery>& queries);

struct CorpusOptions {
  std::uint64_t seed = 9;
  int topics_per_domain = 6;
  int entities_per_topic = 5;
  int own_queries = 54;          // answerable, per edge
  int unanswerable_queries = 6;  // own domain, nothing in the KB, per edge
  int foreign_queries = 20;      // per (edge, other domain); the first asks for the marker
};

struct DomainMarker {
  std::string entity;  // entity name holding the marker fact
  std::string code;    // string that only this domain's corpus contains
};

struct GeneratedCorpus {
  std::vector<std::string> domains;  // also the edge ids
  std::map<std::string, DomainMarker> markers;
  std::vector<BenchQuery> queries;
};

// Writes root/<domain>/topic_XX.txt for four domains with disjoint
// vocabularies, root/queries.jsonl and root/markers.json. Each topic is a
// cluster of annotated entities with dense internal relations and one link
// to the next topic; topic 0 also holds the domain's marker entity.
GeneratedCorpus GenerateCorpus(const std::filesystem::path& root, const CorpusOptions& opts = {});

}  // namespace dgrag
