#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "core/error.hpp"
#include "core/rng.hpp"
#include "doctest.h"
#include "kg/construct.hpp"
#include "providers/mock_provider.hpp"
#include "stores/edge_kb.hpp"
#include "stores/vector_index.hpp"

using namespace dgrag;
namespace fs = std::filesystem;

namespace {

Embedding RandomUnit(Rng& rng, int dim) {
  std::vector<double> raw(static_cast<std::size_t>(dim));
  double n = 0;
  for (auto& x : raw) {
    x = rng.Real() * 2 - 1;
    n += x * x;
  }
  n = std::sqrt(n);
  Embedding v(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) v[i] = static_cast<float>(raw[i] / n);
  return v;
}

// Exhaustive reference: score every entry, full sort.
std::vector<ScoredId> Exhaustive(const VectorIndex& idx, const Embedding& q, std::size_t k, double min_score) {
  std::vector<ScoredId> all;
  for (const auto& [id, v] : idx.entries()) {
    double dot = 0, nq = 0, nv = 0;
    for (std::size_t i = 0; i < q.size(); ++i) {
      dot += double(q[i]) * v[i];
      nq += double(q[i]) * q[i];
      nv += double(v[i]) * v[i];
    }
    const double s = dot / (std::sqrt(nq) * std::sqrt(nv));
    if (s >= min_score) all.push_back({id, s});
  }
  std::sort(all.begin(), all.end(), [](const ScoredId& a, const ScoredId& b) {
    return a.score != b.score ? a.score > b.score : a.id < b.id;
  });
  if (all.size() > k) all.resize(k);
  return all;
}

fs::path TempDir(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("dgrag_stores_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

EdgeKB SmallKb() {
  SystemConfig cfg;
  cfg.chunk_size = 12;
  cfg.chunk_overlap = 2;
  MockProvider p(cfg.embedding_dim, cfg.rng_seed);
  return BuildEdgeKbFromDocuments(
             {{"a.txt",
               "@E[oak|tree|old oak] stands near @E[hill|place|green hill] "
               "@R[oak|hill|grows on|growth] and the @E[river|place|cold river] flows by "
               "@R[hill|river|overlooks|view] quietly."},
              {"b.txt", "@E[river|place|wide] @E[sea|place|salt sea] @R[river|sea|feeds|flow]"}},
             "e", p, cfg)
      .kb;
}

}  // namespace

TEST_CASE("cosine") {
  const Embedding a{1, 0}, b{0, 2}, c{3, 3};
  CHECK(Cosine(a, b) == 0.0);
  CHECK(Cosine(a, c) == doctest::Approx(1 / std::sqrt(2.0)));
  CHECK_THROWS_AS(Cosine(a, Embedding{1, 0, 0}), Error);
  CHECK_THROWS_AS(Cosine(a, Embedding{0, 0}), Error);
}

TEST_CASE("upsert validation") {
  VectorIndex idx(2);
  idx.Upsert("x", {1, 0});
  CHECK_THROWS_AS(idx.Upsert("y", {1, 0, 0}), Error);
  CHECK_THROWS_AS(idx.Upsert("y", {1, 1}), Error);
  idx.Upsert("x", {0, 1});
  CHECK(idx.size() == 1);
  CHECK(idx.Get("x") == Embedding{0, 1});
  CHECK(idx.Erase("x"));
  CHECK_FALSE(idx.Erase("x"));
  CHECK_THROWS_AS(idx.Get("x"), Error);
  CHECK_THROWS_AS(idx.TopK(Embedding{1, 0, 0}, 1), Error);
}

TEST_CASE("top-k matches exhaustive scan") {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const int dim = 2 + static_cast<int>(rng.Below(15));
    VectorIndex idx(dim);
    const int n = static_cast<int>(rng.Below(200));
    for (int i = 0; i < n; ++i) idx.Upsert("v" + std::to_string(rng.Below(1000)), RandomUnit(rng, dim));
    for (int q = 0; q < 5; ++q) {
      const auto query = RandomUnit(rng, dim);
      const std::size_t k = rng.Below(60);
      const double min_score = rng.Below(2) ? -1.0 : rng.Real() - 0.5;
      const auto got = idx.TopK(query, k, min_score);
      const auto want = Exhaustive(idx, query, k, min_score);
      REQUIRE(got.size() == want.size());
      for (std::size_t i = 0; i < got.size(); ++i) {
        CHECK(got[i].id == want[i].id);
        CHECK(got[i].score == doctest::Approx(want[i].score).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("top-k ties break by id") {
  VectorIndex idx(2);
  idx.Upsert("c", {1, 0});
  idx.Upsert("a", {1, 0});
  idx.Upsert("b", {0, 1});
  idx.Upsert("d", {1, 0});
  const auto r = idx.TopK(Embedding{1, 0}, 3);
  REQUIRE(r.size() == 3);
  CHECK(r[0].id == "a");
  CHECK(r[1].id == "c");
  CHECK(r[2].id == "d");
  CHECK(idx.TopK(Embedding{1, 0}, 10, 0.5).size() == 3);
  CHECK(idx.TopK(Embedding{1, 0}, 0).empty());
  CHECK(VectorIndex(2).TopK(Embedding{1, 0}, 5).empty());
}

TEST_CASE("vector index codec") {
  Rng rng(2);
  VectorIndex idx(8);
  for (int i = 0; i < 30; ++i) idx.Upsert("id" + std::to_string(i), RandomUnit(rng, 8));
  CHECK(DecodeVectorIndex(EncodeVectorIndex(idx)) == idx);
  CHECK(DecodeVectorIndex(EncodeVectorIndex(VectorIndex(3))) == VectorIndex(3));
  const std::string bytes = EncodeVectorIndex(idx);
  CHECK_THROWS_AS(DecodeVectorIndex(bytes.substr(0, bytes.size() - 3)), Error);
  CHECK_THROWS_AS(DecodeVectorIndex(bytes + "x"), Error);
}

TEST_CASE("built kb is consistent") {
  const EdgeKB kb = SmallKb();
  CHECK(CheckEdgeKb(kb).empty());
  CHECK(kb.graph.IsSymmetric());
  CHECK(kb.kg.entities.size() == 4);
  CHECK(kb.kg.relations.size() == 3);
  CHECK(kb.entity_index.size() == 4);
  CHECK(kb.relation_index.size() == 3);
  CHECK(kb.chunk_index.size() == kb.chunks.size());
}

TEST_CASE("consistency check catches drift") {
  EdgeKB kb = SmallKb();
  SUBCASE("unindexed entity") {
    kb.entity_index.Erase(kb.kg.entities.begin()->first);
    CHECK_FALSE(CheckEdgeKb(kb).empty());
  }
  SUBCASE("stale graph mirror") {
    kb.kg.relations.erase(kb.kg.relations.begin());
    CHECK_FALSE(CheckEdgeKb(kb).empty());
  }
  SUBCASE("unknown chunk") {
    kb.kg.entities.begin()->second.source_chunk_ids.insert("nope#000000");
    CHECK_FALSE(CheckEdgeKb(kb).empty());
  }
}

TEST_CASE("neighbors and chunks") {
  const EdgeKB kb = SmallKb();
  const auto oak = EntityIdFor("oak");
  const auto hill = EntityIdFor("hill");
  const auto river = EntityIdFor("river");
  const auto from_oak = Neighbors(kb, {oak});
  REQUIRE(from_oak.size() == 1);
  CHECK(from_oak.begin()->relation == RelationIdFor(oak, hill, "grows on"));

  // oracle: every relation touching a seed, nothing else
  for (const std::set<EntityId>& seeds : {std::set<EntityId>{hill}, std::set<EntityId>{hill, river},
                                          std::set<EntityId>{}}) {
    std::set<Triple> want;
    for (const auto& [id, r] : kb.kg.relations) {
      if (seeds.count(r.src) || seeds.count(r.dst)) want.insert({r.src, id, r.dst});
    }
    CHECK(Neighbors(kb, seeds) == want);
  }
  CHECK_THROWS_AS(Neighbors(kb, {"ent-missing"}), Error);

  const auto chunks = ChunksFor(kb, {river});
  std::set<ChunkId> want = kb.kg.entities.at(river).source_chunk_ids;
  REQUIRE(chunks.size() == want.size());
  CHECK(chunks.front().doc_id == "e/a.txt");
  CHECK(chunks.back().doc_id == "e/b.txt");
  for (std::size_t i = 1; i < chunks.size(); ++i) {
    CHECK(std::make_pair(chunks[i - 1].doc_id, chunks[i - 1].index) <
          std::make_pair(chunks[i].doc_id, chunks[i].index));
  }
  CHECK(ChunksFor(kb, {river, river}).size() == chunks.size());
  CHECK_THROWS_AS(ChunksFor(kb, {"nothing"}), Error);
}

TEST_CASE("persistence round trip and corruption") {
  const EdgeKB kb = SmallKb();
  const fs::path dir = TempDir("persist");
  PersistEdgeKb(kb, dir);
  CHECK(LoadEdgeKb(dir) == kb);

  auto read = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
  };
  auto write = [](const fs::path& p, const std::string& s) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << s;
  };
  auto code_of_load = [&] {
    try {
      LoadEdgeKb(dir);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::kConfig;
  };
  const fs::path f = dir / "graph.kg";
  const std::string orig = read(f);

  std::string flipped = orig;
  flipped[30] ^= 0x40;
  write(f, flipped);
  CHECK(code_of_load() == ErrorCode::kChecksum);

  std::string ver = orig;
  ver[8] = 9;
  write(f, ver);
  CHECK(code_of_load() == ErrorCode::kVersion);

  std::string magic = orig;
  magic[0] = 'X';
  write(f, magic);
  CHECK(code_of_load() == ErrorCode::kDecode);

  write(f, orig.substr(0, orig.size() - 1));
  CHECK(code_of_load() == ErrorCode::kDecode);

  write(f, orig);
  CHECK(LoadEdgeKb(dir) == kb);
  fs::remove(dir / "chunks.dat");
  CHECK(code_of_load() == ErrorCode::kIo);

  // a valid file of the wrong kind
  fs::copy_file(dir / "entities.vec", dir / "chunks.dat");
  CHECK(code_of_load() == ErrorCode::kDecode);
  fs::remove_all(dir);
}
