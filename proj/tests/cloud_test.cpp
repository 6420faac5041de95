#include <algorithm>
#include <cmath>
#include <filesystem>

#include "cloud/cloud_node.hpp"
#include "core/error.hpp"
#include "core/rng.hpp"
#include "doctest.h"
#include "edge/edge_service.hpp"
#include "kg/construct.hpp"
#include "providers/mock_provider.hpp"
#include "system/system.hpp"

using namespace dgrag;
namespace fs = std::filesystem;

namespace {

Embedding Unit(Rng& rng, int dim) {
  Embedding v(static_cast<std::size_t>(dim));
  double n = 0;
  for (auto& x : v) {
    x = static_cast<float>(rng.Real() - 0.5);
    n += double(x) * x;
  }
  for (auto& x : v) x = static_cast<float>(x / std::sqrt(n));
  n = 0;
  for (auto x : v) n += double(x) * x;
  for (auto& x : v) x = static_cast<float>(x / std::sqrt(n));
  return v;
}

SubgraphSummary Summary(const EdgeId& edge, int c, Embedding v, const std::string& text = "s") {
  return {SummaryId(edge, c), edge, c, text, std::move(v), 1, 0};
}

ErrorCode CodeOf(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::kIo;
}

// Three edges with disjoint vocabularies on one simulated carrier.
struct World {
  SystemConfig cfg;
  std::shared_ptr<const Provider> provider;
  SimulatedCarrier carrier;
  std::unique_ptr<CloudNode> cloud;
  std::map<EdgeId, std::unique_ptr<EdgeService>> edges;

  explicit World(SystemConfig c = {}) : cfg(Normalize(c)), carrier(cfg.link) {
    provider = std::make_shared<MockProvider>(cfg.embedding_dim, cfg.rng_seed);
    cloud = std::make_unique<CloudNode>("cloud", cfg, provider, &carrier, SummaryRegistry(cfg.embedding_dim));
    carrier.Bind("cloud", [this](const std::string& from, const Message& m) { return cloud->Handle(from, m); });
    const std::map<EdgeId, std::string> docs{
        {"harbor", "@E[tug boat|vessel|pulls barges; harbor code HBR-0042] @E[pier nine|dock|long pier] "
                   "@E[crane gantry|machine|lifts crates] @R[tug boat|pier nine|moors at|mooring] "
                   "@R[crane gantry|pier nine|stands on|loading]"},
        {"orchard", "@E[apple grove|trees|rows of apples] @E[cider press|machine|presses apples] "
                    "@E[bee hive|insects|pollinates blossoms] @R[cider press|apple grove|processes|pressing] "
                    "@R[bee hive|apple grove|pollinates|pollination]"},
        {"observatory", "@E[refractor telescope|instrument|long lens] @E[comet tail|object|ice trail] "
                        "@E[star chart|document|maps constellations] "
                        "@R[refractor telescope|comet tail|observes|viewing] "
                        "@R[star chart|comet tail|plots|mapping]"}};
    for (const auto& [id, text] : docs) {
      auto kb = BuildEdgeKbFromDocuments({{"doc.txt", text}}, id, *provider, cfg).kb;
      auto sums = PartitionAndSummarize(kb, *provider, cfg).summaries;
      auto svc = std::make_unique<EdgeService>(std::move(kb), std::move(sums), cfg, provider, &carrier);
      EdgeService* raw = svc.get();
      carrier.Bind(id, [raw](const std::string& from, const Message& m) { return raw->Handle(from, m); });
      edges[id] = std::move(svc);
    }
    for (auto& [_, e] : edges) e->RegisterWithCloud();
    carrier.ClearLog();
  }

  static SystemConfig Normalize(SystemConfig c) {
    c.n_edges = 3;
    return c;
  }
};

}  // namespace

TEST_CASE("registry grouping and upsert") {
  Rng rng(1);
  SummaryRegistry reg(8);
  CHECK(reg.Register("a", {Summary("a", 0, Unit(rng, 8)), Summary("a", 1, Unit(rng, 8))}) == 2);
  CHECK(reg.Register("b", {Summary("b", 0, Unit(rng, 8))}) == 1);
  CHECK(reg.size() == 3);
  // re-registering replaces in place
  CHECK(reg.Register("a", {Summary("a", 1, Unit(rng, 8), "new")}) == 1);
  CHECK(reg.size() == 3);
  CHECK(reg.All()[1].text == "new");
  const auto by_edge = reg.IdsByEdge();
  CHECK(by_edge.at("a") == std::vector<std::string>{"a#0", "a#1"});
  CHECK(by_edge.at("b") == std::vector<std::string>{"b#0"});

  CHECK(CodeOf([&] { reg.Register("a", {Summary("b", 3, Unit(rng, 8))}); }) == ErrorCode::kInvalidArgument);
  auto bad_id = Summary("a", 3, Unit(rng, 8));
  bad_id.id = "a#4";
  CHECK(CodeOf([&] { reg.Register("a", {bad_id}); }) == ErrorCode::kInvalidArgument);
  CHECK(CodeOf([&] { reg.Register("a", {Summary("a", 5, Unit(rng, 4))}); }) == ErrorCode::kInvalidArgument);
  CHECK(reg.size() == 3);  // rejected batches write nothing

  const auto back = SummaryRegistry::Decode(reg.Encode());
  CHECK(back.All() == reg.All());
  const fs::path f = fs::temp_directory_path() / ("dgrag_registry_" + std::to_string(::getpid()) + ".sum");
  reg.Save(f);
  CHECK(SummaryRegistry::Load(f).All() == reg.All());
  fs::remove(f);

  CHECK(CodeOf([] { SummaryRegistry(8).Match(Embedding(8, 0.5f), 1); }) == ErrorCode::kRouting);
}

TEST_CASE("summary match equals exhaustive scan") {
  Rng rng(4);
  const int dim = 16;
  SummaryRegistry reg(dim);
  for (int e = 0; e < 5; ++e) {
    std::vector<SubgraphSummary> list;
    for (int c = 0; c < 40; ++c) list.push_back(Summary("e" + std::to_string(e), c, Unit(rng, dim)));
    reg.Register("e" + std::to_string(e), list);
  }
  const auto all = reg.All();
  for (int q = 0; q < 30; ++q) {
    const Embedding query = Unit(rng, dim);
    std::vector<std::pair<double, std::string>> scored;
    for (const auto& s : all) scored.push_back({-Cosine(query, s.embedding), s.id});
    std::sort(scored.begin(), scored.end());
    for (std::size_t m : {1, 3, 10, 500}) {
      const auto got = reg.Match(query, m);
      REQUIRE(got.size() == std::min<std::size_t>(m, all.size()));
      for (std::size_t i = 0; i < got.size(); ++i) {
        CHECK(got[i].summary.id == scored[i].second);
        CHECK(got[i].score == doctest::Approx(-scored[i].first).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("edge selection") {
  auto m = [](const EdgeId& e) { return SummaryMatch{Summary(e, 0, {1}), 0.0}; };
  const std::vector<SummaryMatch> ms{m("b"), m("a"), m("b"), m("c"), m("a")};
  CHECK(SelectEdges(ms, 1) == std::vector<EdgeId>{"b"});
  CHECK(SelectEdges(ms, 2) == std::vector<EdgeId>{"b", "a"});
  CHECK(SelectEdges(ms, 9) == std::vector<EdgeId>{"b", "a", "c"});
  CHECK(SelectEdges({}, 3).empty());
}

TEST_CASE("bundle aggregation") {
  Entity x{"x", "x", "t", "d", {"c1"}}, y{"y", "y", "t", "d", {"c2"}};
  Relation r{"r", "x", "y", "rel", {}, {"c1"}};
  Chunk c1{"c1", "d", 0, "one two", 2}, c2{"c2", "d", 1, "three", 1};
  KnowledgeBundle a{"a", {x}, {}, {c1}, false};
  KnowledgeBundle b{"b", {x, y}, {r}, {c1, c2}, false};
  const auto merged = AggregateBundles({a, b}, 1 << 20);
  CHECK(merged.edge_id == "a,b");
  REQUIRE(merged.entities.size() == 2);
  CHECK(merged.entities[0].id == "x");
  CHECK(merged.relations.size() == 1);
  CHECK(merged.chunks.size() == 2);
  CHECK_FALSE(merged.truncated);
  CHECK(CheckBundle(merged).empty());
  b.truncated = true;
  CHECK(AggregateBundles({a, b}, 1 << 20).truncated);
  CHECK(AggregateBundles({a, b}, 1).truncated);
  CHECK(AggregateBundles({}, 10).empty());
}

TEST_CASE("cross-edge answer with four transmissions") {
  World w;
  const GlobalQuery q{"q1", "harbor", "What is the harbor code of the tug boat?"};
  // ask the cloud directly, as the origin edge would
  const Message reply = w.carrier.Call("orchard", "cloud", GlobalQuery{"q1", "orchard", q.text}, 60.0);
  const auto* fa = std::get_if<FinalAnswer>(&reply);
  REQUIRE(fa != nullptr);
  CHECK(fa->contributing_edges == std::vector<EdgeId>{"harbor"});
  CHECK(fa->text.find("HBR-0042") != std::string::npos);
  CHECK(fa->transmissions.size() == 3);

  w.carrier.ClearLog();
  const double clock_before = w.carrier.clock_seconds();
  const QueryOutcome o = w.edges.at("orchard")->Answer("q2", q.text);
  REQUIRE(o.global.has_value());
  const auto& log = o.global->transmission_log;
  REQUIRE(log.size() == 4);
  CHECK(log[0].direction == "query_up");
  CHECK(log[1].direction == "query_out");
  CHECK(log[2].direction == "knowledge_back");
  CHECK(log[3].direction == "answer_down");
  CHECK(o.answer.find("HBR-0042") != std::string::npos);

  // oracle: the carrier saw exactly these four frames; latency is the link formula on their sizes
  const auto frames = w.carrier.Log();
  REQUIRE(frames.size() == 4);
  CHECK(frames[0].from == "orchard");
  CHECK(frames[0].to == "cloud");
  CHECK(frames[1].to == "harbor");
  CHECK(frames[2].from == "harbor");
  CHECK(frames[3].to == "orchard");
  double want = 0;
  for (std::size_t i = 0; i < 4; ++i) {
    const double bits = double(frames[i].frame.size()) * 8.0;
    const double secs = w.cfg.link.base_rtt_s + bits / 50e6;
    CHECK(log[i].payload_bytes == frames[i].frame.size());
    CHECK(std::abs(log[i].simulated_seconds - secs) <= 1e-12);
    want += secs;
  }
  CHECK(std::abs(o.global->SimulatedNetworkSeconds() - want) <= 1e-9);
  // the virtual clock advanced by exactly the same amount
  CHECK(std::abs(w.carrier.clock_seconds() - clock_before - want) <= 1e-9);
  for (const char* phase : {"summary_matching", "knowledge_retrieval", "cloud_generation"}) {
    CHECK(o.global->phase_timings.count(phase));
  }
}

TEST_CASE("fan-out degrades gracefully") {
  SystemConfig cfg;
  cfg.top_m = 12;
  cfg.top_k = 3;
  World w(cfg);
  const GlobalQuery q{"q", "orchard", "tug boat pier crane"};
  const auto healthy = w.cloud->CrossEdgeAnswer(q);
  CHECK(healthy.contributing_edges.size() == 3);
  CHECK(healthy.failed_edges.empty());
  CHECK(healthy.transmission_log[1].legs == 3);
  CHECK(healthy.transmission_log[2].legs == 3);

  w.carrier.InjectFault("observatory", SimulatedCarrier::Fault::kTimeout);
  w.carrier.InjectFault("orchard", SimulatedCarrier::Fault::kDrop);
  const auto degraded = w.cloud->CrossEdgeAnswer(q);
  CHECK(degraded.contributing_edges == std::vector<EdgeId>{"harbor"});
  std::vector<EdgeId> failed = degraded.failed_edges;
  std::sort(failed.begin(), failed.end());
  CHECK(failed == std::vector<EdgeId>{"observatory", "orchard"});
  REQUIRE(degraded.transmission_log.size() == 4);
  CHECK(degraded.transmission_log[1].legs == 3);
  CHECK(degraded.transmission_log[2].legs == 1);

  w.carrier.InjectFault("harbor", SimulatedCarrier::Fault::kTimeout);
  CHECK(CodeOf([&] { w.cloud->CrossEdgeAnswer(q); }) == ErrorCode::kRouting);
}

TEST_CASE("empty registry and foreign messages") {
  SystemConfig cfg;
  cfg.n_edges = 1;
  auto provider = std::make_shared<MockProvider>(64, 1);
  SimulatedCarrier carrier(cfg.link);
  CloudNode cloud("cloud", cfg, provider, &carrier, SummaryRegistry(64));
  CHECK(CodeOf([&] { cloud.CrossEdgeAnswer({"q", "e", "anything"}); }) == ErrorCode::kRouting);
  CHECK(CodeOf([&] { cloud.Handle("e", RetrievalRequest{"q", "x"}); }) == ErrorCode::kUnsupported);
  Rng rng(2);
  CHECK(CodeOf([&] { cloud.Handle("mallory", RegisterSummaries{"e", {Summary("e", 0, Unit(rng, 64))}}); }) ==
        ErrorCode::kInvalidArgument);
  const Message ack = cloud.Handle("e", RegisterSummaries{"e", {Summary("e", 0, Unit(rng, 64))}});
  CHECK(std::get<RegisterAck>(ack).registered == 1);
}

TEST_CASE("final answer frame carries three legs") {
  GlobalAnswer a;
  a.query_id = "q";
  a.text = "t";
  a.transmission_log = {{"query_up", 1, 0.1, 1}, {"query_out", 2, 0.2, 1}, {"knowledge_back", 3, 0.3, 1},
                        {"answer_down", 4, 0.4, 1}};
  const auto f = CloudNode::ToFinalAnswer(a);
  CHECK(f.transmissions.size() == 3);
  CHECK(a.SimulatedNetworkSeconds() == doctest::Approx(1.0));
}
