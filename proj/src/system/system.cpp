#include "system/system.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <future>
#include <thread>

#include "core/error.hpp"
#include "core/text.hpp"
#include "json.hpp"
#include "stores/edge_kb.hpp"

namespace dgrag {

namespace fs = std::filesystem;

std::vector<EdgeId> ListEdges(const fs::path& corpus_root, const SystemConfig& cfg) {
  if (!fs::is_directory(corpus_root)) throw Error(ErrorCode::kIo, "corpus root is not a directory: " + corpus_root.string());
  std::vector<EdgeId> edges;
  for (const auto& entry : fs::directory_iterator(corpus_root)) {
    const std::string name = entry.path().filename().string();
    if (entry.is_directory() && !name.empty() && name[0] != '.') edges.push_back(name);
  }
  std::sort(edges.begin(), edges.end());
  if (static_cast<int>(edges.size()) != cfg.n_edges) {
    throw Error(ErrorCode::kConfig, "corpus has " + std::to_string(edges.size()) + " edge directories but n_edges is " +
                                        std::to_string(cfg.n_edges));
  }
  return edges;
}

fs::path EdgeDir(const fs::path& build_dir, const EdgeId& edge) { return build_dir / "edges" / edge; }
fs::path RegistryPath(const fs::path& build_dir) { return build_dir / "cloud" / "registry.sum"; }

std::vector<SubgraphSummary> LoadEdgeSummaries(const fs::path& edge_dir) {
  return DecodeSummaries(ReadStoreFile(edge_dir / "summaries.sum", StoreKind::kSummaries));
}

EdgeSummaries PartitionAndSummarize(const EdgeKB& kb, const Provider& provider, const SystemConfig& cfg) {
  EdgeSummaries out;
  if (kb.kg.entities.empty()) return out;
  const CommunityGraph cg = CommunityGraph::FromKnowledgeGraph(kb.kg);
  const Partition leiden = LeidenPartition(cg, cfg.resolution, cfg.rng_seed);
  out.leiden_communities = leiden.community_count;
  out.partition = MergeSmall(leiden, cg, cfg.size_threshold, &out.merge);
  out.summaries = SummarizeAll(kb.kg, out.partition, provider, kb.edge_id);
  return out;
}

BuildReport BuildAll(const fs::path& corpus_root, const fs::path& out_dir, const SystemConfig& cfg) {
  if (auto v = ValidateConfig(cfg); !v.empty()) throw Error(ErrorCode::kConfig, "invalid config: " + v.front());
  const std::vector<EdgeId> edges = ListEdges(corpus_root, cfg);
  const std::shared_ptr<const Provider> provider = MakeProvider(cfg.edge_provider, cfg);

  struct Built {
    EdgeBuildReport report;
    std::vector<SubgraphSummary> summaries;
  };
  std::vector<std::future<Built>> jobs;
  for (const auto& edge : edges) {
    jobs.push_back(std::async(std::launch::async, [&, edge] {
      try {
        Built b;
        BuiltEdge built = BuildEdgeKb(corpus_root / edge, edge, *provider, cfg);
        EdgeSummaries es = PartitionAndSummarize(built.kb, *provider, cfg);
        const fs::path dir = EdgeDir(out_dir, edge);
        PersistEdgeKb(built.kb, dir);
        WriteStoreFile(dir / "summaries.sum", StoreKind::kSummaries, EncodeSummaries(es.summaries));
        b.report.edge_id = edge;
        b.report.stats = built.stats;
        b.report.leiden_communities = es.leiden_communities;
        b.report.communities = es.partition.community_count;
        b.report.merge = es.merge;
        b.report.summaries = es.summaries.size();
        b.summaries = std::move(es.summaries);
        return b;
      } catch (const Error& e) {
        throw Error(e.code(), "edge " + edge + ": " + e.what());
      }
    }));
  }
  BuildReport report;
  SummaryRegistry registry(cfg.embedding_dim);
  for (auto& job : jobs) {
    Built b = job.get();
    report.registered += registry.Register(b.report.edge_id, b.summaries);
    report.edges.push_back(std::move(b.report));
  }
  fs::create_directories(RegistryPath(out_dir).parent_path());
  registry.Save(RegistryPath(out_dir));
  std::ofstream(out_dir / "build_report.json", std::ios::binary) << BuildReportJson(report);
  return report;
}

std::string BuildReportJson(const BuildReport& r) {
  nlohmann::json j;
  j["registered"] = r.registered;
  j["edges"] = nlohmann::json::array();
  for (const auto& e : r.edges) {
    j["edges"].push_back({{"edge_id", e.edge_id},
                          {"documents", e.stats.documents},
                          {"chunks", e.stats.chunks},
                          {"entities", e.stats.entities},
                          {"relations", e.stats.relations},
                          {"dropped_self_loops", e.stats.dropped_self_loops},
                          {"leiden_communities", e.leiden_communities},
                          {"communities", e.communities},
                          {"merges", e.merge.merges},
                          {"isolated_undersized", e.merge.isolated_undersized},
                          {"summaries", e.summaries}});
  }
  return j.dump(2) + "\n";
}

std::string DefaultQueryId(const EdgeId& origin, const std::string& text) {
  return "q-" + HexDigest(Fnv1a64(origin + "\x1f" + text));
}

std::unique_ptr<System> System::Open(const fs::path& build_dir, const SystemConfig& cfg, CarrierKind kind) {
  if (auto v = ValidateConfig(cfg); !v.empty()) throw Error(ErrorCode::kConfig, "invalid config: " + v.front());
  std::unique_ptr<System> sys(new System());
  sys->cfg_ = cfg;
  sys->edge_provider_ = MakeProvider(cfg.edge_provider, cfg);
  sys->cloud_provider_ = MakeProvider(cfg.cloud_provider, cfg);

  std::vector<EdgeId> edges;
  if (!fs::is_directory(build_dir / "edges")) throw Error(ErrorCode::kIo, "no build found in " + build_dir.string());
  for (const auto& entry : fs::directory_iterator(build_dir / "edges")) {
    if (entry.is_directory()) edges.push_back(entry.path().filename().string());
  }
  std::sort(edges.begin(), edges.end());

  if (kind == CarrierKind::kSimulated) {
    sys->carrier_ = std::make_unique<SimulatedCarrier>(cfg.link);
  } else {
    std::map<std::string, std::string> dir{{"cloud", "127.0.0.1:0"}};
    for (const auto& e : edges) dir[e] = "127.0.0.1:0";
    sys->carrier_ = std::make_unique<SocketCarrier>(cfg.link, dir);
  }
  Carrier* carrier = sys->carrier_.get();

  sys->cloud_ = std::make_unique<CloudNode>("cloud", cfg, sys->cloud_provider_, carrier,
                                            SummaryRegistry::Load(RegistryPath(build_dir)));
  if (sys->cloud_->registry().dim() != cfg.embedding_dim) {
    throw Error(ErrorCode::kConfig, "registry dimension " + std::to_string(sys->cloud_->registry().dim()) +
                                        " does not match embedding_dim " + std::to_string(cfg.embedding_dim));
  }
  CloudNode* cloud = sys->cloud_.get();
  carrier->Bind("cloud", [cloud](const std::string& from, const Message& m) { return cloud->Handle(from, m); });
  for (const auto& e : edges) {
    const fs::path dir = EdgeDir(build_dir, e);
    auto svc = std::make_unique<EdgeService>(LoadEdgeKb(dir), LoadEdgeSummaries(dir), cfg, sys->edge_provider_,
                                             carrier);
    EdgeService* raw = svc.get();
    carrier->Bind(e, [raw](const std::string& from, const Message& m) { return raw->Handle(from, m); });
    sys->edges_[e] = std::move(svc);
  }
  return sys;
}

System::~System() {
  if (auto* sc = dynamic_cast<SocketCarrier*>(carrier_.get())) sc->Shutdown();
}

EdgeService& System::edge(const EdgeId& id) {
  auto it = edges_.find(id);
  if (it == edges_.end()) throw Error(ErrorCode::kInvalidArgument, "unknown edge " + id);
  return *it->second;
}

std::vector<EdgeId> System::edge_ids() const {
  std::vector<EdgeId> out;
  for (const auto& [id, _] : edges_) out.push_back(id);
  return out;
}

QueryOutcome System::Query(const EdgeId& origin, const std::string& text, const std::string& query_id) {
  return edge(origin).Answer(query_id.empty() ? DefaultQueryId(origin, text) : query_id, text);
}

std::map<std::string, std::string> NetworkDirectory(const SystemConfig& cfg) {
  std::map<std::string, std::string> dir = cfg.network.edge_addrs;
  dir["cloud"] = cfg.network.cloud_addr;
  for (const auto& [node, addr] : dir) ParseAddress(addr);
  return dir;
}

std::unique_ptr<NodeServer> NodeServer::Cloud(const fs::path& build_dir, const SystemConfig& cfg) {
  if (auto v = ValidateConfig(cfg); !v.empty()) throw Error(ErrorCode::kConfig, "invalid config: " + v.front());
  std::unique_ptr<NodeServer> s(new NodeServer());
  s->node_ = "cloud";
  s->provider_ = MakeProvider(cfg.cloud_provider, cfg);
  SummaryRegistry registry(cfg.embedding_dim);
  if (!build_dir.empty() && fs::exists(RegistryPath(build_dir))) {
    registry = SummaryRegistry::Load(RegistryPath(build_dir));
    if (registry.dim() != cfg.embedding_dim) {
      throw Error(ErrorCode::kConfig, "registry dimension " + std::to_string(registry.dim()) +
                                          " does not match embedding_dim " + std::to_string(cfg.embedding_dim));
    }
  }
  s->carrier_ = std::make_unique<SocketCarrier>(cfg.link, NetworkDirectory(cfg));
  s->cloud_ = std::make_unique<CloudNode>("cloud", cfg, s->provider_, s->carrier_.get(), std::move(registry));
  CloudNode* cloud = s->cloud_.get();
  s->carrier_->Bind("cloud", [cloud](const std::string& from, const Message& m) { return cloud->Handle(from, m); });
  return s;
}

std::unique_ptr<NodeServer> NodeServer::Edge(const fs::path& build_dir, const EdgeId& id, const SystemConfig& cfg,
                                             int register_attempts, double retry_interval_s) {
  if (auto v = ValidateConfig(cfg); !v.empty()) throw Error(ErrorCode::kConfig, "invalid config: " + v.front());
  if (!cfg.network.edge_addrs.count(id)) throw Error(ErrorCode::kConfig, "no address for edge " + id + " in network.edge_addrs");
  std::unique_ptr<NodeServer> s(new NodeServer());
  s->node_ = id;
  s->provider_ = MakeProvider(cfg.edge_provider, cfg);
  const fs::path dir = EdgeDir(build_dir, id);
  EdgeKB kb = LoadEdgeKb(dir);
  if (kb.edge_id != id) throw Error(ErrorCode::kIntegrity, "stores in " + dir.string() + " belong to edge " + kb.edge_id);
  s->carrier_ = std::make_unique<SocketCarrier>(cfg.link, NetworkDirectory(cfg));
  s->edge_ = std::make_unique<EdgeService>(std::move(kb), LoadEdgeSummaries(dir), cfg, s->provider_, s->carrier_.get());
  EdgeService* edge = s->edge_.get();
  s->carrier_->Bind(id, [edge](const std::string& from, const Message& m) { return edge->Handle(from, m); });
  for (int attempt = 1;; ++attempt) {
    try {
      s->registered_ = edge->RegisterWithCloud();
      break;
    } catch (const Error& e) {
      const bool transient = e.code() == ErrorCode::kTransport || e.code() == ErrorCode::kTimeout;
      if (!transient || attempt >= register_attempts) throw;
      std::this_thread::sleep_for(std::chrono::duration<double>(retry_interval_s));
    }
  }
  return s;
}

NodeServer::~NodeServer() { Stop(); }

std::string NodeServer::address() const { return carrier_->Address(node_); }

void NodeServer::Stop() {
  if (carrier_) carrier_->Shutdown();
}

LocalReply RemoteQuery(const SystemConfig& cfg, const EdgeId& edge, const std::string& text,
                       const std::string& query_id) {
  if (!cfg.network.edge_addrs.count(edge)) throw Error(ErrorCode::kConfig, "no address for edge " + edge);
  SocketCarrier carrier(cfg.link, NetworkDirectory(cfg));
  const std::string id = query_id.empty() ? DefaultQueryId(edge, text) : query_id;
  const Message reply = carrier.Call("client", edge, LocalQuery{id, text}, cfg.retrieval_timeout_s * 3);
  const auto* r = std::get_if<LocalReply>(&reply);
  if (!r) throw Error(ErrorCode::kTransport, "edge answered a local query with " + std::string(MessageTypeName(reply)));
  return *r;
}

}  // namespace dgrag
