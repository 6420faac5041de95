#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "cloud/cloud_node.hpp"
#include "edge/edge_service.hpp"
#include "kg/construct.hpp"
#include "partition/community.hpp"
#include "transport/carrier.hpp"

namespace dgrag {

struct EdgeBuildReport {
  EdgeId edge_id;
  BuildStats stats;
  int leiden_communities = 0;
  int communities = 0;  // after merging small ones
  MergeStats merge;
  std::size_t summaries = 0;
};

struct BuildReport {
  std::vector<EdgeBuildReport> edges;
  std::size_t registered = 0;
};

// Edge ids are the names of the non-hidden subdirectories of corpus_root,
// sorted. Their count must equal cfg.n_edges.
std::vector<EdgeId> ListEdges(const std::filesystem::path& corpus_root, const SystemConfig& cfg);

// Builds every edge (chunk, extract, index, partition, merge, summarize) and
// writes
//   out_dir/edges/<edge>/{entities.vec,relations.vec,chunks.vec,graph.kg,chunks.dat,summaries.sum}
//   out_dir/cloud/registry.sum
//   out_dir/build_report.json
BuildReport BuildAll(const std::filesystem::path& corpus_root, const std::filesystem::path& out_dir,
                     const SystemConfig& cfg);

std::string BuildReportJson(const BuildReport& r);

// One edge's partition and summaries, exposed for tests and tooling.
struct EdgeSummaries {
  Partition partition;
  int leiden_communities = 0;
  MergeStats merge;
  std::vector<SubgraphSummary> summaries;
};
EdgeSummaries PartitionAndSummarize(const EdgeKB& kb, const Provider& provider, const SystemConfig& cfg);

std::filesystem::path EdgeDir(const std::filesystem::path& build_dir, const EdgeId& edge);
std::filesystem::path RegistryPath(const std::filesystem::path& build_dir);
std::vector<SubgraphSummary> LoadEdgeSummaries(const std::filesystem::path& edge_dir);

enum class CarrierKind { kSimulated, kSocket };

// Cloud and every edge of a build in one process, wired through one carrier.
class System {
 public:
  static std::unique_ptr<System> Open(const std::filesystem::path& build_dir, const SystemConfig& cfg,
                                      CarrierKind kind = CarrierKind::kSimulated);
  ~System();

  QueryOutcome Query(const EdgeId& origin, const std::string& text, const std::string& query_id = "");

  const SystemConfig& config() const { return cfg_; }
  Carrier& carrier() { return *carrier_; }
  CloudNode& cloud() { return *cloud_; }
  EdgeService& edge(const EdgeId& id);
  std::vector<EdgeId> edge_ids() const;
  const Provider& edge_provider() const { return *edge_provider_; }
  const Provider& cloud_provider() const { return *cloud_provider_; }

 private:
  System() = default;

  SystemConfig cfg_;
  std::shared_ptr<const Provider> edge_provider_;
  std::shared_ptr<const Provider> cloud_provider_;
  std::unique_ptr<Carrier> carrier_;
  std::unique_ptr<CloudNode> cloud_;
  std::map<EdgeId, std::unique_ptr<EdgeService>> edges_;
};

// One node of a multi-process deployment, listening on its address from
// cfg.network. Every node's directory is cloud_addr plus edge_addrs.
class NodeServer {
 public:
  // Starts from build_dir's registry when one exists, otherwise empty, and
  // takes registrations from edges.
  static std::unique_ptr<NodeServer> Cloud(const std::filesystem::path& build_dir, const SystemConfig& cfg);
  // Loads the edge's stores and registers its summaries with the cloud,
  // retrying while the cloud is unreachable.
  static std::unique_ptr<NodeServer> Edge(const std::filesystem::path& build_dir, const EdgeId& id,
                                          const SystemConfig& cfg, int register_attempts = 40,
                                          double retry_interval_s = 0.25);
  ~NodeServer();

  const std::string& node() const { return node_; }
  std::string address() const;
  std::size_t registered() const { return registered_; }
  void Stop();

 private:
  NodeServer() = default;

  std::string node_;
  std::size_t registered_ = 0;
  std::shared_ptr<const Provider> provider_;
  std::unique_ptr<SocketCarrier> carrier_;
  std::unique_ptr<CloudNode> cloud_;
  std::unique_ptr<EdgeService> edge_;
};

std::map<std::string, std::string> NetworkDirectory(const SystemConfig& cfg);

// Sends a LocalQuery to a served edge as node "client".
LocalReply RemoteQuery(const SystemConfig& cfg, const EdgeId& edge, const std::string& text,
                       const std::string& query_id = "");

// Stable id for a query without one: hash of origin and text.
std::string DefaultQueryId(const EdgeId& origin, const std::string& text);

}  // namespace dgrag
