#pragma once

#include <memory>
#include <optional>
#include <string>

#include "cloud/cloud_node.hpp"
#include "edge/edge_node.hpp"
#include "transport/carrier.hpp"

namespace dgrag {

struct QueryOutcome {
  std::string query_id;
  EdgeId origin_edge;
  LocalQueryTrace local;
  std::optional<GlobalAnswer> global;  // set when the gate escalated
  std::string answer;
};

// A running edge node: its knowledge base, its provider and a carrier link to
// the cloud.
class EdgeService {
 public:
  EdgeService(EdgeKB kb, std::vector<SubgraphSummary> summaries, SystemConfig cfg,
              std::shared_ptr<const Provider> provider, Carrier* carrier, std::string cloud_name = "cloud");

  const EdgeId& id() const { return kb_.edge_id; }
  const EdgeKB& kb() const { return kb_; }
  const std::vector<SubgraphSummary>& summaries() const { return summaries_; }

  // Sends this edge's summaries to the cloud; returns the acknowledged count.
  std::size_t RegisterWithCloud();

  // Local query, gate, and cross-edge retrieval through the cloud when the
  // gate routes globally.
  QueryOutcome Answer(const std::string& query_id, const std::string& text);

  // Carrier entry point: RetrievalRequest and LocalQuery.
  Message Handle(const std::string& from, const Message& request);

 private:
  EdgeKB kb_;
  std::vector<SubgraphSummary> summaries_;
  SystemConfig cfg_;
  std::shared_ptr<const Provider> provider_;
  Carrier* carrier_;
  std::string cloud_name_;
};

}  // namespace dgrag
