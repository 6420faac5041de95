#include "edge/edge_service.hpp"

#include "core/error.hpp"

namespace dgrag {

EdgeService::EdgeService(EdgeKB kb, std::vector<SubgraphSummary> summaries, SystemConfig cfg,
                         std::shared_ptr<const Provider> provider, Carrier* carrier, std::string cloud_name)
    : kb_(std::move(kb)),
      summaries_(std::move(summaries)),
      cfg_(std::move(cfg)),
      provider_(std::move(provider)),
      carrier_(carrier),
      cloud_name_(std::move(cloud_name)) {}

std::size_t EdgeService::RegisterWithCloud() {
  const Message reply = carrier_->Call(id(), cloud_name_, RegisterSummaries{id(), summaries_}, cfg_.retrieval_timeout_s);
  const auto* ack = std::get_if<RegisterAck>(&reply);
  if (!ack) throw Error(ErrorCode::kTransport, "cloud answered registration with " + std::string(MessageTypeName(reply)));
  return ack->registered;
}

QueryOutcome EdgeService::Answer(const std::string& query_id, const std::string& text) {
  QueryOutcome out;
  out.query_id = query_id;
  out.origin_edge = id();
  out.local = RunLocalQuery(text, kb_, *provider_, cfg_);
  if (out.local.decision.route == Route::kLocal) {
    out.answer = out.local.candidates.at(out.local.decision.selected_index).text;
    return out;
  }
  CallInfo info;
  const Message reply = carrier_->Call(id(), cloud_name_, GlobalQuery{query_id, id(), text},
                                       cfg_.retrieval_timeout_s * 2, &info);
  const auto* fa = std::get_if<FinalAnswer>(&reply);
  if (!fa) throw Error(ErrorCode::kTransport, "cloud answered a global query with " + std::string(MessageTypeName(reply)));
  GlobalAnswer g;
  g.query_id = fa->query_id;
  g.text = fa->text;
  g.contributing_edges = fa->contributing_edges;
  g.failed_edges = fa->failed_edges;
  g.phase_timings = fa->timings;
  g.transmission_log = fa->transmissions;
  g.transmission_log.push_back({"answer_down", info.response_bytes, info.response_seconds, 1});
  out.answer = g.text;
  out.global = std::move(g);
  return out;
}

Message EdgeService::Handle(const std::string&, const Message& request) {
  if (const auto* r = std::get_if<RetrievalRequest>(&request)) {
    return RetrievalResponse{r->query_id, ServeRetrieval(r->text, kb_, *provider_, cfg_)};
  }
  if (const auto* q = std::get_if<LocalQuery>(&request)) {
    const QueryOutcome o = Answer(q->query_id, q->text);
    LocalReply reply;
    reply.query_id = q->query_id;
    reply.text = o.answer;
    reply.global = o.global.has_value();
    reply.low_confidence = o.local.decision.low_confidence;
    reply.similarity_score = o.local.decision.similarity_score;
    if (o.global) reply.contributing_edges = o.global->contributing_edges;
    return reply;
  }
  throw Error(ErrorCode::kUnsupported, std::string("edge does not handle ") + MessageTypeName(request));
}

}  // namespace dgrag
