#include "cloud/cloud_node.hpp"

#include <algorithm>
#include <chrono>
#include <future>
#include <mutex>
#include <set>

#include "core/binary.hpp"
#include "core/error.hpp"
#include "edge/edge_node.hpp"
#include "stores/edge_kb.hpp"

namespace dgrag {

namespace {

using Clock = std::chrono::steady_clock;

double SecondsSince(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

}  // namespace

SummaryRegistry::SummaryRegistry(SummaryRegistry&& other) noexcept {
  std::unique_lock lock(other.mu_);
  index_ = std::move(other.index_);
  summaries_ = std::move(other.summaries_);
}

SummaryRegistry& SummaryRegistry::operator=(SummaryRegistry&& other) noexcept {
  if (this != &other) {
    std::scoped_lock lock(mu_, other.mu_);
    index_ = std::move(other.index_);
    summaries_ = std::move(other.summaries_);
  }
  return *this;
}

std::size_t SummaryRegistry::Register(const EdgeId& edge_id, const std::vector<SubgraphSummary>& summaries) {
  for (const auto& s : summaries) {
    if (s.edge_id != edge_id) {
      throw Error(ErrorCode::kInvalidArgument, "summary " + s.id + " is owned by " + s.edge_id + ", not " + edge_id);
    }
    if (s.id != SummaryId(s.edge_id, s.community_id)) {
      throw Error(ErrorCode::kInvalidArgument, "summary id " + s.id + " does not match its edge and community");
    }
    if (static_cast<int>(s.embedding.size()) != index_.dim()) {
      throw Error(ErrorCode::kInvalidArgument, "summary " + s.id + " has dimension " +
                                                   std::to_string(s.embedding.size()) + ", registry expects " +
                                                   std::to_string(index_.dim()));
    }
  }
  std::unique_lock lock(mu_);
  for (const auto& s : summaries) {
    index_.Upsert(s.id, s.embedding);
    summaries_[s.id] = s;
  }
  return summaries.size();
}

std::vector<SummaryMatch> SummaryRegistry::Match(const Embedding& query, std::size_t m) const {
  std::shared_lock lock(mu_);
  if (summaries_.empty()) throw Error(ErrorCode::kRouting, "no summaries registered");
  std::vector<SummaryMatch> out;
  for (const auto& hit : index_.TopK(query, m)) out.push_back({summaries_.at(hit.id), hit.score});
  return out;
}

std::size_t SummaryRegistry::size() const {
  std::shared_lock lock(mu_);
  return summaries_.size();
}

std::vector<SubgraphSummary> SummaryRegistry::All() const {
  std::shared_lock lock(mu_);
  std::vector<SubgraphSummary> out;
  for (const auto& [_, s] : summaries_) out.push_back(s);
  return out;
}

std::map<EdgeId, std::vector<std::string>> SummaryRegistry::IdsByEdge() const {
  std::shared_lock lock(mu_);
  std::map<EdgeId, std::vector<std::string>> out;
  for (const auto& [id, s] : summaries_) out[s.edge_id].push_back(id);
  return out;
}

std::string EncodeSummaries(const std::vector<SubgraphSummary>& summaries) {
  ByteWriter w;
  w.U32(static_cast<std::uint32_t>(summaries.size()));
  for (const auto& s : summaries) WriteSummary(w, s);
  return w.Take();
}

std::vector<SubgraphSummary> DecodeSummaries(const std::string& payload) {
  ByteReader r(payload);
  std::vector<SubgraphSummary> out;
  for (std::uint32_t i = 0, n = r.Count(); i < n; ++i) out.push_back(ReadSummary(r));
  if (!r.done()) throw Error(ErrorCode::kDecode, "trailing bytes after summaries");
  return out;
}

std::string SummaryRegistry::Encode() const {
  ByteWriter w;
  w.U32(static_cast<std::uint32_t>(dim()));
  w.Raw(EncodeSummaries(All()));
  return w.Take();
}

SummaryRegistry SummaryRegistry::Decode(const std::string& payload) {
  ByteReader r(payload);
  const int dim = static_cast<int>(r.U32());
  SummaryRegistry reg(dim);
  std::map<EdgeId, std::vector<SubgraphSummary>> by_edge;
  for (auto& s : DecodeSummaries(payload.substr(4))) by_edge[s.edge_id].push_back(std::move(s));
  for (const auto& [edge, list] : by_edge) reg.Register(edge, list);
  return reg;
}

void SummaryRegistry::Save(const std::filesystem::path& path) const {
  WriteStoreFile(path, StoreKind::kSummaries, Encode());
}

SummaryRegistry SummaryRegistry::Load(const std::filesystem::path& path) {
  return Decode(ReadStoreFile(path, StoreKind::kSummaries));
}

std::vector<SummaryMatch> MatchSummaries(std::string_view query, std::size_t m, const SummaryRegistry& registry,
                                         const Provider& provider) {
  if (registry.size() == 0) throw Error(ErrorCode::kRouting, "no summaries registered");
  return registry.Match(provider.Embed(query), m);
}

std::vector<EdgeId> SelectEdges(const std::vector<SummaryMatch>& matches, int k) {
  std::vector<EdgeId> out;
  for (const auto& m : matches) {
    if (static_cast<int>(out.size()) >= k) break;
    if (std::find(out.begin(), out.end(), m.summary.edge_id) == out.end()) out.push_back(m.summary.edge_id);
  }
  return out;
}

KnowledgeBundle AggregateBundles(const std::vector<KnowledgeBundle>& bundles, int token_budget) {
  KnowledgeBundle out;
  std::set<std::string> seen;
  std::vector<std::string> sources;
  for (const auto& b : bundles) {
    sources.push_back(b.edge_id);
    out.truncated = out.truncated || b.truncated;
    for (const auto& e : b.entities) {
      if (seen.insert(e.id).second) out.entities.push_back(e);
    }
    for (const auto& r : b.relations) {
      if (seen.insert(r.id).second) out.relations.push_back(r);
    }
    for (const auto& c : b.chunks) {
      if (seen.insert(c.id).second) out.chunks.push_back(c);
    }
  }
  for (std::size_t i = 0; i < sources.size(); ++i) out.edge_id += (i ? "," : "") + sources[i];
  const bool was_truncated = out.truncated;
  out = TruncateBundle(std::move(out), token_budget);
  out.truncated = out.truncated || was_truncated;
  return out;
}

double GlobalAnswer::SimulatedNetworkSeconds() const {
  double s = 0.0;
  for (const auto& t : transmission_log) s += t.simulated_seconds;
  return s;
}

CloudNode::CloudNode(std::string name, SystemConfig cfg, std::shared_ptr<const Provider> provider, Carrier* carrier,
                     SummaryRegistry registry)
    : name_(std::move(name)),
      cfg_(std::move(cfg)),
      provider_(std::move(provider)),
      carrier_(carrier),
      registry_(std::move(registry)) {}

GlobalAnswer CloudNode::CrossEdgeAnswer(const GlobalQuery& query) {
  const LinkModel& link = carrier_->link();
  GlobalAnswer ans;
  ans.query_id = query.query_id;
  const std::uint64_t up_bytes = EncodeFrame(query).size();
  ans.transmission_log.push_back({"query_up", up_bytes, link.Latency(up_bytes), 1});

  auto t0 = Clock::now();
  const auto matches = MatchSummaries(query.text, static_cast<std::size_t>(cfg_.top_m), registry_, *provider_);
  const std::vector<EdgeId> edges = SelectEdges(matches, cfg_.top_k);
  ans.phase_timings["summary_matching"] = SecondsSince(t0);

  t0 = Clock::now();
  const RetrievalRequest req{query.query_id, query.text};
  struct Leg {
    Message reply;
    CallInfo info;
    std::string error;
  };
  std::vector<std::future<Leg>> futures;
  for (const auto& edge : edges) {
    futures.push_back(std::async(std::launch::async, [this, edge, &req] {
      Leg leg;
      try {
        leg.reply = carrier_->Call(name_, edge, req, cfg_.retrieval_timeout_s, &leg.info);
      } catch (const Error& e) {
        leg.error = std::string(ErrorCodeName(e.code())) + ": " + e.what();
      }
      return leg;
    }));
  }
  std::vector<KnowledgeBundle> bundles;
  TransmissionRecord out_rec{"query_out", 0, 0.0, 0};
  TransmissionRecord back_rec{"knowledge_back", 0, 0.0, 0};
  const std::uint64_t req_bytes = edges.empty() ? 0 : EncodeFrame(req).size();
  for (std::size_t i = 0; i < futures.size(); ++i) {
    Leg leg = futures[i].get();
    // a request that never got an answer still crossed the link
    out_rec.payload_bytes += req_bytes;
    out_rec.simulated_seconds = std::max(out_rec.simulated_seconds, link.Latency(req_bytes));
    ++out_rec.legs;
    const auto* resp = std::get_if<RetrievalResponse>(&leg.reply);
    if (!leg.error.empty() || resp == nullptr) {
      ans.failed_edges.push_back(edges[i]);
      continue;
    }
    back_rec.payload_bytes += leg.info.response_bytes;
    back_rec.simulated_seconds = std::max(back_rec.simulated_seconds, leg.info.response_seconds);
    ++back_rec.legs;
    ans.contributing_edges.push_back(edges[i]);
    bundles.push_back(resp->bundle);
  }
  ans.phase_timings["knowledge_retrieval"] = SecondsSince(t0);
  if (bundles.empty()) {
    throw Error(ErrorCode::kRouting, edges.empty() ? std::string("no edge owns a matching summary")
                                                   : "every selected edge failed to answer the retrieval request");
  }
  ans.transmission_log.push_back(out_rec);
  ans.transmission_log.push_back(back_rec);

  t0 = Clock::now();
  const KnowledgeBundle merged = AggregateBundles(bundles, cfg_.token_budget);
  const auto texts = provider_->GenerateBatch(FormatContext(merged), query.text, 1);
  if (texts.empty()) throw Error(ErrorCode::kProvider, "cloud generator returned no answer");
  ans.text = texts.front();
  ans.phase_timings["cloud_generation"] = SecondsSince(t0);

  const std::uint64_t down_bytes = EncodeFrame(ToFinalAnswer(ans)).size();
  ans.transmission_log.push_back({"answer_down", down_bytes, link.Latency(down_bytes), 1});
  return ans;
}

FinalAnswer CloudNode::ToFinalAnswer(const GlobalAnswer& a) {
  FinalAnswer f;
  f.query_id = a.query_id;
  f.text = a.text;
  f.contributing_edges = a.contributing_edges;
  f.failed_edges = a.failed_edges;
  f.timings = a.phase_timings;
  for (const auto& t : a.transmission_log) {
    if (t.direction != "answer_down") f.transmissions.push_back(t);
  }
  return f;
}

Message CloudNode::Handle(const std::string& from, const Message& request) {
  if (const auto* reg = std::get_if<RegisterSummaries>(&request)) {
    if (reg->edge_id != from) {
      throw Error(ErrorCode::kInvalidArgument, from + " cannot register summaries for " + reg->edge_id);
    }
    return RegisterAck{static_cast<std::uint32_t>(registry_.Register(reg->edge_id, reg->summaries))};
  }
  if (const auto* q = std::get_if<GlobalQuery>(&request)) return ToFinalAnswer(CrossEdgeAnswer(*q));
  throw Error(ErrorCode::kUnsupported, std::string("cloud does not handle ") + MessageTypeName(request));
}

}  // namespace dgrag
