#include "core/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "core/error.hpp"
#include "json.hpp"

namespace dgrag {

using nlohmann::json;

double LinkModel::Latency(std::uint64_t payload_bytes) const {
  return base_rtt_s + static_cast<double>(payload_bytes) * 8.0 / bandwidth_bits_per_s;
}

std::vector<std::string> ValidateConfig(const SystemConfig& cfg) {
  std::vector<std::string> v;
  auto need = [&v](bool ok, const char* msg) {
    if (!ok) v.emplace_back(msg);
  };
  need(cfg.n_edges > 0, "n_edges > 0");
  need(cfg.top_m > 0, "top_m > 0");
  need(cfg.top_k > 0, "top_k > 0");
  need(cfg.top_k <= cfg.n_edges, "top_k <= n_edges");
  need(cfg.sim_threshold >= 0.0 && cfg.sim_threshold <= 1.0, "sim_threshold in [0,1]");
  need(cfg.n_batch > 0, "n_batch > 0");
  need(cfg.size_threshold > 0, "size_threshold > 0");
  need(cfg.resolution > 0.0, "resolution > 0");
  need(cfg.chunk_size > 0, "chunk_size > 0");
  need(cfg.chunk_overlap >= 0, "chunk_overlap >= 0");
  need(cfg.chunk_overlap < cfg.chunk_size, "chunk_overlap < chunk_size");
  need(cfg.embedding_dim > 0, "embedding_dim > 0");
  need(cfg.entity_top > 0, "entity_top > 0");
  need(cfg.relation_top > 0, "relation_top > 0");
  need(cfg.token_budget > 0, "token_budget > 0");
  need(cfg.min_retrieval_score >= -1.0 && cfg.min_retrieval_score <= 1.0,
       "min_retrieval_score in [-1,1]");
  need(cfg.summary_top_entities > 0, "summary_top_entities > 0");
  need(cfg.retrieval_timeout_s > 0.0, "retrieval_timeout_s > 0");
  need(cfg.link.bandwidth_bits_per_s > 0.0, "link.bandwidth_bits_per_s > 0");
  need(cfg.link.base_rtt_s >= 0.0, "link.base_rtt_s >= 0");
  const auto& w = cfg.weights;
  need(w.cosine >= 0.0 && w.jaccard >= 0.0 && w.claim >= 0.0, "weights >= 0");
  need(w.cosine + w.jaccard + w.claim > 0.0, "weights sum > 0");
  for (const auto* p : {&cfg.edge_provider, &cfg.cloud_provider}) {
    const std::string prefix = p == &cfg.edge_provider ? "edge_provider" : "cloud_provider";
    if (p->kind != "mock" && p->kind != "http") v.push_back(prefix + ".kind in {mock,http}");
    if (p->kind == "http" && p->endpoint.empty()) v.push_back(prefix + ".endpoint required for http");
    if (p->timeout_s <= 0.0) v.push_back(prefix + ".timeout_s > 0");
    if (p->max_in_flight <= 0) v.push_back(prefix + ".max_in_flight > 0");
    if (p->max_attempts <= 0) v.push_back(prefix + ".max_attempts > 0");
  }
  return v;
}

namespace {

json ToJson(const ProviderConfig& p) {
  return json{{"kind", p.kind},
              {"endpoint", p.endpoint},
              {"model", p.model},
              {"embedding_model", p.embedding_model},
              {"api_key_env", p.api_key_env},
              {"timeout_s", p.timeout_s},
              {"max_in_flight", p.max_in_flight},
              {"max_attempts", p.max_attempts},
              {"temperature", p.temperature}};
}

json ToJson(const SystemConfig& c) {
  json j;
  j["n_edges"] = c.n_edges;
  j["top_m"] = c.top_m;
  j["top_k"] = c.top_k;
  j["sim_threshold"] = c.sim_threshold;
  j["n_batch"] = c.n_batch;
  j["size_threshold"] = c.size_threshold;
  j["resolution"] = c.resolution;
  j["chunk_size"] = c.chunk_size;
  j["chunk_overlap"] = c.chunk_overlap;
  j["embedding_dim"] = c.embedding_dim;
  j["entity_top"] = c.entity_top;
  j["relation_top"] = c.relation_top;
  j["token_budget"] = c.token_budget;
  j["rng_seed"] = c.rng_seed;
  j["min_retrieval_score"] = c.min_retrieval_score;
  j["summary_top_entities"] = c.summary_top_entities;
  j["retrieval_timeout_s"] = c.retrieval_timeout_s;
  j["link"] = {{"bandwidth_bits_per_s", c.link.bandwidth_bits_per_s},
               {"base_rtt_s", c.link.base_rtt_s}};
  j["ablations"] = {{"disable_cd", c.ablations.disable_cd},
                    {"disable_se", c.ablations.disable_se},
                    {"single_inference", c.ablations.single_inference},
                    {"vector_only", c.ablations.vector_only}};
  j["weights"] = {{"cosine", c.weights.cosine},
                  {"jaccard", c.weights.jaccard},
                  {"claim", c.weights.claim}};
  j["edge_provider"] = ToJson(c.edge_provider);
  j["cloud_provider"] = ToJson(c.cloud_provider);
  j["network"] = {{"cloud_addr", c.network.cloud_addr},
                  {"edge_addrs", c.network.edge_addrs}};
  return j;
}

// Copies known keys out of an object, rejecting anything it does not know.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) Fail("expected object");
  }
  ~ObjectReader() = default;

  template <typename T>
  void Get(const char* key, T& out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      out = it->template get<T>();
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kConfig, path_ + key + ": " + e.what());
    }
  }

  const json* Child(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void Finish() const {
    for (const auto& [k, _] : j_.items()) {
      if (!seen_.count(k)) Fail("unknown key '" + k + "'");
    }
  }

  const std::string& path() const { return path_; }

 private:
  [[noreturn]] void Fail(const std::string& msg) const {
    throw Error(ErrorCode::kConfig, "config " + (path_.empty() ? "<root>" : path_) + ": " + msg);
  }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void FromJson(const json& j, const std::string& path, ProviderConfig& p) {
  ObjectReader r(j, path);
  r.Get("kind", p.kind);
  r.Get("endpoint", p.endpoint);
  r.Get("model", p.model);
  r.Get("embedding_model", p.embedding_model);
  r.Get("api_key_env", p.api_key_env);
  r.Get("timeout_s", p.timeout_s);
  r.Get("max_in_flight", p.max_in_flight);
  r.Get("max_attempts", p.max_attempts);
  r.Get("temperature", p.temperature);
  r.Finish();
}

}  // namespace

std::string SerializeConfig(const SystemConfig& cfg) {
  return ToJson(cfg).dump(2) + "\n";
}

SystemConfig ParseConfig(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kConfig, std::string("config parse error: ") + e.what());
  }
  SystemConfig c;
  ObjectReader r(j, "");
  r.Get("n_edges", c.n_edges);
  r.Get("top_m", c.top_m);
  r.Get("top_k", c.top_k);
  r.Get("sim_threshold", c.sim_threshold);
  r.Get("n_batch", c.n_batch);
  r.Get("size_threshold", c.size_threshold);
  r.Get("resolution", c.resolution);
  r.Get("chunk_size", c.chunk_size);
  r.Get("chunk_overlap", c.chunk_overlap);
  r.Get("embedding_dim", c.embedding_dim);
  r.Get("entity_top", c.entity_top);
  r.Get("relation_top", c.relation_top);
  r.Get("token_budget", c.token_budget);
  r.Get("rng_seed", c.rng_seed);
  r.Get("min_retrieval_score", c.min_retrieval_score);
  r.Get("summary_top_entities", c.summary_top_entities);
  r.Get("retrieval_timeout_s", c.retrieval_timeout_s);
  if (const json* link = r.Child("link")) {
    ObjectReader lr(*link, "link.");
    lr.Get("bandwidth_bits_per_s", c.link.bandwidth_bits_per_s);
    lr.Get("base_rtt_s", c.link.base_rtt_s);
    lr.Finish();
  }
  if (const json* abl = r.Child("ablations")) {
    ObjectReader ar(*abl, "ablations.");
    ar.Get("disable_cd", c.ablations.disable_cd);
    ar.Get("disable_se", c.ablations.disable_se);
    ar.Get("single_inference", c.ablations.single_inference);
    ar.Get("vector_only", c.ablations.vector_only);
    ar.Finish();
  }
  if (const json* w = r.Child("weights")) {
    ObjectReader wr(*w, "weights.");
    wr.Get("cosine", c.weights.cosine);
    wr.Get("jaccard", c.weights.jaccard);
    wr.Get("claim", c.weights.claim);
    wr.Finish();
  }
  if (const json* p = r.Child("edge_provider")) FromJson(*p, "edge_provider.", c.edge_provider);
  if (const json* p = r.Child("cloud_provider")) FromJson(*p, "cloud_provider.", c.cloud_provider);
  if (const json* n = r.Child("network")) {
    ObjectReader nr(*n, "network.");
    nr.Get("cloud_addr", c.network.cloud_addr);
    nr.Get("edge_addrs", c.network.edge_addrs);
    nr.Finish();
  }
  r.Finish();
  return c;
}

SystemConfig LoadConfigFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kConfig, "cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ParseConfig(ss.str());
}

}  // namespace dgrag
