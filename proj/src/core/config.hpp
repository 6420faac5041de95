#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace dgrag {

struct LinkModel {
  double bandwidth_bits_per_s = 50e6;
  double base_rtt_s = 0.0;

  // base_rtt_s + payload_bytes * 8 / bandwidth_bits_per_s
  double Latency(std::uint64_t payload_bytes) const;
  bool operator==(const LinkModel&) const = default;
};

struct Ablations {
  bool disable_cd = false;
  bool disable_se = false;
  bool single_inference = false;
  bool vector_only = false;

  bool operator==(const Ablations&) const = default;
};

struct SimilarityWeights {
  double cosine = 0.4;
  double jaccard = 0.2;
  double claim = 0.4;

  bool operator==(const SimilarityWeights&) const = default;
};

struct ProviderConfig {
  std::string kind = "mock";  // "mock" or "http"
  std::string endpoint;       // base URL, e.g. http://127.0.0.1:8000/v1
  std::string model;
  std::string embedding_model;
  std::string api_key_env = "DGRAG_API_KEY";
  double timeout_s = 60.0;
  int max_in_flight = 4;
  int max_attempts = 3;
  double temperature = 0.8;

  bool operator==(const ProviderConfig&) const = default;
};

struct NetworkConfig {
  std::string cloud_addr = "127.0.0.1:7700";
  std::map<std::string, std::string> edge_addrs;

  bool operator==(const NetworkConfig&) const = default;
};

struct SystemConfig {
  int n_edges = 4;
  int top_m = 1;
  int top_k = 1;
  double sim_threshold = 0.7;
  int n_batch = 3;
  int size_threshold = 5;
  double resolution = 1.0;
  int chunk_size = 512;
  int chunk_overlap = 64;
  int embedding_dim = 64;
  int entity_top = 5;
  int relation_top = 5;
  int token_budget = 4000;
  std::uint64_t rng_seed = 42;
  double min_retrieval_score = 0.2;
  int summary_top_entities = 8;
  double retrieval_timeout_s = 30.0;
  LinkModel link;
  Ablations ablations;
  SimilarityWeights weights;
  ProviderConfig edge_provider;
  ProviderConfig cloud_provider;
  NetworkConfig network;

  bool operator==(const SystemConfig&) const = default;
};

// Every violated invariant, one human-readable line each. Empty means valid.
std::vector<std::string> ValidateConfig(const SystemConfig& cfg);

// Canonical JSON text: sorted keys, two-space indent, trailing newline.
std::string SerializeConfig(const SystemConfig& cfg);
// Missing keys keep their defaults; unknown keys and type errors throw
// Error(kConfig).
SystemConfig ParseConfig(const std::string& text);
SystemConfig LoadConfigFile(const std::string& path);

}  // namespace dgrag
