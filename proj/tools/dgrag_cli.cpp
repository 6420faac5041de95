#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dgrag/dgrag.h"
#include "json.hpp"

namespace {

using nlohmann::json;

constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;

struct OwnedString {
  char* p = nullptr;
  ~OwnedString() { dgrag_string_free(p); }
  std::string str() const { return p ? p : ""; }
};

struct Failure {
  int exit_code;
  std::string message;
};

void Check(dgrag_status st) {
  if (st == DGRAG_OK) return;
  const std::string msg = std::string(dgrag_status_name(st)) + ": " + dgrag_last_error();
  throw Failure{st == DGRAG_ERR_CONFIG ? kExitConfig : kExitRuntime, msg};
}

// Command-line overrides, merged over the --config file.
struct ConfigFlags {
  std::string file;
  std::optional<int> n_edges, top_m, top_k, n_batch, size_threshold, chunk_size, chunk_overlap, embedding_dim,
      entity_top, relation_top, token_budget, summary_top_entities;
  std::optional<double> sim_threshold, resolution, min_retrieval_score, retrieval_timeout, bandwidth, base_rtt;
  std::optional<std::uint64_t> seed;
  bool disable_cd = false, disable_se = false, single_inference = false, vector_only = false;
  std::optional<std::string> provider, endpoint, model, embedding_model, api_key_env, cloud_addr;
  std::vector<std::string> edge_addrs;

  void Attach(CLI::App* app) {
    app->add_option("--config", file, "JSON config file");
    app->add_option("--n-edges", n_edges);
    app->add_option("--top-m", top_m, "summaries matched per global query");
    app->add_option("--top-k", top_k, "edges asked per global query");
    app->add_option("--sim-threshold", sim_threshold, "gate similarity threshold");
    app->add_option("--n-batch", n_batch, "candidate answers per local query");
    app->add_option("--size-threshold", size_threshold, "minimum community size in entities");
    app->add_option("--resolution", resolution);
    app->add_option("--chunk-size", chunk_size);
    app->add_option("--chunk-overlap", chunk_overlap);
    app->add_option("--embedding-dim", embedding_dim);
    app->add_option("--entity-top", entity_top);
    app->add_option("--relation-top", relation_top);
    app->add_option("--token-budget", token_budget);
    app->add_option("--summary-top-entities", summary_top_entities);
    app->add_option("--min-retrieval-score", min_retrieval_score);
    app->add_option("--retrieval-timeout", retrieval_timeout, "seconds");
    app->add_option("--bandwidth", bandwidth, "link bandwidth in bits per second");
    app->add_option("--base-rtt", base_rtt, "link base round trip in seconds");
    app->add_option("--seed", seed, "rng seed");
    app->add_flag("--disable-cd", disable_cd, "turn off confidence detection");
    app->add_flag("--disable-se", disable_se, "turn off similarity evaluation");
    app->add_flag("--single-inference", single_inference, "one candidate instead of a batch");
    app->add_flag("--vector-only", vector_only, "retrieval without graph expansion");
    app->add_option("--provider", provider, "mock or http, for edge and cloud");
    app->add_option("--endpoint", endpoint, "base URL of an OpenAI-compatible server");
    app->add_option("--model", model);
    app->add_option("--embedding-model", embedding_model);
    app->add_option("--api-key-env", api_key_env, "environment variable holding the API key");
    app->add_option("--cloud-addr", cloud_addr, "host:port");
    app->add_option("--edge-addr", edge_addrs, "edge=host:port, repeatable");
  }

  std::string Json() const {
    json base = json::object();
    if (!file.empty()) {
      std::ifstream in(file, std::ios::binary);
      if (!in) throw Failure{kExitConfig, "cannot read config file " + file};
      std::stringstream ss;
      ss << in.rdbuf();
      try {
        base = json::parse(ss.str());
      } catch (const json::exception& e) {
        throw Failure{kExitConfig, file + ": " + e.what()};
      }
    }
    json patch = json::object();
    auto set = [&](const char* key, const auto& opt) {
      if (opt) patch[key] = *opt;
    };
    set("n_edges", n_edges);
    set("top_m", top_m);
    set("top_k", top_k);
    set("n_batch", n_batch);
    set("size_threshold", size_threshold);
    set("chunk_size", chunk_size);
    set("chunk_overlap", chunk_overlap);
    set("embedding_dim", embedding_dim);
    set("entity_top", entity_top);
    set("relation_top", relation_top);
    set("token_budget", token_budget);
    set("summary_top_entities", summary_top_entities);
    set("sim_threshold", sim_threshold);
    set("resolution", resolution);
    set("min_retrieval_score", min_retrieval_score);
    set("retrieval_timeout_s", retrieval_timeout);
    set("rng_seed", seed);
    if (bandwidth) patch["link"]["bandwidth_bits_per_s"] = *bandwidth;
    if (base_rtt) patch["link"]["base_rtt_s"] = *base_rtt;
    if (disable_cd) patch["ablations"]["disable_cd"] = true;
    if (disable_se) patch["ablations"]["disable_se"] = true;
    if (single_inference) patch["ablations"]["single_inference"] = true;
    if (vector_only) patch["ablations"]["vector_only"] = true;
    for (const char* side : {"edge_provider", "cloud_provider"}) {
      if (provider) patch[side]["kind"] = *provider;
      if (endpoint) patch[side]["endpoint"] = *endpoint;
      if (model) patch[side]["model"] = *model;
      if (embedding_model) patch[side]["embedding_model"] = *embedding_model;
      if (api_key_env) patch[side]["api_key_env"] = *api_key_env;
    }
    if (cloud_addr) patch["network"]["cloud_addr"] = *cloud_addr;
    for (const auto& e : edge_addrs) {
      const auto eq = e.find('=');
      if (eq == std::string::npos || eq == 0) throw Failure{kExitConfig, "--edge-addr expects edge=host:port"};
      patch["network"]["edge_addrs"][e.substr(0, eq)] = e.substr(eq + 1);
    }
    base.merge_patch(patch);
    return base.dump();
  }
};

void WriteFile(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Failure{kExitRuntime, "cannot write " + path};
  out << text;
}

dgrag_carrier ParseCarrier(const std::string& s) {
  if (s == "simulated") return DGRAG_CARRIER_SIMULATED;
  if (s == "socket") return DGRAG_CARRIER_SOCKET;
  throw Failure{kExitConfig, "--carrier must be simulated or socket"};
}

struct SystemHandle {
  dgrag_system* p = nullptr;
  ~SystemHandle() { dgrag_system_close(p); }
};

void WaitForSignal() {
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  int sig = 0;
  sigwait(&set, &sig);
}

void BlockSignals() {
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distributed graph RAG over edge and cloud nodes"};
  app.require_subcommand(1);
  ConfigFlags flags;

  std::string corpus, out, build_dir, edge, text, query_id, queries, mode = "dgrag", carrier = "simulated";
  std::string report_path, table_path, answers_a, answers_b;
  std::uint64_t corpus_seed = 9;
  int max_m = 5;
  int parallelism = 1;
  bool remote = false, no_timings = false;

  auto* gen = app.add_subcommand("gen-corpus", "write the synthetic four-domain corpus and its queries");
  gen->add_option("--out", out, "output directory")->required();
  gen->add_option("--corpus-seed", corpus_seed);

  auto* build = app.add_subcommand("build", "build every edge knowledge base and the summary registry");
  build->add_option("--corpus", corpus, "one subdirectory per edge")->required();
  build->add_option("--out", out, "build directory")->required();

  auto* query = app.add_subcommand("query", "answer one query from an edge");
  query->add_option("--build-dir", build_dir);
  query->add_option("--edge", edge, "origin edge")->required();
  query->add_option("--text", text)->required();
  query->add_option("--query-id", query_id);
  query->add_option("--carrier", carrier, "simulated or socket");
  query->add_flag("--remote", remote, "send to a served edge instead of loading the build");

  auto* bench = app.add_subcommand("bench", "run a labeled query set");
  bench->add_option("--build-dir", build_dir)->required();
  bench->add_option("--queries", queries, "JSONL query file")->required();
  bench->add_option("--mode", mode, "dgrag, naive or local");
  bench->add_option("--parallelism", parallelism);
  bench->add_option("--carrier", carrier, "simulated or socket");
  bench->add_option("--report", report_path, "write the JSONL report here");
  bench->add_option("--table", table_path, "write the text table here");
  bench->add_flag("--no-timings", no_timings, "leave wall-clock and latency fields out of the report");

  auto* hit = app.add_subcommand("hit-rate", "summary matching hit rate for m = 1..max");
  hit->add_option("--build-dir", build_dir)->required();
  hit->add_option("--queries", queries)->required();
  hit->add_option("--max-m", max_m);

  auto* judge = app.add_subcommand("judge", "pairwise win rates between two bench reports");
  judge->add_option("--queries", queries)->required();
  judge->add_option("--answers-a", answers_a, "bench report of system A")->required();
  judge->add_option("--answers-b", answers_b, "bench report of system B")->required();

  auto* serve_cloud = app.add_subcommand("serve-cloud", "run the cloud node until SIGINT or SIGTERM");
  serve_cloud->add_option("--build-dir", build_dir, "preload this build's registry");

  auto* serve_edge = app.add_subcommand("serve-edge", "run one edge node until SIGINT or SIGTERM");
  serve_edge->add_option("--build-dir", build_dir)->required();
  serve_edge->add_option("--edge", edge)->required();

  auto* config = app.add_subcommand("config", "print the effective config");

  for (auto* sub : {gen, build, query, bench, hit, judge, serve_cloud, serve_edge, config}) flags.Attach(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    const std::string cfg = flags.Json();
    Check(dgrag_config_check(cfg.c_str(), nullptr));

    if (*config) {
      OwnedString s;
      Check(dgrag_config_check(cfg.c_str(), &s.p));
      std::cout << s.str();
    } else if (*gen) {
      OwnedString s;
      Check(dgrag_generate_corpus(out.c_str(), corpus_seed, &s.p));
      std::cout << s.str();
    } else if (*build) {
      OwnedString s;
      Check(dgrag_build(corpus.c_str(), out.c_str(), cfg.c_str(), &s.p));
      std::cout << s.str();
    } else if (*query) {
      OwnedString s;
      if (remote) {
        Check(dgrag_remote_query(cfg.c_str(), edge.c_str(), text.c_str(), query_id.c_str(), &s.p));
      } else {
        if (build_dir.empty()) throw Failure{kExitConfig, "--build-dir is required unless --remote is given"};
        SystemHandle sys;
        Check(dgrag_system_open(build_dir.c_str(), cfg.c_str(), ParseCarrier(carrier), &sys.p));
        Check(dgrag_query(sys.p, edge.c_str(), text.c_str(), query_id.c_str(), &s.p));
      }
      std::cout << s.str();
    } else if (*bench) {
      SystemHandle sys;
      Check(dgrag_system_open(build_dir.c_str(), cfg.c_str(), ParseCarrier(carrier), &sys.p));
      OwnedString jsonl, table;
      Check(dgrag_bench(sys.p, queries.c_str(), mode.c_str(), parallelism, no_timings ? 0 : 1, &jsonl.p, &table.p));
      if (!report_path.empty()) WriteFile(report_path, jsonl.str());
      if (!table_path.empty()) WriteFile(table_path, table.str());
      std::cout << table.str();
    } else if (*hit) {
      SystemHandle sys;
      Check(dgrag_system_open(build_dir.c_str(), cfg.c_str(), DGRAG_CARRIER_SIMULATED, &sys.p));
      OwnedString s;
      Check(dgrag_hit_rate(sys.p, queries.c_str(), max_m, &s.p));
      std::cout << s.str();
    } else if (*judge) {
      OwnedString j, table;
      Check(dgrag_judge(cfg.c_str(), queries.c_str(), answers_a.c_str(), answers_b.c_str(), &j.p, &table.p));
      std::cout << table.str();
    } else if (*serve_cloud || *serve_edge) {
      BlockSignals();
      dgrag_server* server = nullptr;
      if (*serve_cloud) {
        Check(dgrag_serve_cloud(build_dir.empty() ? nullptr : build_dir.c_str(), cfg.c_str(), &server));
      } else {
        Check(dgrag_serve_edge(build_dir.c_str(), edge.c_str(), cfg.c_str(), &server));
      }
      OwnedString addr;
      Check(dgrag_server_address(server, &addr.p));
      std::cout << "listening " << (*serve_cloud ? "cloud" : edge) << " " << addr.str() << std::endl;
      WaitForSignal();
      dgrag_server_stop(server);
    }
  } catch (const Failure& f) {
    std::cerr << "dgrag: " << f.message << "\n";
    return f.exit_code;
  }
  return 0;
}
