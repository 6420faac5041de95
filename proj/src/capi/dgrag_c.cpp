#include "dgrag/dgrag.h"

#include <cstdlib>
#include <cstring>
#include <new>
#include <string>

#include "bench/bench.hpp"
#include "core/error.hpp"
#include "json.hpp"
#include "system/system.hpp"

struct dgrag_system {
  std::unique_ptr<dgrag::System> impl;
};

struct dgrag_server {
  std::unique_ptr<dgrag::NodeServer> impl;
};

namespace {

using dgrag::Error;
using dgrag::ErrorCode;
using nlohmann::json;

static_assert(static_cast<int>(ErrorCode::kConfig) == DGRAG_ERR_CONFIG);
static_assert(static_cast<int>(ErrorCode::kRouting) == DGRAG_ERR_ROUTING);
static_assert(static_cast<int>(ErrorCode::kSchema) == DGRAG_ERR_SCHEMA);

thread_local std::string g_last_error;

char* Dup(const std::string& s) {
  char* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (!p) throw std::bad_alloc();
  std::memcpy(p, s.c_str(), s.size() + 1);
  return p;
}

void Put(char** out, const std::string& s) {
  if (out) *out = Dup(s);
}

template <typename F>
dgrag_status Guard(F&& f) {
  try {
    f();
    g_last_error.clear();
    return DGRAG_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return static_cast<dgrag_status>(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
  } catch (const std::exception& e) {
    g_last_error = e.what();
  } catch (...) {
    g_last_error = "unknown failure";
  }
  return DGRAG_ERR_INTERNAL;
}

void Need(const void* p, const char* what) {
  if (!p) throw Error(ErrorCode::kInvalidArgument, std::string(what) + " is NULL");
}

dgrag::SystemConfig Config(const char* text) {
  if (!text || !*text) return {};
  return dgrag::ParseConfig(text);
}

json Transmissions(const std::vector<dgrag::TransmissionRecord>& log) {
  json a = json::array();
  for (const auto& t : log) {
    a.push_back({{"direction", t.direction},
                 {"payload_bytes", t.payload_bytes},
                 {"simulated_seconds", t.simulated_seconds},
                 {"legs", t.legs}});
  }
  return a;
}

std::string OutcomeJson(const dgrag::QueryOutcome& o) {
  json j{{"query_id", o.query_id},
         {"origin_edge", o.origin_edge},
         {"route", o.global ? "global" : "local"},
         {"answer", o.answer},
         {"low_confidence", o.local.decision.low_confidence}};
  j["similarity_score"] = o.local.decision.similarity_score ? json(*o.local.decision.similarity_score) : json();
  json timings = o.local.phase_timings;
  if (o.global) {
    for (const auto& [k, v] : o.global->phase_timings) timings[k] = v;
    j["contributing_edges"] = o.global->contributing_edges;
    j["failed_edges"] = o.global->failed_edges;
    j["transmissions"] = Transmissions(o.global->transmission_log);
    j["simulated_network_seconds"] = o.global->SimulatedNetworkSeconds();
  } else {
    j["contributing_edges"] = json::array();
    j["failed_edges"] = json::array();
    j["transmissions"] = json::array();
  }
  j["timings"] = timings;
  return j.dump(2) + "\n";
}

}  // namespace

extern "C" {

const char* dgrag_last_error(void) { return g_last_error.c_str(); }

const char* dgrag_status_name(dgrag_status status) {
  if (status == DGRAG_OK) return "ok";
  if (status == DGRAG_ERR_INTERNAL) return "internal";
  if (status < DGRAG_ERR_CONFIG || status > DGRAG_ERR_SCHEMA) return "unknown";
  return dgrag::ErrorCodeName(static_cast<ErrorCode>(status));
}

const char* dgrag_version(void) { return "0.1.0"; }

void dgrag_string_free(char* s) { std::free(s); }

dgrag_status dgrag_config_default(char** out_json) {
  return Guard([&] {
    Need(out_json, "out_json");
    Put(out_json, dgrag::SerializeConfig({}));
  });
}

dgrag_status dgrag_config_check(const char* config_json, char** out_canonical_json) {
  return Guard([&] {
    const dgrag::SystemConfig cfg = Config(config_json);
    if (auto v = dgrag::ValidateConfig(cfg); !v.empty()) {
      std::string msg = "invalid config:";
      for (const auto& line : v) msg += "\n  " + line;
      throw Error(ErrorCode::kConfig, msg);
    }
    Put(out_canonical_json, dgrag::SerializeConfig(cfg));
  });
}

dgrag_status dgrag_generate_corpus(const char* out_dir, uint64_t seed, char** out_markers_json) {
  return Guard([&] {
    Need(out_dir, "out_dir");
    dgrag::CorpusOptions opts;
    opts.seed = seed;
    const auto corpus = dgrag::GenerateCorpus(out_dir, opts);
    json m = json::object();
    for (const auto& [dom, mk] : corpus.markers) m[dom] = {{"entity", mk.entity}, {"code", mk.code}};
    m["queries"] = corpus.queries.size();
    Put(out_markers_json, m.dump(2) + "\n");
  });
}

dgrag_status dgrag_build(const char* corpus_root, const char* out_dir, const char* config_json,
                         char** out_report_json) {
  return Guard([&] {
    Need(corpus_root, "corpus_root");
    Need(out_dir, "out_dir");
    const auto report = dgrag::BuildAll(corpus_root, out_dir, Config(config_json));
    Put(out_report_json, dgrag::BuildReportJson(report));
  });
}

dgrag_status dgrag_system_open(const char* build_dir, const char* config_json, dgrag_carrier carrier,
                               dgrag_system** out) {
  return Guard([&] {
    Need(build_dir, "build_dir");
    Need(out, "out");
    *out = nullptr;
    if (carrier != DGRAG_CARRIER_SIMULATED && carrier != DGRAG_CARRIER_SOCKET) {
      throw Error(ErrorCode::kInvalidArgument, "unknown carrier");
    }
    auto sys = std::make_unique<dgrag_system>();
    sys->impl = dgrag::System::Open(build_dir, Config(config_json),
                                    carrier == DGRAG_CARRIER_SOCKET ? dgrag::CarrierKind::kSocket
                                                                    : dgrag::CarrierKind::kSimulated);
    *out = sys.release();
  });
}

void dgrag_system_close(dgrag_system* sys) { delete sys; }

dgrag_status dgrag_query(dgrag_system* sys, const char* origin_edge, const char* text, const char* query_id,
                         char** out_json) {
  return Guard([&] {
    Need(sys, "system");
    Need(origin_edge, "origin_edge");
    Need(text, "text");
    const auto outcome = sys->impl->Query(origin_edge, text, query_id ? query_id : "");
    Put(out_json, OutcomeJson(outcome));
  });
}

dgrag_status dgrag_hit_rate(dgrag_system* sys, const char* queries_path, int max_m, char** out_json) {
  return Guard([&] {
    Need(sys, "system");
    Need(queries_path, "queries_path");
    const auto rates = dgrag::HitRateByM(dgrag::LoadQueries(queries_path), max_m, sys->impl->cloud().registry(),
                                         sys->impl->cloud_provider());
    json j = json::object();
    for (const auto& [m, v] : rates) j[std::to_string(m)] = v;
    Put(out_json, j.dump(2) + "\n");
  });
}

dgrag_status dgrag_bench(dgrag_system* sys, const char* queries_path, const char* mode, int parallelism,
                         int include_timings, char** out_jsonl, char** out_table) {
  return Guard([&] {
    Need(sys, "system");
    Need(queries_path, "queries_path");
    dgrag::BenchOptions opts;
    opts.mode = dgrag::ParseBenchMode(mode ? mode : "dgrag");
    opts.parallelism = parallelism;
    const auto report = dgrag::RunBench(*sys->impl, dgrag::LoadQueries(queries_path), opts);
    Put(out_jsonl, dgrag::ReportJsonl(report, include_timings != 0));
    Put(out_table, dgrag::ReportTable(report));
  });
}

dgrag_status dgrag_judge(const char* config_json, const char* queries_path, const char* answers_a_path,
                         const char* answers_b_path, char** out_json, char** out_table) {
  return Guard([&] {
    Need(queries_path, "queries_path");
    Need(answers_a_path, "answers_a_path");
    Need(answers_b_path, "answers_b_path");
    const dgrag::SystemConfig cfg = Config(config_json);
    const auto provider = dgrag::MakeProvider(cfg.cloud_provider, cfg);
    const auto table = dgrag::JudgeRun(dgrag::LoadQueries(queries_path), dgrag::LoadAnswers(answers_a_path),
                                       dgrag::LoadAnswers(answers_b_path), *provider);
    json j{{"judged", table.judged}};
    json rows = json::object();
    for (const auto& row : table.rows) rows[row.metric] = {{"a", row.a}, {"b", row.b}};
    j["win_rates"] = rows;
    json failures = json::array();
    for (const auto& [id, err] : table.failures) failures.push_back({{"id", id}, {"error", err}});
    j["failures"] = failures;
    Put(out_json, j.dump(2) + "\n");
    Put(out_table, dgrag::WinRateTableText(table));
  });
}

dgrag_status dgrag_serve_cloud(const char* build_dir, const char* config_json, dgrag_server** out) {
  return Guard([&] {
    Need(out, "out");
    *out = nullptr;
    auto s = std::make_unique<dgrag_server>();
    s->impl = dgrag::NodeServer::Cloud(build_dir ? build_dir : "", Config(config_json));
    *out = s.release();
  });
}

dgrag_status dgrag_serve_edge(const char* build_dir, const char* edge_id, const char* config_json,
                              dgrag_server** out) {
  return Guard([&] {
    Need(build_dir, "build_dir");
    Need(edge_id, "edge_id");
    Need(out, "out");
    *out = nullptr;
    auto s = std::make_unique<dgrag_server>();
    s->impl = dgrag::NodeServer::Edge(build_dir, edge_id, Config(config_json));
    *out = s.release();
  });
}

dgrag_status dgrag_server_address(const dgrag_server* server, char** out_address) {
  return Guard([&] {
    Need(server, "server");
    Need(out_address, "out_address");
    Put(out_address, server->impl->address());
  });
}

void dgrag_server_stop(dgrag_server* server) { delete server; }

dgrag_status dgrag_remote_query(const char* config_json, const char* edge_id, const char* text,
                                const char* query_id, char** out_json) {
  return Guard([&] {
    Need(edge_id, "edge_id");
    Need(text, "text");
    const dgrag::LocalReply r = dgrag::RemoteQuery(Config(config_json), edge_id, text, query_id ? query_id : "");
    json j{{"query_id", r.query_id},
           {"origin_edge", edge_id},
           {"route", r.global ? "global" : "local"},
           {"answer", r.text},
           {"low_confidence", r.low_confidence},
           {"contributing_edges", r.contributing_edges}};
    j["similarity_score"] = r.similarity_score ? json(*r.similarity_score) : json();
    Put(out_json, j.dump(2) + "\n");
  });
}

}  // extern "C"
