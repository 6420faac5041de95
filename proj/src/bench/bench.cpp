#include "bench/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include "core/error.hpp"
#include "json.hpp"

namespace dgrag {

namespace {

using Clock = std::chrono::steady_clock;

double Since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

void CheckLabeled(const std::vector<BenchQuery>& queries) {
  if (queries.empty()) throw Error(ErrorCode::kInvalidArgument, "empty query set");
  for (const auto& q : queries) {
    if (q.domain_label.empty()) throw Error(ErrorCode::kInvalidArgument, "query " + q.id + " has no domain label");
  }
}

}  // namespace

double HitRate(const std::vector<BenchQuery>& queries, int m, const SummaryRegistry& registry,
               const Provider& provider) {
  return HitRateByM(queries, m, registry, provider).at(m);
}

std::map<int, double> HitRateByM(const std::vector<BenchQuery>& queries, int max_m,
                                 const SummaryRegistry& registry, const Provider& provider) {
  if (max_m < 1) throw Error(ErrorCode::kInvalidArgument, "m must be at least 1");
  CheckLabeled(queries);
  std::vector<int> hits(static_cast<std::size_t>(max_m) + 1, 0);
  for (const auto& q : queries) {
    const auto matches = MatchSummaries(q.text, static_cast<std::size_t>(max_m), registry, provider);
    // first rank at which the query's own domain shows up
    int first = max_m + 1;
    for (std::size_t i = 0; i < matches.size(); ++i) {
      if (matches[i].summary.edge_id == q.domain_label) {
        first = static_cast<int>(i) + 1;
        break;
      }
    }
    for (int m = first; m <= max_m; ++m) ++hits[static_cast<std::size_t>(m)];
  }
  std::map<int, double> out;
  for (int m = 1; m <= max_m; ++m) {
    out[m] = static_cast<double>(hits[static_cast<std::size_t>(m)]) / static_cast<double>(queries.size());
  }
  return out;
}

const char* BenchModeName(BenchMode m) {
  switch (m) {
    case BenchMode::kDgrag: return "dgrag";
    case BenchMode::kNaive: return "naive";
    case BenchMode::kLocal: return "local";
  }
  return "?";
}

BenchMode ParseBenchMode(const std::string& s) {
  if (s == "dgrag") return BenchMode::kDgrag;
  if (s == "naive") return BenchMode::kNaive;
  if (s == "local") return BenchMode::kLocal;
  throw Error(ErrorCode::kConfig, "unknown bench mode '" + s + "' (expected dgrag, naive or local)");
}

namespace {

void RunOne(System& sys, BenchMode mode, QueryRecord& rec) {
  const SystemConfig& cfg = sys.config();
  const BenchQuery& q = rec.query;
  EdgeService& edge = sys.edge(q.origin_edge);
  const Provider& provider = sys.edge_provider();

  if (mode == BenchMode::kDgrag) {
    const QueryOutcome o = sys.Query(q.origin_edge, q.text, q.id);
    rec.answer = o.answer;
    rec.low_confidence = o.local.decision.low_confidence;
    rec.similarity_score = o.local.decision.similarity_score;
    rec.timings = o.local.phase_timings;
    if (o.global) {
      rec.route = "global";
      rec.contributing_edges = o.global->contributing_edges;
      for (const auto& [k, v] : o.global->phase_timings) rec.timings[k] = v;
      rec.transmissions = o.global->transmission_log;
      for (const auto& t : rec.transmissions) rec.timings[t.direction] = t.simulated_seconds;
    } else {
      rec.route = "local";
    }
    return;
  }

  const auto t0 = Clock::now();
  KnowledgeBundle bundle;
  if (mode == BenchMode::kNaive) {
    bundle.edge_id = edge.id();
    const Embedding qv = provider.Embed(q.text);
    for (const auto& hit : edge.kb().chunk_index.TopK(qv, static_cast<std::size_t>(cfg.entity_top),
                                                      cfg.min_retrieval_score)) {
      bundle.chunks.push_back(edge.kb().chunks.at(hit.id));
    }
    bundle = TruncateBundle(std::move(bundle), cfg.token_budget);
  } else {
    bundle = DualLevelRetrieve(q.text, edge.kb(), provider, cfg);
  }
  const auto answers = provider.GenerateBatch(FormatContext(bundle), q.text, 1);
  if (answers.size() != 1) throw Error(ErrorCode::kProvider, "expected one generated answer");
  rec.answer = answers.front();
  rec.route = "local";
  rec.timings["local_query"] = Since(t0);
}

}  // namespace

MetricsReport RunBench(System& system, const std::vector<BenchQuery>& queries, const BenchOptions& opts) {
  if (opts.parallelism < 1) throw Error(ErrorCode::kConfig, "parallelism must be at least 1");
  MetricsReport r;
  r.mode = BenchModeName(opts.mode);
  if (opts.mode == BenchMode::kDgrag) {
    r.hit_rate_by_m = HitRateByM(queries, opts.max_m, system.cloud().registry(), system.cloud_provider());
  }

  r.records.resize(queries.size());
  for (std::size_t i = 0; i < queries.size(); ++i) {
    r.records[i].query = queries[i];
    r.records[i].within_domain = queries[i].domain_label == queries[i].origin_edge;
  }
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < r.records.size(); i = next++) {
      QueryRecord& rec = r.records[i];
      try {
        RunOne(system, opts.mode, rec);
      } catch (const Error& e) {
        rec.route = "failed";
        rec.error = std::string(ErrorCodeName(e.code())) + ": " + e.what();
      } catch (const std::exception& e) {
        rec.route = "failed";
        rec.error = std::string("internal: ") + e.what();
      }
    }
  };
  if (opts.parallelism == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < opts.parallelism; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  std::map<std::string, std::pair<double, int>> sums;
  for (const auto& rec : r.records) {
    if (rec.route == "failed") {
      ++r.failed_count;
      continue;
    }
    const bool global = rec.route == "global";
    (global ? r.global_count : r.local_count)++;
    if (rec.within_domain) {
      ++r.within_total;
      r.within_global += global;
    } else {
      ++r.out_total;
      r.out_global += global;
    }
    for (const auto& [k, v] : rec.timings) {
      sums[k].first += v;
      sums[k].second += 1;
    }
  }
  auto rate = [](int num, int den) { return den == 0 ? 0.0 : static_cast<double>(num) / den; };
  r.cross_edge_rate_within = rate(r.within_global, r.within_total);
  r.cross_edge_rate_out = rate(r.out_global, r.out_total);
  for (const auto& [k, s] : sums) r.mean_timings[k] = s.first / s.second;
  return r;
}

std::string ReportJsonl(const MetricsReport& r, bool include_timings) {
  using nlohmann::json;
  std::ostringstream out;
  json head{{"record", "summary"},
            {"mode", r.mode},
            {"queries", r.records.size()},
            {"local", r.local_count},
            {"global", r.global_count},
            {"failed", r.failed_count},
            {"within_total", r.within_total},
            {"within_global", r.within_global},
            {"out_total", r.out_total},
            {"out_global", r.out_global},
            {"cross_edge_rate_within", r.cross_edge_rate_within},
            {"cross_edge_rate_out", r.cross_edge_rate_out}};
  json hr = json::object();
  for (const auto& [m, v] : r.hit_rate_by_m) hr[std::to_string(m)] = v;
  head["hit_rate_by_m"] = hr;
  if (include_timings) head["mean_timings"] = r.mean_timings;
  if (r.win_rates) {
    json wr = json::object();
    for (const auto& row : r.win_rates->rows) wr[row.metric] = {{"a", row.a}, {"b", row.b}};
    head["win_rates"] = wr;
  }
  out << head.dump() << "\n";
  for (const auto& rec : r.records) {
    json j{{"record", "query"},
           {"id", rec.query.id},
           {"origin_edge", rec.query.origin_edge},
           {"domain", rec.query.domain_label},
           {"within_domain", rec.within_domain},
           {"route", rec.route},
           {"answer", rec.answer},
           {"low_confidence", rec.low_confidence},
           {"contributing_edges", rec.contributing_edges}};
    j["similarity_score"] = rec.similarity_score ? json(*rec.similarity_score) : json(nullptr);
    if (!rec.error.empty()) j["error"] = rec.error;
    json tx = json::array();
    for (const auto& t : rec.transmissions) {
      json e{{"direction", t.direction}, {"payload_bytes", t.payload_bytes}, {"legs", t.legs}};
      if (include_timings) e["simulated_seconds"] = t.simulated_seconds;
      tx.push_back(std::move(e));
    }
    j["transmissions"] = std::move(tx);
    if (include_timings) j["timings"] = rec.timings;
    out << j.dump() << "\n";
  }
  return out.str();
}

std::string ReportTable(const MetricsReport& r) {
  std::ostringstream out;
  char line[160];
  out << "mode: " << r.mode << "\n";
  std::snprintf(line, sizeof line, "queries: %zu  local: %d  global: %d  failed: %d\n", r.records.size(),
                r.local_count, r.global_count, r.failed_count);
  out << line;
  std::snprintf(line, sizeof line, "cross-edge rate  within: %.3f (%d/%d)  out: %.3f (%d/%d)\n",
                r.cross_edge_rate_within, r.within_global, r.within_total, r.cross_edge_rate_out, r.out_global,
                r.out_total);
  out << line;
  if (!r.hit_rate_by_m.empty()) {
    out << "hit rate by m:";
    for (const auto& [m, v] : r.hit_rate_by_m) {
      std::snprintf(line, sizeof line, "  m=%d %.3f", m, v);
      out << line;
    }
    out << "\n";
  }
  if (!r.mean_timings.empty()) {
    out << "mean phase time (s):\n";
    for (const auto& [k, v] : r.mean_timings) {
      std::snprintf(line, sizeof line, "  %-20s %.6f\n", k.c_str(), v);
      out << line;
    }
  }
  if (r.win_rates) out << WinRateTableText(*r.win_rates);
  return out.str();
}

WinRateTable JudgeRun(const std::vector<BenchQuery>& queries, const std::map<std::string, std::string>& answers_a,
                      const std::map<std::string, std::string>& answers_b, const Provider& provider) {
  WinRateTable t;
  std::map<std::string, int> wins_a;
  for (const auto& q : queries) {
    auto a = answers_a.find(q.id);
    auto b = answers_b.find(q.id);
    if (a == answers_a.end() || b == answers_b.end()) continue;
    try {
      const PairwiseVerdict v = provider.JudgePairwise(q.text, a->second, b->second);
      for (const char* metric : kJudgeMetrics) {
        auto it = v.find(metric);
        if (it == v.end()) throw Error(ErrorCode::kJudging, std::string("verdict lacks ") + metric);
        if (it->second.winner != "A" && it->second.winner != "B") {
          throw Error(ErrorCode::kJudging, std::string("bad winner for ") + metric + ": " + it->second.winner);
        }
      }
      for (const char* metric : kJudgeMetrics) wins_a[metric] += v.at(metric).winner == "A";
      ++t.judged;
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kUnsupported) throw;
      t.failures.emplace_back(q.id, std::string(ErrorCodeName(e.code())) + ": " + e.what());
    }
  }
  for (const char* metric : kJudgeMetrics) {
    WinRateRow row;
    row.metric = metric;
    if (t.judged > 0) {
      row.a = static_cast<double>(wins_a[metric]) / t.judged;
      row.b = 1.0 - row.a;
    }
    t.rows.push_back(row);
  }
  return t;
}

std::string WinRateTableText(const WinRateTable& t) {
  std::ostringstream out;
  char line[128];
  std::snprintf(line, sizeof line, "%-18s %8s %8s\n", "metric", "A", "B");
  out << line;
  for (const auto& row : t.rows) {
    std::snprintf(line, sizeof line, "%-18s %7.1f%% %7.1f%%\n", row.metric.c_str(), row.a * 100, row.b * 100);
    out << line;
  }
  out << "judged: " << t.judged << "  failed: " << t.failures.size() << "\n";
  for (const auto& [id, err] : t.failures) out << "  " << id << ": " << err << "\n";
  return out.str();
}

std::map<std::string, std::string> LoadAnswers(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::map<std::string, std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      if (j.value("record", "") != "query" || j.value("route", "") == "failed") continue;
      out[j.at("id").get<std::string>()] = j.at("answer").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kConfig, path.string() + ": " + e.what());
    }
  }
  return out;
}

}  // namespace dgrag
