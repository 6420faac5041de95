#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bench/corpus.hpp"
#include "system/system.hpp"

namespace dgrag {

// Fraction of queries whose top-m summaries include one owned by the edge
// named like the query's domain. Throws Error(kInvalidArgument) on an
// unlabeled query or an empty query set.
double HitRate(const std::vector<BenchQuery>& queries, int m, const SummaryRegistry& registry,
               const Provider& provider);
std::map<int, double> HitRateByM(const std::vector<BenchQuery>& queries, int max_m,
                                 const SummaryRegistry& registry, const Provider& provider);

enum class BenchMode { kDgrag, kNaive, kLocal };
const char* BenchModeName(BenchMode m);
BenchMode ParseBenchMode(const std::string& s);  // Error(kConfig) on unknown names

struct QueryRecord {
  BenchQuery query;
  bool within_domain = false;
  std::string route;  // "local", "global" or "failed"
  std::string error;
  std::string answer;
  bool low_confidence = false;
  std::optional<double> similarity_score;
  std::vector<EdgeId> contributing_edges;
  std::map<std::string, double> timings;
  std::vector<TransmissionRecord> transmissions;
};

struct WinRateRow {
  std::string metric;
  double a = 0.0;  // fraction of judged queries won by A
  double b = 0.0;
};

struct WinRateTable {
  std::vector<WinRateRow> rows;  // one per judge metric, in the fixed order
  int judged = 0;
  std::vector<std::pair<std::string, std::string>> failures;  // query id, error
};

struct MetricsReport {
  std::string mode;
  std::map<int, double> hit_rate_by_m;
  int local_count = 0;
  int global_count = 0;
  int failed_count = 0;
  int within_total = 0;
  int within_global = 0;
  int out_total = 0;
  int out_global = 0;
  double cross_edge_rate_within = 0.0;  // over non-failed queries
  double cross_edge_rate_out = 0.0;
  std::map<std::string, double> mean_timings;  // over the queries that recorded the phase
  std::vector<QueryRecord> records;
  std::optional<WinRateTable> win_rates;
};

struct BenchOptions {
  BenchMode mode = BenchMode::kDgrag;
  int max_m = 5;
  int parallelism = 1;
};

// Runs every query from its origin edge. Per-query failures are recorded and
// the run continues.
MetricsReport RunBench(System& system, const std::vector<BenchQuery>& queries, const BenchOptions& opts = {});

// One JSON line for the summary followed by one per query. Timings and
// transmission latencies are left out when include_timings is false, which
// makes two runs with the same seed compare equal byte for byte.
std::string ReportJsonl(const MetricsReport& r, bool include_timings = true);
std::string ReportTable(const MetricsReport& r);

// answers map query id to answer text. Queries missing from either side are
// skipped. Throws Error(kUnsupported) when the provider cannot judge.
WinRateTable JudgeRun(const std::vector<BenchQuery>& queries, const std::map<std::string, std::string>& answers_a,
                      const std::map<std::string, std::string>& answers_b, const Provider& provider);
std::string WinRateTableText(const WinRateTable& t);

// Reads the per-query records of a ReportJsonl file into id -> answer.
std::map<std::string, std::string> LoadAnswers(const std::filesystem::path& path);

}  // namespace dgrag
