#ifndef DGRAG_DGRAG_H
#define DGRAG_DGRAG_H

#include <stdint.h>

#if defined(_WIN32)
#define DGRAG_API __declspec(dllexport)
#else
#define DGRAG_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status values match the library's internal error codes. */
typedef enum dgrag_status {
  DGRAG_OK = 0,
  DGRAG_ERR_CONFIG = 1,
  DGRAG_ERR_INVALID_ARGUMENT = 2,
  DGRAG_ERR_EXTRACTION = 3,
  DGRAG_ERR_INTEGRITY = 4,
  DGRAG_ERR_DANGLING_REFERENCE = 5,
  DGRAG_ERR_PROVIDER = 6,
  DGRAG_ERR_RETRYABLE = 7,
  DGRAG_ERR_UNSUPPORTED = 8,
  DGRAG_ERR_JUDGING = 9,
  DGRAG_ERR_ROUTING = 10,
  DGRAG_ERR_TRANSPORT = 11,
  DGRAG_ERR_TIMEOUT = 12,
  DGRAG_ERR_DECODE = 13,
  DGRAG_ERR_VERSION = 14,
  DGRAG_ERR_CHECKSUM = 15,
  DGRAG_ERR_IO = 16,
  DGRAG_ERR_SCHEMA = 17,
  DGRAG_ERR_INTERNAL = 100
} dgrag_status;

typedef enum dgrag_carrier {
  DGRAG_CARRIER_SIMULATED = 0,
  DGRAG_CARRIER_SOCKET = 1
} dgrag_carrier;

typedef struct dgrag_system dgrag_system;
typedef struct dgrag_server dgrag_server;

/* Message of the last failed call on this thread; "" after a success. */
DGRAG_API const char* dgrag_last_error(void);
DGRAG_API const char* dgrag_status_name(dgrag_status status);
DGRAG_API const char* dgrag_version(void);

/* Strings returned through char** out-parameters are owned by the caller. */
DGRAG_API void dgrag_string_free(char* s);

/* config_json arguments may be NULL for defaults. Keys missing from the
   text keep their defaults; unknown keys are rejected. */
DGRAG_API dgrag_status dgrag_config_default(char** out_json);
DGRAG_API dgrag_status dgrag_config_check(const char* config_json, char** out_canonical_json);

/* Writes a labeled four-domain corpus. out_markers_json gets
   {"<domain>": {"entity": ..., "code": ...}}; may be NULL. */
DGRAG_API dgrag_status dgrag_generate_corpus(const char* out_dir, uint64_t seed, char** out_markers_json);

DGRAG_API dgrag_status dgrag_build(const char* corpus_root, const char* out_dir, const char* config_json,
                                   char** out_report_json);

DGRAG_API dgrag_status dgrag_system_open(const char* build_dir, const char* config_json, dgrag_carrier carrier,
                                         dgrag_system** out);
DGRAG_API void dgrag_system_close(dgrag_system* sys);

/* query_id may be NULL or "" for a derived id. */
DGRAG_API dgrag_status dgrag_query(dgrag_system* sys, const char* origin_edge, const char* text,
                                   const char* query_id, char** out_json);

/* {"1": rate, ..., "<max_m>": rate} over a labeled query file. */
DGRAG_API dgrag_status dgrag_hit_rate(dgrag_system* sys, const char* queries_path, int max_m, char** out_json);

/* mode is "dgrag", "naive" or "local". out_jsonl gets one summary line then
   one line per query; out_table a human-readable report. Either may be
   NULL. */
DGRAG_API dgrag_status dgrag_bench(dgrag_system* sys, const char* queries_path, const char* mode, int parallelism,
                                   int include_timings, char** out_jsonl, char** out_table);

/* Answers are read from two bench report files. Fails with
   DGRAG_ERR_UNSUPPORTED under the mock provider. */
DGRAG_API dgrag_status dgrag_judge(const char* config_json, const char* queries_path, const char* answers_a_path,
                                   const char* answers_b_path, char** out_json, char** out_table);

/* Multi-process nodes listening on the addresses of the config's network
   section. build_dir may be NULL for a cloud starting with no summaries. */
DGRAG_API dgrag_status dgrag_serve_cloud(const char* build_dir, const char* config_json, dgrag_server** out);
DGRAG_API dgrag_status dgrag_serve_edge(const char* build_dir, const char* edge_id, const char* config_json,
                                        dgrag_server** out);
DGRAG_API dgrag_status dgrag_server_address(const dgrag_server* server, char** out_address);
DGRAG_API void dgrag_server_stop(dgrag_server* server);

/* Sends a query to a served edge. */
DGRAG_API dgrag_status dgrag_remote_query(const char* config_json, const char* edge_id, const char* text,
                                          const char* query_id, char** out_json);

#ifdef __cplusplus
}
#endif

#endif
