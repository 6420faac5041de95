#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "core/types.hpp"

namespace dgrag {

// One network leg of a global query.
struct TransmissionRecord {
  std::string direction;  // query_up, query_out, knowledge_back, answer_down
  std::uint64_t payload_bytes = 0;
  double simulated_seconds = 0.0;
  std::uint32_t legs = 1;  // parallel frames folded into this record

  bool operator==(const TransmissionRecord&) const = default;
};

struct RegisterSummaries {
  EdgeId edge_id;
  std::vector<SubgraphSummary> summaries;
  bool operator==(const RegisterSummaries&) const = default;
};

struct RegisterAck {
  std::uint32_t registered = 0;
  bool operator==(const RegisterAck&) const = default;
};

struct GlobalQuery {
  std::string query_id;
  EdgeId origin_edge;
  std::string text;
  bool operator==(const GlobalQuery&) const = default;
};

struct RetrievalRequest {
  std::string query_id;
  std::string text;
  bool operator==(const RetrievalRequest&) const = default;
};

struct RetrievalResponse {
  std::string query_id;
  KnowledgeBundle bundle;
  bool operator==(const RetrievalResponse&) const = default;
};

// The cloud's reply to a GlobalQuery. transmissions holds the legs known
// when the reply is encoded (query up, query out, knowledge back); the
// receiver adds the answer leg itself.
struct FinalAnswer {
  std::string query_id;
  std::string text;
  std::vector<EdgeId> contributing_edges;
  std::vector<EdgeId> failed_edges;
  std::map<std::string, double> timings;
  std::vector<TransmissionRecord> transmissions;
  bool operator==(const FinalAnswer&) const = default;
};

// Client -> edge entry point for a deployed edge node.
struct LocalQuery {
  std::string query_id;
  std::string text;
  bool operator==(const LocalQuery&) const = default;
};

struct LocalReply {
  std::string query_id;
  std::string text;
  bool global = false;
  bool low_confidence = false;
  std::optional<double> similarity_score;
  std::vector<EdgeId> contributing_edges;
  bool operator==(const LocalReply&) const = default;
};

// A handler failure carried back to the caller.
struct ErrorReply {
  std::uint32_t code = 0;
  std::string message;
  bool operator==(const ErrorReply&) const = default;
};

using Message = std::variant<RegisterSummaries, RegisterAck, GlobalQuery, RetrievalRequest, RetrievalResponse,
                             FinalAnswer, LocalQuery, LocalReply, ErrorReply>;

inline constexpr std::uint8_t kWireVersion = 1;

// Frame layout: u32 length of everything after it, u8 wire version, u8
// message type, payload.
std::string EncodeFrame(const Message& msg);
Message DecodeFrame(std::string_view frame);

// Throws Error(kSchema) naming the first violated rule.
void ValidateMessage(const Message& msg);

const char* MessageTypeName(const Message& msg);

}  // namespace dgrag
