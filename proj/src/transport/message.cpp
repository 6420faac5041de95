#include "transport/message.hpp"

#include "core/binary.hpp"
#include "core/error.hpp"

namespace dgrag {

namespace {

constexpr std::uint32_t kMaxFrameBytes = 256U << 20;

template <class T>
struct TypeTag;
template <> struct TypeTag<RegisterSummaries> { static constexpr std::uint8_t value = 1; };
template <> struct TypeTag<RegisterAck> { static constexpr std::uint8_t value = 2; };
template <> struct TypeTag<GlobalQuery> { static constexpr std::uint8_t value = 3; };
template <> struct TypeTag<RetrievalRequest> { static constexpr std::uint8_t value = 4; };
template <> struct TypeTag<RetrievalResponse> { static constexpr std::uint8_t value = 5; };
template <> struct TypeTag<FinalAnswer> { static constexpr std::uint8_t value = 6; };
template <> struct TypeTag<LocalQuery> { static constexpr std::uint8_t value = 7; };
template <> struct TypeTag<LocalReply> { static constexpr std::uint8_t value = 8; };
template <> struct TypeTag<ErrorReply> { static constexpr std::uint8_t value = 9; };

void WriteTimings(ByteWriter& w, const std::map<std::string, double>& m) {
  w.U32(static_cast<std::uint32_t>(m.size()));
  for (const auto& [k, v] : m) {
    w.Str(k);
    w.F64(v);
  }
}

std::map<std::string, double> ReadTimings(ByteReader& r) {
  std::map<std::string, double> m;
  const std::uint32_t n = r.Count();
  for (std::uint32_t i = 0; i < n; ++i) {
    std::string k = r.Str();
    m[std::move(k)] = r.F64();
  }
  return m;
}

void Write(ByteWriter& w, const RegisterSummaries& m) {
  w.Str(m.edge_id);
  w.U32(static_cast<std::uint32_t>(m.summaries.size()));
  for (const auto& s : m.summaries) WriteSummary(w, s);
}
void Write(ByteWriter& w, const RegisterAck& m) { w.U32(m.registered); }
void Write(ByteWriter& w, const GlobalQuery& m) {
  w.Str(m.query_id);
  w.Str(m.origin_edge);
  w.Str(m.text);
}
void Write(ByteWriter& w, const RetrievalRequest& m) {
  w.Str(m.query_id);
  w.Str(m.text);
}
void Write(ByteWriter& w, const RetrievalResponse& m) {
  w.Str(m.query_id);
  WriteBundle(w, m.bundle);
}
void Write(ByteWriter& w, const FinalAnswer& m) {
  w.Str(m.query_id);
  w.Str(m.text);
  w.StrList(m.contributing_edges);
  w.StrList(m.failed_edges);
  WriteTimings(w, m.timings);
  w.U32(static_cast<std::uint32_t>(m.transmissions.size()));
  for (const auto& t : m.transmissions) {
    w.Str(t.direction);
    w.U64(t.payload_bytes);
    w.F64(t.simulated_seconds);
    w.U32(t.legs);
  }
}
void Write(ByteWriter& w, const LocalQuery& m) {
  w.Str(m.query_id);
  w.Str(m.text);
}
void Write(ByteWriter& w, const LocalReply& m) {
  w.Str(m.query_id);
  w.Str(m.text);
  w.Bool(m.global);
  w.Bool(m.low_confidence);
  w.Bool(m.similarity_score.has_value());
  if (m.similarity_score) w.F64(*m.similarity_score);
  w.StrList(m.contributing_edges);
}
void Write(ByteWriter& w, const ErrorReply& m) {
  w.U32(m.code);
  w.Str(m.message);
}

Message ReadPayload(std::uint8_t type, ByteReader& r) {
  switch (type) {
    case TypeTag<RegisterSummaries>::value: {
      RegisterSummaries m;
      m.edge_id = r.Str();
      const std::uint32_t n = r.Count();
      for (std::uint32_t i = 0; i < n; ++i) m.summaries.push_back(ReadSummary(r));
      return m;
    }
    case TypeTag<RegisterAck>::value:
      return RegisterAck{r.U32()};
    case TypeTag<GlobalQuery>::value: {
      GlobalQuery m;
      m.query_id = r.Str();
      m.origin_edge = r.Str();
      m.text = r.Str();
      return m;
    }
    case TypeTag<RetrievalRequest>::value: {
      RetrievalRequest m;
      m.query_id = r.Str();
      m.text = r.Str();
      return m;
    }
    case TypeTag<RetrievalResponse>::value: {
      RetrievalResponse m;
      m.query_id = r.Str();
      m.bundle = ReadBundle(r);
      return m;
    }
    case TypeTag<FinalAnswer>::value: {
      FinalAnswer m;
      m.query_id = r.Str();
      m.text = r.Str();
      m.contributing_edges = r.StrList();
      m.failed_edges = r.StrList();
      m.timings = ReadTimings(r);
      const std::uint32_t n = r.Count();
      for (std::uint32_t i = 0; i < n; ++i) {
        TransmissionRecord t;
        t.direction = r.Str();
        t.payload_bytes = r.U64();
        t.simulated_seconds = r.F64();
        t.legs = r.U32();
        m.transmissions.push_back(std::move(t));
      }
      return m;
    }
    case TypeTag<LocalQuery>::value: {
      LocalQuery m;
      m.query_id = r.Str();
      m.text = r.Str();
      return m;
    }
    case TypeTag<LocalReply>::value: {
      LocalReply m;
      m.query_id = r.Str();
      m.text = r.Str();
      m.global = r.Bool();
      m.low_confidence = r.Bool();
      if (r.Bool()) m.similarity_score = r.F64();
      m.contributing_edges = r.StrList();
      return m;
    }
    case TypeTag<ErrorReply>::value: {
      ErrorReply m;
      m.code = r.U32();
      m.message = r.Str();
      return m;
    }
    default:
      throw Error(ErrorCode::kDecode, "unknown message type " + std::to_string(type));
  }
}

void Require(bool ok, const char* type, const char* rule) {
  if (!ok) throw Error(ErrorCode::kSchema, std::string("schema violation in ") + type + ": " + rule);
}

}  // namespace

const char* MessageTypeName(const Message& msg) {
  static const char* kNames[] = {"RegisterSummaries", "RegisterAck",  "GlobalQuery",
                                 "RetrievalRequest",  "RetrievalResponse", "FinalAnswer",
                                 "LocalQuery",        "LocalReply",   "ErrorReply"};
  return kNames[msg.index()];
}

void ValidateMessage(const Message& msg) {
  const char* type = MessageTypeName(msg);
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, RegisterSummaries>) {
          Require(!m.edge_id.empty(), type, "edge_id is empty");
          for (const auto& s : m.summaries) {
            Require(s.edge_id == m.edge_id, type, "summary owned by another edge");
            Require(!s.text.empty(), type, "summary text is empty");
          }
        } else if constexpr (std::is_same_v<T, GlobalQuery>) {
          Require(!m.query_id.empty(), type, "query_id is empty");
          Require(!m.origin_edge.empty(), type, "origin_edge is empty");
          Require(!m.text.empty(), type, "text is empty");
        } else if constexpr (std::is_same_v<T, RetrievalRequest> || std::is_same_v<T, LocalQuery>) {
          Require(!m.query_id.empty(), type, "query_id is empty");
          Require(!m.text.empty(), type, "text is empty");
        } else if constexpr (std::is_same_v<T, RetrievalResponse>) {
          Require(!m.query_id.empty(), type, "query_id is empty");
          Require(!m.bundle.edge_id.empty(), type, "bundle has no edge_id");
        } else if constexpr (std::is_same_v<T, FinalAnswer> || std::is_same_v<T, LocalReply>) {
          Require(!m.query_id.empty(), type, "query_id is empty");
        }
      },
      msg);
}

std::string EncodeFrame(const Message& msg) {
  ValidateMessage(msg);
  ByteWriter w;
  w.U32(0);  // patched below
  w.U8(kWireVersion);
  std::visit(
      [&](const auto& m) {
        w.U8(TypeTag<std::decay_t<decltype(m)>>::value);
        Write(w, m);
      },
      msg);
  std::string out = w.Take();
  const std::uint64_t body = out.size() - 4;
  if (body > kMaxFrameBytes) throw Error(ErrorCode::kInvalidArgument, "message exceeds the frame size limit");
  for (int i = 0; i < 4; ++i) out[static_cast<std::size_t>(i)] = static_cast<char>((body >> (8 * i)) & 0xff);
  return out;
}

Message DecodeFrame(std::string_view frame) {
  ByteReader r(frame);
  if (frame.size() < 6) throw Error(ErrorCode::kDecode, "truncated frame header");
  const std::uint32_t len = r.U32();
  if (len > kMaxFrameBytes) throw Error(ErrorCode::kDecode, "frame length exceeds the limit");
  if (static_cast<std::uint64_t>(len) != frame.size() - 4) {
    throw Error(ErrorCode::kDecode, "truncated frame: header says " + std::to_string(len) + " bytes, got " +
                                        std::to_string(frame.size() - 4));
  }
  const std::uint8_t version = r.U8();
  if (version != kWireVersion) {
    throw Error(ErrorCode::kVersion, "unsupported wire version " + std::to_string(version));
  }
  const std::uint8_t type = r.U8();
  Message m = ReadPayload(type, r);
  if (!r.done()) throw Error(ErrorCode::kDecode, "trailing bytes after message payload");
  ValidateMessage(m);
  return m;
}

}  // namespace dgrag
