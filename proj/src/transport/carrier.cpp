#include "transport/carrier.hpp"

#include "core/error.hpp"

namespace dgrag {

std::vector<LoggedFrame> Carrier::Log() const {
  std::lock_guard<std::mutex> lock(log_mu_);
  return log_;
}

void Carrier::ClearLog() {
  std::lock_guard<std::mutex> lock(log_mu_);
  log_.clear();
}

void Carrier::Record(const std::string& from, const std::string& to, const std::string& frame) {
  std::lock_guard<std::mutex> lock(log_mu_);
  log_.push_back({from, to, frame});
}

Message Carrier::Dispatch(const Handler& h, const std::string& from, const Message& request) {
  try {
    return h(from, request);
  } catch (const Error& e) {
    return ErrorReply{static_cast<std::uint32_t>(e.code()), e.what()};
  } catch (const std::exception& e) {
    return ErrorReply{static_cast<std::uint32_t>(ErrorCode::kTransport), e.what()};
  }
}

Message Carrier::Unwrap(const std::string& to, Message reply) {
  if (const auto* err = std::get_if<ErrorReply>(&reply)) {
    ErrorCode code = ErrorCode::kTransport;
    if (err->code >= static_cast<std::uint32_t>(ErrorCode::kConfig) &&
        err->code <= static_cast<std::uint32_t>(ErrorCode::kSchema)) {
      code = static_cast<ErrorCode>(err->code);
    }
    throw Error(code, to + ": " + err->message);
  }
  return reply;
}

std::pair<Message, double> SimulatedSend(const Message& msg, const LinkModel& link) {
  const std::string frame = EncodeFrame(msg);
  return {DecodeFrame(frame), link.Latency(frame.size())};
}

void SimulatedCarrier::Bind(const std::string& node, Handler handler) {
  std::lock_guard<std::mutex> lock(mu_);
  handlers_[node] = std::move(handler);
}

void SimulatedCarrier::InjectFault(const std::string& node, Fault fault) {
  std::lock_guard<std::mutex> lock(mu_);
  faults_[node] = fault;
}

double SimulatedCarrier::clock_seconds() const {
  std::lock_guard<std::mutex> lock(mu_);
  return clock_;
}

Message SimulatedCarrier::Call(const std::string& from, const std::string& to, const Message& request, double timeout_s,
                               CallInfo* info) {
  const std::string req_frame = EncodeFrame(request);
  Handler handler;
  Fault fault = Fault::kNone;
  const double req_seconds = link().Latency(req_frame.size());
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = handlers_.find(to);
    if (it == handlers_.end()) throw Error(ErrorCode::kTransport, "no node bound as " + to);
    handler = it->second;
    if (auto f = faults_.find(to); f != faults_.end()) fault = f->second;
    clock_ += req_seconds;
  }
  Record(from, to, req_frame);
  if (fault == Fault::kDrop) throw Error(ErrorCode::kTransport, "request to " + to + " was dropped");
  if (fault == Fault::kTimeout || req_seconds > timeout_s) {
    throw Error(ErrorCode::kTimeout, "request to " + to + " timed out after " + std::to_string(timeout_s) + " s");
  }

  // delivery callbacks run without the carrier lock held
  const Message reply = Dispatch(handler, from, DecodeFrame(req_frame));
  const std::string resp_frame = EncodeFrame(reply);
  const double resp_seconds = link().Latency(resp_frame.size());
  {
    std::lock_guard<std::mutex> lock(mu_);
    clock_ += resp_seconds;
  }
  Record(to, from, resp_frame);
  if (info) *info = {req_frame.size(), resp_frame.size(), req_seconds, resp_seconds};
  return Unwrap(to, DecodeFrame(resp_frame));
}

}  // namespace dgrag
