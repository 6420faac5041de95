#pragma once

#include <atomic>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "core/config.hpp"
#include "transport/message.hpp"

namespace dgrag {

// Handles one request addressed to a node and returns the reply.
using Handler = std::function<Message(const std::string& from, const Message& request)>;

// Sizes and modelled latency of both frames of one call.
struct CallInfo {
  std::uint64_t request_bytes = 0;
  std::uint64_t response_bytes = 0;
  double request_seconds = 0.0;
  double response_seconds = 0.0;
};

struct LoggedFrame {
  std::string from;
  std::string to;
  std::string frame;

  bool operator==(const LoggedFrame&) const = default;
};

// Request/response messaging between named nodes. Every frame crossing the
// carrier is appended to the log, requests when sent and replies when
// returned. A handler that throws Error answers with ErrorReply, and Call
// rethrows it on the caller's side with the same code.
class Carrier {
 public:
  explicit Carrier(LinkModel link) : link_(link) {}
  virtual ~Carrier() = default;
  Carrier(const Carrier&) = delete;
  Carrier& operator=(const Carrier&) = delete;

  virtual void Bind(const std::string& node, Handler handler) = 0;
  virtual Message Call(const std::string& from, const std::string& to, const Message& request, double timeout_s,
                       CallInfo* info = nullptr) = 0;

  const LinkModel& link() const { return link_; }
  std::vector<LoggedFrame> Log() const;
  void ClearLog();

 protected:
  void Record(const std::string& from, const std::string& to, const std::string& frame);
  // Runs a handler and turns any failure into an ErrorReply.
  static Message Dispatch(const Handler& h, const std::string& from, const Message& request);
  // Throws the Error carried by an ErrorReply; passes anything else through.
  static Message Unwrap(const std::string& to, Message reply);

 private:
  LinkModel link_;
  mutable std::mutex log_mu_;
  std::vector<LoggedFrame> log_;
};

// base_rtt + bytes * 8 / bandwidth, after a full encode/decode pass.
std::pair<Message, double> SimulatedSend(const Message& msg, const LinkModel& link);

// In-process carrier on a virtual clock. Each frame advances the clock by its
// modelled latency; nothing sleeps.
class SimulatedCarrier final : public Carrier {
 public:
  enum class Fault { kNone, kDrop, kTimeout };

  explicit SimulatedCarrier(LinkModel link) : Carrier(link) {}

  void Bind(const std::string& node, Handler handler) override;
  Message Call(const std::string& from, const std::string& to, const Message& request, double timeout_s,
               CallInfo* info = nullptr) override;

  // Applies to every later request addressed to node.
  void InjectFault(const std::string& node, Fault fault);
  double clock_seconds() const;

 private:
  mutable std::mutex mu_;
  std::map<std::string, Handler> handlers_;
  std::map<std::string, Fault> faults_;
  double clock_ = 0.0;
};

// TCP carrier. Each bound node listens on its directory address; a port of 0
// picks a free port and the directory is updated. Calls reuse one connection
// per (from, to) pair, so requests between a pair are delivered in order.
class SocketCarrier final : public Carrier {
 public:
  SocketCarrier(LinkModel link, std::map<std::string, std::string> directory);
  ~SocketCarrier() override;

  void Bind(const std::string& node, Handler handler) override;
  Message Call(const std::string& from, const std::string& to, const Message& request, double timeout_s,
               CallInfo* info = nullptr) override;

  std::string Address(const std::string& node) const;
  void Shutdown();

 private:
  struct Listener;
  struct Connection;

  void Serve(Listener* l);
  void ServeConnection(Listener* l, int fd);
  std::shared_ptr<Connection> ConnectionFor(const std::string& from, const std::string& to);

  mutable std::mutex mu_;
  std::map<std::string, std::string> directory_;
  std::vector<std::unique_ptr<Listener>> listeners_;
  std::map<std::pair<std::string, std::string>, std::shared_ptr<Connection>> connections_;
  std::atomic<bool> stopping_{false};
};

// "host:port" split; throws Error(kConfig) on malformed input.
std::pair<std::string, int> ParseAddress(const std::string& addr);

}  // namespace dgrag
