#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "core/error.hpp"
#include "transport/carrier.hpp"

namespace dgrag {

namespace {

constexpr std::uint32_t kMaxFrame = 256U << 20;
constexpr std::uint32_t kMaxName = 4096;

enum class IoStatus { kOk, kEof, kTimeout, kError };

IoStatus ReadExact(int fd, char* buf, std::size_t n) {
  std::size_t got = 0;
  while (got < n) {
    const ssize_t r = ::recv(fd, buf + got, n - got, 0);
    if (r == 0) return IoStatus::kEof;
    if (r < 0) {
      if (errno == EINTR) continue;
      if (errno == EAGAIN || errno == EWOULDBLOCK) return IoStatus::kTimeout;
      return IoStatus::kError;
    }
    got += static_cast<std::size_t>(r);
  }
  return IoStatus::kOk;
}

IoStatus WriteAll(int fd, const char* buf, std::size_t n) {
  std::size_t sent = 0;
  while (sent < n) {
    const ssize_t r = ::send(fd, buf + sent, n - sent, MSG_NOSIGNAL);
    if (r < 0) {
      if (errno == EINTR) continue;
      if (errno == EAGAIN || errno == EWOULDBLOCK) return IoStatus::kTimeout;
      return IoStatus::kError;
    }
    sent += static_cast<std::size_t>(r);
  }
  return IoStatus::kOk;
}

std::uint32_t LoadU32(const char* p) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(p[i])) << (8 * i);
  return v;
}

std::string U32Bytes(std::uint32_t v) {
  std::string s(4, '\0');
  for (int i = 0; i < 4; ++i) s[static_cast<std::size_t>(i)] = static_cast<char>((v >> (8 * i)) & 0xff);
  return s;
}

// Reads one length-prefixed frame, prefix included.
IoStatus ReadFrame(int fd, std::string& out) {
  char head[4];
  IoStatus st = ReadExact(fd, head, 4);
  if (st != IoStatus::kOk) return st;
  const std::uint32_t len = LoadU32(head);
  if (len > kMaxFrame) return IoStatus::kError;
  out.assign(head, 4);
  out.resize(4 + static_cast<std::size_t>(len));
  return ReadExact(fd, out.data() + 4, len);
}

void SetTimeout(int fd, double seconds) {
  timeval tv{};
  if (seconds > 0) {
    tv.tv_sec = static_cast<time_t>(seconds);
    tv.tv_usec = static_cast<suseconds_t>((seconds - static_cast<double>(tv.tv_sec)) * 1e6);
    if (tv.tv_sec == 0 && tv.tv_usec == 0) tv.tv_usec = 1;
  }
  ::setsockopt(fd, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof(tv));
  ::setsockopt(fd, SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof(tv));
}

sockaddr_in Resolve(const std::string& addr) {
  auto [host, port] = ParseAddress(addr);
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (::getaddrinfo(host.c_str(), nullptr, &hints, &res) != 0 || res == nullptr) {
    throw Error(ErrorCode::kTransport, "cannot resolve host " + host);
  }
  sockaddr_in sa{};
  std::memcpy(&sa, res->ai_addr, sizeof(sa));
  ::freeaddrinfo(res);
  sa.sin_port = htons(static_cast<std::uint16_t>(port));
  return sa;
}

}  // namespace

std::pair<std::string, int> ParseAddress(const std::string& addr) {
  const std::size_t colon = addr.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == addr.size()) {
    throw Error(ErrorCode::kConfig, "address must be host:port, got '" + addr + "'");
  }
  int port = 0;
  try {
    std::size_t used = 0;
    port = std::stoi(addr.substr(colon + 1), &used);
    if (used != addr.size() - colon - 1) throw std::invalid_argument("port");
  } catch (const std::exception&) {
    throw Error(ErrorCode::kConfig, "bad port in address '" + addr + "'");
  }
  if (port < 0 || port > 65535) throw Error(ErrorCode::kConfig, "port out of range in '" + addr + "'");
  return {addr.substr(0, colon), port};
}

struct SocketCarrier::Listener {
  std::string node;
  Handler handler;
  int fd = -1;
  std::thread thread;
  std::mutex mu;
  std::vector<int> conn_fds;
  std::vector<std::thread> conn_threads;
};

struct SocketCarrier::Connection {
  std::mutex mu;  // held for a whole request/reply exchange
  std::atomic<int> fd{-1};
  ~Connection() {
    if (fd >= 0) ::close(fd);
  }
};

SocketCarrier::SocketCarrier(LinkModel link, std::map<std::string, std::string> directory)
    : Carrier(link), directory_(std::move(directory)) {}

SocketCarrier::~SocketCarrier() { Shutdown(); }

std::string SocketCarrier::Address(const std::string& node) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = directory_.find(node);
  if (it == directory_.end()) throw Error(ErrorCode::kTransport, "no address known for " + node);
  return it->second;
}

void SocketCarrier::Bind(const std::string& node, Handler handler) {
  const std::string addr = Address(node);
  sockaddr_in sa = Resolve(addr);
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) throw Error(ErrorCode::kTransport, std::string("socket: ") + std::strerror(errno));
  const int one = 1;
  ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  if (::bind(fd, reinterpret_cast<sockaddr*>(&sa), sizeof(sa)) != 0 || ::listen(fd, 64) != 0) {
    const std::string why = std::strerror(errno);
    ::close(fd);
    throw Error(ErrorCode::kTransport, "cannot listen on " + addr + ": " + why);
  }
  socklen_t len = sizeof(sa);
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&sa), &len);
  auto l = std::make_unique<Listener>();
  l->node = node;
  l->handler = std::move(handler);
  l->fd = fd;
  Listener* raw = l.get();
  {
    std::lock_guard<std::mutex> lock(mu_);
    directory_[node] = ParseAddress(addr).first + ":" + std::to_string(ntohs(sa.sin_port));
    listeners_.push_back(std::move(l));
  }
  raw->thread = std::thread([this, raw] { Serve(raw); });
}

void SocketCarrier::Serve(Listener* l) {
  while (!stopping_) {
    const int fd = ::accept(l->fd, nullptr, nullptr);
    if (fd < 0) {
      if (errno == EINTR) continue;
      return;  // listener closed
    }
    const int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
    std::lock_guard<std::mutex> lock(l->mu);
    if (stopping_) {
      ::close(fd);
      return;
    }
    l->conn_fds.push_back(fd);
    l->conn_threads.emplace_back([this, l, fd] { ServeConnection(l, fd); });
  }
}

void SocketCarrier::ServeConnection(Listener* l, int fd) {
  // handshake: the caller's node name
  char head[4];
  if (ReadExact(fd, head, 4) != IoStatus::kOk) return;
  const std::uint32_t name_len = LoadU32(head);
  if (name_len > kMaxName) return;
  std::string from(name_len, '\0');
  if (ReadExact(fd, from.data(), name_len) != IoStatus::kOk) return;

  std::string frame;
  while (!stopping_ && ReadFrame(fd, frame) == IoStatus::kOk) {
    Message reply;
    try {
      reply = Dispatch(l->handler, from, DecodeFrame(frame));
    } catch (const Error& e) {
      reply = ErrorReply{static_cast<std::uint32_t>(e.code()), e.what()};
    }
    std::string out;
    try {
      out = EncodeFrame(reply);
    } catch (const Error& e) {
      out = EncodeFrame(ErrorReply{static_cast<std::uint32_t>(e.code()), e.what()});
    }
    Record(l->node, from, out);
    if (WriteAll(fd, out.data(), out.size()) != IoStatus::kOk) return;
  }
}

std::shared_ptr<SocketCarrier::Connection> SocketCarrier::ConnectionFor(const std::string& from,
                                                                         const std::string& to) {
  std::lock_guard<std::mutex> lock(mu_);
  auto& c = connections_[{from, to}];
  if (!c) c = std::make_shared<Connection>();
  return c;
}

Message SocketCarrier::Call(const std::string& from, const std::string& to, const Message& request, double timeout_s,
                            CallInfo* info) {
  if (stopping_) throw Error(ErrorCode::kTransport, "carrier is shut down");
  const std::string req_frame = EncodeFrame(request);
  const std::string addr = Address(to);
  auto conn = ConnectionFor(from, to);
  std::lock_guard<std::mutex> lock(conn->mu);

  auto drop = [&] {
    if (conn->fd >= 0) ::close(conn->fd);
    conn->fd = -1;
  };
  auto connect = [&] {
    sockaddr_in sa = Resolve(addr);
    const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) throw Error(ErrorCode::kTransport, std::string("socket: ") + std::strerror(errno));
    SetTimeout(fd, timeout_s);
    if (::connect(fd, reinterpret_cast<sockaddr*>(&sa), sizeof(sa)) != 0) {
      const std::string why = std::strerror(errno);
      ::close(fd);
      throw Error(ErrorCode::kTransport, "cannot connect to " + to + " at " + addr + ": " + why);
    }
    const int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
    const std::string hello = U32Bytes(static_cast<std::uint32_t>(from.size())) + from;
    if (WriteAll(fd, hello.data(), hello.size()) != IoStatus::kOk) {
      ::close(fd);
      throw Error(ErrorCode::kTransport, "handshake with " + to + " failed");
    }
    conn->fd = fd;
  };

  Record(from, to, req_frame);
  std::string resp_frame;
  for (int attempt = 0;; ++attempt) {
    const bool reused = conn->fd >= 0;
    if (!reused) connect();
    SetTimeout(conn->fd, timeout_s);
    IoStatus st = WriteAll(conn->fd, req_frame.data(), req_frame.size());
    if (st == IoStatus::kOk) st = ReadFrame(conn->fd, resp_frame);
    if (st == IoStatus::kOk) break;
    drop();
    if (st == IoStatus::kTimeout) {
      throw Error(ErrorCode::kTimeout, "request to " + to + " timed out after " + std::to_string(timeout_s) + " s");
    }
    // a pooled connection the peer already closed gets one fresh attempt
    if (!(reused && attempt == 0)) throw Error(ErrorCode::kTransport, "connection to " + to + " failed");
  }
  if (info) {
    *info = {req_frame.size(), resp_frame.size(), link().Latency(req_frame.size()),
             link().Latency(resp_frame.size())};
  }
  return Unwrap(to, DecodeFrame(resp_frame));
}

void SocketCarrier::Shutdown() {
  if (stopping_.exchange(true)) return;
  std::vector<std::unique_ptr<Listener>> listeners;
  {
    std::lock_guard<std::mutex> lock(mu_);
    listeners.swap(listeners_);
    // wakes callers blocked on a reply; the fds close with their Connection
    for (auto& [_, c] : connections_) {
      const int fd = c->fd.load();
      if (fd >= 0) ::shutdown(fd, SHUT_RDWR);
    }
  }
  for (auto& l : listeners) {
    ::shutdown(l->fd, SHUT_RDWR);
    ::close(l->fd);
    if (l->thread.joinable()) l->thread.join();
    std::vector<std::thread> threads;
    {
      std::lock_guard<std::mutex> lock(l->mu);
      for (int fd : l->conn_fds) ::shutdown(fd, SHUT_RDWR);
      threads.swap(l->conn_threads);
    }
    for (auto& t : threads) t.join();
    for (int fd : l->conn_fds) ::close(fd);
  }
}

}  // namespace dgrag
