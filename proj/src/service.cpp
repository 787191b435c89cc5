#include "sba/service.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <charconv>
#include <cstring>
#include <stdexcept>

#include "sba/io.hpp"

namespace sba {
namespace {

bool send_all(int fd, const void* data, size_t len) {
  const char* p = static_cast<const char*>(data);
  while (len > 0) {
    const ssize_t sent = ::send(fd, p, len, MSG_NOSIGNAL);
    if (sent <= 0) return false;
    p += sent;
    len -= static_cast<size_t>(sent);
  }
  return true;
}

/// Returns false on clean EOF before any byte; throws on mid-frame EOF.
bool recv_exact(int fd, void* data, size_t len, bool eof_ok) {
  char* p = static_cast<char*>(data);
  size_t got = 0;
  while (got < len) {
    const ssize_t r = ::recv(fd, p + got, len - got, 0);
    if (r == 0) {
      if (got == 0 && eof_ok) return false;
      throw std::runtime_error("connection closed mid-frame");
    }
    if (r < 0) {
      if (errno == EINTR) continue;
      if (got == 0 && eof_ok) return false;
      throw std::runtime_error("socket read failed");
    }
    got += static_cast<size_t>(r);
  }
  return true;
}

bool send_frame(int fd, std::string_view body) {
  std::vector<uint8_t> frame;
  frame.reserve(4 + body.size());
  put_u32le(frame, static_cast<uint32_t>(body.size()));
  frame.insert(frame.end(), body.begin(), body.end());
  return send_all(fd, frame.data(), frame.size());
}

std::optional<std::string> recv_frame(int fd, uint32_t max_bytes, bool eof_ok) {
  uint8_t header[4];
  if (!recv_exact(fd, header, 4, eof_ok)) return std::nullopt;
  const uint32_t len = header[0] | (uint32_t(header[1]) << 8) |
                       (uint32_t(header[2]) << 16) | (uint32_t(header[3]) << 24);
  if (len > max_bytes) throw std::length_error("frame exceeds size limit");
  std::string body(len, '\0');
  if (len > 0) recv_exact(fd, body.data(), len, false);
  return body;
}

sockaddr_in make_address(const std::string& host, uint16_t port) {
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1)
    throw std::invalid_argument("invalid IPv4 address: " + host);
  return addr;
}

uint32_t parse_u32_field(std::string_view field) {
  uint32_t value = 0;
  const auto [ptr, ec] = std::from_chars(field.begin(), field.end(), value);
  if (ec != std::errc() || ptr != field.end())
    throw std::invalid_argument("invalid integer field");
  return value;
}

std::string error_response(std::string_view message) {
  return "error null 0 " + std::string(message);
}

}  // namespace

PayloadPolicy payload_policy_from_string(std::string_view s) {
  if (s == "digests") return PayloadPolicy::digests_only;
  if (s == "bits") return PayloadPolicy::bits_only;
  if (s == "both") return PayloadPolicy::both;
  throw std::invalid_argument("unknown payload policy: " + std::string(s));
}

std::string_view to_string(PayloadPolicy p) {
  switch (p) {
    case PayloadPolicy::digests_only: return "digests";
    case PayloadPolicy::bits_only: return "bits";
    default: return "both";
  }
}

Service::Service(ShardedStore& store, const SubsetPlan& plan, const DigestConfig& crypto,
                 ServiceConfig cfg)
    : store_(store), plan_(plan), crypto_(crypto), cfg_(std::move(cfg)) {}

Service::~Service() { stop(); }

void Service::start() {
  if (running_.load()) return;
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw std::runtime_error("socket() failed");
  const int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));

  sockaddr_in addr = make_address(cfg_.host, cfg_.port);
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    ::close(listen_fd_);
    listen_fd_ = -1;
    throw std::runtime_error("bind failed on " + cfg_.host + ":" +
                             std::to_string(cfg_.port));
  }
  socklen_t addr_len = sizeof(addr);
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &addr_len);
  bound_port_ = ntohs(addr.sin_port);

  if (::listen(listen_fd_, 64) != 0) {
    ::close(listen_fd_);
    listen_fd_ = -1;
    throw std::runtime_error("listen failed");
  }
  running_.store(true);
  accept_thread_ = std::thread([this] { accept_loop(); });
}

void Service::stop() {
  if (!running_.exchange(false)) return;
  ::shutdown(listen_fd_, SHUT_RDWR);
  ::close(listen_fd_);
  listen_fd_ = -1;
  if (accept_thread_.joinable()) accept_thread_.join();

  std::vector<std::thread> workers;
  {
    std::lock_guard lock(connections_mutex_);
    for (int fd : connection_fds_) ::shutdown(fd, SHUT_RDWR);
    workers.swap(connection_threads_);
  }
  for (auto& t : workers)
    if (t.joinable()) t.join();
}

void Service::accept_loop() {
  while (running_.load()) {
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) {
      if (!running_.load()) break;
      continue;
    }
    std::lock_guard lock(connections_mutex_);
    connection_fds_.push_back(fd);
    connection_threads_.emplace_back([this, fd] { serve_connection(fd); });
  }
}

void Service::serve_connection(int fd) {
  try {
    while (running_.load()) {
      std::optional<std::string> body;
      try {
        body = recv_frame(fd, cfg_.max_frame_bytes, true);
      } catch (const std::length_error&) {
        // Oversized payload: reject and drop the connection, since the
        // remainder of the frame cannot be resynchronized.
        send_frame(fd, error_response("payload too large"));
        break;
      }
      if (!body) break;  // peer closed
      send_frame(fd, handle_request(*body));
    }
  } catch (const std::exception&) {
    // Torn connection; nothing to answer.
  }
  {
    std::lock_guard lock(connections_mutex_);
    std::erase(connection_fds_, fd);
  }
  ::close(fd);
}

std::vector<Digest> Service::payload_to_digests(std::string_view payload) const {
  constexpr std::string_view kDigestsTag = "digests:";
  constexpr std::string_view kBitsTag = "bits:";
  if (payload.starts_with(kDigestsTag)) {
    if (cfg_.policy == PayloadPolicy::bits_only)
      throw std::invalid_argument("digest payloads are disabled");
    const auto hex = payload.substr(kDigestsTag.size());
    if (hex.size() % 64 != 0) throw std::invalid_argument("digest hex must be a multiple of 64 chars");
    const size_t count = hex.size() / 64;
    if (count != plan_.subset_count())
      throw std::invalid_argument("expected " + std::to_string(plan_.subset_count()) +
                                  " digests, got " + std::to_string(count));
    std::vector<Digest> digests;
    digests.reserve(count);
    for (size_t i = 0; i < count; ++i)
      digests.push_back(Digest::from_hex(hex.substr(i * 64, 64)));
    return digests;
  }
  if (payload.starts_with(kBitsTag)) {
    if (cfg_.policy == PayloadPolicy::digests_only)
      throw std::invalid_argument("raw bit-string payloads are disabled");
    const auto raw = from_hex(payload.substr(kBitsTag.size()));
    const BitString v = BitString::from_bytes(raw, plan_.params.n);
    return derive_digests(v, plan_, crypto_);
  }
  throw std::invalid_argument("unknown payload kind");
}

std::string Service::handle_request(std::string_view body) {
  try {
    // op <sp> id <sp> payload — exactly three fields.
    const size_t first = body.find(' ');
    if (first == std::string_view::npos) return error_response("malformed request");
    const size_t second = body.find(' ', first + 1);
    if (second == std::string_view::npos) return error_response("malformed request");
    const std::string_view op = body.substr(0, first);
    const std::string_view id_field = body.substr(first + 1, second - first - 1);
    const std::string_view payload = body.substr(second + 1);
    if (payload.find(' ') != std::string_view::npos)
      return error_response("malformed request");

    if (op == "enroll") {
      const IdentityId id = parse_u32_field(id_field);
      store_.enroll(id, payload_to_digests(payload));
      return "ok null 0";
    }
    if (op == "auth") {
      const auto result = store_.authenticate(payload_to_digests(payload), cfg_.tau);
      if (result.matched())
        return "ok " + std::to_string(*result.matched_id) + " " +
               std::to_string(result.match_count);
      return "ok null 0";
    }
    if (op == "revoke") {
      store_.revoke(parse_u32_field(id_field));
      return "ok null 0";
    }
    if (op == "status") {
      return "ok null 0 enrolled=" + std::to_string(store_.identity_count()) +
             " shards=" + std::to_string(store_.shard_count()) +
             " m=" + std::to_string(plan_.params.m) +
             " k=" + std::to_string(plan_.params.k);
    }
    return error_response("unknown op");
  } catch (const std::exception& e) {
    return error_response(e.what());
  }
}

WireClient::WireClient(const std::string& host, uint16_t port, uint32_t max_frame_bytes)
    : max_frame_bytes_(max_frame_bytes) {
  fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd_ < 0) throw std::runtime_error("socket() failed");
  sockaddr_in addr = make_address(host, port);
  if (::connect(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    ::close(fd_);
    fd_ = -1;
    throw std::runtime_error("connect failed to " + host + ":" + std::to_string(port));
  }
}

WireClient::~WireClient() {
  if (fd_ >= 0) ::close(fd_);
}

std::string WireClient::request(std::string_view body) {
  if (!send_frame(fd_, body)) throw std::runtime_error("send failed");
  auto response = recv_frame(fd_, max_frame_bytes_, false);
  if (!response) throw std::runtime_error("connection closed");
  return *response;
}

WireResponse parse_wire_response(std::string_view text) {
  WireResponse out;
  const size_t first = text.find(' ');
  if (first == std::string_view::npos) throw std::runtime_error("malformed response");
  const size_t second = text.find(' ', first + 1);
  if (second == std::string_view::npos) throw std::runtime_error("malformed response");
  const std::string_view status = text.substr(0, first);
  const std::string_view id_field = text.substr(first + 1, second - first - 1);
  std::string_view rest = text.substr(second + 1);

  out.ok = status == "ok";
  const size_t third = rest.find(' ');
  std::string_view count_field = rest;
  if (third != std::string_view::npos) {
    count_field = rest.substr(0, third);
    out.detail = std::string(rest.substr(third + 1));
  }
  out.count = parse_u32_field(count_field);
  if (id_field != "null") out.id = parse_u32_field(id_field);
  return out;
}

std::string bits_payload(const BitString& v) { return "bits:" + to_hex(v.bytes()); }

std::string digests_payload(std::span<const Digest> digests) {
  std::string out = "digests:";
  out.reserve(out.size() + digests.size() * 64);
  for (const auto& d : digests) out += d.hex();
  return out;
}

}  // namespace sba
