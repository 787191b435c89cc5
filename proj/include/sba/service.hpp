#pragma once

#include <atomic>
#include <cstdint>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "sba/engine.hpp"

namespace sba {

enum class PayloadPolicy : uint8_t { digests_only, bits_only, both };

PayloadPolicy payload_policy_from_string(std::string_view s);
std::string_view to_string(PayloadPolicy p);

/// Wire protocol: every frame is a u32 little-endian byte length followed by
/// that many bytes of UTF-8 text. Requests have three space-separated fields
/// in fixed order: op, id, payload ("-" where not applicable).
///   enroll <id> digests:<hex> | bits:<hex>
///   auth   -    digests:<hex> | bits:<hex>
///   revoke <id> -
///   status -    -
/// Responses: "<ok|error> <id|null> <count>[ <detail>]". Authentication
/// rejection is a normal outcome: "ok null 0".
struct ServiceConfig {
  std::string host = "127.0.0.1";
  uint16_t port = 0;  // 0 binds an ephemeral port
  PayloadPolicy policy = PayloadPolicy::digests_only;
  uint32_t tau = 1;
  uint32_t max_frame_bytes = 64u << 20;
};

class Service {
 public:
  /// store and plan must outlive the service.
  Service(ShardedStore& store, const SubsetPlan& plan, const DigestConfig& crypto,
          ServiceConfig cfg);
  ~Service();

  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Binds and starts accepting connections on a background thread.
  void start();
  void stop();
  uint16_t port() const { return bound_port_; }
  bool running() const { return running_.load(); }

 private:
  void accept_loop();
  void serve_connection(int fd);
  std::string handle_request(std::string_view body);
  std::vector<Digest> payload_to_digests(std::string_view payload) const;

  ShardedStore& store_;
  const SubsetPlan& plan_;
  DigestConfig crypto_;
  ServiceConfig cfg_;

  int listen_fd_ = -1;
  uint16_t bound_port_ = 0;
  std::atomic<bool> running_{false};
  std::thread accept_thread_;
  std::mutex connections_mutex_;
  std::vector<int> connection_fds_;
  std::vector<std::thread> connection_threads_;
};

/// Blocking single-connection client for the wire protocol.
class WireClient {
 public:
  WireClient(const std::string& host, uint16_t port,
             uint32_t max_frame_bytes = 64u << 20);
  ~WireClient();

  WireClient(const WireClient&) = delete;
  WireClient& operator=(const WireClient&) = delete;

  /// Sends one request frame and reads one response frame.
  std::string request(std::string_view body);

 private:
  int fd_ = -1;
  uint32_t max_frame_bytes_;
};

struct WireResponse {
  bool ok = false;
  std::optional<IdentityId> id;
  uint32_t count = 0;
  std::string detail;
};

WireResponse parse_wire_response(std::string_view text);

std::string bits_payload(const BitString& v);
std::string digests_payload(std::span<const Digest> digests);

}  // namespace sba
