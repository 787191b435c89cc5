#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "sba/crypto.hpp"
#include "sba/params.hpp"
#include "sba/sampling.hpp"
#include "sba/types.hpp"

namespace sba {

/// How substrings are turned into stored digests.
struct DigestConfig {
  HashMode mode = HashMode::plain_hash;
  bool domain_separation = true;
  const KeyProvider* key = nullptr;  // required in keyed_prf mode

  static DigestConfig from_params(const SystemParams& p, const KeyProvider* key = nullptr) {
    return DigestConfig{p.hash_mode, p.domain_separation, key};
  }
};

/// For each subset i: gather the substring of v at the subset's sorted
/// indices, encode, and hash. Returns exactly m digests.
std::vector<Digest> derive_digests(const BitString& v, const SubsetPlan& plan,
                                   const DigestConfig& cfg);

struct MatchResult {
  std::optional<IdentityId> matched_id;
  uint32_t match_count = 0;  // tally of the matched identity
  std::unordered_map<IdentityId, uint32_t> counts;
  uint64_t lookups = 0;  // instrumented digest lookups, m per shard probed

  bool matched() const { return matched_id.has_value(); }
};

/// Digest -> identities store, partitioned into shards of at most
/// `capacity` identities each. New identities fill the newest shard and a
/// fresh shard opens when it is full. Readers take shared locks per shard;
/// enrollment and revocation lock only the affected shard exclusively.
class ShardedStore {
 public:
  static constexpr uint32_t kDefaultShardCapacity = 10000;

  explicit ShardedStore(uint32_t shard_capacity = kDefaultShardCapacity);
  ShardedStore(ShardedStore&&) noexcept;
  ShardedStore& operator=(ShardedStore&&) noexcept;
  ~ShardedStore();

  /// Inserts one record per distinct (digest, id) pair into the identity's
  /// shard. Throws if id is already enrolled.
  void enroll(IdentityId id, std::span<const Digest> digests);

  /// Looks every digest up in every shard (exactly digests.size() lookups
  /// per shard, independent of how many identities are enrolled), tallies
  /// per identity, and matches the unique maximal tally if it reaches tau.
  /// Ties at the maximum reject.
  MatchResult authenticate(std::span<const Digest> digests, uint32_t tau) const;

  /// Removes every record mapping to id. Throws if id is not enrolled.
  void revoke(IdentityId id);

  bool is_enrolled(IdentityId id) const;
  uint32_t identity_count() const;
  uint32_t shard_count() const;
  uint64_t record_count() const;
  uint32_t shard_capacity() const { return capacity_; }
  uint32_t shard_identity_count(uint32_t shard) const;

  /// Visits all records shard by shard (unspecified order within a shard).
  void for_each_record(const std::function<void(const Digest&, IdentityId)>& fn) const;

  /// Records of one shard in canonical order: sorted by digest bytes, then id.
  std::vector<std::pair<Digest, IdentityId>> canonical_records(uint32_t shard) const;

 private:
  struct Shard;

  friend ShardedStore load_store(const std::filesystem::path& path);

  /// Picks (or opens) the shard for a new identity and records the
  /// assignment. Caller must hold the topology lock exclusively.
  Shard& shard_for_enroll(IdentityId id);

  /// Forces the next enrollment into a fresh shard; used when reloading a
  /// persisted store whose shards are not at capacity.
  void open_empty_shard();

  mutable std::shared_mutex topology_mutex_;
  std::vector<std::unique_ptr<Shard>> shards_;
  std::unordered_map<IdentityId, uint32_t> assignment_;
  uint32_t capacity_;
};

void save_store(const ShardedStore& store, const std::filesystem::path& path);
ShardedStore load_store(const std::filesystem::path& path);

/// Enrollment over a raw bit string: derive digests, then insert.
void enroll(ShardedStore& store, IdentityId id, const BitString& v,
            const SubsetPlan& plan, const DigestConfig& cfg);

/// Authentication over a raw bit string.
MatchResult authenticate(const ShardedStore& store, const BitString& v,
                         const SubsetPlan& plan, const DigestConfig& cfg, uint32_t tau);

}  // namespace sba
