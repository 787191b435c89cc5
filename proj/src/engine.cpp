#include "sba/engine.hpp"

#include <algorithm>
#include <future>
#include <stdexcept>
#include <thread>

#include "sba/io.hpp"

namespace sba {
namespace {

constexpr std::string_view kStoreMagic{"SBADB1\0", 7};
constexpr uint32_t kStoreVersion = 1;

}  // namespace

std::vector<Digest> derive_digests(const BitString& v, const SubsetPlan& plan,
                                   const DigestConfig& cfg) {
  if (v.length() != plan.params.n)
    throw std::invalid_argument("bit string length does not match plan");
  if (cfg.mode == HashMode::keyed_prf && cfg.key == nullptr)
    throw std::invalid_argument("keyed_prf mode requires a provisioned key");

  std::vector<Digest> out;
  out.reserve(plan.subset_count());
  for (uint32_t i = 0; i < plan.subset_count(); ++i) {
    const BitString w = v.subselect(plan.subset(i));
    const auto preimage = encode_preimage(
        cfg.domain_separation ? std::optional<uint32_t>(i) : std::nullopt, w);
    out.push_back(cfg.mode == HashMode::plain_hash ? sha3_256(preimage)
                                                   : cfg.key->evaluate(preimage));
  }
  return out;
}

struct ShardedStore::Shard {
  mutable std::shared_mutex mutex;
  // Most digests map to a single identity; cross-identity collisions spill
  // into the multi map. A digest lives in exactly one of the two.
  std::unordered_map<Digest, IdentityId, DigestHasher> single;
  std::unordered_map<Digest, std::vector<IdentityId>, DigestHasher> multi;
  std::unordered_set<IdentityId> enrolled;
  uint64_t records = 0;

  // Inserts (digest, id); duplicate (digest, id) pairs collapse.
  void insert(const Digest& digest, IdentityId id) {
    if (auto it = single.find(digest); it != single.end()) {
      if (it->second == id) return;
      auto& list = multi[digest];
      list.push_back(it->second);
      list.push_back(id);
      single.erase(it);
      ++records;
      return;
    }
    if (auto it = multi.find(digest); it != multi.end()) {
      auto& list = it->second;
      if (std::find(list.begin(), list.end(), id) != list.end()) return;
      list.push_back(id);
      ++records;
      return;
    }
    single.emplace(digest, id);
    ++records;
  }

  void remove_identity(IdentityId id) {
    for (auto it = single.begin(); it != single.end();) {
      if (it->second == id) {
        it = single.erase(it);
        --records;
      } else {
        ++it;
      }
    }
    for (auto it = multi.begin(); it != multi.end();) {
      auto& list = it->second;
      const auto found = std::find(list.begin(), list.end(), id);
      if (found != list.end()) {
        list.erase(found);
        --records;
      }
      if (list.empty()) {
        it = multi.erase(it);
      } else if (list.size() == 1) {
        single.emplace(it->first, list.front());
        it = multi.erase(it);
      } else {
        ++it;
      }
    }
    enrolled.erase(id);
  }

  void tally(std::span<const Digest> digests,
             std::unordered_map<IdentityId, uint32_t>& counts) const {
    std::shared_lock lock(mutex);
    for (const Digest& d : digests) {
      if (auto it = single.find(d); it != single.end()) {
        ++counts[it->second];
      } else if (auto it2 = multi.find(d); it2 != multi.end()) {
        for (IdentityId id : it2->second) ++counts[id];
      }
    }
  }
};

ShardedStore::ShardedStore(uint32_t shard_capacity) : capacity_(shard_capacity) {
  if (shard_capacity < 1) throw std::invalid_argument("shard capacity must be >= 1");
}

ShardedStore::ShardedStore(ShardedStore&& other) noexcept
    : shards_(std::move(other.shards_)),
      assignment_(std::move(other.assignment_)),
      capacity_(other.capacity_) {}

ShardedStore& ShardedStore::operator=(ShardedStore&& other) noexcept {
  shards_ = std::move(other.shards_);
  assignment_ = std::move(other.assignment_);
  capacity_ = other.capacity_;
  return *this;
}

ShardedStore::~ShardedStore() = default;

ShardedStore::Shard& ShardedStore::shard_for_enroll(IdentityId id) {
  if (assignment_.contains(id))
    throw std::invalid_argument("identity " + std::to_string(id) + " already enrolled");
  if (shards_.empty() || shards_.back()->enrolled.size() >= capacity_)
    shards_.push_back(std::make_unique<Shard>());
  assignment_.emplace(id, static_cast<uint32_t>(shards_.size() - 1));
  return *shards_.back();
}

void ShardedStore::open_empty_shard() {
  std::unique_lock topo(topology_mutex_);
  shards_.push_back(std::make_unique<Shard>());
}

void ShardedStore::enroll(IdentityId id, std::span<const Digest> digests) {
  std::unique_lock topo(topology_mutex_);
  Shard& shard = shard_for_enroll(id);
  std::unique_lock shard_lock(shard.mutex);
  topo.unlock();
  // All records become visible atomically with respect to any reader.
  shard.enrolled.insert(id);
  for (const Digest& d : digests) shard.insert(d, id);
}

MatchResult ShardedStore::authenticate(std::span<const Digest> digests,
                                       uint32_t tau) const {
  if (tau < 1) throw std::invalid_argument("tau must be >= 1");
  std::shared_lock topo(topology_mutex_);

  MatchResult result;
  result.lookups = static_cast<uint64_t>(digests.size()) * shards_.size();

  if (shards_.size() <= 1) {
    if (!shards_.empty()) shards_.front()->tally(digests, result.counts);
  } else {
    // Fan out across shards; each task owns a private tally map.
    std::vector<std::future<std::unordered_map<IdentityId, uint32_t>>> tasks;
    tasks.reserve(shards_.size());
    for (const auto& shard : shards_) {
      tasks.push_back(std::async(std::launch::async, [&shard, digests] {
        std::unordered_map<IdentityId, uint32_t> local;
        shard->tally(digests, local);
        return local;
      }));
    }
    for (auto& task : tasks) {
      for (const auto& [id, count] : task.get()) result.counts[id] += count;
    }
  }

  // Unique maximal tally wins if it reaches tau; a tie at the maximum rejects.
  uint32_t best = 0;
  bool unique = false;
  IdentityId best_id = 0;
  for (const auto& [id, count] : result.counts) {
    if (count > best) {
      best = count;
      best_id = id;
      unique = true;
    } else if (count == best) {
      unique = false;
    }
  }
  if (best >= tau && unique) {
    result.matched_id = best_id;
    result.match_count = best;
  }
  return result;
}

void ShardedStore::revoke(IdentityId id) {
  std::unique_lock topo(topology_mutex_);
  const auto it = assignment_.find(id);
  if (it == assignment_.end())
    throw std::invalid_argument("identity " + std::to_string(id) + " is not enrolled");
  Shard& shard = *shards_[it->second];
  std::unique_lock shard_lock(shard.mutex);
  assignment_.erase(it);
  topo.unlock();
  shard.remove_identity(id);
}

bool ShardedStore::is_enrolled(IdentityId id) const {
  std::shared_lock topo(topology_mutex_);
  return assignment_.contains(id);
}

uint32_t ShardedStore::identity_count() const {
  std::shared_lock topo(topology_mutex_);
  return static_cast<uint32_t>(assignment_.size());
}

uint32_t ShardedStore::shard_count() const {
  std::shared_lock topo(topology_mutex_);
  return static_cast<uint32_t>(shards_.size());
}

uint64_t ShardedStore::record_count() const {
  std::shared_lock topo(topology_mutex_);
  uint64_t total = 0;
  for (const auto& shard : shards_) {
    std::shared_lock lock(shard->mutex);
    total += shard->records;
  }
  return total;
}

uint32_t ShardedStore::shard_identity_count(uint32_t shard) const {
  std::shared_lock topo(topology_mutex_);
  if (shard >= shards_.size()) throw std::out_of_range("shard index out of range");
  std::shared_lock lock(shards_[shard]->mutex);
  return static_cast<uint32_t>(shards_[shard]->enrolled.size());
}

void ShardedStore::for_each_record(
    const std::function<void(const Digest&, IdentityId)>& fn) const {
  std::shared_lock topo(topology_mutex_);
  for (const auto& shard : shards_) {
    std::shared_lock lock(shard->mutex);
    for (const auto& [digest, id] : shard->single) fn(digest, id);
    for (const auto& [digest, ids] : shard->multi)
      for (IdentityId id : ids) fn(digest, id);
  }
}

std::vector<std::pair<Digest, IdentityId>> ShardedStore::canonical_records(
    uint32_t shard_index) const {
  std::shared_lock topo(topology_mutex_);
  if (shard_index >= shards_.size()) throw std::out_of_range("shard index out of range");
  const Shard& shard = *shards_[shard_index];
  std::shared_lock lock(shard.mutex);

  std::vector<std::pair<Digest, IdentityId>> records;
  records.reserve(shard.records);
  for (const auto& [digest, id] : shard.single) records.emplace_back(digest, id);
  for (const auto& [digest, ids] : shard.multi)
    for (IdentityId id : ids) records.emplace_back(digest, id);
  std::sort(records.begin(), records.end());
  return records;
}

void save_store(const ShardedStore& store, const std::filesystem::path& path) {
  std::vector<uint8_t> out;
  out.insert(out.end(), kStoreMagic.begin(), kStoreMagic.end());
  put_u32le(out, kStoreVersion);
  put_u32le(out, store.shard_count());
  for (uint32_t s = 0; s < store.shard_count(); ++s) {
    const auto records = store.canonical_records(s);
    put_u32le(out, store.shard_capacity());
    put_u32le(out, store.shard_identity_count(s));
    put_u64le(out, records.size());
    for (const auto& [digest, id] : records) {
      put_bytes(out, digest.bytes);
      put_u32le(out, id);
    }
  }
  write_file(path, out);
}

ShardedStore load_store(const std::filesystem::path& path) {
  const auto data = read_file(path);
  ByteReader in(data);
  in.expect_magic(kStoreMagic);
  if (in.u32le() != kStoreVersion) throw std::runtime_error("unsupported store version");
  const uint32_t shard_count = in.u32le();

  std::optional<ShardedStore> store;
  for (uint32_t s = 0; s < shard_count; ++s) {
    const uint32_t capacity = in.u32le();
    if (capacity < 1) throw std::runtime_error("corrupt shard capacity");
    if (!store)
      store.emplace(capacity);
    else if (store->shard_capacity() != capacity)
      throw std::runtime_error("inconsistent shard capacities");
    // Every shard boundary is opened explicitly so the file's layout is
    // reproduced even for shards below capacity (or emptied by revocation).
    store->open_empty_shard();

    const uint32_t id_count = in.u32le();
    const uint64_t record_count = in.u64le();
    std::unordered_map<IdentityId, std::vector<Digest>> grouped;
    for (uint64_t r = 0; r < record_count; ++r) {
      Digest d;
      const auto raw = in.take(32);
      std::copy(raw.begin(), raw.end(), d.bytes.begin());
      const IdentityId id = in.u32le();
      grouped[id].push_back(d);
    }
    if (grouped.size() != id_count)
      throw std::runtime_error("shard identity count does not match records");
    if (id_count > capacity) throw std::runtime_error("shard exceeds its capacity");

    std::vector<IdentityId> order;
    order.reserve(grouped.size());
    for (const auto& [id, digests] : grouped) order.push_back(id);
    std::sort(order.begin(), order.end());
    for (IdentityId id : order) store->enroll(id, grouped[id]);
  }
  if (!store) store.emplace();
  if (!in.done()) throw std::runtime_error("trailing bytes in store file");
  return std::move(*store);
}

void enroll(ShardedStore& store, IdentityId id, const BitString& v,
            const SubsetPlan& plan, const DigestConfig& cfg) {
  store.enroll(id, derive_digests(v, plan, cfg));
}

MatchResult authenticate(const ShardedStore& store, const BitString& v,
                         const SubsetPlan& plan, const DigestConfig& cfg, uint32_t tau) {
  return store.authenticate(derive_digests(v, plan, cfg), tau);
}

}  // namespace sba
