#ifndef RDC_COLLECTIONS_DIST_MAP_HPP
#define RDC_COLLECTIONS_DIST_MAP_HPP

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "rdc/collections/team_ops.hpp"
#include "rdc/parallel/parallel.hpp"
#include "rdc/registry/collection_handle.hpp"
#include "rdc/relocation/distribution.hpp"
#include "rdc/relocation/move_manager.hpp"

namespace rdc {

namespace detail {

template <class K>
std::string keyRepr(const K& k) {
  if constexpr (std::is_convertible_v<K, std::string>)
    return std::string(k);
  else if constexpr (requires { std::to_string(k); })
    return std::to_string(k);
  else
    return "<key>";
}

template <class K, class V>
struct DistMapState {
  std::map<K, V> entries;
  template <class F>
  decltype(auto) withLock(F&& f) {
    return f(entries);
  }
};

template <class K, class V>
struct DistConcurrentMapState {
  std::mutex m;
  std::map<K, V> entries;
  template <class F>
  decltype(auto) withLock(F&& f) {
    std::lock_guard lock(m);
    return f(entries);
  }
};

/// Shared staging path for key-addressed collections: bucket local keys by
/// rule, validate destinations, and register one (serializer, removal) pair
/// per destination. Values are read at sync time, so late mutation of a
/// staged value still ships the final state.
template <class K, class V, class S, class Rule>
void stageKeyedMove(const TeamedPlaceGroup& g, GlobalId id, std::uint16_t codec,
                    std::shared_ptr<S> s, Rule&& rule, CollectiveMoveManager& mm) {
  Place self = selfPlace();
  std::map<std::uint32_t, std::vector<K>> buckets;
  s->withLock([&](std::map<K, V>& m) {
    for (const auto& [k, v] : m) {
      Place dest = rule(k);
      if (!g.contains(dest))
        throw UsageError("relocation rule sends key " + keyRepr(k) + " to " + dest.toString() +
                         ", which is outside the group");
      if (dest == self) continue;
      buckets[dest.id()].push_back(k);
    }
  });
  for (auto& [destId, keys] : buckets) {
    auto keysPtr = std::make_shared<std::vector<K>>(std::move(keys));
    mm.stage(
        Place(destId), id, codec,
        [s, keysPtr](ByteWriter& w) {
          s->withLock([&](std::map<K, V>& m) {
            w.u64(static_cast<std::uint64_t>(keysPtr->size()));
            for (const K& k : *keysPtr) {
              auto it = m.find(k);
              if (it == m.end())
                throw UsageError("key " + keyRepr(k) + " staged for relocation is no longer present");
              serialize(w, k);
              serialize(w, it->second);
            }
          });
        },
        [s, keysPtr] {
          s->withLock([&](std::map<K, V>& m) {
            for (const K& k : *keysPtr) m.erase(k);
          });
        });
  }
}

}  // namespace detail

/// Distributed key-value map: each place owns a local handle; a key should
/// live on one place at a time between teamed operations. Local mutation is
/// unsynchronized; use DistConcurrentMap when several activities write.
template <class K, class V>
class DistMap : public CollectionHandle<DistMap<K, V>, detail::DistMapState<K, V>> {
  using State = detail::DistMapState<K, V>;
  static constexpr std::uint16_t kCodecEntries = 1;

public:
  DistMap() = default;

  static DistMap create(const TeamedPlaceGroup& g) {
    DistMap m;
    m.createNew(g, {});
    return m;
  }

  void put(K k, V v) { this->state().entries.insert_or_assign(std::move(k), std::move(v)); }

  std::optional<V> get(const K& k) const {
    const auto& m = this->state().entries;
    auto it = m.find(k);
    if (it == m.end()) return std::nullopt;
    return it->second;
  }

  bool containsKey(const K& k) const { return this->state().entries.contains(k); }
  bool remove(const K& k) { return this->state().entries.erase(k) > 0; }
  std::size_t localSize() const { return this->state().entries.size(); }

  void forEachLocal(auto&& body) const {
    for (const auto& [k, v] : this->state().entries) body(k, v);
  }

  /// Stages every local entry for rule(key); movement happens at mm.sync().
  template <class Rule>
  void moveAtSync(Rule&& rule, CollectiveMoveManager& mm) {
    detail::stageKeyedMove<K, V>(this->group(), this->id(), kCodecEntries, this->statePtr(),
                                 std::forward<Rule>(rule), mm);
  }

  template <class R>
  R teamParallelReduce(const R& proto, unsigned workers = 0) {
    R partial = parallelReduceValues(this->state().entries, proto, workers);
    return teamMergeReducer(this->group(), partial, proto);
  }

  static std::shared_ptr<State> makeState(const TeamedPlaceGroup&, ByteReader&) {
    return std::make_shared<State>();
  }

  static void onAttach(GlobalId id, const TeamedPlaceGroup&, std::shared_ptr<State> s) {
    detail::relocationHub().add(id, [s](std::uint16_t codec, ByteReader& r) {
      if (codec != kCodecEntries)
        throw ProtocolError("map received frame with unknown codec " + std::to_string(codec));
      std::uint64_t n = r.u64();
      for (std::uint64_t i = 0; i < n; ++i) {
        K k{};
        V v{};
        deserialize(r, k);
        deserialize(r, v);
        s->entries.insert_or_assign(std::move(k), std::move(v));
      }
    });
  }

  friend void serialize(ByteWriter& w, const DistMap& m) { m.writeRef(w); }
  friend void deserialize(ByteReader& r, DistMap& m) { m.readRef(r); }
};

/// DistMap variant whose local mutation is internally guarded, for handles
/// written by several activities at once.
template <class K, class V>
class DistConcurrentMap
    : public CollectionHandle<DistConcurrentMap<K, V>, detail::DistConcurrentMapState<K, V>> {
  using State = detail::DistConcurrentMapState<K, V>;
  static constexpr std::uint16_t kCodecEntries = 1;

public:
  DistConcurrentMap() = default;

  static DistConcurrentMap create(const TeamedPlaceGroup& g) {
    DistConcurrentMap m;
    m.createNew(g, {});
    return m;
  }

  void put(K k, V v) {
    auto& s = this->state();
    s.withLock([&](std::map<K, V>& m) { m.insert_or_assign(std::move(k), std::move(v)); });
  }

  std::optional<V> get(const K& k) {
    auto& s = this->state();
    return s.withLock([&](std::map<K, V>& m) -> std::optional<V> {
      auto it = m.find(k);
      if (it == m.end()) return std::nullopt;
      return it->second;
    });
  }

  bool containsKey(const K& k) {
    auto& s = this->state();
    return s.withLock([&](std::map<K, V>& m) { return m.contains(k); });
  }

  bool remove(const K& k) {
    auto& s = this->state();
    return s.withLock([&](std::map<K, V>& m) { return m.erase(k) > 0; });
  }

  std::size_t localSize() {
    auto& s = this->state();
    return s.withLock([&](std::map<K, V>& m) { return m.size(); });
  }

  template <class Rule>
  void moveAtSync(Rule&& rule, CollectiveMoveManager& mm) {
    detail::stageKeyedMove<K, V>(this->group(), this->id(), kCodecEntries, this->statePtr(),
                                 std::forward<Rule>(rule), mm);
  }

  static std::shared_ptr<State> makeState(const TeamedPlaceGroup&, ByteReader&) {
    return std::make_shared<State>();
  }

  static void onAttach(GlobalId id, const TeamedPlaceGroup&, std::shared_ptr<State> s) {
    detail::relocationHub().add(id, [s](std::uint16_t codec, ByteReader& r) {
      if (codec != kCodecEntries)
        throw ProtocolError("map received frame with unknown codec " + std::to_string(codec));
      std::uint64_t n = r.u64();
      for (std::uint64_t i = 0; i < n; ++i) {
        K k{};
        V v{};
        deserialize(r, k);
        deserialize(r, v);
        s->withLock([&](std::map<K, V>& m) { m.insert_or_assign(std::move(k), std::move(v)); });
      }
    });
  }

  friend void serialize(ByteWriter& w, const DistConcurrentMap& m) { m.writeRef(w); }
  friend void deserialize(ByteReader& r, DistConcurrentMap& m) { m.readRef(r); }
};

/// Distributed map from K to a list of V. put1 appends; relocation moves
/// whole per-key lists, appending to whatever the destination already holds.
template <class K, class V>
class DistMultiMap
    : public CollectionHandle<DistMultiMap<K, V>, detail::DistMapState<K, std::vector<V>>> {
  using State = detail::DistMapState<K, std::vector<V>>;
  static constexpr std::uint16_t kCodecEntries = 1;

public:
  DistMultiMap() = default;

  static DistMultiMap create(const TeamedPlaceGroup& g) {
    DistMultiMap m;
    m.createNew(g, {});
    return m;
  }

  void put1(K k, V v) { this->state().entries[std::move(k)].push_back(std::move(v)); }

  std::vector<V> get(const K& k) const {
    const auto& m = this->state().entries;
    auto it = m.find(k);
    if (it == m.end()) return {};
    return it->second;
  }

  bool containsKey(const K& k) const { return this->state().entries.contains(k); }
  bool removeKey(const K& k) { return this->state().entries.erase(k) > 0; }
  std::size_t localKeyCount() const { return this->state().entries.size(); }

  std::size_t localValueCount() const {
    std::size_t n = 0;
    for (const auto& [k, vs] : this->state().entries) n += vs.size();
    return n;
  }

  void forEachLocal(auto&& body) const {
    for (const auto& [k, vs] : this->state().entries) body(k, vs);
  }

  template <class Rule>
  void moveAtSync(Rule&& rule, CollectiveMoveManager& mm) {
    detail::stageKeyedMove<K, std::vector<V>>(this->group(), this->id(), kCodecEntries,
                                              this->statePtr(), std::forward<Rule>(rule), mm);
  }

  /// Teamed: moves every entry to the place the distribution assigns its key.
  /// Only defined for 64-bit integer keys.
  void relocate(const DistributionRecord& d) {
    static_assert(std::is_convertible_v<K, std::int64_t>,
                  "relocate needs 64-bit integer keys");
    const TeamedPlaceGroup& g = this->group();
    std::vector<std::string> uncovered;
    for (const auto& [k, vs] : this->state().entries)
      if (!d.lookup(static_cast<std::int64_t>(k)))
        uncovered.push_back(detail::keyRepr(k));
    if (!uncovered.empty()) {
      std::string msg = "distribution does not cover local keys:";
      for (const auto& k : uncovered) msg += " " + k;
      throw UsageError(msg);
    }
    CollectiveMoveManager mm(g);
    moveAtSync([&d](const K& k) { return *d.lookup(static_cast<std::int64_t>(k)); }, mm);
    mm.sync();
  }

  static std::shared_ptr<State> makeState(const TeamedPlaceGroup&, ByteReader&) {
    return std::make_shared<State>();
  }

  static void onAttach(GlobalId id, const TeamedPlaceGroup&, std::shared_ptr<State> s) {
    detail::relocationHub().add(id, [s](std::uint16_t codec, ByteReader& r) {
      if (codec != kCodecEntries)
        throw ProtocolError("multimap received frame with unknown codec " + std::to_string(codec));
      std::uint64_t n = r.u64();
      for (std::uint64_t i = 0; i < n; ++i) {
        K k{};
        std::vector<V> vs;
        deserialize(r, k);
        deserialize(r, vs);
        auto& lane = s->entries[std::move(k)];
        for (V& v : vs) lane.push_back(std::move(v));
      }
    });
  }

  friend void serialize(ByteWriter& w, const DistMultiMap& m) { m.writeRef(w); }
  friend void deserialize(ByteReader& r, DistMultiMap& m) { m.readRef(r); }
};

}  // namespace rdc

#endif  // RDC_COLLECTIONS_DIST_MAP_HPP
