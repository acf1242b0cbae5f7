#ifndef RDC_COLLECTIONS_DIST_ID_MAP_HPP
#define RDC_COLLECTIONS_DIST_ID_MAP_HPP

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rdc/collections/team_ops.hpp"
#include "rdc/parallel/parallel.hpp"
#include "rdc/registry/collection_handle.hpp"
#include "rdc/relocation/distribution.hpp"
#include "rdc/relocation/move_manager.hpp"

namespace rdc {

namespace detail {
template <class V>
struct DistIdMapState {
  std::map<std::int64_t, V> entries;
  DistTracker tracker;
};
}  // namespace detail

/// Distributed map keyed by 64-bit index whose placement is tracked: every
/// put/remove/move logs an ownership delta (one singleton range per key), and
/// updateDist reconciles the global picture by exchanging only those deltas.
template <class V>
class DistIdMap : public CollectionHandle<DistIdMap<V>, detail::DistIdMapState<V>> {
  using State = detail::DistIdMapState<V>;
  static constexpr std::uint16_t kCodecEntries = 1;

public:
  DistIdMap() = default;

  static DistIdMap create(const TeamedPlaceGroup& g) {
    DistIdMap m;
    m.createNew(g, {});
    return m;
  }

  void put(std::int64_t k, V v) {
    auto& s = this->state();
    auto [it, inserted] = s.entries.insert_or_assign(k, std::move(v));
    (void)it;
    if (inserted) s.tracker.noteGain(LongRange{k, k + 1});
  }

  std::optional<V> get(std::int64_t k) const {
    const auto& m = this->state().entries;
    auto it = m.find(k);
    if (it == m.end()) return std::nullopt;
    return it->second;
  }

  V* find(std::int64_t k) {
    auto& m = this->state().entries;
    auto it = m.find(k);
    return it == m.end() ? nullptr : &it->second;
  }

  bool containsKey(std::int64_t k) const { return this->state().entries.contains(k); }

  bool remove(std::int64_t k) {
    auto& s = this->state();
    if (s.entries.erase(k) == 0) return false;
    s.tracker.noteLoss(LongRange{k, k + 1});
    return true;
  }

  std::size_t localSize() const { return this->state().entries.size(); }

  void forEachLocal(auto&& body) {
    for (auto& [k, v] : this->state().entries) body(k, v);
  }
  void forEachLocal(auto&& body) const {
    for (const auto& [k, v] : this->state().entries) body(k, v);
  }

  std::map<std::int64_t, V>& localEntries() { return this->state().entries; }

  std::vector<std::int64_t> localKeys() const {
    std::vector<std::int64_t> out;
    out.reserve(this->state().entries.size());
    for (const auto& [k, v] : this->state().entries) out.push_back(k);
    return out;
  }

  template <class Rule>
  void moveAtSync(Rule&& rule, CollectiveMoveManager& mm) {
    auto s = this->statePtr();
    const TeamedPlaceGroup& g = this->group();
    Place self = detail::selfPlace();
    std::map<std::uint32_t, std::vector<std::int64_t>> buckets;
    for (const auto& [k, v] : s->entries) {
      Place dest = rule(k);
      if (!g.contains(dest))
        throw UsageError("relocation rule sends key " + std::to_string(k) + " to " +
                         dest.toString() + ", which is outside the group");
      if (dest == self) continue;
      buckets[dest.id()].push_back(k);
    }
    for (auto& [destId, keys] : buckets) {
      auto keysPtr = std::make_shared<std::vector<std::int64_t>>(std::move(keys));
      mm.stage(
          Place(destId), this->id(), kCodecEntries,
          [s, keysPtr](ByteWriter& w) {
            w.u64(static_cast<std::uint64_t>(keysPtr->size()));
            for (std::int64_t k : *keysPtr) {
              auto it = s->entries.find(k);
              if (it == s->entries.end())
                throw UsageError("key " + std::to_string(k) +
                                 " staged for relocation is no longer present");
              w.i64(k);
              serialize(w, it->second);
            }
          },
          [s, keysPtr] {
            for (std::int64_t k : *keysPtr)
              if (s->entries.erase(k) > 0) s->tracker.noteLoss(LongRange{k, k + 1});
          });
    }
  }

  /// Teamed: every entry moves to the place the distribution assigns it.
  void relocate(const DistributionRecord& d) {
    const TeamedPlaceGroup& g = this->group();
    std::vector<std::int64_t> uncovered;
    for (const auto& [k, v] : this->state().entries)
      if (!d.lookup(k)) uncovered.push_back(k);
    if (!uncovered.empty()) {
      std::string msg = "distribution does not cover local keys:";
      for (std::int64_t k : uncovered) msg += " " + std::to_string(k);
      throw UsageError(msg);
    }
    CollectiveMoveManager mm(g);
    moveAtSync([&d](std::int64_t k) { return *d.lookup(k); }, mm);
    mm.sync();
  }

  /// Teamed reconciliation of the tracked distribution; only deltas travel.
  void updateDist() { this->state().tracker.updateDist(this->group()); }

  /// Local, read-only snapshot of the record as of the last updateDist.
  DistributionRecord getDistribution() const { return this->state().tracker.record; }

  std::uint64_t lastExchangedDeltaBytes() const { return this->state().tracker.lastDeltaBytes; }

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
        throw ProtocolError("id map received frame with unknown codec " + std::to_string(codec));
      std::uint64_t n = r.u64();
      for (std::uint64_t i = 0; i < n; ++i) {
        std::int64_t k = r.i64();
        V v{};
        deserialize(r, v);
        auto [it, inserted] = s->entries.insert_or_assign(k, std::move(v));
        (void)it;
        if (inserted) s->tracker.noteGain(LongRange{k, k + 1});
      }
    });
  }

  friend void serialize(ByteWriter& w, const DistIdMap& m) { m.writeRef(w); }
  friend void deserialize(ByteReader& r, DistIdMap& m) { m.readRef(r); }
};

}  // namespace rdc

#endif  // RDC_COLLECTIONS_DIST_ID_MAP_HPP
