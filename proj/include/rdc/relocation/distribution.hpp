#ifndef RDC_RELOCATION_DISTRIBUTION_HPP
#define RDC_RELOCATION_DISTRIBUTION_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rdc/bytes.hpp"
#include "rdc/errors.hpp"
#include "rdc/ranges/long_range.hpp"
#include "rdc/runtime/place.hpp"
#include "rdc/runtime/teamed_place_group.hpp"

namespace rdc {

/// One locally observed ownership change, pending reconciliation.
struct DistDelta {
  bool gain = false;  // true: this place acquired r; false: it gave r away
  LongRange r;
};

inline void serialize(ByteWriter& w, const DistDelta& d) {
  w.boolean(d.gain);
  serialize(w, d.r);
}
inline void deserialize(ByteReader& r, DistDelta& d) {
  d.gain = r.boolean();
  deserialize(r, d.r);
}

/// Which place holds which index range. Ranges are pairwise disjoint;
/// adjacent ranges with the same owner are kept merged so records compare
/// canonically.
class DistributionRecord {
public:
  std::optional<Place> lookup(std::int64_t i) const {
    auto it = segments_.upper_bound(i);
    if (it == segments_.begin()) return std::nullopt;
    --it;
    if (i < it->second.to) return Place(it->second.owner);
    return std::nullopt;
  }

  /// Grants r to p. Any overlap with current coverage is a consistency
  /// violation: two places would both believe they hold an index.
  void setOwner(const LongRange& r, Place p) {
    if (r.empty()) return;
    if (auto clash = firstOverlap(r))
      throw UsageError("ownership of " + r.toString() + " for " + p.toString() +
                       " overlaps " + clash->first.toString() + " held by " +
                       clash->second.toString());
    segments_[r.from] = Seg{r.to, p.id()};
    coalesceAround(r.from);
  }

  /// Withdraws r from coverage, splitting segments at the bounds as needed.
  /// Indices in r not currently covered are ignored.
  void clearOwner(const LongRange& r) {
    if (r.empty()) return;
    splitAt(r.from);
    splitAt(r.to);
    auto it = segments_.lower_bound(r.from);
    while (it != segments_.end() && it->first < r.to) it = segments_.erase(it);
  }

  std::vector<std::pair<LongRange, Place>> ranges() const {
    std::vector<std::pair<LongRange, Place>> out;
    out.reserve(segments_.size());
    for (const auto& [from, seg] : segments_)
      out.emplace_back(LongRange{from, seg.to}, Place(seg.owner));
    return out;
  }

  bool empty() const { return segments_.empty(); }
  std::size_t segmentCount() const { return segments_.size(); }

  /// Total number of covered indices.
  std::int64_t coveredCount() const {
    std::int64_t n = 0;
    for (const auto& [from, seg] : segments_) n += seg.to - from;
    return n;
  }

  bool operator==(const DistributionRecord& o) const { return segments_ == o.segments_; }

private:
  struct Seg {
    std::int64_t to;
    std::uint32_t owner;
    bool operator==(const Seg&) const = default;
  };

  std::optional<std::pair<LongRange, Place>> firstOverlap(const LongRange& r) const {
    auto it = segments_.upper_bound(r.from);
    if (it != segments_.begin()) {
      auto prev = std::prev(it);
      if (prev->second.to > r.from)
        return std::make_pair(LongRange{prev->first, prev->second.to}, Place(prev->second.owner));
    }
    if (it != segments_.end() && it->first < r.to)
      return std::make_pair(LongRange{it->first, it->second.to}, Place(it->second.owner));
    return std::nullopt;
  }

  void splitAt(std::int64_t i) {
    auto it = segments_.upper_bound(i);
    if (it == segments_.begin()) return;
    --it;
    if (it->first < i && i < it->second.to) {
      Seg tail{it->second.to, it->second.owner};
      it->second.to = i;
      segments_[i] = tail;
    }
  }

  void coalesceAround(std::int64_t from) {
    auto it = segments_.find(from);
    if (it == segments_.end()) return;
    if (it != segments_.begin()) {
      auto prev = std::prev(it);
      if (prev->second.to == it->first && prev->second.owner == it->second.owner) {
        prev->second.to = it->second.to;
        segments_.erase(it);
        it = prev;
      }
    }
    auto next = std::next(it);
    if (next != segments_.end() && it->second.to == next->first &&
        it->second.owner == next->second.owner) {
      it->second.to = next->second.to;
      segments_.erase(next);
    }
  }

  std::map<std::int64_t, Seg> segments_;
};

/// Distribution bookkeeping embedded in tracked collections: the reconciled
/// record plus the local not-yet-communicated net change. Gains and losses
/// cancel as they are noted (gain [0,50) then loss [38,50) nets to a gain of
/// [0,38)), so the exchanged log never replays ownership a place already gave
/// away, and an unchanged world exchanges zero delta bytes.
struct DistTracker {
  DistributionRecord record;
  std::map<std::int64_t, std::int64_t> pendingGains, pendingLosses;  // from -> to
  std::uint64_t lastDeltaBytes = 0;

  void noteGain(const LongRange& r) {
    if (r.empty()) return;
    for (const LongRange& piece : carve(pendingLosses, r)) pendingGains[piece.from] = piece.to;
  }
  void noteLoss(const LongRange& r) {
    if (r.empty()) return;
    for (const LongRange& piece : carve(pendingGains, r)) pendingLosses[piece.from] = piece.to;
  }

  /// Teamed reconciliation: one allgather of everybody's net deltas, then
  /// losses are applied first and gains after, ranks ascending, so a range
  /// that changed hands lands exactly once.
  void updateDist(const TeamedPlaceGroup& g) {
    ByteWriter w;
    for (const auto& [f, t] : pendingLosses) serialize(w, DistDelta{false, LongRange{f, t}});
    for (const auto& [f, t] : pendingGains) serialize(w, DistDelta{true, LongRange{f, t}});
    std::vector<Bytes> all = g.allgatherBytes(w.take());
    lastDeltaBytes = 0;
    for (const Bytes& b : all) lastDeltaBytes += b.size();
    std::vector<std::vector<DistDelta>> perRank(all.size());
    for (std::size_t r = 0; r < all.size(); ++r) {
      ByteReader rd(all[r]);
      while (!rd.atEnd()) {
        DistDelta d;
        deserialize(rd, d);
        perRank[r].push_back(d);
      }
    }
    for (std::size_t r = 0; r < perRank.size(); ++r)
      for (const DistDelta& d : perRank[r])
        if (!d.gain) record.clearOwner(d.r);
    for (std::size_t r = 0; r < perRank.size(); ++r)
      for (const DistDelta& d : perRank[r])
        if (d.gain) record.setOwner(d.r, g.placeAt(static_cast<int>(r)));
    pendingGains.clear();
    pendingLosses.clear();
  }

private:
  /// Removes r's overlap with set (splitting entries at the bounds) and
  /// returns the pieces of r that set did not cover.
  static std::vector<LongRange> carve(std::map<std::int64_t, std::int64_t>& set,
                                      const LongRange& r) {
    std::vector<LongRange> uncovered;
    std::int64_t cursor = r.from;
    while (cursor < r.to) {
      auto it = set.upper_bound(cursor);
      if (it != set.begin() && std::prev(it)->second > cursor) --it;
      if (it == set.end() || it->first >= r.to) {
        uncovered.push_back(LongRange{cursor, r.to});
        break;
      }
      std::int64_t f = it->first, t = it->second;
      if (cursor < f) {
        uncovered.push_back(LongRange{cursor, f});
        cursor = f;
      }
      std::int64_t ovT = std::min(t, r.to);
      set.erase(it);
      if (f < cursor) set[f] = cursor;  // left remnant survives
      if (ovT < t) set[ovT] = t;        // right remnant survives
      cursor = ovT;
    }
    return uncovered;
  }
};

}  // namespace rdc

#endif  // RDC_RELOCATION_DISTRIBUTION_HPP
