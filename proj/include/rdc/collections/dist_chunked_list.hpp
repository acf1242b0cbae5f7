#ifndef RDC_COLLECTIONS_DIST_CHUNKED_LIST_HPP
#define RDC_COLLECTIONS_DIST_CHUNKED_LIST_HPP

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "rdc/collections/team_ops.hpp"
#include "rdc/parallel/parallel.hpp"
#include "rdc/ranges/chunked_list.hpp"
#include "rdc/registry/collection_handle.hpp"
#include "rdc/relocation/distribution.hpp"
#include "rdc/relocation/move_manager.hpp"

namespace rdc {

namespace detail {

template <class T>
struct DistChunkedListState {
  ChunkedList<T> list;
};

template <class T>
struct DistColState {
  ChunkedList<T> list;
  DistTracker tracker;
};

/// Range staging shared by both chunked collections. The serializer encodes
/// the pieces of r as they are chunked at sync time; removal splits at r's
/// bounds, drops everything inside, and reports each dropped piece through
/// onLoss (a no-op for the untracked collection).
template <class T, class S>
void stageRangeMove(GlobalId id, std::uint16_t codec, std::shared_ptr<S> s, const LongRange& r,
                    Place dest, CollectiveMoveManager& mm,
                    std::function<void(const LongRange&)> onLoss) {
  if (r.empty()) return;
  if (!s->list.containsRange(r)) {
    auto miss = s->list.firstMissingIndex(r);
    throw RangeError("range " + r.toString() + " is not locally held" +
                     (miss ? ", index " + std::to_string(*miss) + " missing" : std::string{}));
  }
  mm.stage(
      dest, id, codec,
      [s, r](ByteWriter& w) {
        std::vector<const Chunk<T>*> touched;
        for (const auto& [from, chunk] : s->list.chunks())
          if (chunk.range.overlaps(r)) touched.push_back(&chunk);
        w.u64(static_cast<std::uint64_t>(touched.size()));
        for (const Chunk<T>* c : touched) {
          LongRange piece = c->range.intersection(r);
          serialize(w, piece);
          for (std::int64_t i = piece.from; i < piece.to; ++i) serialize(w, c->raw(i));
        }
      },
      [s, r, onLoss = std::move(onLoss)] {
        s->list.splitChunk(r);
        std::vector<LongRange> doomed;
        for (const LongRange& cr : s->list.ranges())
          if (r.contains(cr)) doomed.push_back(cr);
        for (const LongRange& cr : doomed) {
          s->list.removeChunk(cr);
          onLoss(cr);
        }
      });
}

}  // namespace detail

/// Distributed list of index chunks: each place holds disjoint ranges
/// locally; ranges relocate wholesale between places.
template <class T>
class DistChunkedList
    : public CollectionHandle<DistChunkedList<T>, detail::DistChunkedListState<T>> {
  using State = detail::DistChunkedListState<T>;
  static constexpr std::uint16_t kCodecChunks = 1;

public:
  DistChunkedList() = default;

  static DistChunkedList create(const TeamedPlaceGroup& g) {
    DistChunkedList c;
    c.createNew(g, {});
    return c;
  }

  ChunkedList<T>& local() { return this->state().list; }
  const ChunkedList<T>& local() const { return this->state().list; }

  void addChunk(LongRange r, std::vector<T> data) {
    this->state().list.addChunk(r, std::move(data));
  }

  T& at(std::int64_t i) { return this->state().list.at(i); }
  std::int64_t localSize() const { return this->state().list.size(); }
  std::vector<LongRange> localRanges() const { return this->state().list.ranges(); }

  void parallelForEachLocal(auto&& body, unsigned workers = 0) {
    parallelForEach(this->state().list, body, workers);
  }

  /// Stages the entries of r for dest; chunks split at r's bounds as needed.
  void moveRangeAtSync(const LongRange& r, Place dest, CollectiveMoveManager& mm) {
    detail::stageRangeMove<T>(this->id(), kCodecChunks, this->statePtr(), r, dest, mm,
                              [](const LongRange&) {});
  }

  template <class R>
  R teamParallelReduce(const R& proto, unsigned workers = 0) {
    R partial = parallelReduce(this->state().list, proto, workers);
    return teamMergeReducer(this->group(), partial, proto);
  }

  static std::shared_ptr<State> makeState(const TeamedPlaceGroup&, ByteReader&) {
    return std::make_shared<State>();
  }

  static void onAttach(GlobalId id, const TeamedPlaceGroup&, std::shared_ptr<State> s) {
    detail::relocationHub().add(id, [s](std::uint16_t codec, ByteReader& r) {
      if (codec != kCodecChunks)
        throw ProtocolError("chunked list received frame with unknown codec " +
                            std::to_string(codec));
      std::uint64_t pieces = r.u64();
      for (std::uint64_t p = 0; p < pieces; ++p) {
        LongRange rr;
        deserialize(r, rr);
        std::vector<T> vals;
        vals.reserve(static_cast<std::size_t>(rr.size()));
        for (std::int64_t i = rr.from; i < rr.to; ++i) {
          T v{};
          deserialize(r, v);
          vals.push_back(std::move(v));
        }
        s->list.addChunk(rr, std::move(vals));
      }
    });
  }

  friend void serialize(ByteWriter& w, const DistChunkedList& c) { c.writeRef(w); }
  friend void deserialize(ByteReader& r, DistChunkedList& c) { c.readRef(r); }
};

/// DistChunkedList whose placement is tracked: chunk additions, removals, and
/// relocations log ownership deltas, and updateDist reconciles the global
/// range → place record on every member.
template <class T>
class DistCol : public CollectionHandle<DistCol<T>, detail::DistColState<T>> {
  using State = detail::DistColState<T>;
  static constexpr std::uint16_t kCodecChunks = 1;

public:
  DistCol() = default;

  static DistCol create(const TeamedPlaceGroup& g) {
    DistCol c;
    c.createNew(g, {});
    return c;
  }

  ChunkedList<T>& local() { return this->state().list; }
  const ChunkedList<T>& local() const { return this->state().list; }

  void addChunk(LongRange r, std::vector<T> data) {
    auto& s = this->state();
    s.list.addChunk(r, std::move(data));
    s.tracker.noteGain(r);
  }

  T& at(std::int64_t i) { return this->state().list.at(i); }
  std::int64_t localSize() const { return this->state().list.size(); }
  std::vector<LongRange> localRanges() const { return this->state().list.ranges(); }

  void parallelForEachLocal(auto&& body, unsigned workers = 0) {
    parallelForEach(this->state().list, body, workers);
  }

  void moveRangeAtSync(const LongRange& r, Place dest, CollectiveMoveManager& mm) {
    auto s = this->statePtr();
    detail::stageRangeMove<T>(this->id(), kCodecChunks, s, r, dest, mm,
                              [s](const LongRange& lost) { s->tracker.noteLoss(lost); });
  }

  void updateDist() { this->state().tracker.updateDist(this->group()); }
  DistributionRecord getDistribution() const { return this->state().tracker.record; }
  std::uint64_t lastExchangedDeltaBytes() const { return this->state().tracker.lastDeltaBytes; }

  template <class R>
  R teamParallelReduce(const R& proto, unsigned workers = 0) {
    R partial = parallelReduce(this->state().list, proto, workers);
    return teamMergeReducer(this->group(), partial, proto);
  }

  static std::shared_ptr<State> makeState(const TeamedPlaceGroup&, ByteReader&) {
    return std::make_shared<State>();
  }

  static void onAttach(GlobalId id, const TeamedPlaceGroup&, std::shared_ptr<State> s) {
    detail::relocationHub().add(id, [s](std::uint16_t codec, ByteReader& r) {
      if (codec != kCodecChunks)
        throw ProtocolError("tracked list received frame with unknown codec " +
                            std::to_string(codec));
      std::uint64_t pieces = r.u64();
      for (std::uint64_t p = 0; p < pieces; ++p) {
        LongRange rr;
        deserialize(r, rr);
        std::vector<T> vals;
        vals.reserve(static_cast<std::size_t>(rr.size()));
        for (std::int64_t i = rr.from; i < rr.to; ++i) {
          T v{};
          deserialize(r, v);
          vals.push_back(std::move(v));
        }
        s->list.addChunk(rr, std::move(vals));
        s->tracker.noteGain(rr);
      }
    });
  }

  friend void serialize(ByteWriter& w, const DistCol& c) { c.writeRef(w); }
  friend void deserialize(ByteReader& r, DistCol& c) { c.readRef(r); }
};

}  // namespace rdc

#endif  // RDC_COLLECTIONS_DIST_CHUNKED_LIST_HPP
