#ifndef RDC_COLLECTIONS_DIST_BAG_HPP
#define RDC_COLLECTIONS_DIST_BAG_HPP

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "rdc/collections/bag.hpp"
#include "rdc/collections/team_ops.hpp"
#include "rdc/parallel/parallel.hpp"
#include "rdc/registry/collection_handle.hpp"
#include "rdc/relocation/move_manager.hpp"

namespace rdc {

namespace detail {
template <class T>
struct DistBagState {
  Bag<T> bag;
  // tail-window cursor shared by all registrations of one sync epoch
  struct {
    std::uint64_t epoch = ~std::uint64_t{0};
    std::size_t taken = 0;
  } take;
};
}  // namespace detail

/// Distributed multiset: one independent bag per place of the group. Local
/// mutation is free of communication; gathering and reduction are teamed.
template <class T>
class DistBag : public CollectionHandle<DistBag<T>, detail::DistBagState<T>> {
  using State = detail::DistBagState<T>;
  static constexpr std::uint16_t kCodecElems = 1;

public:
  DistBag() = default;

  static DistBag create(const TeamedPlaceGroup& g) {
    DistBag b;
    b.createNew(g, {});
    return b;
  }

  Bag<T>& local() { return this->state().bag; }
  const Bag<T>& local() const { return this->state().bag; }

  void add(T v) { this->state().bag.add(std::move(v)); }
  std::size_t localSize() const { return this->state().bag.size(); }

  /// Stages the n newest local entries for dest; they leave this handle and
  /// appear in dest's at mm.sync(). Which entries move is the library's
  /// choice: the tail keeps older entries stable.
  void moveAtSyncCount(std::size_t n, Place dest, CollectiveMoveManager& mm) {
    auto s = this->statePtr();
    if (n > s->bag.size())
      throw UsageError("cannot stage " + std::to_string(n) + " entries from a bag holding " +
                       std::to_string(s->bag.size()));
    if (n == 0) return;
    CollectiveMoveManager* mp = &mm;
    mm.stage(
        dest, this->id(), kCodecElems,
        [s, n, mp](ByteWriter& w) {
          auto& tk = s->take;
          if (tk.epoch != mp->epoch()) {
            tk.epoch = mp->epoch();
            tk.taken = 0;
          }
          std::vector<T> picked = s->bag.peekFromEnd(tk.taken, n);
          tk.taken += n;
          w.u64(static_cast<std::uint64_t>(picked.size()));
          for (const T& v : picked) serialize(w, v);
        },
        [s, n] { s->bag.dropFromEnd(n); });
  }

  /// Teamed: every member's entries move into dest's handle; the rest end up
  /// empty. Pure collective, no CollectiveMoveManager involved.
  void teamGather(Place dest) {
    const TeamedPlaceGroup& g = this->group();
    if (!g.contains(dest))
      throw UsageError("gather destination " + dest.toString() + " is outside the group");
    auto s = this->statePtr();
    int me = g.myRank();
    int destRank = g.rankOf(dest);
    ByteWriter w;
    if (me != destRank) {
      std::vector<T> mine = s->bag.drain();
      w.u64(static_cast<std::uint64_t>(mine.size()));
      for (const T& v : mine) serialize(w, v);
    }
    std::vector<Bytes> all = g.gather(dest, w.take());
    if (me == destRank) {
      for (int r = 0; r < g.size(); ++r) {
        if (r == destRank) continue;
        ByteReader rd(all[static_cast<std::size_t>(r)]);
        std::uint64_t n = rd.u64();
        for (std::uint64_t i = 0; i < n; ++i) {
          T v{};
          deserialize(rd, v);
          s->bag.add(std::move(v));
        }
      }
    }
  }

  /// Teamed: local parallel reduction, then rank-ordered merge; every member
  /// returns the identical global value.
  template <class R>
  R teamParallelReduce(const R& proto, unsigned workers = 0) {
    R partial = parallelReduce(this->state().bag, proto, workers);
    return teamMergeReducer(this->group(), partial, proto);
  }

  static std::shared_ptr<State> makeState(const TeamedPlaceGroup&, ByteReader&) {
    return std::make_shared<State>();
  }

  static void onAttach(GlobalId id, const TeamedPlaceGroup&, std::shared_ptr<State> s) {
    detail::relocationHub().add(id, [s](std::uint16_t codec, ByteReader& r) {
      if (codec != kCodecElems)
        throw ProtocolError("bag received frame with unknown codec " + std::to_string(codec));
      std::uint64_t n = r.u64();
      for (std::uint64_t i = 0; i < n; ++i) {
        T v{};
        deserialize(r, v);
        s->bag.add(std::move(v));
      }
    });
  }

  friend void serialize(ByteWriter& w, const DistBag& b) { b.writeRef(w); }
  friend void deserialize(ByteReader& r, DistBag& b) { b.readRef(r); }
};

}  // namespace rdc

#endif  // RDC_COLLECTIONS_DIST_BAG_HPP
