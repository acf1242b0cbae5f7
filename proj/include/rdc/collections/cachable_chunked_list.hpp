#ifndef RDC_COLLECTIONS_CACHABLE_CHUNKED_LIST_HPP
#define RDC_COLLECTIONS_CACHABLE_CHUNKED_LIST_HPP

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rdc/collections/team_ops.hpp"
#include "rdc/ranges/chunked_list.hpp"
#include "rdc/registry/collection_handle.hpp"
#include "rdc/runtime/teamed_place_group.hpp"

namespace rdc {

namespace detail {
template <class T>
struct CachableChunkedListState {
  ChunkedList<T> local;              // held by this place only
  ChunkedList<T> shared;             // replicated on every member
  std::map<LongRange, Place> owner;  // per shared range: the contributing place
};
}  // namespace detail

/// Emits one primitive at a time while packing element state for reduction.
class PrimitiveSink {
public:
  explicit PrimitiveSink(std::vector<double>* buf) : buf_(buf) {}
  void emit(double v) { buf_->push_back(v); }

private:
  std::vector<double>* buf_;
};

/// Hands back reduced primitives in emission order.
class PrimitiveSource {
public:
  explicit PrimitiveSource(const std::vector<double>* buf) : buf_(buf) {}
  double next() {
    if (pos_ >= buf_->size()) throw ProtocolError("primitive read past the reduced buffer");
    return (*buf_)[pos_++];
  }
  std::size_t consumed() const { return pos_; }

private:
  const std::vector<double>* buf_;
  std::size_t pos_ = 0;
};

/// Chunked list whose ranges can be replicated across the group. Unshared
/// chunks behave like any local chunked list; shared ranges exist on every
/// member with a recorded primary owner, and their element state can be
/// reduced replica-wise without re-sending whole objects.
template <class T>
class CachableChunkedList
    : public CollectionHandle<CachableChunkedList<T>, detail::CachableChunkedListState<T>> {
  using State = detail::CachableChunkedListState<T>;

public:
  CachableChunkedList() = default;

  static CachableChunkedList create(const TeamedPlaceGroup& g) {
    CachableChunkedList c;
    c.createNew(g, {});
    return c;
  }

  void addChunk(LongRange r, std::vector<T> data) {
    this->state().local.addChunk(r, std::move(data));
  }

  ChunkedList<T>& local() { return this->state().local; }
  ChunkedList<T>& shared() { return this->state().shared; }
  const ChunkedList<T>& shared() const { return this->state().shared; }

  std::vector<std::pair<LongRange, Place>> sharedRanges() const {
    std::vector<std::pair<LongRange, Place>> out;
    for (const auto& [r, p] : this->state().owner) out.emplace_back(r, p);
    return out;
  }

  std::optional<Place> sharedOwnerOf(const LongRange& r) const {
    const auto& m = this->state().owner;
    auto it = m.find(r);
    if (it == m.end()) return std::nullopt;
    return it->second;
  }

  /// Teamed: every member contributes zero or more locally held ranges; all
  /// contributions replicate onto every member, each recording its
  /// contributor as primary owner. Calling with no ranges means "receive
  /// only".
  void share(const std::vector<LongRange>& ranges = {}) {
    auto s = this->statePtr();
    const TeamedPlaceGroup& g = this->group();
    for (const LongRange& r : ranges) {
      if (r.empty()) continue;
      if (!s->local.containsRange(r)) {
        auto miss = s->local.firstMissingIndex(r);
        throw RangeError("cannot share " + r.toString() + ": not locally present" +
                         (miss ? ", index " + std::to_string(*miss) + " missing"
                               : std::string{}));
      }
    }
    ByteWriter w;
    for (const LongRange& r : ranges) {
      if (r.empty()) continue;
      serialize(w, r);
      for (std::int64_t i = r.from; i < r.to; ++i) serialize(w, s->local.at(i));
    }
    std::vector<Bytes> all = g.allgatherBytes(w.take());
    int me = g.myRank();
    for (int rank = 0; rank < g.size(); ++rank) {
      ByteReader rd(all[static_cast<std::size_t>(rank)]);
      while (!rd.atEnd()) {
        LongRange rr;
        deserialize(rd, rr);
        std::vector<T> vals;
        vals.reserve(static_cast<std::size_t>(rr.size()));
        for (std::int64_t i = rr.from; i < rr.to; ++i) {
          T v{};
          deserialize(rd, v);
          vals.push_back(std::move(v));
        }
        if (rank == me) {
          // contribution leaves the private part and becomes the replica
          s->local.splitChunk(rr);
          std::vector<LongRange> doomed;
          for (const LongRange& cr : s->local.ranges())
            if (rr.contains(cr)) doomed.push_back(cr);
          for (const LongRange& cr : doomed) s->local.removeChunk(cr);
        }
        s->shared.addChunk(rr, std::move(vals));
        s->owner[rr] = g.placeAt(rank);
      }
    }
  }

  /// Teamed: write packs k primitives per shared element (same k everywhere);
  /// matching primitives reduce element-wise across all replicas in ascending
  /// rank order, and read consumes the reduced values back into each replica.
  template <class Write, class Read>
  void allreducePrimitive(Write&& write, Read&& read, ReduceOp op) {
    auto s = this->statePtr();
    std::vector<double> buf;
    std::optional<std::size_t> k;
    PrimitiveSink sink(&buf);
    s->shared.forEach([&](T& t) {
      std::size_t before = buf.size();
      write(sink, t);
      std::size_t emitted = buf.size() - before;
      if (!k)
        k = emitted;
      else if (*k != emitted)
        throw ProtocolError("allreduce framing: an element emitted " + std::to_string(emitted) +
                            " primitives where earlier elements emitted " + std::to_string(*k));
    });
    std::vector<double> reduced = teamElementwiseDoubles(this->group(), buf, op);
    PrimitiveSource src(&reduced);
    s->shared.forEach([&](T& t) { read(src, t); });
    if (src.consumed() != reduced.size())
      throw ProtocolError("allreduce framing: read consumed " + std::to_string(src.consumed()) +
                          " of " + std::to_string(reduced.size()) + " reduced primitives");
  }

  static std::shared_ptr<State> makeState(const TeamedPlaceGroup&, ByteReader&) {
    return std::make_shared<State>();
  }

  friend void serialize(ByteWriter& w, const CachableChunkedList& c) { c.writeRef(w); }
  friend void deserialize(ByteReader& r, CachableChunkedList& c) { c.readRef(r); }
};

}  // namespace rdc

#endif  // RDC_COLLECTIONS_CACHABLE_CHUNKED_LIST_HPP
