#ifndef RDC_COLLECTIONS_CACHABLE_ARRAY_HPP
#define RDC_COLLECTIONS_CACHABLE_ARRAY_HPP

#include <cstdint>
#include <memory>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "rdc/registry/collection_handle.hpp"
#include "rdc/runtime/teamed_place_group.hpp"

namespace rdc {

namespace detail {
template <class T>
struct CachableArrayState {
  std::vector<T> data;
  Place owner{0};
};
}  // namespace detail

/// Dense sequence replicated on every place of the group, with one place
/// designated owner (the creating place by default). Replicas start from the
/// creation contents; broadcast re-synchronizes them from the owner through
/// user-chosen carrier values.
template <class T>
class CachableArray : public CollectionHandle<CachableArray<T>, detail::CachableArrayState<T>> {
  using State = detail::CachableArrayState<T>;

public:
  CachableArray() = default;

  static CachableArray create(const TeamedPlaceGroup& g, std::vector<T> initial) {
    Place owner = detail::selfPlace();
    ByteWriter w;
    w.u32(owner.id());
    w.u64(static_cast<std::uint64_t>(initial.size()));
    for (const T& v : initial) serialize(w, v);
    CachableArray a;
    a.createNew(g, w.take());
    return a;
  }

  std::size_t size() const { return this->state().data.size(); }
  T& operator[](std::size_t i) { return this->state().data[i]; }
  const T& operator[](std::size_t i) const { return this->state().data[i]; }
  std::vector<T>& localData() { return this->state().data; }

  Place owner() const { return this->state().owner; }
  bool isOwner() const { return this->state().owner == detail::selfPlace(); }

  void forEach(auto&& body) {
    for (T& v : this->state().data) body(v);
  }

  /// Teamed: the owner packs every element into a carrier value; carriers are
  /// broadcast and unpacked into the replicas in index order. The owner's own
  /// elements are never unpacked.
  template <class Pack, class Unpack>
  void broadcast(Pack&& pack, Unpack&& unpack) {
    auto s = this->statePtr();
    const TeamedPlaceGroup& g = this->group();
    using U = std::decay_t<decltype(pack(std::declval<const T&>()))>;
    Bytes payload;
    bool amOwner = s->owner == detail::selfPlace();
    if (amOwner) {
      ByteWriter w;
      for (const T& v : s->data) serialize(w, pack(v));
      payload = w.take();
    }
    Bytes got = g.bcast(s->owner, payload);
    if (!amOwner) {
      ByteReader r(got);
      for (T& v : s->data) {
        U u{};
        deserialize(r, u);
        unpack(u, v);
      }
      if (!r.atEnd())
        throw ProtocolError("broadcast carrier stream left " + std::to_string(r.remaining()) +
                            " undecoded bytes; replica length differs from owner");
    }
  }

  static std::shared_ptr<State> makeState(const TeamedPlaceGroup&, ByteReader& params) {
    auto s = std::make_shared<State>();
    s->owner = Place(params.u32());
    std::uint64_t n = params.u64();
    s->data.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) {
      T v{};
      deserialize(params, v);
      s->data.push_back(std::move(v));
    }
    return s;
  }

  friend void serialize(ByteWriter& w, const CachableArray& a) { a.writeRef(w); }
  friend void deserialize(ByteReader& r, CachableArray& a) { a.readRef(r); }
};

}  // namespace rdc

#endif  // RDC_COLLECTIONS_CACHABLE_ARRAY_HPP
