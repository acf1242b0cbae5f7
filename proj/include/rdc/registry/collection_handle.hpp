#ifndef RDC_REGISTRY_COLLECTION_HANDLE_HPP
#define RDC_REGISTRY_COLLECTION_HANDLE_HPP

#include <memory>
#include <typeinfo>
#include <utility>

#include "rdc/bytes.hpp"
#include "rdc/registry/handle_registry.hpp"
#include "rdc/runtime/runtime.hpp"

namespace rdc {

namespace detail {
inline HandleRegistry& localRegistry() { return currentPlace().service<HandleRegistry>(); }
inline Place selfPlace() { return Place(currentPlace().id()); }
}  // namespace detail

/// Shared plumbing for the user-facing collection wrappers. A wrapper is a
/// cheap value: (GlobalId, definition group, pointer to this place's state).
/// Copying shares the state; serializing writes id + descriptor; deserializing
/// resolves (and on first contact constructs) the state of the place doing
/// the deserializing. Derived must provide:
///   static std::shared_ptr<State> makeState(const TeamedPlaceGroup&, ByteReader& params);
/// and may provide an idempotent
///   static void onAttach(GlobalId, const TeamedPlaceGroup&, std::shared_ptr<State>);
/// which fires whenever a place first binds (or re-references) the state,
/// e.g. to hook entry-relocation receivers into the place.
template <class Derived, class State>
class CollectionHandle {
public:
  GlobalId id() const { return id_; }
  const TeamedPlaceGroup& group() const { return group_; }

  bool samePlaceInstance(const CollectionHandle& o) const { return state_ == o.state_; }

protected:
  CollectionHandle() = default;

  /// Creator path: runs on exactly one place, touches no wires.
  void createNew(const TeamedPlaceGroup& g, Bytes params) {
    HandleRegistry& reg = detail::localRegistry();
    Place self = detail::selfPlace();
    id_ = reg.allocateId(self);
    group_ = g;
    ByteReader r(params);
    state_ = Derived::makeState(g, r);
    reg.bindNew(self, id_, state_,
                HandleRegistry::Descriptor{typeid(Derived).name(), g, std::move(params)});
    notifyAttach();
  }

  State& state() const {
    if (!state_) throw UsageError("collection handle used before initialization");
    return *state_;
  }
  std::shared_ptr<State> statePtr() const { return state_; }

  void writeRef(ByteWriter& w) const {
    serialize(w, id_);
    serialize(w, group_);
    // params fetched from the local registry; a place can only serialize a
    // wrapper it holds, and holding implies the descriptor was recorded
    auto d = detail::localRegistry().descriptorOf(id_);
    w.bytes(d.params);
  }

  void readRef(ByteReader& r) {
    deserialize(r, id_);
    deserialize(r, group_);
    Bytes params = r.bytes();
    HandleRegistry::Descriptor d{typeid(Derived).name(), group_, std::move(params)};
    state_ = detail::localRegistry().getOrCreate<State>(
        detail::selfPlace(), id_, std::move(d),
        [](const TeamedPlaceGroup& g, ByteReader& pr) { return Derived::makeState(g, pr); });
    notifyAttach();
  }

private:
  void notifyAttach() {
    if constexpr (requires { Derived::onAttach(id_, group_, state_); })
      Derived::onAttach(id_, group_, state_);
  }

  GlobalId id_;
  TeamedPlaceGroup group_;
  std::shared_ptr<State> state_;
};

}  // namespace rdc

#endif  // RDC_REGISTRY_COLLECTION_HANDLE_HPP
