#ifndef RDC_REGISTRY_HANDLE_REGISTRY_HPP
#define RDC_REGISTRY_HANDLE_REGISTRY_HPP

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <utility>

#include "rdc/bytes.hpp"
#include "rdc/errors.hpp"
#include "rdc/registry/global_id.hpp"
#include "rdc/runtime/place.hpp"
#include "rdc/runtime/teamed_place_group.hpp"

namespace rdc {

/// Per-place table of collection handles. A handle is created either by the
/// local constructor call (creator place) or lazily, the first time a task
/// payload referencing its id is deserialized here. Never eagerly fanned out:
/// collection creation sends nothing anywhere.
class HandleRegistry {
public:
  struct Descriptor {
    std::string kind;        // diagnostic type name
    TeamedPlaceGroup group;  // definition group
    Bytes params;            // construction parameters, kind-specific encoding
  };

  GlobalId allocateId(Place self) {
    std::lock_guard lock(m_);
    return GlobalId{self.id(), nextSeq_++};
  }

  /// Creator-side bind. The id must be fresh.
  template <class S>
  void bindNew(Place self, const GlobalId& id, std::shared_ptr<S> state, Descriptor d) {
    if (!d.group.contains(self))
      throw UsageError("creator " + self.toString() + " is outside the definition group of " +
                       id.toString());
    std::lock_guard lock(m_);
    if (handles_.count(id))
      throw UsageError("id " + id.toString() + " already bound on " + self.toString());
    handles_[id] = std::move(state);
    descriptors_[id] = std::move(d);
    ++constructions_;
  }

  /// Resolve-side bind: returns the existing handle or constructs it from the
  /// descriptor (first caller wins; everyone observes that one instance).
  template <class S, class Make>
  std::shared_ptr<S> getOrCreate(Place self, const GlobalId& id, Descriptor d, Make&& make) {
    std::lock_guard lock(m_);
    auto it = handles_.find(id);
    if (it != handles_.end()) return std::static_pointer_cast<S>(it->second);
    if (!d.group.contains(self))
      throw UsageError("collection " + id.toString() + " (" + d.kind + ") referenced on " +
                       self.toString() + ", which is outside its definition group");
    ByteReader params(d.params);
    std::shared_ptr<S> state = make(d.group, params);
    handles_[id] = state;
    descriptors_[id] = std::move(d);
    ++constructions_;
    return state;
  }

  /// Lookup without a descriptor; absence is an error.
  template <class S>
  std::shared_ptr<S> lookup(const GlobalId& id) const {
    std::lock_guard lock(m_);
    auto it = handles_.find(id);
    if (it == handles_.end())
      throw UnresolvedIdError("no handle for " + id.toString() +
                              " on this place and no descriptor available");
    return std::static_pointer_cast<S>(it->second);
  }

  bool has(const GlobalId& id) const {
    std::lock_guard lock(m_);
    return handles_.count(id) != 0;
  }

  Descriptor descriptorOf(const GlobalId& id) const {
    std::lock_guard lock(m_);
    auto it = descriptors_.find(id);
    if (it == descriptors_.end())
      throw UnresolvedIdError("no descriptor recorded for " + id.toString());
    return it->second;
  }

  /// Number of local handle constructions so far (creator binds + lazy ones).
  std::uint64_t constructions() const {
    std::lock_guard lock(m_);
    return constructions_;
  }

  std::size_t handleCount() const {
    std::lock_guard lock(m_);
    return handles_.size();
  }

private:
  mutable std::mutex m_;
  std::uint64_t nextSeq_ = 0;
  std::uint64_t constructions_ = 0;
  std::map<GlobalId, std::shared_ptr<void>> handles_;
  std::map<GlobalId, Descriptor> descriptors_;
};

}  // namespace rdc

#endif  // RDC_REGISTRY_HANDLE_REGISTRY_HPP
