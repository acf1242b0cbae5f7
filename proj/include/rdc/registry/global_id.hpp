#ifndef RDC_REGISTRY_GLOBAL_ID_HPP
#define RDC_REGISTRY_GLOBAL_ID_HPP

#include <compare>
#include <cstdint>
#include <ostream>
#include <string>

#include "rdc/bytes.hpp"

namespace rdc {

/// Identity of a distributed collection, unique within a run: the creating
/// place plus that place's monotonically increasing counter. Ordered
/// lexicographically. Wire form: [u32 creatorPlace][u64 seq].
struct GlobalId {
  std::uint32_t creatorPlace = 0;
  std::uint64_t seq = 0;

  auto operator<=>(const GlobalId&) const = default;

  std::string toString() const {
    return "gid(" + std::to_string(creatorPlace) + ":" + std::to_string(seq) + ")";
  }
};

inline std::ostream& operator<<(std::ostream& os, const GlobalId& id) {
  return os << id.toString();
}

inline void serialize(ByteWriter& w, const GlobalId& id) {
  w.u32(id.creatorPlace);
  w.u64(id.seq);
}

inline void deserialize(ByteReader& r, GlobalId& id) {
  id.creatorPlace = r.u32();
  id.seq = r.u64();
}

}  // namespace rdc

#endif  // RDC_REGISTRY_GLOBAL_ID_HPP
