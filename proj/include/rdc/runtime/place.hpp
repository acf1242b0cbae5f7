#ifndef RDC_RUNTIME_PLACE_HPP
#define RDC_RUNTIME_PLACE_HPP

#include <compare>
#include <cstdint>
#include <ostream>
#include <string>

#include "rdc/bytes.hpp"

namespace rdc {

/// A logical process with its own isolated state. Ids are dense from 0 and
/// stable for the lifetime of a run.
class Place {
public:
  Place() = default;
  explicit Place(std::uint32_t id) : id_(id) {}

  std::uint32_t id() const { return id_; }

  auto operator<=>(const Place&) const = default;

  std::string toString() const { return "place(" + std::to_string(id_) + ")"; }

private:
  std::uint32_t id_ = 0;
};

inline std::ostream& operator<<(std::ostream& os, const Place& p) { return os << p.toString(); }

inline void serialize(ByteWriter& w, const Place& p) { w.u32(p.id()); }
inline void deserialize(ByteReader& r, Place& p) { p = Place(r.u32()); }

}  // namespace rdc

#endif  // RDC_RUNTIME_PLACE_HPP
