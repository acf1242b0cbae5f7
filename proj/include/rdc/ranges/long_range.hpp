#ifndef RDC_RANGES_LONG_RANGE_HPP
#define RDC_RANGES_LONG_RANGE_HPP

#include <cstdint>
#include <ostream>
#include <string>

#include "rdc/bytes.hpp"
#include "rdc/errors.hpp"

namespace rdc {

/// Half-open interval of 64-bit indices: [from, to).
struct LongRange {
  std::int64_t from = 0;
  std::int64_t to = 0;

  LongRange() = default;
  LongRange(std::int64_t f, std::int64_t t) : from(f), to(t) {
    if (from > to) throw UsageError("LongRange: from > to (" + toString() + ")");
  }

  std::int64_t size() const { return to - from; }
  bool empty() const { return from == to; }
  bool contains(std::int64_t i) const { return from <= i && i < to; }
  bool contains(const LongRange& r) const { return r.empty() || (from <= r.from && r.to <= to); }
  bool overlaps(const LongRange& r) const { return from < r.to && r.from < to; }

  LongRange intersection(const LongRange& r) const {
    std::int64_t f = from > r.from ? from : r.from;
    std::int64_t t = to < r.to ? to : r.to;
    return f < t ? LongRange(f, t) : LongRange(f > t ? t : f, f > t ? t : f);
  }

  auto operator<=>(const LongRange&) const = default;

  std::string toString() const {
    return "[" + std::to_string(from) + "," + std::to_string(to) + ")";
  }
};

inline std::ostream& operator<<(std::ostream& os, const LongRange& r) {
  return os << r.toString();
}

inline void serialize(ByteWriter& w, const LongRange& r) {
  w.i64(r.from);
  w.i64(r.to);
}

inline void deserialize(ByteReader& r, LongRange& out) {
  out.from = r.i64();
  out.to = r.i64();
}

}  // namespace rdc

#endif  // RDC_RANGES_LONG_RANGE_HPP
