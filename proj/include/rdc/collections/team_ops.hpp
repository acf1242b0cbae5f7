#ifndef RDC_COLLECTIONS_TEAM_OPS_HPP
#define RDC_COLLECTIONS_TEAM_OPS_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "rdc/bytes.hpp"
#include "rdc/errors.hpp"
#include "rdc/runtime/teamed_place_group.hpp"

namespace rdc {

/// Merges each member's local partial into one identical global reducer:
/// partials fold in ascending rank order, so even non-commutative merges and
/// floating-point sums come out bit-identical on every member.
template <class R>
R teamMergeReducer(const TeamedPlaceGroup& g, const R& partial, const R& proto) {
  ByteWriter w;
  serialize(w, partial);
  Bytes folded = g.allreduceBytes(w.take(), [&proto](const Bytes& a, const Bytes& b) {
    R ra = proto.newReducer();
    {
      ByteReader r(a);
      deserialize(r, ra);
    }
    R rb = proto.newReducer();
    {
      ByteReader r(b);
      deserialize(r, rb);
    }
    ra.merge(rb);
    ByteWriter out;
    serialize(out, ra);
    return out.take();
  });
  R result = proto.newReducer();
  ByteReader r(folded);
  deserialize(r, result);
  return result;
}

enum class ReduceOp : std::uint8_t { Sum, Min, Max };

inline double applyReduceOp(ReduceOp op, double a, double b) {
  switch (op) {
    case ReduceOp::Sum: return a + b;
    case ReduceOp::Min: return b < a ? b : a;
    case ReduceOp::Max: return a < b ? b : a;
  }
  throw UsageError("unknown reduce op");
}

/// Element-wise reduction of equal-length double vectors across the group,
/// folded rank-ascending. Unequal lengths mean the members disagreed about
/// how many primitives each element emits.
inline std::vector<double> teamElementwiseDoubles(const TeamedPlaceGroup& g,
                                                  const std::vector<double>& mine, ReduceOp op) {
  ByteWriter w;
  for (double v : mine) w.f64(v);
  Bytes folded = g.allreduceBytes(w.take(), [op](const Bytes& a, const Bytes& b) {
    if (a.size() != b.size())
      throw ProtocolError("elementwise reduce framing: " + std::to_string(a.size()) +
                          " bytes vs " + std::to_string(b.size()));
    ByteReader ra(a), rb(b);
    ByteWriter acc;
    while (!ra.atEnd()) acc.f64(applyReduceOp(op, ra.f64(), rb.f64()));
    return acc.take();
  });
  ByteReader r(folded);
  std::vector<double> out;
  out.reserve(mine.size());
  while (!r.atEnd()) out.push_back(r.f64());
  return out;
}

}  // namespace rdc

#endif  // RDC_COLLECTIONS_TEAM_OPS_HPP
