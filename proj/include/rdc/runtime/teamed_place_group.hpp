#ifndef RDC_RUNTIME_TEAMED_PLACE_GROUP_HPP
#define RDC_RUNTIME_TEAMED_PLACE_GROUP_HPP

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rdc/bytes.hpp"
#include "rdc/errors.hpp"
#include "rdc/runtime/place.hpp"

namespace rdc {

enum class CollOp : std::uint8_t;

/// Ordered set of places acting as one team. Rank i is the i-th member in
/// creation order. Value identity: two groups over the same ordered members
/// are the same group everywhere, so a group can travel inside task payloads
/// and still pair up its collectives.
class TeamedPlaceGroup {
public:
  TeamedPlaceGroup() = default;

  explicit TeamedPlaceGroup(std::vector<Place> members) : members_(std::move(members)) {
    if (members_.empty()) throw UsageError("place group must have at least one member");
    for (std::size_t i = 0; i < members_.size(); ++i)
      for (std::size_t j = i + 1; j < members_.size(); ++j)
        if (members_[i] == members_[j])
          throw UsageError("duplicate member " + members_[i].toString() + " in place group");
    key_ = computeKey();
  }

  /// All places of the running world, ranked by place id.
  static TeamedPlaceGroup world();

  int size() const { return static_cast<int>(members_.size()); }
  Place placeAt(int rank) const {
    if (rank < 0 || rank >= size())
      throw UsageError("rank " + std::to_string(rank) + " outside group of size " +
                       std::to_string(size()));
    return members_[static_cast<std::size_t>(rank)];
  }
  int rankOf(Place p) const {
    for (std::size_t i = 0; i < members_.size(); ++i)
      if (members_[i] == p) return static_cast<int>(i);
    return -1;
  }
  bool contains(Place p) const { return rankOf(p) >= 0; }
  const std::vector<Place>& members() const { return members_; }
  std::uint64_t key() const { return key_; }

  /// Rank of the calling place; the caller must be a member.
  int myRank() const;

  bool operator==(const TeamedPlaceGroup& o) const { return members_ == o.members_; }

  // Blocking teamed operations: every member must call the same op in the
  // same order, one calling activity per member.

  /// Each member announces how much it will send to every rank; returns what
  /// each rank will send to the caller (indexed by source rank).
  std::vector<std::int64_t> alltoall(const std::vector<std::int64_t>& sendCounts) const;

  /// Personalized byte exchange; payloads[r] goes to rank r. Returns the
  /// payloads received, indexed by source rank. If expectedLens is given,
  /// a received length that disagrees is a protocol error.
  std::vector<Bytes> alltoallv(
      const std::vector<Bytes>& payloads,
      const std::optional<std::vector<std::int64_t>>& expectedLens = std::nullopt) const;

  /// Root's payload, delivered to every member (root included).
  Bytes bcast(Place root, const Bytes& payload) const;

  /// Root receives every member's payload indexed by rank; non-roots get {}.
  std::vector<Bytes> gather(Place root, const Bytes& payload) const;

  /// One integer from each member, visible to all, indexed by rank.
  std::vector<std::int64_t> allgather1(std::int64_t v) const;

  /// One byte payload from each member, visible to all, indexed by rank.
  std::vector<Bytes> allgatherBytes(const Bytes& payload) const;

  /// Deterministic reduction: combine is folded over contributions in rank
  /// order (((r0 op r1) op r2) ...), so every member computes the identical
  /// result bit for bit.
  Bytes allreduceBytes(const Bytes& payload,
                       const std::function<Bytes(const Bytes&, const Bytes&)>& combine) const;

  void barrier() const;

private:
  std::vector<Bytes> allgatherImpl(CollOp op, const Bytes& payload) const;

  std::uint64_t computeKey() const {
    // FNV-1a over the ordered member ids
    std::uint64_t h = 1469598103934665603ull;
    for (const Place& p : members_) {
      std::uint32_t id = p.id();
      for (int b = 0; b < 4; ++b) {
        h ^= (id >> (8 * b)) & 0xff;
        h *= 1099511628211ull;
      }
    }
    return h;
  }

  std::vector<Place> members_;
  std::uint64_t key_ = 0;
};

inline void serialize(ByteWriter& w, const TeamedPlaceGroup& g) { serialize(w, g.members()); }
inline void deserialize(ByteReader& r, TeamedPlaceGroup& g) {
  std::vector<Place> members;
  deserialize(r, members);
  g = TeamedPlaceGroup(std::move(members));
}

}  // namespace rdc

#endif  // RDC_RUNTIME_TEAMED_PLACE_GROUP_HPP
