#ifndef RDC_RELOCATION_MOVE_MANAGER_HPP
#define RDC_RELOCATION_MOVE_MANAGER_HPP

#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

#include "rdc/bytes.hpp"
#include "rdc/errors.hpp"
#include "rdc/registry/global_id.hpp"
#include "rdc/runtime/runtime.hpp"
#include "rdc/runtime/teamed_place_group.hpp"

namespace rdc {

/// Per-place routing table from collection id to the closure that knows how
/// to decode an incoming relocation frame into the local handle. Collections
/// register themselves when their local state attaches; registration is
/// first-wins so repeated attachment is harmless.
class RelocationHub {
public:
  using Receiver = std::function<void(std::uint16_t codec, ByteReader&)>;

  void add(GlobalId id, Receiver r) {
    std::lock_guard lock(m_);
    receivers_.emplace(id, std::move(r));
  }

  void dispatch(GlobalId id, std::uint16_t codec, ByteReader& r) const {
    Receiver recv;
    {
      std::lock_guard lock(m_);
      auto it = receivers_.find(id);
      if (it == receivers_.end())
        throw ProtocolError("no relocation receiver for collection " + id.toString() +
                            " on this place");
      recv = it->second;
    }
    recv(codec, r);
  }

private:
  mutable std::mutex m_;
  std::map<GlobalId, Receiver> receivers_;
};

namespace detail {
inline RelocationHub& relocationHub() { return currentPlace().service<RelocationHub>(); }
}

/// Batches entry movements across any number of collections into one
/// two-phase exchange. Collections stage (serializer, removal) pairs per
/// destination; sync ships everything at once:
///   phase 1: alltoall of per-destination byte counts (a negative count
///            poisons the epoch: some member's serializer failed, everyone
///            aborts before any handle is touched);
///   phase 2: alltoallv of payloads, each checked against its announced
///            length; then removals run, then received frames dispatch.
/// Confined to one calling activity per place per epoch.
class CollectiveMoveManager {
public:
  explicit CollectiveMoveManager(TeamedPlaceGroup g) : group_(std::move(g)) {}

  const TeamedPlaceGroup& group() const { return group_; }
  std::uint64_t epoch() const { return epoch_; }

  bool anythingStaged() const {
    for (const auto& [dest, entries] : staged_)
      if (!entries.empty()) return true;
    return false;
  }

  /// Collections call this; user code goes through the collection methods.
  /// serializer encodes the staged entries at sync time; applyRemoval erases
  /// them from the source handle, and runs only after every member's
  /// serialization succeeded.
  void stage(Place dest, GlobalId collection, std::uint16_t codec,
             std::function<void(ByteWriter&)> serializer, std::function<void()> applyRemoval) {
    if (!group_.contains(dest))
      throw UsageError("relocation destination " + dest.toString() +
                       " is outside the manager's group");
    staged_[dest.id()].push_back(
        Entry{collection, codec, std::move(serializer), std::move(applyRemoval)});
  }

  void sync() {
    int n = group_.size();
    int me = group_.myRank();
    (void)me;

    // serialize everything first; nothing is mutated until all members are
    // known to have succeeded
    std::vector<Bytes> outbox(static_cast<std::size_t>(n));
    std::vector<std::function<void()>> removals;
    bool failed = false;
    std::string failure;
    for (auto& [destId, entries] : staged_) {
      int destRank = group_.rankOf(Place(destId));
      try {
        outbox[static_cast<std::size_t>(destRank)] = encodeForDest(entries);
      } catch (const std::exception& e) {
        failed = true;
        failure = e.what();
        break;
      }
      for (auto& e : entries) removals.push_back(std::move(e.remove));
    }

    std::vector<std::int64_t> counts(static_cast<std::size_t>(n), 0);
    for (int r = 0; r < n; ++r)
      counts[static_cast<std::size_t>(r)] =
          failed ? -1 : static_cast<std::int64_t>(outbox[static_cast<std::size_t>(r)].size());
    std::vector<std::int64_t> recvCounts = group_.alltoall(counts);

    bool anyFailed = failed;
    for (std::int64_t c : recvCounts) anyFailed = anyFailed || c < 0;
    if (anyFailed) {
      staged_.clear();
      ++epoch_;
      throw ProtocolError("relocation aborted before any mutation: " +
                          (failed ? "local serializer failed: " + failure
                                  : std::string("a member's serializer failed")));
    }

    std::vector<Bytes> inbox = group_.alltoallv(outbox, recvCounts);

    for (auto& rm : removals) rm();

    for (std::size_t r = 0; r < inbox.size(); ++r) dispatchIncoming(inbox[r]);

    staged_.clear();
    ++epoch_;
  }

private:
  struct Entry {
    GlobalId gid;
    std::uint16_t codec;
    std::function<void(ByteWriter&)> ser;
    std::function<void()> remove;
  };

  /// Per-destination buffer: [u16 tagCount][per tag: u16 tag, u32 idLen,
  /// GlobalId, u16 codec][per staged entry: u16 tag, u32 len, bytes]. The
  /// tag table maps each distinct (collection, codec) pair used for this
  /// destination; an empty staging list produces zero bytes.
  Bytes encodeForDest(std::vector<Entry>& entries) {
    if (entries.empty()) return {};
    std::map<std::pair<GlobalId, std::uint16_t>, std::uint16_t> tagOf;
    std::vector<const Entry*> order;
    for (const Entry& e : entries) {
      auto key = std::make_pair(e.gid, e.codec);
      if (!tagOf.contains(key)) {
        auto next = static_cast<std::uint16_t>(tagOf.size());
        tagOf.emplace(key, next);
        order.push_back(&e);
      }
    }
    ByteWriter w;
    w.u16(static_cast<std::uint16_t>(order.size()));
    for (std::size_t t = 0; t < order.size(); ++t) {
      w.u16(static_cast<std::uint16_t>(t));
      ByteWriter idw;
      serialize(idw, order[t]->gid);
      Bytes idb = idw.take();
      w.u32(static_cast<std::uint32_t>(idb.size()));
      w.raw(idb.data(), idb.size());
      w.u16(order[t]->codec);
    }
    for (Entry& e : entries) {
      w.u16(tagOf.at(std::make_pair(e.gid, e.codec)));
      std::size_t lenAt = w.size();
      w.u32(0);
      std::size_t before = w.size();
      e.ser(w);
      w.patchU32(lenAt, static_cast<std::uint32_t>(w.size() - before));
    }
    return w.take();
  }

  void dispatchIncoming(const Bytes& payload) {
    if (payload.empty()) return;
    ByteReader r(payload);
    std::uint16_t tagCount = r.u16();
    std::map<std::uint16_t, std::pair<GlobalId, std::uint16_t>> byTag;
    for (std::uint16_t t = 0; t < tagCount; ++t) {
      std::uint16_t tag = r.u16();
      std::uint32_t idLen = r.u32();
      Bytes idb(idLen);
      if (idLen > 0) r.raw(idb.data(), idLen);
      GlobalId gid;
      ByteReader idr(idb);
      deserialize(idr, gid);
      std::uint16_t codec = r.u16();
      byTag[tag] = {gid, codec};
    }
    RelocationHub& hub = detail::relocationHub();
    while (!r.atEnd()) {
      std::uint16_t tag = r.u16();
      std::uint32_t len = r.u32();
      Bytes frame(len);
      if (len > 0) r.raw(frame.data(), len);
      auto it = byTag.find(tag);
      if (it == byTag.end())
        throw ProtocolError("relocation frame carries unknown tag " + std::to_string(tag));
      ByteReader fr(frame);
      hub.dispatch(it->second.first, it->second.second, fr);
      if (!fr.atEnd())
        throw ProtocolError("relocation frame for " + it->second.first.toString() + " left " +
                            std::to_string(fr.remaining()) + " undecoded bytes");
    }
  }

  TeamedPlaceGroup group_;
  std::map<std::uint32_t, std::vector<Entry>> staged_;
  std::uint64_t epoch_ = 0;
};

}  // namespace rdc

#endif  // RDC_RELOCATION_MOVE_MANAGER_HPP
