#include "rdc/runtime/runtime.hpp"
#include "rdc/runtime/teamed_place_group.hpp"

namespace rdc {

namespace {

void sendColl(PlaceRuntime& pr, Place dst, std::uint64_t groupKey, std::uint64_t epoch, CollOp op,
              const Bytes& payload) {
  ByteWriter w;
  w.u32(pr.id());
  w.u32(dst.id());
  w.u64(groupKey);
  w.u64(epoch);
  w.u8(static_cast<std::uint8_t>(op));
  w.raw(payload.data(), payload.size());
  pr.runtime().send(pr.id(), dst.id(), MsgTag::Collective, w.take());
}

}  // namespace

std::vector<std::int64_t> TeamedPlaceGroup::alltoall(
    const std::vector<std::int64_t>& sendCounts) const {
  if (static_cast<int>(sendCounts.size()) != size())
    throw UsageError("alltoall needs one count per rank (" + std::to_string(size()) + "), got " +
                     std::to_string(sendCounts.size()));
  PlaceRuntime& pr = detail::currentPlace();
  int me = myRank();
  auto session = pr.collectives().enter(key_, CollOp::Alltoall);
  for (int rk = 0; rk < size(); ++rk) {
    if (rk == me) continue;
    ByteWriter w;
    w.i64(sendCounts[static_cast<std::size_t>(rk)]);
    sendColl(pr, members_[static_cast<std::size_t>(rk)], key_, session.epoch(), CollOp::Alltoall,
             w.take());
  }
  std::vector<std::uint32_t> peers;
  for (int rk = 0; rk < size(); ++rk)
    if (rk != me) peers.push_back(members_[static_cast<std::size_t>(rk)].id());
  auto got = session.awaitAll(peers);
  std::vector<std::int64_t> out(static_cast<std::size_t>(size()));
  out[static_cast<std::size_t>(me)] = sendCounts[static_cast<std::size_t>(me)];
  for (int rk = 0; rk < size(); ++rk) {
    if (rk == me) continue;
    ByteReader r(got.at(members_[static_cast<std::size_t>(rk)].id()));
    out[static_cast<std::size_t>(rk)] = r.i64();
  }
  return out;
}

std::vector<Bytes> TeamedPlaceGroup::alltoallv(
    const std::vector<Bytes>& payloads,
    const std::optional<std::vector<std::int64_t>>& expectedLens) const {
  if (static_cast<int>(payloads.size()) != size())
    throw UsageError("alltoallv needs one payload per rank (" + std::to_string(size()) +
                     "), got " + std::to_string(payloads.size()));
  if (expectedLens && static_cast<int>(expectedLens->size()) != size())
    throw UsageError("alltoallv expectedLens must have one entry per rank");
  PlaceRuntime& pr = detail::currentPlace();
  int me = myRank();
  auto session = pr.collectives().enter(key_, CollOp::Alltoallv);
  for (int rk = 0; rk < size(); ++rk) {
    if (rk == me) continue;
    sendColl(pr, members_[static_cast<std::size_t>(rk)], key_, session.epoch(), CollOp::Alltoallv,
             payloads[static_cast<std::size_t>(rk)]);
  }
  std::vector<std::uint32_t> peers;
  for (int rk = 0; rk < size(); ++rk)
    if (rk != me) peers.push_back(members_[static_cast<std::size_t>(rk)].id());
  auto got = session.awaitAll(peers);
  std::vector<Bytes> out(static_cast<std::size_t>(size()));
  out[static_cast<std::size_t>(me)] = payloads[static_cast<std::size_t>(me)];
  for (int rk = 0; rk < size(); ++rk)
    if (rk != me) out[static_cast<std::size_t>(rk)] = std::move(got.at(members_[static_cast<std::size_t>(rk)].id()));
  if (expectedLens) {
    for (int rk = 0; rk < size(); ++rk) {
      auto expect = (*expectedLens)[static_cast<std::size_t>(rk)];
      auto actual = static_cast<std::int64_t>(out[static_cast<std::size_t>(rk)].size());
      if (expect != actual)
        throw ProtocolError("alltoallv length from rank " + std::to_string(rk) + ": announced " +
                            std::to_string(expect) + " bytes, received " + std::to_string(actual));
    }
  }
  return out;
}

Bytes TeamedPlaceGroup::bcast(Place root, const Bytes& payload) const {
  int rootRank = rankOf(root);
  if (rootRank < 0) throw UsageError("bcast root " + root.toString() + " is not a group member");
  PlaceRuntime& pr = detail::currentPlace();
  int me = myRank();
  auto session = pr.collectives().enter(key_, CollOp::Bcast);
  if (me == rootRank) {
    for (int rk = 0; rk < size(); ++rk) {
      if (rk == me) continue;
      sendColl(pr, members_[static_cast<std::size_t>(rk)], key_, session.epoch(), CollOp::Bcast,
               payload);
    }
    return payload;
  }
  return session.awaitFrom(root.id());
}

std::vector<Bytes> TeamedPlaceGroup::gather(Place root, const Bytes& payload) const {
  int rootRank = rankOf(root);
  if (rootRank < 0) throw UsageError("gather root " + root.toString() + " is not a group member");
  PlaceRuntime& pr = detail::currentPlace();
  int me = myRank();
  auto session = pr.collectives().enter(key_, CollOp::Gather);
  if (me != rootRank) {
    sendColl(pr, root, key_, session.epoch(), CollOp::Gather, payload);
    return {};
  }
  std::vector<std::uint32_t> peers;
  for (int rk = 0; rk < size(); ++rk)
    if (rk != me) peers.push_back(members_[static_cast<std::size_t>(rk)].id());
  auto got = session.awaitAll(peers);
  std::vector<Bytes> out(static_cast<std::size_t>(size()));
  out[static_cast<std::size_t>(me)] = payload;
  for (int rk = 0; rk < size(); ++rk)
    if (rk != me) out[static_cast<std::size_t>(rk)] = std::move(got.at(members_[static_cast<std::size_t>(rk)].id()));
  return out;
}

std::vector<Bytes> TeamedPlaceGroup::allgatherImpl(CollOp op, const Bytes& payload) const {
  PlaceRuntime& pr = detail::currentPlace();
  int me = myRank();
  auto session = pr.collectives().enter(key_, op);
  for (int rk = 0; rk < size(); ++rk) {
    if (rk == me) continue;
    sendColl(pr, members_[static_cast<std::size_t>(rk)], key_, session.epoch(), op, payload);
  }
  std::vector<std::uint32_t> peers;
  for (int rk = 0; rk < size(); ++rk)
    if (rk != me) peers.push_back(members_[static_cast<std::size_t>(rk)].id());
  auto got = session.awaitAll(peers);
  std::vector<Bytes> out(static_cast<std::size_t>(size()));
  out[static_cast<std::size_t>(me)] = payload;
  for (int rk = 0; rk < size(); ++rk)
    if (rk != me) out[static_cast<std::size_t>(rk)] = std::move(got.at(members_[static_cast<std::size_t>(rk)].id()));
  return out;
}

std::vector<std::int64_t> TeamedPlaceGroup::allgather1(std::int64_t v) const {
  ByteWriter w;
  w.i64(v);
  auto all = allgatherImpl(CollOp::Allgather, w.take());
  std::vector<std::int64_t> out;
  out.reserve(all.size());
  for (const Bytes& b : all) {
    ByteReader r(b);
    out.push_back(r.i64());
  }
  return out;
}

std::vector<Bytes> TeamedPlaceGroup::allgatherBytes(const Bytes& payload) const {
  return allgatherImpl(CollOp::Allgather, payload);
}

Bytes TeamedPlaceGroup::allreduceBytes(
    const Bytes& payload, const std::function<Bytes(const Bytes&, const Bytes&)>& combine) const {
  auto all = allgatherImpl(CollOp::Allreduce, payload);
  Bytes acc = all[0];
  for (std::size_t i = 1; i < all.size(); ++i) acc = combine(acc, all[i]);
  return acc;
}

void TeamedPlaceGroup::barrier() const { allgatherImpl(CollOp::Barrier, Bytes{}); }

}  // namespace rdc
