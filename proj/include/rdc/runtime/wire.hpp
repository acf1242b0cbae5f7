#ifndef RDC_RUNTIME_WIRE_HPP
#define RDC_RUNTIME_WIRE_HPP

#include <cstdint>

#include "rdc/bytes.hpp"
#include "rdc/errors.hpp"

namespace rdc {

// Every message, regardless of transport, travels as one frame:
//   [u32 frameLen][u16 tag][bytes]
// frameLen counts the tag and the bytes that follow it, little-endian
// throughout. The body always starts with [u32 src][u32 dst].
// Spawn routing: when the spawner is not at the governing finish's home
// place, the task is sent to the home first (TaskViaHome); the home
// increments the live count and forwards it as Task. That way every
// activity's +1 lands at the home before the activity can exist anywhere,
// and a -1 can never overtake it on an independent channel. Local closure
// spawns under a remote-homed finish use FinishInc instead, which is safe
// because the later decrement travels the same src->home channel in order.
enum class MsgTag : std::uint16_t {
  Task = 1,        // [src][dst][u32 finishHome][u64 finishId][u16 taskKind][args...]
  TaskViaHome = 2, // same body; addressed to the finish home, which counts and forwards
  FinishInc = 3,   // [src][dst][u64 finishId]
  FinishDec = 4,   // [src][dst][u64 finishId][boolean hasError][str error]?
  Collective = 5,  // [src][dst][u64 groupKey][u64 epoch][u8 opKind][payload...]
  Shutdown = 6,    // [src][dst]
};

struct Frame {
  MsgTag tag;
  Bytes body;  // starts with src, dst
};

inline Bytes encodeFrame(MsgTag tag, const Bytes& body) {
  ByteWriter w;
  w.u32(static_cast<std::uint32_t>(2 + body.size()));
  w.u16(static_cast<std::uint16_t>(tag));
  w.raw(body.data(), body.size());
  return w.take();
}

inline Frame decodeFrame(const Bytes& frame) {
  ByteReader r(frame);
  std::uint32_t len = r.u32();
  if (len != frame.size() - 4) throw ProtocolError("frame length mismatch");
  auto tag = static_cast<MsgTag>(r.u16());
  Frame f;
  f.tag = tag;
  f.body.assign(frame.begin() + 6, frame.end());
  return f;
}

}  // namespace rdc

#endif  // RDC_RUNTIME_WIRE_HPP
