#ifndef RDC_RUNTIME_TRANSPORT_HPP
#define RDC_RUNTIME_TRANSPORT_HPP

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <vector>

#include "rdc/bytes.hpp"
#include "rdc/runtime/wire.hpp"

namespace rdc {

// Per-destination counters, queried by tests to prove that an operation put
// nothing on the wire. Self-sends are counted too; callers that care filter
// on src != dst.
struct TransportCounters {
  std::atomic<std::uint64_t> messages{0};
  std::atomic<std::uint64_t> bytes{0};
};

/// Blocking FIFO of encoded frames, one per local place.
class Inbox {
public:
  void push(Bytes frame) {
    {
      std::lock_guard lock(m_);
      q_.push_back(std::move(frame));
    }
    cv_.notify_one();
  }

  // Empty optional means the inbox was closed and drained.
  std::optional<Bytes> pop() {
    std::unique_lock lock(m_);
    cv_.wait(lock, [&] { return closed_ || !q_.empty(); });
    if (q_.empty()) return std::nullopt;
    Bytes f = std::move(q_.front());
    q_.pop_front();
    return f;
  }

  void close() {
    {
      std::lock_guard lock(m_);
      closed_ = true;
    }
    cv_.notify_all();
  }

private:
  std::mutex m_;
  std::condition_variable cv_;
  std::deque<Bytes> q_;
  bool closed_ = false;
};

/// Delivers encoded frames between places. Implementations must preserve
/// per (src, dst) ordering; the termination-detection protocol relies on it.
class Transport {
public:
  virtual ~Transport() = default;

  virtual void send(std::uint32_t src, std::uint32_t dst, Bytes frame) = 0;

  std::uint64_t messagesSentFrom(std::uint32_t src, std::uint32_t dst) const {
    return counters_[src * places_ + dst].messages.load();
  }
  std::uint64_t bytesSentFrom(std::uint32_t src, std::uint32_t dst) const {
    return counters_[src * places_ + dst].bytes.load();
  }
  std::uint64_t totalCrossPlaceMessages() const {
    std::uint64_t n = 0;
    for (std::uint32_t s = 0; s < places_; ++s)
      for (std::uint32_t d = 0; d < places_; ++d)
        if (s != d) n += counters_[s * places_ + d].messages.load();
    return n;
  }
  std::uint64_t totalCrossPlaceBytes() const {
    std::uint64_t n = 0;
    for (std::uint32_t s = 0; s < places_; ++s)
      for (std::uint32_t d = 0; d < places_; ++d)
        if (s != d) n += counters_[s * places_ + d].bytes.load();
    return n;
  }

protected:
  explicit Transport(std::uint32_t places)
      : places_(places), counters_(static_cast<std::size_t>(places) * places) {}

  void count(std::uint32_t src, std::uint32_t dst, std::size_t bytes) {
    auto& c = counters_[src * places_ + dst];
    c.messages.fetch_add(1, std::memory_order_relaxed);
    c.bytes.fetch_add(bytes, std::memory_order_relaxed);
  }

  std::uint32_t places_;

private:
  std::vector<TransportCounters> counters_;
};

/// All places live in one process. Messages still cross as serialized frames
/// through per-place queues; nothing is ever passed by pointer, so the data
/// path is the same one the multi-process transport exercises.
class InProcTransport : public Transport {
public:
  explicit InProcTransport(std::uint32_t places) : Transport(places), inboxes_(places) {
    for (auto& b : inboxes_) b = std::make_unique<Inbox>();
  }

  void send(std::uint32_t src, std::uint32_t dst, Bytes frame) override {
    count(src, dst, frame.size());
    inboxes_[dst]->push(std::move(frame));
  }

  Inbox& inbox(std::uint32_t place) { return *inboxes_[place]; }

  void closeAll() {
    for (auto& b : inboxes_) b->close();
  }

private:
  std::vector<std::unique_ptr<Inbox>> inboxes_;
};

}  // namespace rdc

#endif  // RDC_RUNTIME_TRANSPORT_HPP
