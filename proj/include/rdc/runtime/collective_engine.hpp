#ifndef RDC_RUNTIME_COLLECTIVE_ENGINE_HPP
#define RDC_RUNTIME_COLLECTIVE_ENGINE_HPP

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "rdc/bytes.hpp"
#include "rdc/errors.hpp"
#include "rdc/runtime/worker_pool.hpp"

namespace rdc {

enum class CollOp : std::uint8_t {
  Alltoall = 1,
  Alltoallv = 2,
  Bcast = 3,
  Gather = 4,
  Allgather = 5,
  Allreduce = 6,
  Barrier = 7,
};

inline const char* collOpName(CollOp op) {
  switch (op) {
    case CollOp::Alltoall: return "alltoall";
    case CollOp::Alltoallv: return "alltoallv";
    case CollOp::Bcast: return "bcast";
    case CollOp::Gather: return "gather";
    case CollOp::Allgather: return "allgather";
    case CollOp::Allreduce: return "allreduce";
    case CollOp::Barrier: return "barrier";
  }
  return "?";
}

// Per-place matcher for blocking group operations. Each group orders its
// collectives by a local epoch counter; since group members must issue the
// same collectives in the same order, epoch e on one member pairs with epoch
// e on every other. Off-script usage is turned into a diagnosable error:
// mismatched op kinds fail the epoch, a missing participant trips the
// timeout, and a second concurrent caller on one place is rejected.
class CollectiveEngine {
public:
  CollectiveEngine(std::uint32_t selfPlace, std::chrono::milliseconds timeout, WorkerPool& pool)
      : self_(selfPlace), timeout_(timeout), pool_(pool) {}

  // Dispatcher side: buffer a peer contribution, creating the epoch slot if
  // the local activity has not entered it yet.
  void onMessage(std::uint64_t groupKey, std::uint64_t epoch, CollOp op, std::uint32_t srcPlace,
                 Bytes payload) {
    std::lock_guard lock(m_);
    EpochBox& box = groups_[groupKey].boxes[epoch];
    if (box.op && *box.op != op) {
      box.fail("collective op mismatch at group " + std::to_string(groupKey) + " epoch " +
               std::to_string(epoch) + ": local " + collOpName(*box.op) + " vs " +
               collOpName(op) + " from place " + std::to_string(srcPlace));
    } else {
      box.op = op;
      if (!box.recv.emplace(srcPlace, std::move(payload)).second)
        box.fail("duplicate collective payload from place " + std::to_string(srcPlace) +
                 " at group " + std::to_string(groupKey) + " epoch " + std::to_string(epoch));
    }
    cv_.notify_all();
  }

  class Session {
  public:
    Session(CollectiveEngine& eng, std::uint64_t groupKey, std::uint64_t epoch)
        : eng_(&eng), groupKey_(groupKey), epoch_(epoch) {}
    Session(Session&& o) noexcept
        : eng_(o.eng_), groupKey_(o.groupKey_), epoch_(o.epoch_) {
      o.eng_ = nullptr;
    }
    Session(const Session&) = delete;
    ~Session() {
      if (eng_) eng_->leave(groupKey_, epoch_);
    }

    std::uint64_t epoch() const { return epoch_; }

    Bytes awaitFrom(std::uint32_t srcPlace) {
      return eng_->awaitOne(groupKey_, epoch_, srcPlace);
    }

    // Returns src place -> payload for every listed peer.
    std::map<std::uint32_t, Bytes> awaitAll(const std::vector<std::uint32_t>& srcs) {
      return eng_->awaitMany(groupKey_, epoch_, srcs);
    }

  private:
    CollectiveEngine* eng_;
    std::uint64_t groupKey_;
    std::uint64_t epoch_;
  };

  // Claims the group's next epoch for the calling activity.
  Session enter(std::uint64_t groupKey, CollOp op) {
    std::lock_guard lock(m_);
    GroupState& gs = groups_[groupKey];
    if (gs.busy)
      throw UsageError("place " + std::to_string(self_) +
                       ": a collective is already in flight for group " +
                       std::to_string(groupKey) + "; one calling activity per member");
    std::uint64_t epoch = gs.nextEpoch++;
    gs.busy = true;
    EpochBox& box = gs.boxes[epoch];
    if (box.op && *box.op != op)
      box.fail("collective op mismatch at group " + std::to_string(groupKey) + " epoch " +
               std::to_string(epoch) + ": calling " + collOpName(op) + " but a peer sent " +
               collOpName(*box.op));
    box.op = op;
    return Session(*this, groupKey, epoch);
  }

private:
  struct EpochBox {
    std::optional<CollOp> op;
    std::map<std::uint32_t, Bytes> recv;
    bool failed = false;
    std::string error;

    void fail(std::string why) {
      if (!failed) {
        failed = true;
        error = std::move(why);
      }
    }
  };
  struct GroupState {
    std::uint64_t nextEpoch = 0;
    bool busy = false;
    std::map<std::uint64_t, EpochBox> boxes;
  };

  Bytes awaitOne(std::uint64_t groupKey, std::uint64_t epoch, std::uint32_t src) {
    Bytes out;
    waitFor(groupKey, epoch, {src}, [&](EpochBox& box) { out = std::move(box.recv.at(src)); });
    return out;
  }

  std::map<std::uint32_t, Bytes> awaitMany(std::uint64_t groupKey, std::uint64_t epoch,
                                           const std::vector<std::uint32_t>& srcs) {
    std::map<std::uint32_t, Bytes> out;
    waitFor(groupKey, epoch, srcs, [&](EpochBox& box) {
      for (std::uint32_t s : srcs) out[s] = std::move(box.recv.at(s));
    });
    return out;
  }

  template <class Consume>
  void waitFor(std::uint64_t groupKey, std::uint64_t epoch, const std::vector<std::uint32_t>& srcs,
               Consume&& consume) {
    auto deadline = std::chrono::steady_clock::now() + timeout_;
    pool_.blockingSection([&] {
      std::unique_lock lock(m_);
      EpochBox& box = groups_[groupKey].boxes[epoch];
      auto ready = [&] {
        if (box.failed) return true;
        for (std::uint32_t s : srcs)
          if (!box.recv.count(s)) return false;
        return true;
      };
      if (!cv_.wait_until(lock, deadline, ready)) {
        std::string missing;
        for (std::uint32_t s : srcs)
          if (!box.recv.count(s)) missing += (missing.empty() ? "" : ",") + std::to_string(s);
        throw TimeoutError("collective " + std::string(box.op ? collOpName(*box.op) : "?") +
                           " timed out at place " + std::to_string(self_) + " (group " +
                           std::to_string(groupKey) + ", epoch " + std::to_string(epoch) +
                           "); still waiting on places: " + missing);
      }
      if (box.failed) throw ProtocolError(box.error);
      consume(box);
    });
  }

  void leave(std::uint64_t groupKey, std::uint64_t epoch) {
    std::lock_guard lock(m_);
    GroupState& gs = groups_[groupKey];
    gs.boxes.erase(epoch);
    gs.busy = false;
  }

  std::uint32_t self_;
  std::chrono::milliseconds timeout_;
  WorkerPool& pool_;
  std::mutex m_;
  std::condition_variable cv_;
  std::map<std::uint64_t, GroupState> groups_;
};

}  // namespace rdc

#endif  // RDC_RUNTIME_COLLECTIVE_ENGINE_HPP
