#ifndef RDC_RUNTIME_FINISH_TABLE_HPP
#define RDC_RUNTIME_FINISH_TABLE_HPP

#include <condition_variable>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "rdc/errors.hpp"
#include "rdc/runtime/worker_pool.hpp"

namespace rdc {

/// (home place, scope id) carried by every activity so spawns and
/// terminations report to the right counter.
struct FinishCtx {
  std::uint32_t home = 0;
  std::uint64_t id = 0;
  bool valid = false;
};

/// Live counts for finish scopes homed at one place. A scope starts at 1
/// (the body); it unblocks when the count returns to 0.
class FinishTable {
public:
  std::uint64_t create() {
    std::lock_guard lock(m_);
    std::uint64_t id = next_++;
    scopes_[id] = std::make_unique<Scope>();
    return id;
  }

  void inc(std::uint64_t id) {
    std::lock_guard lock(m_);
    ++scopeLocked(id).count;
  }

  void dec(std::uint64_t id, const std::string* error) {
    // notify while still holding the lock: the waiter erases the scope as
    // soon as it resumes, so the cv must not be touched after unlocking
    std::lock_guard lock(m_);
    Scope& s = scopeLocked(id);
    if (error) s.errors.push_back(*error);
    if (--s.count == 0) s.cv.notify_all();
  }

  // Blocks (as a pool-aware wait) until the count reaches 0, then removes the
  // scope and hands back any activity errors.
  std::vector<std::string> waitZeroAndClose(std::uint64_t id, WorkerPool& pool) {
    std::vector<std::string> errors;
    pool.blockingSection([&] {
      std::unique_lock lock(m_);
      Scope& s = scopeLocked(id);
      s.cv.wait(lock, [&] { return s.count == 0; });
      errors = std::move(s.errors);
      scopes_.erase(id);
    });
    return errors;
  }

private:
  struct Scope {
    std::int64_t count = 1;
    std::vector<std::string> errors;
    std::condition_variable cv;
  };

  Scope& scopeLocked(std::uint64_t id) {
    auto it = scopes_.find(id);
    if (it == scopes_.end())
      throw ProtocolError("finish scope " + std::to_string(id) + " unknown at its home place");
    return *it->second;
  }

  std::mutex m_;
  std::map<std::uint64_t, std::unique_ptr<Scope>> scopes_;
  std::uint64_t next_ = 1;
};

}  // namespace rdc

#endif  // RDC_RUNTIME_FINISH_TABLE_HPP
