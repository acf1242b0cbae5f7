#ifndef RDC_RUNTIME_WORKER_POOL_HPP
#define RDC_RUNTIME_WORKER_POOL_HPP

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <list>
#include <mutex>
#include <thread>

namespace rdc {

// Fixed target of runnable threads per place. Activities may block (finish
// waits, collective waits); a blocked worker announces itself and the pool
// spawns a compensation thread so the place keeps `target` runnable workers.
// Surplus threads retire once the blocked activity resumes.
class WorkerPool {
public:
  explicit WorkerPool(unsigned target) : target_(target) {}

  ~WorkerPool() { stop(); }

  void start() {
    std::lock_guard lock(m_);
    for (unsigned i = 0; i < target_; ++i) spawnLocked();
  }

  void submit(std::function<void()> job) {
    {
      std::lock_guard lock(m_);
      q_.push_back(std::move(job));
    }
    cv_.notify_one();
  }

  // Runs `wait` (which is expected to block on some other condition) while
  // this worker does not count toward the runnable target.
  template <class F>
  void blockingSection(F&& wait) {
    enterBlocked();
    try {
      wait();
    } catch (...) {
      exitBlocked();
      throw;
    }
    exitBlocked();
  }

  void enterBlocked() {
    std::lock_guard lock(m_);
    ++blocked_;
    if (!stopping_ && alive_ - blocked_ < target_) spawnLocked();
  }

  void exitBlocked() {
    {
      std::lock_guard lock(m_);
      --blocked_;
    }
    cv_.notify_all();  // let a surplus idle worker notice and retire
  }

  void stop() {
    {
      std::lock_guard lock(m_);
      if (stopping_) return;
      stopping_ = true;
    }
    cv_.notify_all();
    for (auto& t : threads_)
      if (t.joinable()) t.join();
    threads_.clear();
  }

  unsigned target() const { return target_; }

private:
  void spawnLocked() {
    ++alive_;
    threads_.emplace_back([this] { run(); });
  }

  void run() {
    std::unique_lock lock(m_);
    for (;;) {
      cv_.wait(lock, [&] { return stopping_ || !q_.empty() || alive_ - blocked_ > target_; });
      if (stopping_) return;
      if (!q_.empty()) {
        auto job = std::move(q_.front());
        q_.pop_front();
        lock.unlock();
        job();
        lock.lock();
        continue;
      }
      if (alive_ - blocked_ > target_) {
        --alive_;
        return;  // surplus compensation thread retires
      }
    }
  }

  std::mutex m_;
  std::condition_variable cv_;
  std::deque<std::function<void()>> q_;
  std::list<std::thread> threads_;
  unsigned target_;
  unsigned alive_ = 0;
  unsigned blocked_ = 0;
  bool stopping_ = false;
};

}  // namespace rdc

#endif  // RDC_RUNTIME_WORKER_POOL_HPP
