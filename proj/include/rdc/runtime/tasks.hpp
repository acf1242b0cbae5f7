#ifndef RDC_RUNTIME_TASKS_HPP
#define RDC_RUNTIME_TASKS_HPP

#include <cstdint>
#include <functional>
#include <mutex>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "rdc/bytes.hpp"
#include "rdc/errors.hpp"

namespace rdc {

// Remote spawns cannot ship native closures, so anything that runs on another
// place is a named task kind registered identically in every process of the
// run. Registration must happen before the runtime boots (static initializers
// or early in main); that keeps the numeric ids consistent across processes
// spawned from the same binary.
class TaskRegistry {
public:
  using Body = std::function<void(ByteReader&)>;

  static TaskRegistry& instance() {
    static TaskRegistry reg;
    return reg;
  }

  std::uint16_t add(std::string name, Body body) {
    std::lock_guard lock(m_);
    if (sealed_) throw UsageError("task kind '" + name + "' registered after runtime boot");
    entries_.push_back({std::move(name), std::move(body)});
    return static_cast<std::uint16_t>(entries_.size() - 1);
  }

  // Runs the task body, or throws UsageError for an id this process never saw.
  void run(std::uint16_t id, ByteReader& args) const {
    const Entry* e = nullptr;
    {
      std::lock_guard lock(m_);
      if (id < entries_.size()) e = &entries_[id];
    }
    if (!e) throw UsageError("unregistered task kind " + std::to_string(id));
    e->body(args);
  }

  std::string nameOf(std::uint16_t id) const {
    std::lock_guard lock(m_);
    return id < entries_.size() ? entries_[id].name : "<unknown>";
  }

  void seal() {
    std::lock_guard lock(m_);
    sealed_ = true;
  }
  void unseal() {
    std::lock_guard lock(m_);
    sealed_ = false;
  }

private:
  struct Entry {
    std::string name;
    Body body;
  };
  mutable std::mutex m_;
  std::vector<Entry> entries_;
  bool sealed_ = false;
};

/// Handle to a registered task kind. Copyable, cheap, valid for the process
/// lifetime.
template <class... Args>
class Task {
public:
  Task(std::string name, std::function<void(Args...)> fn)
      : id_(TaskRegistry::instance().add(std::move(name), [fn = std::move(fn)](ByteReader& r) {
          std::tuple<std::decay_t<Args>...> args;
          std::apply([&r](auto&... a) { (deserialize(r, a), ...); }, args);
          std::apply(fn, std::move(args));
        })) {}

  std::uint16_t id() const { return id_; }

  Bytes pack(const std::decay_t<Args>&... args) const {
    ByteWriter w;
    (serialize(w, args), ...);
    return w.take();
  }

private:
  std::uint16_t id_;
};

template <class... Args, class Fn>
Task<Args...> defineTask(std::string name, Fn&& fn) {
  return Task<Args...>(std::move(name), std::function<void(Args...)>(std::forward<Fn>(fn)));
}

}  // namespace rdc

#endif  // RDC_RUNTIME_TASKS_HPP
