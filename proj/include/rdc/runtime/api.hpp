#ifndef RDC_RUNTIME_API_HPP
#define RDC_RUNTIME_API_HPP

#include <functional>
#include <utility>

#include "rdc/runtime/runtime.hpp"
#include "rdc/runtime/tasks.hpp"
#include "rdc/runtime/teamed_place_group.hpp"

namespace rdc {

/// Runs body, then blocks until every activity transitively spawned by it,
/// on any place, has terminated. Failures from any of them surface here as
/// one aggregated error.
void finish(const std::function<void()>& body);

/// Spawns a local activity (native closure, same place) under the current
/// finish scope.
void async(std::function<void()> body);

namespace detail {
// Serialized-spawn entry: args already packed. Routes the +1 to the finish
// home before the task can run anywhere.
void spawnRaw(Place dst, std::uint16_t taskKind, Bytes args);
}  // namespace detail

/// Spawns `task(args...)` on place dst under the current finish scope. The
/// arguments cross as bytes even for dst == here().
template <class... Args>
void asyncAt(Place dst, const Task<Args...>& task, const std::decay_t<Args>&... args) {
  detail::spawnRaw(dst, task.id(), task.pack(args...));
}

/// Runs the task once on every member of g (caller's place must belong to g)
/// and returns when all of them completed.
template <class... Args>
void broadcastFlat(const TeamedPlaceGroup& g, const Task<Args...>& task,
                   const std::decay_t<Args>&... args) {
  if (!g.contains(here()))
    throw UsageError("broadcastFlat caller " + here().toString() + " is not a group member");
  finish([&] {
    for (const Place& p : g.members()) asyncAt(p, task, args...);
  });
}

}  // namespace rdc

#endif  // RDC_RUNTIME_API_HPP
