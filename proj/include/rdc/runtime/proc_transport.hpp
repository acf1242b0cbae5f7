#ifndef RDC_RUNTIME_PROC_TRANSPORT_HPP
#define RDC_RUNTIME_PROC_TRANSPORT_HPP

#include <functional>

#include "rdc/runtime/config.hpp"

namespace rdc {

/// Boots a multi-process world: forks one child process per non-zero place
/// (before any thread exists), hosts place 0 in the calling process, runs
/// body as the root activity, then tears the world down and reaps the
/// children. Frames travel over socketpairs with the parent relaying
/// child-to-child traffic. Throws if body fails or a child exits uncleanly.
void runProcWorld(RuntimeConfig cfg, const std::function<void()>& body);

}  // namespace rdc

#endif  // RDC_RUNTIME_PROC_TRANSPORT_HPP
