#ifndef RDC_RUNTIME_RUNTIME_HPP
#define RDC_RUNTIME_RUNTIME_HPP

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <thread>
#include <typeindex>
#include <vector>

#include "rdc/errors.hpp"
#include "rdc/runtime/collective_engine.hpp"
#include "rdc/runtime/config.hpp"
#include "rdc/runtime/finish_table.hpp"
#include "rdc/runtime/place.hpp"
#include "rdc/runtime/transport.hpp"
#include "rdc/runtime/wire.hpp"
#include "rdc/runtime/worker_pool.hpp"

namespace rdc {

class Runtime;

/// Everything one place owns: its worker pool, the finish scopes homed here,
/// the collective matcher, and per-place module state (handle registries and
/// the like) kept in a type-indexed service bag so upper layers stay
/// decoupled from the runtime core.
class PlaceRuntime {
public:
  PlaceRuntime(Runtime& rt, std::uint32_t id, const RuntimeConfig& cfg);

  std::uint32_t id() const { return id_; }
  Runtime& runtime() { return rt_; }
  WorkerPool& pool() { return pool_; }
  FinishTable& finishes() { return finishes_; }
  CollectiveEngine& collectives() { return coll_; }

  void start(Inbox& inbox);
  void joinDispatcher();

  // Decoded-frame handler; also the entry for locally dispatched frames.
  void handle(MsgTag tag, const Bytes& body);

  template <class T>
  T& service() {
    std::lock_guard lock(servicesMutex_);
    auto& slot = services_[std::type_index(typeid(T))];
    if (!slot) slot = std::shared_ptr<void>(new T());
    return *static_cast<T*>(slot.get());
  }

private:
  void runTask(std::uint32_t origin, std::uint32_t finishHome, std::uint64_t finishId,
               std::uint16_t kind, Bytes args);
  void sendDec(std::uint32_t home, std::uint64_t finishId, const std::string* error);

  Runtime& rt_;
  std::uint32_t id_;
  WorkerPool pool_;
  FinishTable finishes_;
  CollectiveEngine coll_;
  std::thread dispatcher_;
  std::mutex servicesMutex_;
  std::map<std::type_index, std::shared_ptr<void>> services_;
};

/// One booted world. In-process mode hosts every place in this process; the
/// multi-process transport hosts exactly one.
class Runtime {
public:
  /// Boots an in-process world and registers it as current.
  explicit Runtime(RuntimeConfig cfg);

  /// Boots one place of a multi-process world over an externally built
  /// transport. `localPlace` is the place this process hosts.
  Runtime(RuntimeConfig cfg, std::uint32_t localPlace, std::unique_ptr<Transport> transport,
          Inbox& inbox);

  ~Runtime();
  Runtime(const Runtime&) = delete;

  void shutdown();

  std::uint32_t numPlaces() const { return cfg_.places; }
  const RuntimeConfig& config() const { return cfg_; }
  Transport& transport() { return *transport_; }

  bool hosts(std::uint32_t place) const { return local_.count(place) != 0; }
  PlaceRuntime& localPlace(std::uint32_t place);

  /// Runs body as the root activity on place 0 (which must be hosted here),
  /// wrapped in a finish; rethrows aggregated activity failures.
  void run(std::function<void()> body);

  void send(std::uint32_t src, std::uint32_t dst, MsgTag tag, const Bytes& body);

  static Runtime* current();
  static Runtime& require();

private:
  void bootLocalPlaces(const std::vector<std::uint32_t>& ids);

  RuntimeConfig cfg_;
  std::unique_ptr<Transport> transport_;
  std::map<std::uint32_t, std::unique_ptr<PlaceRuntime>> local_;
  bool down_ = false;
};

/// Context of the activity executing on the current thread.
struct ActivityCtx {
  PlaceRuntime* place = nullptr;
  FinishCtx finish;
};

namespace detail {
ActivityCtx& tlsCtx();
PlaceRuntime& currentPlace();  // UsageError when off-place
}  // namespace detail

Place here();
std::uint32_t numPlaces();
Place place(std::uint32_t id);

}  // namespace rdc

#endif  // RDC_RUNTIME_RUNTIME_HPP
