#include "rdc/runtime/runtime.hpp"

#include <cassert>
#include <future>
#include <utility>

#include "rdc/runtime/api.hpp"
#include "rdc/runtime/tasks.hpp"

namespace rdc {

namespace {
Runtime* g_current = nullptr;
std::mutex g_currentMutex;
}  // namespace

namespace detail {

ActivityCtx& tlsCtx() {
  thread_local ActivityCtx ctx;
  return ctx;
}

PlaceRuntime& currentPlace() {
  ActivityCtx& c = tlsCtx();
  if (!c.place) throw UsageError("not executing on a place (use the runtime entry point)");
  return *c.place;
}

}  // namespace detail

// ---------------------------------------------------------------- PlaceRuntime

PlaceRuntime::PlaceRuntime(Runtime& rt, std::uint32_t id, const RuntimeConfig& cfg)
    : rt_(rt), id_(id), pool_(cfg.workers), coll_(id, cfg.collectiveTimeout, pool_) {}

void PlaceRuntime::start(Inbox& inbox) {
  pool_.start();
  dispatcher_ = std::thread([this, &inbox] {
    for (;;) {
      auto frame = inbox.pop();
      if (!frame) return;
      Frame f = decodeFrame(*frame);
      if (f.tag == MsgTag::Shutdown) return;
      handle(f.tag, f.body);
    }
  });
}

void PlaceRuntime::joinDispatcher() {
  if (dispatcher_.joinable()) dispatcher_.join();
}

void PlaceRuntime::handle(MsgTag tag, const Bytes& body) {
  ByteReader r(body);
  std::uint32_t src = r.u32();
  std::uint32_t dst = r.u32();
  (void)src;
  (void)dst;
  switch (tag) {
    case MsgTag::Task: {
      std::uint32_t finishHome = r.u32();
      std::uint64_t finishId = r.u64();
      std::uint16_t kind = r.u16();
      Bytes args(body.begin() + (body.size() - r.remaining()), body.end());
      runTask(src, finishHome, finishId, kind, std::move(args));
      break;
    }
    case MsgTag::TaskViaHome: {
      // We are the finish home: count the activity, then route it onward.
      // Task and TaskViaHome share one body layout, so forwarding is a retag.
      std::uint32_t finishHome = r.u32();
      std::uint64_t finishId = r.u64();
      if (finishHome != id_) throw ProtocolError("spawn routed to a place that is not its home");
      finishes_.inc(finishId);
      if (dst == id_) {
        handle(MsgTag::Task, body);
      } else {
        rt_.send(id_, dst, MsgTag::Task, body);
      }
      break;
    }
    case MsgTag::FinishInc: {
      std::uint64_t finishId = r.u64();
      finishes_.inc(finishId);
      break;
    }
    case MsgTag::FinishDec: {
      std::uint64_t finishId = r.u64();
      bool hasError = r.boolean();
      if (hasError) {
        std::string err = r.str();
        finishes_.dec(finishId, &err);
      } else {
        finishes_.dec(finishId, nullptr);
      }
      break;
    }
    case MsgTag::Collective: {
      std::uint64_t groupKey = r.u64();
      std::uint64_t epoch = r.u64();
      auto op = static_cast<CollOp>(r.u8());
      Bytes payload(body.begin() + (body.size() - r.remaining()), body.end());
      coll_.onMessage(groupKey, epoch, op, src, std::move(payload));
      break;
    }
    case MsgTag::Shutdown:
      break;
  }
}

void PlaceRuntime::runTask(std::uint32_t origin, std::uint32_t finishHome, std::uint64_t finishId,
                           std::uint16_t kind, Bytes args) {
  (void)origin;
  pool_.submit([this, finishHome, finishId, kind, args = std::move(args)] {
    ActivityCtx& ctx = detail::tlsCtx();
    ctx.place = this;
    ctx.finish = FinishCtx{finishHome, finishId, true};
    std::string error;
    bool failed = false;
    try {
      ByteReader r(args);
      TaskRegistry::instance().run(kind, r);
      if (r.remaining() != 0)
        throw ProtocolError("task '" + TaskRegistry::instance().nameOf(kind) + "' left " +
                            std::to_string(r.remaining()) + " undecoded argument bytes");
    } catch (const std::exception& e) {
      failed = true;
      error = std::string(e.what()) + " [task " + TaskRegistry::instance().nameOf(kind) +
              " at place " + std::to_string(id_) + "]";
    } catch (...) {
      failed = true;
      error = "non-standard exception [task " + TaskRegistry::instance().nameOf(kind) +
              " at place " + std::to_string(id_) + "]";
    }
    sendDec(finishHome, finishId, failed ? &error : nullptr);
    ctx = ActivityCtx{};
  });
}

void PlaceRuntime::sendDec(std::uint32_t home, std::uint64_t finishId, const std::string* error) {
  if (home == id_) {
    finishes_.dec(finishId, error);
    return;
  }
  ByteWriter w;
  w.u32(id_);
  w.u32(home);
  w.u64(finishId);
  w.boolean(error != nullptr);
  if (error) w.str(*error);
  rt_.send(id_, home, MsgTag::FinishDec, w.take());
}

// -------------------------------------------------------------------- Runtime

Runtime::Runtime(RuntimeConfig cfg) : cfg_(cfg) {
  cfg_.validate();
  auto transport = std::make_unique<InProcTransport>(cfg_.places);
  InProcTransport& t = *transport;
  transport_ = std::move(transport);
  {
    std::lock_guard lock(g_currentMutex);
    if (g_current) throw UsageError("a runtime is already active in this process");
    g_current = this;
  }
  std::vector<std::uint32_t> ids;
  for (std::uint32_t p = 0; p < cfg_.places; ++p) ids.push_back(p);
  for (std::uint32_t p : ids) local_[p] = std::make_unique<PlaceRuntime>(*this, p, cfg_);
  for (std::uint32_t p : ids) local_[p]->start(t.inbox(p));
}

Runtime::Runtime(RuntimeConfig cfg, std::uint32_t localPlace, std::unique_ptr<Transport> transport,
                 Inbox& inbox)
    : cfg_(cfg), transport_(std::move(transport)) {
  cfg_.validate();
  TaskRegistry::instance().seal();
  {
    std::lock_guard lock(g_currentMutex);
    if (g_current) throw UsageError("a runtime is already active in this process");
    g_current = this;
  }
  local_[localPlace] = std::make_unique<PlaceRuntime>(*this, localPlace, cfg_);
  local_[localPlace]->start(inbox);
}

Runtime::~Runtime() {
  shutdown();
  std::lock_guard lock(g_currentMutex);
  if (g_current == this) g_current = nullptr;
  TaskRegistry::instance().unseal();
}

void Runtime::shutdown() {
  if (down_) return;
  down_ = true;
  if (auto* t = dynamic_cast<InProcTransport*>(transport_.get())) t->closeAll();
  for (auto& [id, pr] : local_) pr->joinDispatcher();
  for (auto& [id, pr] : local_) pr->pool().stop();
}

PlaceRuntime& Runtime::localPlace(std::uint32_t place) {
  auto it = local_.find(place);
  if (it == local_.end())
    throw UsageError("place " + std::to_string(place) + " is not hosted in this process");
  return *it->second;
}

void Runtime::run(std::function<void()> body) {
  PlaceRuntime& p0 = localPlace(0);
  std::promise<void> done;
  auto fut = done.get_future();
  p0.pool().submit([&] {
    ActivityCtx& ctx = detail::tlsCtx();
    ctx.place = &p0;
    ctx.finish = FinishCtx{};
    try {
      finish(body);
      done.set_value();
    } catch (...) {
      done.set_exception(std::current_exception());
    }
    ctx = ActivityCtx{};
  });
  fut.get();
}

void Runtime::send(std::uint32_t src, std::uint32_t dst, MsgTag tag, const Bytes& body) {
  if (dst >= cfg_.places)
    throw ConfigError("unknown place id " + std::to_string(dst) + " (world has " +
                      std::to_string(cfg_.places) + " places)");
  transport_->send(src, dst, encodeFrame(tag, body));
}

Runtime* Runtime::current() {
  std::lock_guard lock(g_currentMutex);
  return g_current;
}

Runtime& Runtime::require() {
  Runtime* rt = current();
  if (!rt) throw UsageError("no active runtime");
  return *rt;
}

// ------------------------------------------------------------------ free API

Place here() { return Place(detail::currentPlace().id()); }

std::uint32_t numPlaces() { return Runtime::require().numPlaces(); }

Place place(std::uint32_t id) {
  if (id >= Runtime::require().numPlaces())
    throw ConfigError("unknown place id " + std::to_string(id) + " (world has " +
                      std::to_string(Runtime::require().numPlaces()) + " places)");
  return Place(id);
}

TeamedPlaceGroup TeamedPlaceGroup::world() {
  std::vector<Place> all;
  for (std::uint32_t p = 0; p < Runtime::require().numPlaces(); ++p) all.emplace_back(p);
  return TeamedPlaceGroup(std::move(all));
}

int TeamedPlaceGroup::myRank() const {
  int r = rankOf(here());
  if (r < 0) throw UsageError(here().toString() + " is not a member of this group");
  return r;
}

void finish(const std::function<void()>& body) {
  PlaceRuntime& pr = detail::currentPlace();
  std::uint64_t id = pr.finishes().create();
  ActivityCtx& ctx = detail::tlsCtx();
  FinishCtx saved = ctx.finish;
  ctx.finish = FinishCtx{pr.id(), id, true};
  std::vector<std::string> errors;
  try {
    body();
  } catch (const std::exception& e) {
    errors.push_back(std::string(e.what()) + " [finish body at place " + std::to_string(pr.id()) +
                     "]");
  } catch (...) {
    errors.push_back("non-standard exception [finish body at place " + std::to_string(pr.id()) +
                     "]");
  }
  ctx.finish = saved;
  pr.finishes().dec(id, nullptr);  // the body's own registration
  std::vector<std::string> remote = pr.finishes().waitZeroAndClose(id, pr.pool());
  errors.insert(errors.end(), remote.begin(), remote.end());
  if (!errors.empty())
    throw AggregateError(std::to_string(errors.size()) + " activity failure(s) in finish", errors);
}

void async(std::function<void()> body) {
  PlaceRuntime& pr = detail::currentPlace();
  FinishCtx fc = detail::tlsCtx().finish;
  if (!fc.valid) throw UsageError("async outside a finish scope");
  if (fc.home == pr.id()) {
    pr.finishes().inc(fc.id);
  } else {
    ByteWriter w;
    w.u32(pr.id());
    w.u32(fc.home);
    w.u64(fc.id);
    pr.runtime().send(pr.id(), fc.home, MsgTag::FinishInc, w.take());
  }
  pr.pool().submit([&pr, fc, body = std::move(body)] {
    ActivityCtx& ctx = detail::tlsCtx();
    ActivityCtx saved = ctx;
    ctx.place = &pr;
    ctx.finish = fc;
    std::string error;
    bool failed = false;
    try {
      body();
    } catch (const std::exception& e) {
      failed = true;
      error = std::string(e.what()) + " [async at place " + std::to_string(pr.id()) + "]";
    } catch (...) {
      failed = true;
      error = "non-standard exception [async at place " + std::to_string(pr.id()) + "]";
    }
    // direct table access when home is local, control message otherwise
    if (fc.home == pr.id()) {
      pr.finishes().dec(fc.id, failed ? &error : nullptr);
    } else {
      ByteWriter w;
      w.u32(pr.id());
      w.u32(fc.home);
      w.u64(fc.id);
      w.boolean(failed);
      if (failed) w.str(error);
      pr.runtime().send(pr.id(), fc.home, MsgTag::FinishDec, w.take());
    }
    ctx = saved;
  });
}

namespace detail {

void spawnRaw(Place dst, std::uint16_t taskKind, Bytes args) {
  PlaceRuntime& pr = currentPlace();
  Runtime& rt = pr.runtime();
  if (dst.id() >= rt.numPlaces())
    throw ConfigError("unknown place id " + std::to_string(dst.id()) + " (world has " +
                      std::to_string(rt.numPlaces()) + " places)");
  FinishCtx fc = tlsCtx().finish;
  if (!fc.valid) throw UsageError("asyncAt outside a finish scope");

  ByteWriter w;
  w.u32(pr.id());
  w.u32(dst.id());
  w.u32(fc.home);
  w.u64(fc.id);
  w.u16(taskKind);
  w.raw(args.data(), args.size());
  Bytes body = w.take();

  if (fc.home == pr.id()) {
    // count first, then let the task loose
    pr.finishes().inc(fc.id);
    if (dst.id() == pr.id()) {
      pr.handle(MsgTag::Task, body);
    } else {
      rt.send(pr.id(), dst.id(), MsgTag::Task, body);
    }
  } else {
    // the home counts on arrival, then forwards
    rt.send(pr.id(), fc.home, MsgTag::TaskViaHome, body);
  }
}

}  // namespace detail

}  // namespace rdc
