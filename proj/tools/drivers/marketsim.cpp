#include "drivers/marketsim.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <mutex>
#include <stdexcept>
#include <utility>

#include "rdc/collections/cachable_array.hpp"
#include "rdc/collections/dist_bag.hpp"
#include "rdc/collections/dist_chunked_list.hpp"
#include "rdc/collections/dist_map.hpp"
#include "rdc/relocation/load_balance.hpp"
#include "rdc/relocation/move_manager.hpp"
#include "rdc/rng.hpp"
#include "rdc/runtime/api.hpp"

namespace apps {

namespace {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;
constexpr std::int64_t kInitialPrice = 1000;
constexpr std::int64_t kInitialCash = 1000000;
constexpr double kDisturbFactor = 3.0;

struct Agent {
  std::int64_t id = 0;
  std::int64_t cash = 0;
  std::int64_t position = 0;
  std::uint64_t rng = 0;

  friend void serialize(rdc::ByteWriter& w, const Agent& a) {
    w.i64(a.id);
    w.i64(a.cash);
    w.i64(a.position);
    w.u64(a.rng);
  }
  friend void deserialize(rdc::ByteReader& r, Agent& a) {
    a.id = r.i64();
    a.cash = r.i64();
    a.position = r.i64();
    a.rng = r.u64();
  }
};

struct Market {
  std::int64_t lastPrice = kInitialPrice;

  friend void serialize(rdc::ByteWriter& w, const Market& m) { w.i64(m.lastPrice); }
  friend void deserialize(rdc::ByteReader& r, Market& m) { m.lastPrice = r.i64(); }
};

Agent makeAgent(std::uint64_t seed, std::int64_t id) {
  Agent a;
  a.id = id;
  a.cash = kInitialCash;
  // one mixing draw decorrelates the per-agent streams even for adjacent ids
  rdc::SplitMix64 mixer(seed ^ (kGolden * static_cast<std::uint64_t>(id + 1)));
  a.rng = mixer.next();
  return a;
}

/// Zero-intelligence order flow: usually one order, sometimes two, sometimes
/// none, priced uniformly within +-10 ticks of the last trade.
std::vector<Order> submitOrders(Agent& a, std::int64_t lastPrice) {
  rdc::SplitMix64 g(a.rng);
  std::uint64_t c = g.nextBelow(8);
  int n = c == 0 ? 0 : (c == 1 ? 2 : 1);
  std::vector<Order> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int s = 0; s < n; ++s) {
    Order o;
    o.agentId = a.id;
    o.seq = s;
    o.buy = (g.next() & 1u) == 0;
    std::int64_t off = static_cast<std::int64_t>(g.nextBelow(21)) - 10;
    o.price = std::max<std::int64_t>(1, lastPrice + off);
    o.qty = 1 + static_cast<std::int64_t>(g.nextBelow(4));
    out.push_back(o);
  }
  a.rng = g.state();
  return out;
}

void applyUpdate(Agent& a, const AgentUpdate& u) {
  if (u.buy) {
    a.cash -= u.price * u.qty;
    a.position += u.qty;
  } else {
    a.cash += u.price * u.qty;
    a.position -= u.qty;
  }
}

std::uint64_t mix64(std::uint64_t x) {
  x += kGolden;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t agentHash(const Agent& a) {
  std::uint64_t h = mix64(static_cast<std::uint64_t>(a.id));
  h = mix64(h ^ static_cast<std::uint64_t>(a.cash));
  h = mix64(h ^ static_cast<std::uint64_t>(a.position));
  h = mix64(h ^ a.rng);
  return h;
}

/// Commutative fingerprint of an agent population: invariant under any
/// redistribution of the same agents across places.
struct AgentFingerprint {
  std::uint64_t sum = 0;
  std::uint64_t xorAll = 0;
  std::int64_t count = 0;

  AgentFingerprint newReducer() const { return {}; }
  void reduce(const Agent& a) {
    std::uint64_t h = agentHash(a);
    sum += h;
    xorAll ^= h;
    ++count;
  }
  void merge(const AgentFingerprint& o) {
    sum += o.sum;
    xorAll ^= o.xorAll;
    count += o.count;
  }
  std::uint64_t value() const {
    return mix64(sum) ^ mix64(xorAll ^ static_cast<std::uint64_t>(count));
  }

  friend void serialize(rdc::ByteWriter& w, const AgentFingerprint& f) {
    w.u64(f.sum);
    w.u64(f.xorAll);
    w.i64(f.count);
  }
  friend void deserialize(rdc::ByteReader& r, AgentFingerprint& f) {
    f.sum = r.u64();
    f.xorAll = r.u64();
    f.count = r.i64();
  }
};

}  // namespace

// at namespace scope so the task machinery's lookup can see them
void serialize(rdc::ByteWriter& w, const Order& o) {
  w.i64(o.agentId);
  w.boolean(o.buy);
  w.i64(o.price);
  w.i64(o.qty);
  w.i32(o.seq);
}
void deserialize(rdc::ByteReader& r, Order& o) {
  o.agentId = r.i64();
  o.buy = r.boolean();
  o.price = r.i64();
  o.qty = r.i64();
  o.seq = r.i32();
}

void serialize(rdc::ByteWriter& w, const AgentUpdate& u) {
  w.i64(u.agentId);
  w.boolean(u.buy);
  w.i64(u.price);
  w.i64(u.qty);
}
void deserialize(rdc::ByteReader& r, AgentUpdate& u) {
  u.agentId = r.i64();
  u.buy = r.boolean();
  u.price = r.i64();
  u.qty = r.i64();
}

void serialize(rdc::ByteWriter& w, const MarketSimConfig& c) {
  w.i64(c.nAgents);
  w.i32(c.iterations);
  w.u32(c.places);
  w.u32(c.workers);
  w.u8(c.lb == LbStrategy::LevelExtremes ? 1 : 0);
  w.i32(c.lbPeriod);
  w.str(c.profile);
  w.u64(c.seed);
  w.i64(c.workUsPerAgent);
  w.boolean(c.realWork);
}
void deserialize(rdc::ByteReader& r, MarketSimConfig& c) {
  c.nAgents = r.i64();
  c.iterations = r.i32();
  c.places = r.u32();
  c.workers = r.u32();
  c.lb = r.u8() == 1 ? LbStrategy::LevelExtremes : LbStrategy::None;
  c.lbPeriod = r.i32();
  c.profile = r.str();
  c.seed = r.u64();
  c.workUsPerAgent = r.i64();
  c.realWork = r.boolean();
}

namespace {

// contiguous near-equal slice of the agent ids for agent place k (0-based)
std::pair<std::int64_t, std::int64_t> agentSlice(std::int64_t n, unsigned agentPlaces, unsigned k) {
  auto a = static_cast<std::int64_t>(agentPlaces);
  return {n * k / a, n * (k + 1) / a};
}

void busySpinUs(std::int64_t us) {
  auto end = std::chrono::steady_clock::now() + std::chrono::microseconds(us);
  while (std::chrono::steady_clock::now() < end) {
  }
}

std::string csvRow(int iter, unsigned place, std::int64_t phase2Us, std::int64_t held) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%d,%u,%.3f,%lld", iter, place,
                static_cast<double>(phase2Us) / 1000.0, static_cast<long long>(held));
  return buf;
}

std::mutex gResMu;
MarketSimResult gRes;
bool gResSet = false;

void runMarket(const MarketSimConfig& cfg, rdc::DistCol<Agent> agents,
               rdc::CachableArray<Market> markets, rdc::DistBag<std::vector<Order>> orderBag,
               rdc::DistMultiMap<std::int64_t, AgentUpdate> updates) {
  const rdc::TeamedPlaceGroup& g = agents.group();
  int me = g.myRank();
  int P = g.size();
  bool isMaster = me == 0;
  unsigned agentPlaces = static_cast<unsigned>(P - 1);
  ClusterProfile prof = parseProfile(cfg.profile);

  if (!isMaster) {
    auto [from, to] = agentSlice(cfg.nAgents, agentPlaces, static_cast<unsigned>(me - 1));
    if (to > from) {
      std::vector<Agent> mine;
      mine.reserve(static_cast<std::size_t>(to - from));
      for (std::int64_t id = from; id < to; ++id) mine.push_back(makeAgent(cfg.seed, id));
      agents.addChunk({from, to}, std::move(mine));
    }
  }
  agents.updateDist();

  MarketSimResult res;
  bool intact = true;
  std::int64_t genTotal = 0;
  std::int64_t execTotal = 0;
  std::int64_t accumulatedUs = 0;  // phase 2 cost since the last balance event

  for (int iter = 0; iter < cfg.iterations; ++iter) {
    // 1. everyone sees the same last price
    markets.broadcast([](const Market& m) { return m.lastPrice; },
                      [](const std::int64_t& v, Market& m) { m.lastPrice = v; });
    std::int64_t lastPrice = markets[0].lastPrice;

    // 2. agent places run their agents
    std::int64_t phase2Us = 0;
    if (!isMaster) {
      auto t0 = std::chrono::steady_clock::now();
      double slow = slowdownFor(prof, static_cast<unsigned>(me), agentPlaces, iter);
      std::int64_t perAgentUs = std::llround(static_cast<double>(cfg.workUsPerAgent) * slow);
      rdc::parallelToBag(
          agents.local(), orderBag.local(),
          [&](Agent& a, auto& collector) {
            std::vector<Order> orders = submitOrders(a, lastPrice);
            if (cfg.realWork) busySpinUs(perAgentUs);
            if (!orders.empty()) collector.accept(std::move(orders));
          },
          cfg.workers);
      if (cfg.realWork) {
        phase2Us = std::chrono::duration_cast<std::chrono::microseconds>(
                       std::chrono::steady_clock::now() - t0)
                       .count();
      } else {
        phase2Us = agents.localSize() * perAgentUs;
      }
    }
    accumulatedUs += phase2Us;

    // 3. order lists travel to the master
    orderBag.teamGather(g.placeAt(0));

    // 4. master matches while the balancer (the only collective caller in
    // this scope) reshapes the agent population
    std::int64_t generated = 0;
    rdc::finish([&] {
      bool lbRound = cfg.lb == LbStrategy::LevelExtremes && cfg.lbPeriod > 0 &&
                     iter % cfg.lbPeriod == 0;
      if (lbRound) {
        rdc::async([&] {
          rdc::CollectiveMoveManager mm(g);
          std::vector<std::int64_t> times = g.allgather1(accumulatedUs);
          std::vector<std::int64_t> held = g.allgather1(agents.localSize());
          rdc::performLoadBalanceLevelExtremes(times, held, agents, mm);
          mm.sync();
          accumulatedUs = 0;
          agents.updateDist();
        });
      }
      if (isMaster) {
        std::vector<Order> flat;
        for (std::vector<Order>& lst : orderBag.local().drain())
          for (Order& o : lst) flat.push_back(o);
        MatchOutcome mo = matchOrders(std::move(flat), lastPrice);
        generated = static_cast<std::int64_t>(mo.updates.size());
        for (const AgentUpdate& u : mo.updates) updates.put1(u.agentId, u);
        markets[0].lastPrice = mo.lastPrice;
      }
    });

    // 5. updates chase their agents, wherever the balancer put them
    updates.relocate(agents.getDistribution());

    std::int64_t executed = 0;
    bool allLocal = true;
    std::vector<std::pair<std::int64_t, std::vector<AgentUpdate>>> batch;
    updates.forEachLocal([&](const std::int64_t& id, const std::vector<AgentUpdate>& us) {
      batch.emplace_back(id, us);
    });
    for (auto& [id, us] : batch) {
      if (!agents.local().containsIndex(id)) {
        allLocal = false;
        continue;
      }
      Agent& a = agents.at(id);
      for (const AgentUpdate& u : us) {
        applyUpdate(a, u);
        ++executed;
      }
      updates.removeKey(id);
    }
    if (updates.localKeyCount() != 0) allLocal = false;

    std::vector<std::int64_t> execAll = g.allgather1(executed);
    std::vector<std::int64_t> genAll = g.allgather1(generated);
    std::vector<std::int64_t> strayAll = g.allgather1(allLocal ? 0 : 1);
    std::int64_t execSum = 0, genSum = 0, straySum = 0;
    for (int r = 0; r < P; ++r) {
      execSum += execAll[static_cast<std::size_t>(r)];
      genSum += genAll[static_cast<std::size_t>(r)];
      straySum += strayAll[static_cast<std::size_t>(r)];
    }
    if (execSum != genSum || straySum != 0) intact = false;
    genTotal += genSum;
    execTotal += execSum;

    std::vector<std::int64_t> phAll = g.allgather1(phase2Us);
    std::vector<std::int64_t> heldAll = g.allgather1(agents.localSize());
    if (isMaster) {
      std::int64_t worst = 0;
      for (int r = 1; r < P; ++r) worst = std::max(worst, phAll[static_cast<std::size_t>(r)]);
      res.totalSimulatedUs += worst;
      for (int r = 0; r < P; ++r) {
        auto ri = static_cast<std::size_t>(r);
        res.trace.push_back({iter, static_cast<unsigned>(r), phAll[ri], heldAll[ri]});
        res.csvRows.push_back(csvRow(iter, static_cast<unsigned>(r), phAll[ri], heldAll[ri]));
      }
    }
  }

  AgentFingerprint fp = agents.teamParallelReduce(AgentFingerprint{}, cfg.workers);
  if (isMaster) {
    res.finalStateHash = fp.value();
    res.updatesGenerated = genTotal;
    res.updatesExecuted = execTotal;
    res.dispatchIntact = intact;
    res.finalLastPrice = markets[0].lastPrice;
    std::lock_guard lock(gResMu);
    gRes = std::move(res);
    gResSet = true;
  }
}

const rdc::Task<MarketSimConfig, rdc::DistCol<Agent>, rdc::CachableArray<Market>,
                rdc::DistBag<std::vector<Order>>, rdc::DistMultiMap<std::int64_t, AgentUpdate>>
    kMarketTask = rdc::defineTask<MarketSimConfig, rdc::DistCol<Agent>,
                                  rdc::CachableArray<Market>, rdc::DistBag<std::vector<Order>>,
                                  rdc::DistMultiMap<std::int64_t, AgentUpdate>>(
        "apps.marketsim.run", &runMarket);

std::uint64_t parseU64(const std::string& s, const char* what) {
  std::size_t pos = 0;
  std::uint64_t v = 0;
  try {
    v = std::stoull(s, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != s.size() || s.empty())
    throw rdc::UsageError(std::string("profile: bad ") + what + " '" + s + "'");
  return v;
}

double parseFactor(const std::string& s) {
  std::size_t pos = 0;
  double v = 0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != s.size() || s.empty())
    throw rdc::UsageError("profile: bad factor '" + s + "'");
  if (!(v >= 1.0)) throw rdc::UsageError("profile: slowdown factors must be at least 1");
  return v;
}

std::vector<std::string> splitOn(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    std::size_t p = s.find(sep, start);
    if (p == std::string::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, p - start));
    start = p + 1;
  }
}

}  // namespace

LbStrategy parseLbStrategy(const std::string& s) {
  if (s == "none") return LbStrategy::None;
  if (s == "level-extremes") return LbStrategy::LevelExtremes;
  throw rdc::UsageError("unknown load balance strategy '" + s +
                        "' (expected none or level-extremes)");
}

ClusterProfile parseProfile(const std::string& flag) {
  ClusterProfile p;
  if (flag.empty()) return p;
  std::size_t colon = flag.find(':');
  std::string head = flag.substr(0, colon == std::string::npos ? flag.size() : colon);
  if (head == "slow") {
    if (colon == std::string::npos)
      throw rdc::UsageError("profile: slow needs <place>:<factor> clauses");
    for (const std::string& clause : splitOn(flag.substr(colon + 1), ',')) {
      std::vector<std::string> kv = splitOn(clause, ':');
      if (kv.size() != 2)
        throw rdc::UsageError("profile: bad slow clause '" + clause + "'");
      auto place = static_cast<unsigned>(parseU64(kv[0], "place"));
      p.slow[place] = parseFactor(kv[1]);
    }
    return p;
  }
  if (head == "disturb") {
    std::vector<std::string> parts = splitOn(flag, ':');
    if (parts.size() != 3)
      throw rdc::UsageError("profile: disturb needs disturb:<seed>:<periodIters>");
    p.disturb = true;
    p.disturbSeed = parseU64(parts[1], "seed");
    p.disturbPeriod = static_cast<unsigned>(parseU64(parts[2], "period"));
    if (p.disturbPeriod == 0) throw rdc::UsageError("profile: disturb period must be positive");
    return p;
  }
  throw rdc::UsageError("profile: unknown kind '" + head + "' (expected slow or disturb)");
}

double slowdownFor(const ClusterProfile& p, unsigned place, unsigned agentPlaces, int iter) {
  if (p.disturb) {
    if (agentPlaces == 0 || p.disturbPeriod == 0) return 1.0;
    unsigned window = static_cast<unsigned>(iter) / p.disturbPeriod;
    rdc::SplitMix64 pick(p.disturbSeed);
    unsigned victim =
        1 + static_cast<unsigned>((pick.nextBelow(agentPlaces) + window) % agentPlaces);
    return place == victim ? kDisturbFactor : 1.0;
  }
  auto it = p.slow.find(place);
  return it == p.slow.end() ? 1.0 : it->second;
}

void marketsimValidate(const MarketSimConfig& cfg) {
  if (cfg.places < 2)
    throw rdc::UsageError("marketsim: needs at least 2 places (one master plus agent places)");
  if (cfg.nAgents < static_cast<std::int64_t>(cfg.places))
    throw rdc::UsageError("marketsim: needs at least as many agents as places");
  if (cfg.iterations < 0) throw rdc::UsageError("marketsim: iterations must not be negative");
  if (cfg.lbPeriod < 1) throw rdc::UsageError("marketsim: lb period must be positive");
  if (cfg.workUsPerAgent < 0)
    throw rdc::UsageError("marketsim: per-agent work must not be negative");
  ClusterProfile prof = parseProfile(cfg.profile);
  for (const auto& [place, factor] : prof.slow)
    if (place >= cfg.places)
      throw rdc::UsageError("profile: place " + std::to_string(place) + " is outside the world");
}

std::string marketsimCsvHeader() { return "iter,place,phase2_ms,agents_held"; }

MatchOutcome matchOrders(std::vector<Order> orders, std::int64_t lastPrice) {
  std::sort(orders.begin(), orders.end(), [](const Order& a, const Order& b) {
    if (a.agentId != b.agentId) return a.agentId < b.agentId;
    return a.seq < b.seq;
  });
  // books keyed so begin() is the best quote; arrival breaks price ties
  using Key = std::pair<std::int64_t, std::uint64_t>;  // (price or -price, arrival)
  using Rest = std::pair<std::int64_t, std::int64_t>;  // (qty, agentId)
  std::map<Key, Rest> asks;
  std::map<Key, Rest> bids;
  std::uint64_t arrival = 0;

  MatchOutcome out;
  out.lastPrice = lastPrice;
  for (const Order& o : orders) {
    std::int64_t remaining = o.qty;
    if (o.buy) {
      while (remaining > 0 && !asks.empty()) {
        auto it = asks.begin();
        std::int64_t restPrice = it->first.first;
        if (restPrice > o.price) break;
        std::int64_t t = std::min(remaining, it->second.first);
        out.updates.push_back({o.agentId, true, restPrice, t});
        out.updates.push_back({it->second.second, false, restPrice, t});
        out.lastPrice = restPrice;
        remaining -= t;
        it->second.first -= t;
        if (it->second.first == 0) asks.erase(it);
      }
      if (remaining > 0) bids[{-o.price, arrival++}] = {remaining, o.agentId};
    } else {
      while (remaining > 0 && !bids.empty()) {
        auto it = bids.begin();
        std::int64_t restPrice = -it->first.first;
        if (restPrice < o.price) break;
        std::int64_t t = std::min(remaining, it->second.first);
        out.updates.push_back({it->second.second, true, restPrice, t});
        out.updates.push_back({o.agentId, false, restPrice, t});
        out.lastPrice = restPrice;
        remaining -= t;
        it->second.first -= t;
        if (it->second.first == 0) bids.erase(it);
      }
      if (remaining > 0) asks[{o.price, arrival++}] = {remaining, o.agentId};
    }
  }
  return out;
}

MarketSimResult marketsimInWorld(const MarketSimConfig& cfg) {
  rdc::TeamedPlaceGroup world = rdc::TeamedPlaceGroup::world();
  MarketSimConfig actual = cfg;
  actual.places = static_cast<unsigned>(world.size());
  marketsimValidate(actual);
  {
    std::lock_guard lock(gResMu);
    gResSet = false;
  }
  auto agents = rdc::DistCol<Agent>::create(world);
  auto markets = rdc::CachableArray<Market>::create(world, {Market{}});
  auto orderBag = rdc::DistBag<std::vector<Order>>::create(world);
  auto updates = rdc::DistMultiMap<std::int64_t, AgentUpdate>::create(world);
  rdc::broadcastFlat(world, kMarketTask, actual, agents, markets, orderBag, updates);
  std::lock_guard lock(gResMu);
  if (!gResSet) throw rdc::ProtocolError("marketsim finished without publishing a result");
  return std::move(gRes);
}

MarketSimResult marketsimRun(const MarketSimConfig& cfg) {
  marketsimValidate(cfg);
  rdc::RuntimeConfig rc;
  rc.places = cfg.places;
  rc.workers = cfg.workers;
  rdc::Runtime rt(rc);
  MarketSimResult out;
  rt.run([&] { out = marketsimInWorld(cfg); });
  return out;
}

}  // namespace apps
