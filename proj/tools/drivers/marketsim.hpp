#ifndef APPS_MARKETSIM_HPP
#define APPS_MARKETSIM_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace apps {

enum class LbStrategy { None, LevelExtremes };

/// "none" or "level-extremes".
LbStrategy parseLbStrategy(const std::string& s);

/// Synthetic cluster unevenness. Either a static per-place slowdown table or
/// a rotating disturbance that slows one agent place per window.
struct ClusterProfile {
  std::map<unsigned, double> slow;  // place -> factor, absent means 1.0
  bool disturb = false;
  std::uint64_t disturbSeed = 0;
  unsigned disturbPeriod = 0;  // window length in iterations
};

/// Grammar: `slow:<place>:<factor>[,<place>:<factor>...]` or
/// `disturb:<seed>:<periodIters>`. Empty string means no unevenness.
ClusterProfile parseProfile(const std::string& flag);

/// Work multiplier for one place at one iteration. Agent places are
/// 1..agentPlaces; the rotating disturbance always applies factor 3.
double slowdownFor(const ClusterProfile& p, unsigned place, unsigned agentPlaces, int iter);

struct MarketSimConfig {
  std::int64_t nAgents = 3000;
  int iterations = 200;
  unsigned places = 4;  // place 0 is the master and holds no agents
  unsigned workers = 2;
  LbStrategy lb = LbStrategy::None;
  int lbPeriod = 10;
  std::string profile;  // ClusterProfile flag grammar
  std::uint64_t seed = 1;
  std::int64_t workUsPerAgent = 50;
  bool realWork = false;  // busy-spin the simulated work instead of accounting it
};

void marketsimValidate(const MarketSimConfig& cfg);

struct MarketTraceRow {
  int iter = 0;
  unsigned place = 0;
  std::int64_t phase2Us = 0;
  std::int64_t agentsHeld = 0;
};

struct MarketSimResult {
  std::vector<MarketTraceRow> trace;  // one row per (iteration, place)
  std::vector<std::string> csvRows;   // iter,place,phase2_ms,agents_held
  std::uint64_t finalStateHash = 0;   // distribution-independent agent fingerprint
  std::int64_t totalSimulatedUs = 0;  // sum over rounds of the slowest place's phase 2
  std::int64_t updatesGenerated = 0;
  std::int64_t updatesExecuted = 0;
  bool dispatchIntact = true;  // every update executed exactly once, every round
  std::int64_t finalLastPrice = 0;
};

std::string marketsimCsvHeader();

MarketSimResult marketsimInWorld(const MarketSimConfig& cfg);
MarketSimResult marketsimRun(const MarketSimConfig& cfg);

// The matching engine is exposed for unit testing.

struct Order {
  std::int64_t agentId = 0;
  bool buy = false;
  std::int64_t price = 0;
  std::int64_t qty = 0;
  std::int32_t seq = 0;  // submission index within the agent's round
};

struct AgentUpdate {
  std::int64_t agentId = 0;
  bool buy = false;
  std::int64_t price = 0;
  std::int64_t qty = 0;
};

struct MatchOutcome {
  std::vector<AgentUpdate> updates;  // two per trade, in trade order
  std::int64_t lastPrice = 0;
};

/// One round of a price-time-priority continuous double auction. Orders are
/// sorted by (agentId, seq) before insertion so the outcome depends only on
/// the round's order multiset; trades execute at the resting order's price;
/// remainders rest; the book does not survive the round. A deterministic
/// miniature standing in for a full exchange model.
MatchOutcome matchOrders(std::vector<Order> orders, std::int64_t lastPrice);

}  // namespace apps

#endif  // APPS_MARKETSIM_HPP
