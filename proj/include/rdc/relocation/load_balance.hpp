#ifndef RDC_RELOCATION_LOAD_BALANCE_HPP
#define RDC_RELOCATION_LOAD_BALANCE_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "rdc/collections/dist_chunked_list.hpp"
#include "rdc/errors.hpp"
#include "rdc/relocation/move_manager.hpp"

namespace rdc {

/// Outcome of one balance decision, same on every rank (pure function of the
/// gathered vectors).
struct LoadBalanceDecision {
  bool move = false;
  int fromRank = -1;
  int toRank = -1;
  std::int64_t count = 0;
};

/// Level-extremes rule over per-rank iteration times: the slowest
/// entry-holding rank donates to the fastest one, proportionally to the gap.
/// transferCount = floor(holderCount(max) * (tMax - tMin) / (2 * tMax)),
/// with a 10% hysteresis band so an almost-balanced system stops churning.
/// Ranks holding nothing neither donate nor receive. Ties go to the lowest
/// rank.
inline LoadBalanceDecision decideLevelExtremes(const std::vector<std::int64_t>& times,
                                               const std::vector<std::int64_t>& holderCounts) {
  if (times.size() != holderCounts.size())
    throw UsageError("level-extremes: times and holder counts disagree in length");
  LoadBalanceDecision d;
  int maxRank = -1, minRank = -1;
  for (std::size_t r = 0; r < times.size(); ++r) {
    if (holderCounts[r] <= 0) continue;
    if (maxRank < 0 || times[r] > times[static_cast<std::size_t>(maxRank)])
      maxRank = static_cast<int>(r);
    if (minRank < 0 || times[r] < times[static_cast<std::size_t>(minRank)])
      minRank = static_cast<int>(r);
  }
  if (maxRank < 0 || minRank < 0 || maxRank == minRank) return d;
  std::int64_t tMax = times[static_cast<std::size_t>(maxRank)];
  std::int64_t tMin = times[static_cast<std::size_t>(minRank)];
  if (tMax <= 0) return d;
  if (10 * tMax <= 11 * tMin) return d;  // within 10%: leave it alone
  std::int64_t count =
      holderCounts[static_cast<std::size_t>(maxRank)] * (tMax - tMin) / (2 * tMax);
  if (count <= 0) return d;
  d.move = true;
  d.fromRank = maxRank;
  d.toRank = minRank;
  d.count = count;
  return d;
}

/// Applies the decision: if the caller is the donor, it stages its
/// highest-indexed ranges (keeping low indices settled) totaling the decided
/// count; everyone else stages nothing. The caller's surrounding protocol
/// performs mm.sync().
template <class T>
LoadBalanceDecision performLoadBalanceLevelExtremes(const std::vector<std::int64_t>& times,
                                                    const std::vector<std::int64_t>& holderCounts,
                                                    DistCol<T>& entries,
                                                    CollectiveMoveManager& mm) {
  const TeamedPlaceGroup& g = mm.group();
  if (static_cast<int>(times.size()) != g.size())
    throw UsageError("level-extremes: expected one time per group rank");
  LoadBalanceDecision d = decideLevelExtremes(times, holderCounts);
  if (!d.move || g.myRank() != d.fromRank) return d;
  Place dest = g.placeAt(d.toRank);
  std::int64_t remaining = d.count;
  std::vector<LongRange> rs = entries.localRanges();
  for (auto it = rs.rbegin(); it != rs.rend() && remaining > 0; ++it) {
    if (it->size() <= remaining) {
      entries.moveRangeAtSync(*it, dest, mm);
      remaining -= it->size();
    } else {
      entries.moveRangeAtSync(LongRange{it->to - remaining, it->to}, dest, mm);
      remaining = 0;
    }
  }
  return d;
}

}  // namespace rdc

#endif  // RDC_RELOCATION_LOAD_BALANCE_HPP
