#include <doctest.h>

#include <algorithm>
#include <cstdint>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "rdc/rdc.hpp"

using namespace rdc;

namespace {

std::mutex g_m;
std::map<std::string, std::int64_t> g_num;
std::map<std::string, std::string> g_str;

void noteNum(const std::string& k, std::int64_t v) {
  std::lock_guard l(g_m);
  g_num[k] = v;
}
void noteStr(const std::string& k, std::string v) {
  std::lock_guard l(g_m);
  g_str[k] = std::move(v);
}
void resetNotes() {
  std::lock_guard l(g_m);
  g_num.clear();
  g_str.clear();
}
std::int64_t num(const std::string& k) {
  std::lock_guard l(g_m);
  auto it = g_num.find(k);
  return it == g_num.end() ? -999999 : it->second;
}
std::string str(const std::string& k) {
  std::lock_guard l(g_m);
  auto it = g_str.find(k);
  return it == g_str.end() ? "<missing>" : it->second;
}

std::uint64_t sentFromHere() {
  auto& rt = Runtime::require();
  std::uint64_t n = 0;
  for (std::uint32_t d = 0; d < rt.numPlaces(); ++d) {
    if (d == here().id()) continue;
    n += rt.transport().messagesSentFrom(here().id(), d);
  }
  return n;
}

std::string tag(const char* base) { return std::string(base) + "." + std::to_string(here().id()); }

std::string rangesCsv(const std::vector<LongRange>& rs) {
  std::string s;
  for (const LongRange& r : rs) s += r.toString();
  return s;
}

struct CountReducer {
  std::int64_t n = 0;
  CountReducer newReducer() const { return CountReducer{}; }
  void reduce(const std::int64_t&) { ++n; }
  void merge(const CountReducer& o) { n += o.n; }
  friend void serialize(ByteWriter& w, const CountReducer& r) { w.i64(r.n); }
  friend void deserialize(ByteReader& r, CountReducer& c) { c.n = r.i64(); }
};

// order-independent multiset fingerprint: count, sum, sum of squares
struct Fingerprint {
  std::int64_t n = 0, sum = 0, sumSq = 0;
  Fingerprint newReducer() const { return Fingerprint{}; }
  void reduce(const std::int64_t& v) {
    ++n;
    sum += v;
    sumSq += v * v;
  }
  void merge(const Fingerprint& o) {
    n += o.n;
    sum += o.sum;
    sumSq += o.sumSq;
  }
  bool operator==(const Fingerprint&) const = default;
  friend void serialize(ByteWriter& w, const Fingerprint& f) {
    w.i64(f.n);
    w.i64(f.sum);
    w.i64(f.sumSq);
  }
  friend void deserialize(ByteReader& r, Fingerprint& f) {
    f.n = r.i64();
    f.sum = r.i64();
    f.sumSq = r.i64();
  }
};

using ICol = DistChunkedList<std::int64_t>;
using TCol = DistCol<std::int64_t>;
using DTCol = DistCol<double>;
using IBag = DistBag<std::int64_t>;
using IdMap = DistIdMap<std::int64_t>;

// place 0 gives the middle of its only chunk away; the chunk must split at
// both bounds and the values must arrive intact
const auto rangeMoveTask = defineTask<ICol>("range-move", [](ICol c) {
  CollectiveMoveManager mm(c.group());
  if (here().id() == 0) c.moveRangeAtSync(LongRange{20, 50}, place(1), mm);
  mm.sync();
  noteStr(tag("ranges"), rangesCsv(c.localRanges()));
  noteNum(tag("size"), c.localSize());
  if (here().id() == 0) {
    noteNum("keptLow", c.at(10));
    noteNum("keptHigh", c.at(60));
  } else {
    noteNum("movedFirst", c.at(20));
    noteNum("movedLast", c.at(49));
  }
  CountReducer total = c.teamParallelReduce(CountReducer{});
  noteNum(tag("total"), total.n);
});

const auto emptyMoveTask = defineTask<ICol>("empty-move", [](ICol c) {
  CollectiveMoveManager mm(c.group());
  if (here().id() == 0) c.moveRangeAtSync(LongRange{5, 5}, place(1), mm);
  noteNum(tag("staged"), mm.anythingStaged() ? 1 : 0);
  mm.sync();
  mm.sync();  // nothing registered: a pure barrier that still advances epochs
  noteNum(tag("epoch"), static_cast<std::int64_t>(mm.epoch()));
  noteNum(tag("size"), c.localSize());
});

const auto notHeldTask = defineTask<ICol>("not-held", [](ICol c) {
  CollectiveMoveManager mm(c.group());
  if (here().id() == 0) {
    try {
      c.moveRangeAtSync(LongRange{200, 210}, place(1), mm);
      noteStr("notHeldErr", "no error");
    } catch (const RangeError& e) {
      noteStr("notHeldErr", e.what());
    }
  }
  mm.sync();  // registration failed before staging anything: sync stays clean
  noteNum(tag("size"), c.localSize());
});

// two epochs of tail picking from one manager; the newest entries leave first
const auto tailPickTask = defineTask<IBag>("tail-pick", [](IBag b) {
  if (here().id() == 0)
    for (std::int64_t v = 0; v < 10; ++v) b.add(v);
  CollectiveMoveManager mm(b.group());
  if (here().id() == 0) b.moveAtSyncCount(3, place(1), mm);
  mm.sync();
  auto csv = [&b] {
    std::vector<std::int64_t> vs;
    b.local().forEach([&](const std::int64_t& v) { vs.push_back(v); });
    std::sort(vs.begin(), vs.end());
    std::string s;
    for (auto v : vs) s += std::to_string(v) + ",";
    return s;
  };
  noteStr(tag("afterOne"), csv());
  if (here().id() == 0) {
    b.moveAtSyncCount(2, place(1), mm);
    b.moveAtSyncCount(2, place(1), mm);  // second registration takes the next window
  }
  mm.sync();
  noteStr(tag("afterTwo"), csv());
});

const auto rotateBagTask = defineTask<IBag>("rotate-bag", [](IBag b) {
  int rank = b.group().myRank();
  int n = b.group().size();
  for (std::int64_t i = 0; i < 50; ++i) b.add(rank * 1000 + i);
  Fingerprint before = b.teamParallelReduce(Fingerprint{});
  CollectiveMoveManager mm(b.group());
  b.moveAtSyncCount(20, b.group().placeAt((rank + 1) % n), mm);
  mm.sync();
  Fingerprint after = b.teamParallelReduce(Fingerprint{});
  noteNum(tag("conserved"), before == after ? 1 : 0);
  noteNum(tag("size"), static_cast<std::int64_t>(b.localSize()));
  std::vector<std::int64_t> vs;
  b.local().forEach([&](const std::int64_t& v) { vs.push_back(v); });
  std::sort(vs.begin(), vs.end());
  std::string s;
  for (auto v : vs) s += std::to_string(v) + ",";
  noteStr(tag("held"), s);
});

// overbooked staging must fail the whole exchange on every member, leaving
// every bag exactly as it was; the manager stays usable for the next epoch
const auto abortTask = defineTask<IBag>("abort-exchange", [](IBag b) {
  if (here().id() == 0)
    for (std::int64_t v = 0; v < 5; ++v) b.add(v);
  CollectiveMoveManager mm(b.group());
  if (here().id() == 0) {
    b.moveAtSyncCount(3, place(1), mm);
    b.moveAtSyncCount(3, place(1), mm);  // 6 staged from a bag of 5
  }
  try {
    mm.sync();
    noteStr(tag("abortErr"), "no error");
  } catch (const ProtocolError& e) {
    noteStr(tag("abortErr"), e.what());
  }
  noteNum(tag("sizeAfterAbort"), static_cast<std::int64_t>(b.localSize()));
  if (here().id() == 0) b.moveAtSyncCount(2, place(1), mm);
  mm.sync();
  noteNum(tag("sizeAfterRetry"), static_cast<std::int64_t>(b.localSize()));
});

// the receiving place has never resolved the handle, so its hub cannot route
// the incoming frame
const auto unknownReceiverTask = defineTask<>("unknown-receiver", [] {
  TeamedPlaceGroup g = TeamedPlaceGroup::world();
  CollectiveMoveManager mm(g);
  if (here().id() == 0) {
    auto b = IBag::create(g);
    b.add(1);
    b.add(2);
    b.add(3);
    b.moveAtSyncCount(2, place(1), mm);
    mm.sync();
    noteNum("senderSizeAfter", static_cast<std::int64_t>(b.localSize()));
  } else {
    mm.sync();
  }
});

const auto keyRuleTask = defineTask<IdMap>("key-rule", [](IdMap m) {
  TeamedPlaceGroup g = m.group();
  CollectiveMoveManager mm(g);
  m.moveAtSync([g](std::int64_t k) { return g.placeAt(static_cast<int>(k % 4)); }, mm);
  mm.sync();
  noteNum(tag("mapSize"), static_cast<std::int64_t>(m.localSize()));
  std::int64_t keySum = 0;
  bool valuesOk = true;
  m.forEachLocal([&](std::int64_t k, std::int64_t& v) {
    keySum += k;
    valuesOk = valuesOk && v == 7 * k;
  });
  noteNum(tag("keySum"), keySum);
  noteNum(tag("valuesOk"), valuesOk ? 1 : 0);
});

const auto relocateTask = defineTask<IdMap>("relocate-map", [](IdMap m) {
  DistributionRecord d;
  d.setOwner(LongRange{0, 5}, place(1));
  d.setOwner(LongRange{5, 10}, place(2));
  m.relocate(d);
  noteNum(tag("size"), static_cast<std::int64_t>(m.localSize()));
  auto v2 = m.get(2), v4 = m.get(4), v7 = m.get(7);
  noteNum(tag("v2"), v2 ? *v2 : -1);
  noteNum(tag("v4"), v4 ? *v4 : -1);
  noteNum(tag("v7"), v7 ? *v7 : -1);
  m.relocate(d);  // already conforming: nothing may change
  noteNum(tag("sizeAgain"), static_cast<std::int64_t>(m.localSize()));
  m.updateDist();
  DistributionRecord rec = m.getDistribution();
  auto o2 = rec.lookup(2), o7 = rec.lookup(7);
  noteNum(tag("owner2"), o2 ? o2->id() : -1);
  noteNum(tag("owner7"), o7 ? o7->id() : -1);
  noteNum(tag("covered"), rec.coveredCount());
});

const auto updateDistTask = defineTask<DTCol>("update-dist", [](DTCol c) {
  c.updateDist();
  DistributionRecord r1 = c.getDistribution();
  auto o0 = r1.lookup(0), o99 = r1.lookup(99);
  noteNum(tag("o0"), o0 ? o0->id() : -1);
  noteNum(tag("o99"), o99 ? o99->id() : -1);
  noteNum(tag("covered1"), r1.coveredCount());
  noteNum(tag("segs1"), static_cast<std::int64_t>(r1.segmentCount()));

  c.updateDist();  // nothing changed since: the exchange must carry zero bytes
  noteNum(tag("bytes2"), static_cast<std::int64_t>(c.lastExchangedDeltaBytes()));

  CollectiveMoveManager mm(c.group());
  if (here().id() == 0) c.moveRangeAtSync(LongRange{20, 50}, place(1), mm);
  mm.sync();
  c.updateDist();
  DistributionRecord r3 = c.getDistribution();
  auto o19 = r3.lookup(19), o20 = r3.lookup(20), o49 = r3.lookup(49), o50 = r3.lookup(50);
  noteNum(tag("o19"), o19 ? o19->id() : -1);
  noteNum(tag("o20"), o20 ? o20->id() : -1);
  noteNum(tag("o49"), o49 ? o49->id() : -1);
  noteNum(tag("o50"), o50 ? o50->id() : -1);
  noteNum(tag("segs3"), static_cast<std::int64_t>(r3.segmentCount()));
  noteNum(tag("bytes3"), static_cast<std::int64_t>(c.lastExchangedDeltaBytes()));
  bool sound = true;
  for (const LongRange& r : c.localRanges())
    for (std::int64_t i = r.from; i < r.to; ++i) {
      auto o = r3.lookup(i);
      sound = sound && o && o->id() == here().id();
    }
  noteNum(tag("sound"), sound ? 1 : 0);
});

// ranks 1..3 hold 50 entries each; rank 1 reports the worst time, so it must
// donate its highest-indexed tail to rank 2
const auto lbTask = defineTask<TCol>("level-extremes", [](TCol c) {
  int rank = c.group().myRank();
  if (rank > 0) {
    std::int64_t base = (rank - 1) * 100;
    std::vector<std::int64_t> vals;
    for (std::int64_t i = 0; i < 50; ++i) vals.push_back(base + i + 500);
    c.addChunk(LongRange{base, base + 50}, vals);
  }
  std::vector<std::int64_t> times = {10, 40, 20, 30};
  std::vector<std::int64_t> counts = {0, 50, 50, 50};
  CollectiveMoveManager mm(c.group());
  LoadBalanceDecision d = performLoadBalanceLevelExtremes(times, counts, c, mm);
  noteNum(tag("move"), d.move ? 1 : 0);
  noteNum(tag("from"), d.fromRank);
  noteNum(tag("to"), d.toRank);
  noteNum(tag("count"), d.count);
  mm.sync();
  noteNum(tag("size"), c.localSize());
  noteStr(tag("ranges"), rangesCsv(c.localRanges()));
  if (here().id() == 2) {
    noteNum("donatedFirst", c.at(38));
    noteNum("donatedLast", c.at(49));
  }
  CountReducer total = c.teamParallelReduce(CountReducer{});
  noteNum(tag("total"), total.n);
});

// one manager carries a bag, a keyed map, and a chunked list in a single
// exchange; the wire cost in messages must match an empty barrier sync
const auto multiSyncTask =
    defineTask<IBag, IdMap, ICol>("multi-sync", [](IBag b, IdMap m, ICol c) {
      TeamedPlaceGroup g = b.group();
      int rank = g.myRank();
      int n = g.size();

      CollectiveMoveManager empty(g);
      std::uint64_t e0 = sentFromHere();
      empty.sync();
      std::uint64_t emptyCost = sentFromHere() - e0;

      for (std::int64_t i = 0; i < 5; ++i) b.add(rank * 10 + i);
      CollectiveMoveManager mm(g);
      b.moveAtSyncCount(2, g.placeAt((rank + 1) % n), mm);
      m.moveAtSync([g](std::int64_t k) { return g.placeAt(static_cast<int>(k % 3)); }, mm);
      if (rank == 0) c.moveRangeAtSync(LongRange{0, 5}, place(1), mm);
      std::uint64_t l0 = sentFromHere();
      mm.sync();
      std::uint64_t loadedCost = sentFromHere() - l0;

      noteNum(tag("emptyCost"), static_cast<std::int64_t>(emptyCost));
      noteNum(tag("loadedCost"), static_cast<std::int64_t>(loadedCost));
      noteNum(tag("bagSize"), static_cast<std::int64_t>(b.localSize()));
      noteNum(tag("mapSize"), static_cast<std::int64_t>(m.localSize()));
      noteStr(tag("colRanges"), rangesCsv(c.localRanges()));
    });

}  // namespace

TEST_CASE("distribution record keeps segments disjoint, split, and coalesced") {
  DistributionRecord d;
  d.setOwner(LongRange{0, 10}, Place(0));
  d.setOwner(LongRange{10, 20}, Place(1));
  CHECK(d.segmentCount() == 2);
  CHECK(d.lookup(0).value().id() == 0);
  CHECK(d.lookup(9).value().id() == 0);
  CHECK(d.lookup(10).value().id() == 1);
  CHECK(d.lookup(19).value().id() == 1);
  CHECK(!d.lookup(25).has_value());
  CHECK(d.coveredCount() == 20);

  // adjacent same-owner grants merge into one canonical segment
  d.setOwner(LongRange{20, 30}, Place(1));
  CHECK(d.segmentCount() == 2);
  CHECK(d.lookup(29).value().id() == 1);

  std::string overlapMsg;
  try {
    d.setOwner(LongRange{5, 15}, Place(2));
  } catch (const UsageError& e) {
    overlapMsg = e.what();
  }
  CHECK(overlapMsg.find("overlaps") != std::string::npos);

  d.clearOwner(LongRange{8, 12});
  CHECK(!d.lookup(8).has_value());
  CHECK(!d.lookup(11).has_value());
  CHECK(d.lookup(7).value().id() == 0);
  CHECK(d.lookup(12).value().id() == 1);
  CHECK(d.coveredCount() == 26);

  // equality is structural: a record built by a different path compares equal
  DistributionRecord e;
  e.setOwner(LongRange{0, 8}, Place(0));
  e.setOwner(LongRange{12, 30}, Place(1));
  CHECK(d == e);
}

TEST_CASE("level extremes decision: slowest holder donates toward the fastest") {
  auto d = decideLevelExtremes({10, 40, 20, 30}, {0, 50, 50, 50});
  CHECK(d.move);
  CHECK(d.fromRank == 1);
  CHECK(d.toRank == 2);
  CHECK(d.count == 12);  // 50 * (40 - 20) / (2 * 40)

  // within 1.1x of each other: leave things alone
  CHECK(!decideLevelExtremes({25, 25, 25}, {10, 10, 10}).move);
  CHECK(!decideLevelExtremes({11, 10}, {100, 100}).move);
  auto e = decideLevelExtremes({12, 10}, {100, 100});
  CHECK(e.move);
  CHECK(e.fromRank == 0);
  CHECK(e.toRank == 1);
  CHECK(e.count == 100 * 2 / 24);

  // ranks holding nothing are not candidates, even with extreme times
  CHECK(!decideLevelExtremes({5, 100}, {0, 50}).move);
  // a transfer that rounds to zero entries is skipped
  CHECK(!decideLevelExtremes({12, 10}, {1, 1}).move);
  // ties resolve to the lowest rank on both sides
  auto t = decideLevelExtremes({40, 40, 10, 10}, {8, 8, 8, 8});
  CHECK(t.fromRank == 0);
  CHECK(t.toRank == 2);

  CHECK_THROWS_AS(decideLevelExtremes({1, 2}, {1, 2, 3}), UsageError);
}

TEST_CASE("moving a mid-chunk range splits it and carries the values over") {
  resetNotes();
  Runtime rt(RuntimeConfig{.places = 2, .workers = 2});
  rt.run([] {
    auto c = ICol::create(TeamedPlaceGroup::world());
    std::vector<std::int64_t> vals;
    for (std::int64_t i = 0; i < 100; ++i) vals.push_back(3 * i);
    c.addChunk(LongRange{0, 100}, vals);
    broadcastFlat(c.group(), rangeMoveTask, c);
  });
  CHECK(str("ranges.0") == "[0,20)[50,100)");
  CHECK(str("ranges.1") == "[20,50)");
  CHECK(num("size.0") == 70);
  CHECK(num("size.1") == 30);
  CHECK(num("keptLow") == 30);
  CHECK(num("keptHigh") == 180);
  CHECK(num("movedFirst") == 60);
  CHECK(num("movedLast") == 147);
  CHECK(num("total.0") == 100);
  CHECK(num("total.1") == 100);
}

TEST_CASE("an empty range stages nothing and bare syncs are pure barriers") {
  resetNotes();
  Runtime rt(RuntimeConfig{.places = 2, .workers = 2});
  rt.run([] {
    auto c = ICol::create(TeamedPlaceGroup::world());
    c.addChunk(LongRange{0, 10}, std::vector<std::int64_t>(10, 7));
    broadcastFlat(c.group(), emptyMoveTask, c);
  });
  for (int p = 0; p < 2; ++p) {
    std::string id = std::to_string(p);
    CHECK(num("staged." + id) == 0);
    CHECK(num("epoch." + id) == 2);
  }
  CHECK(num("size.0") == 10);
  CHECK(num("size.1") == 0);
}

TEST_CASE("staging a range that is not held fails before anything moves") {
  resetNotes();
  Runtime rt(RuntimeConfig{.places = 2, .workers = 2});
  rt.run([] {
    auto c = ICol::create(TeamedPlaceGroup::world());
    c.addChunk(LongRange{0, 10}, std::vector<std::int64_t>(10, 7));
    broadcastFlat(c.group(), notHeldTask, c);
  });
  CHECK(str("notHeldErr").find("not locally held") != std::string::npos);
  CHECK(str("notHeldErr").find("200") != std::string::npos);
  CHECK(num("size.0") == 10);
  CHECK(num("size.1") == 0);
}

TEST_CASE("count moves pick the newest entries, window by window") {
  resetNotes();
  Runtime rt(RuntimeConfig{.places = 2, .workers = 2});
  rt.run([] {
    auto b = IBag::create(TeamedPlaceGroup::world());
    broadcastFlat(b.group(), tailPickTask, b);
  });
  CHECK(str("afterOne.0") == "0,1,2,3,4,5,6,");
  CHECK(str("afterOne.1") == "7,8,9,");
  CHECK(str("afterTwo.0") == "0,1,2,");
  CHECK(str("afterTwo.1") == "3,4,5,6,7,8,9,");
}

TEST_CASE("a four place bag rotation conserves the global multiset") {
  resetNotes();
  Runtime rt(RuntimeConfig{.places = 4, .workers = 2});
  rt.run([] {
    auto b = IBag::create(TeamedPlaceGroup::world());
    broadcastFlat(b.group(), rotateBagTask, b);
  });
  for (int p = 0; p < 4; ++p) {
    std::string id = std::to_string(p);
    CHECK(num("conserved." + id) == 1);
    CHECK(num("size." + id) == 50);
    // kept its own 0..29 plus the previous rank's newest 30..49
    int prev = (p + 3) % 4;
    std::vector<std::int64_t> vs;
    for (std::int64_t i = 0; i < 30; ++i) vs.push_back(p * 1000 + i);
    for (std::int64_t i = 30; i < 50; ++i) vs.push_back(prev * 1000 + i);
    std::sort(vs.begin(), vs.end());
    std::string expected;
    for (auto v : vs) expected += std::to_string(v) + ",";
    CHECK(str("held." + id) == expected);
  }
}

TEST_CASE("a failing serializer aborts the exchange everywhere, mutating nothing") {
  resetNotes();
  Runtime rt(RuntimeConfig{.places = 2, .workers = 2});
  rt.run([] {
    auto b = IBag::create(TeamedPlaceGroup::world());
    broadcastFlat(b.group(), abortTask, b);
  });
  CHECK(str("abortErr.0").find("aborted before any mutation") != std::string::npos);
  CHECK(str("abortErr.1").find("aborted before any mutation") != std::string::npos);
  CHECK(num("sizeAfterAbort.0") == 5);
  CHECK(num("sizeAfterAbort.1") == 0);
  // the manager survives an aborted epoch and completes the next one
  CHECK(num("sizeAfterRetry.0") == 3);
  CHECK(num("sizeAfterRetry.1") == 2);
}

TEST_CASE("frames for a collection the receiver never resolved are a protocol error") {
  resetNotes();
  Runtime rt(RuntimeConfig{.places = 2, .workers = 2});
  std::string joined;
  rt.run([&] {
    try {
      broadcastFlat(TeamedPlaceGroup::world(), unknownReceiverTask);
    } catch (const AggregateError& e) {
      for (const std::string& c : e.causes()) joined += c + " | ";
    }
  });
  CHECK(joined.find("no relocation receiver") != std::string::npos);
  // the sender's exchange completed; only the receiver failed to route
  CHECK(num("senderSizeAfter") == 1);
}

TEST_CASE("a move manager rejects destinations outside its group") {
  Runtime rt(RuntimeConfig{.places = 3, .workers = 2});
  std::string what;
  rt.run([&] {
    TeamedPlaceGroup sub({place(0), place(1)});
    auto b = IBag::create(sub);
    b.add(1);
    CollectiveMoveManager mm(sub);
    try {
      b.moveAtSyncCount(1, place(2), mm);
    } catch (const UsageError& e) {
      what = e.what();
    }
  });
  CHECK(what.find("outside the manager's group") != std::string::npos);
}

TEST_CASE("staging more entries than a bag holds is rejected at registration") {
  Runtime rt(RuntimeConfig{.places = 1, .workers = 2});
  std::string what;
  rt.run([&] {
    auto b = IBag::create(TeamedPlaceGroup::world());
    for (std::int64_t v = 0; v < 5; ++v) b.add(v);
    CollectiveMoveManager mm(b.group());
    try {
      b.moveAtSyncCount(6, here(), mm);
    } catch (const UsageError& e) {
      what = e.what();
    }
  });
  CHECK(what.find("cannot stage 6 entries from a bag holding 5") != std::string::npos);
}

TEST_CASE("a move to the staging place itself round-trips through the exchange") {
  Runtime rt(RuntimeConfig{.places = 1, .workers = 2});
  std::string held;
  rt.run([&] {
    auto b = IBag::create(TeamedPlaceGroup::world());
    b.add(1);
    b.add(2);
    b.add(3);
    CollectiveMoveManager mm(b.group());
    b.moveAtSyncCount(2, here(), mm);
    mm.sync();
    std::vector<std::int64_t> vs;
    b.local().forEach([&](const std::int64_t& v) { vs.push_back(v); });
    std::sort(vs.begin(), vs.end());
    for (auto v : vs) held += std::to_string(v) + ",";
  });
  CHECK(held == "1,2,3,");
}

TEST_CASE("keyed moves deliver every key to the place its rule names") {
  resetNotes();
  Runtime rt(RuntimeConfig{.places = 4, .workers = 2});
  rt.run([] {
    auto m = IdMap::create(TeamedPlaceGroup::world());
    for (std::int64_t k = 0; k < 100; ++k) m.put(k, 7 * k);
    broadcastFlat(m.group(), keyRuleTask, m);
  });
  for (int p = 0; p < 4; ++p) {
    std::string id = std::to_string(p);
    CHECK(num("mapSize." + id) == 25);
    CHECK(num("keySum." + id) == 25 * p + 1200);  // sum of k < 100 with k % 4 == p
    CHECK(num("valuesOk." + id) == 1);
  }
}

TEST_CASE("relocate conforms the map to a distribution and is then idempotent") {
  resetNotes();
  Runtime rt(RuntimeConfig{.places = 3, .workers = 2});
  rt.run([] {
    auto m = IdMap::create(TeamedPlaceGroup::world());
    m.put(2, 20);
    m.put(4, 40);
    m.put(7, 70);
    broadcastFlat(m.group(), relocateTask, m);
  });
  CHECK(num("size.0") == 0);
  CHECK(num("size.1") == 2);
  CHECK(num("size.2") == 1);
  CHECK(num("v2.1") == 20);
  CHECK(num("v4.1") == 40);
  CHECK(num("v7.2") == 70);
  for (int p = 0; p < 3; ++p) {
    std::string id = std::to_string(p);
    CHECK(num("sizeAgain." + id) == num("size." + id));
    CHECK(num("owner2." + id) == 1);
    CHECK(num("owner7." + id) == 2);
    CHECK(num("covered." + id) == 3);
  }
}

TEST_CASE("a rule naming a place outside the group is rejected with the key") {
  Runtime rt(RuntimeConfig{.places = 2, .workers = 2});
  std::string what;
  rt.run([&] {
    TeamedPlaceGroup solo({place(0)});
    auto m = IdMap::create(solo);
    m.put(42, 0);
    CollectiveMoveManager mm(solo);
    try {
      m.moveAtSync([](std::int64_t) { return place(1); }, mm);
    } catch (const UsageError& e) {
      what = e.what();
    }
  });
  CHECK(what.find("outside the group") != std::string::npos);
  CHECK(what.find("42") != std::string::npos);
}

TEST_CASE("relocate rejects local keys the distribution does not cover") {
  Runtime rt(RuntimeConfig{.places = 1, .workers = 2});
  std::string what;
  rt.run([&] {
    auto m = IdMap::create(TeamedPlaceGroup::world());
    m.put(3, 30);
    m.put(9, 90);
    DistributionRecord d;
    d.setOwner(LongRange{0, 5}, here());
    try {
      m.relocate(d);
    } catch (const UsageError& e) {
      what = e.what();
    }
  });
  CHECK(what.find("does not cover") != std::string::npos);
  CHECK(what.find("9") != std::string::npos);
}

TEST_CASE("updateDist reconciles every place to the same ownership record") {
  resetNotes();
  Runtime rt(RuntimeConfig{.places = 3, .workers = 2});
  rt.run([] {
    auto c = DTCol::create(TeamedPlaceGroup::world());
    c.addChunk(LongRange{0, 100}, std::vector<double>(100, 1.0));
    broadcastFlat(c.group(), updateDistTask, c);
  });
  for (int p = 0; p < 3; ++p) {
    std::string id = std::to_string(p);
    CHECK(num("o0." + id) == 0);
    CHECK(num("o99." + id) == 0);
    CHECK(num("covered1." + id) == 100);
    CHECK(num("segs1." + id) == 1);
    CHECK(num("bytes2." + id) == 0);  // nothing changed between the two updates
    CHECK(num("o19." + id) == 0);
    CHECK(num("o20." + id) == 1);
    CHECK(num("o49." + id) == 1);
    CHECK(num("o50." + id) == 0);
    CHECK(num("segs3." + id) == 3);
    CHECK(num("sound." + id) == 1);
  }
  // the post-move delta exchange is the same nonzero total seen from anywhere
  CHECK(num("bytes3.0") > 0);
  CHECK(num("bytes3.1") == num("bytes3.0"));
  CHECK(num("bytes3.2") == num("bytes3.0"));
}

TEST_CASE("level extremes balancing donates the straggler's tail and conserves entries") {
  resetNotes();
  Runtime rt(RuntimeConfig{.places = 4, .workers = 2});
  rt.run([] {
    auto c = TCol::create(TeamedPlaceGroup::world());
    broadcastFlat(c.group(), lbTask, c);
  });
  for (int p = 0; p < 4; ++p) {
    std::string id = std::to_string(p);
    CHECK(num("move." + id) == 1);
    CHECK(num("from." + id) == 1);
    CHECK(num("to." + id) == 2);
    CHECK(num("count." + id) == 12);
    CHECK(num("total." + id) == 150);
  }
  CHECK(num("size.0") == 0);
  CHECK(num("size.1") == 38);
  CHECK(num("size.2") == 62);
  CHECK(num("size.3") == 50);
  CHECK(str("ranges.1") == "[0,38)");
  CHECK(str("ranges.2") == "[38,50)[100,150)");
  CHECK(num("donatedFirst") == 538);
  CHECK(num("donatedLast") == 549);
}

TEST_CASE("one sync carries several collections for the message cost of a barrier") {
  resetNotes();
  Runtime rt(RuntimeConfig{.places = 3, .workers = 2});
  rt.run([] {
    TeamedPlaceGroup g = TeamedPlaceGroup::world();
    auto b = IBag::create(g);
    auto m = IdMap::create(g);
    auto c = ICol::create(g);
    for (std::int64_t k = 0; k < 9; ++k) m.put(k, k);
    c.addChunk(LongRange{0, 10}, std::vector<std::int64_t>(10, 1));
    broadcastFlat(g, multiSyncTask, b, m, c);
  });
  for (int p = 0; p < 3; ++p) {
    std::string id = std::to_string(p);
    CHECK(num("emptyCost." + id) > 0);
    CHECK(num("loadedCost." + id) == num("emptyCost." + id));
    CHECK(num("bagSize." + id) == 5);  // sent 2 away, received 2
    CHECK(num("mapSize." + id) == 3);
  }
  CHECK(str("colRanges.0") == "[5,10)");
  CHECK(str("colRanges.1") == "[0,5)");
  CHECK(str("colRanges.2") == "");
}
