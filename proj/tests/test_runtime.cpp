#include <doctest.h>

#include <array>
#include <atomic>
#include <chrono>
#include <mutex>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "rdc/runtime/api.hpp"

using namespace rdc;

namespace {

std::array<std::atomic<int>, 8> g_counter{};
std::mutex g_logMutex;
std::vector<std::string> g_log;

void resetState() {
  for (auto& c : g_counter) c = 0;
  std::lock_guard l(g_logMutex);
  g_log.clear();
}

int counterSum() {
  int n = 0;
  for (auto& c : g_counter) n += c.load();
  return n;
}

void logLine(std::string s) {
  std::lock_guard l(g_logMutex);
  g_log.push_back(std::move(s));
}

const auto helloTask = defineTask<>("hello", [] { logLine("hello from " + here().toString()); });

const auto incTask = defineTask<>("inc", [] { g_counter[here().id()]++; });

const auto slowIncTask = defineTask<std::int64_t>("slow-inc", [](std::int64_t ms) {
  std::this_thread::sleep_for(std::chrono::milliseconds(ms));
  g_counter[here().id()]++;
});

// every place tells every other place to increment, all under one finish
const auto fanoutTask = defineTask<>("fanout", [] {
  for (std::uint32_t p = 0; p < numPlaces(); ++p)
    if (p != here().id()) asyncAt(place(p), incTask);
});

Task<std::int64_t>& ringTask() {
  static Task<std::int64_t> t("ring-hop", [](std::int64_t hopsLeft) {
    g_counter[here().id()]++;
    if (hopsLeft > 0)
      asyncAt(place((here().id() + 1) % numPlaces()), ringTask(), hopsLeft - 1);
  });
  return t;
}
const auto& ringTaskReg = ringTask();

const auto failTask = defineTask<std::string>("deliberate-failure", [](std::string what) {
  throw std::runtime_error("boom: " + what);
});

const auto localAsyncBurstTask = defineTask<std::int64_t>("local-async-burst", [](std::int64_t n) {
  for (std::int64_t i = 0; i < n; ++i)
    async([] { g_counter[here().id()]++; });
});

const auto nestedFinishTask = defineTask<>("nested-finish", [] {
  finish([] {
    asyncAt(place(0), slowIncTask, std::int64_t{20});
    asyncAt(place(numPlaces() - 1), slowIncTask, std::int64_t{20});
  });
  // inner finish done: both increments must already be visible
  logLine("after-inner:" + std::to_string(counterSum()));
});

}  // namespace

TEST_CASE("asyncAt runs the task on the target place") {
  resetState();
  Runtime rt(RuntimeConfig{.places = 2, .workers = 2});
  rt.run([] { asyncAt(place(1), helloTask); });
  REQUIRE(g_log.size() == 1);
  CHECK(g_log[0] == "hello from place(1)");
}

TEST_CASE("self-place asyncAt is a local spawn") {
  resetState();
  Runtime rt(RuntimeConfig{.places = 2, .workers = 2});
  rt.run([] { asyncAt(here(), incTask); });
  CHECK(g_counter[0].load() == 1);
  CHECK(counterSum() == 1);
}

TEST_CASE("four places asyncAt all others under one finish") {
  resetState();
  Runtime rt(RuntimeConfig{.places = 4, .workers = 2});
  rt.run([] {
    for (std::uint32_t p = 0; p < numPlaces(); ++p) asyncAt(place(p), fanoutTask);
  });
  for (int p = 0; p < 4; ++p) CHECK(g_counter[static_cast<std::size_t>(p)].load() == 3);
}

TEST_CASE("finish with an empty body returns immediately") {
  Runtime rt(RuntimeConfig{.places = 1, .workers = 1});
  rt.run([] { finish([] {}); });
}

TEST_CASE("finish waits for transitively spawned activities") {
  resetState();
  Runtime rt(RuntimeConfig{.places = 3, .workers = 2});
  for (int rep = 0; rep < 20; ++rep) {
    resetState();
    std::int64_t hops = 7;
    rt.run([hops] { asyncAt(place(1), ringTask(), hops); });
    int total = counterSum();
    CHECK(total == hops + 1);
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
    CHECK(counterSum() == total);  // nothing straggles past the finish
  }
}

TEST_CASE("nested finish completes before the outer observes it") {
  resetState();
  Runtime rt(RuntimeConfig{.places = 2, .workers = 2});
  rt.run([] { asyncAt(place(1), nestedFinishTask); });
  REQUIRE(g_log.size() == 1);
  CHECK(g_log[0] == "after-inner:2");
}

TEST_CASE("activity failures aggregate at the finish") {
  resetState();
  Runtime rt(RuntimeConfig{.places = 2, .workers = 2});
  try {
    rt.run([] {
      asyncAt(place(1), failTask, std::string("one"));
      asyncAt(place(0), failTask, std::string("two"));
      asyncAt(place(1), incTask);  // healthy sibling still runs
    });
    FAIL("expected aggregated failure");
  } catch (const AggregateError& e) {
    CHECK(e.causes().size() == 2);
    std::string all = e.causes()[0] + "|" + e.causes()[1];
    CHECK(all.find("boom") != std::string::npos);
    CHECK(all.find("deliberate-failure") != std::string::npos);
  }
  CHECK(counterSum() == 1);
}

TEST_CASE("finish body exception joins the aggregate after children complete") {
  resetState();
  Runtime rt(RuntimeConfig{.places = 2, .workers = 2});
  try {
    rt.run([] {
      asyncAt(place(1), slowIncTask, std::int64_t{30});
      throw std::runtime_error("body gave up");
    });
    FAIL("expected aggregated failure");
  } catch (const AggregateError& e) {
    REQUIRE(e.causes().size() == 1);
    CHECK(e.causes()[0].find("body gave up") != std::string::npos);
  }
  CHECK(g_counter[1].load() == 1);  // child still ran to completion
}

TEST_CASE("unregistered task kind reports to the finish home") {
  resetState();
  Runtime rt(RuntimeConfig{.places = 2, .workers = 2});
  try {
    rt.run([] { detail::spawnRaw(place(1), 9999, {}); });
    FAIL("expected aggregated failure");
  } catch (const AggregateError& e) {
    REQUIRE(e.causes().size() == 1);
    CHECK(e.causes()[0].find("unregistered task kind") != std::string::npos);
  }
}

TEST_CASE("unknown place id is a configuration error") {
  Runtime rt(RuntimeConfig{.places = 2, .workers = 2});
  CHECK_THROWS_AS(rt.run([] { place(7); }), AggregateError);
  try {
    rt.run([] { asyncAt(Place(7), incTask); });
    FAIL("expected aggregated failure");
  } catch (const AggregateError& e) {
    CHECK(e.causes()[0].find("unknown place") != std::string::npos);
  }
}

TEST_CASE("local async spawns run under the current finish") {
  resetState();
  Runtime rt(RuntimeConfig{.places = 2, .workers = 2});
  rt.run([] { asyncAt(place(1), localAsyncBurstTask, std::int64_t{25}); });
  // asyncs ran at place 1 under the root finish homed at place 0
  CHECK(g_counter[1].load() == 25);
}

TEST_CASE("single worker never deadlocks on nested blocking activities") {
  resetState();
  Runtime rt(RuntimeConfig{.places = 2, .workers = 1});
  rt.run([] {
    finish([] {
      asyncAt(place(0), incTask);
      finish([] { asyncAt(place(1), nestedFinishTask); });
    });
  });
  CHECK(counterSum() >= 3);
}

TEST_CASE("broadcastFlat runs the task once per group member") {
  resetState();
  Runtime rt(RuntimeConfig{.places = 4, .workers = 2});
  rt.run([] { broadcastFlat(TeamedPlaceGroup::world(), incTask); });
  for (int p = 0; p < 4; ++p) CHECK(g_counter[static_cast<std::size_t>(p)].load() == 1);

  // subgroup: outsiders never execute
  resetState();
  rt.run([] {
    TeamedPlaceGroup g({place(0), place(1)});
    broadcastFlat(g, incTask);
  });
  CHECK(g_counter[0].load() == 1);
  CHECK(g_counter[1].load() == 1);
  CHECK(g_counter[2].load() == 0);
  CHECK(g_counter[3].load() == 0);

  // caller outside the group is rejected
  try {
    rt.run([] {
      TeamedPlaceGroup g({place(2), place(3)});
      broadcastFlat(g, incTask);
    });
    FAIL("expected rejection");
  } catch (const AggregateError& e) {
    CHECK(e.causes()[0].find("not a group member") != std::string::npos);
  }
}

TEST_CASE("group of one is a direct call") {
  resetState();
  Runtime rt(RuntimeConfig{.places = 2, .workers = 2});
  rt.run([] { broadcastFlat(TeamedPlaceGroup({here()}), incTask); });
  CHECK(counterSum() == 1);
  CHECK(g_counter[0].load() == 1);
}

TEST_CASE("place groups reject duplicates and keep creation order") {
  CHECK_THROWS_AS(TeamedPlaceGroup({Place(1), Place(1)}), UsageError);
  CHECK_THROWS_AS(TeamedPlaceGroup(std::vector<Place>{}), UsageError);
  TeamedPlaceGroup g({Place(3), Place(0), Place(2)});
  CHECK(g.size() == 3);
  CHECK(g.placeAt(0) == Place(3));
  CHECK(g.rankOf(Place(2)) == 2);
  CHECK(g.rankOf(Place(1)) == -1);
  CHECK(!g.contains(Place(1)));
  // same ordered members, same identity; different order, different identity
  CHECK(TeamedPlaceGroup({Place(3), Place(0), Place(2)}).key() == g.key());
  CHECK(TeamedPlaceGroup({Place(0), Place(3), Place(2)}).key() != g.key());
  auto back = fromBytes<TeamedPlaceGroup>(toBytes(g));
  CHECK(back == g);
  CHECK(back.key() == g.key());
}

TEST_CASE("off-place calls are rejected") {
  CHECK_THROWS_AS(here(), UsageError);  // no runtime, not on a place
  Runtime rt(RuntimeConfig{.places = 1, .workers = 1});
  CHECK_THROWS_AS(here(), UsageError);  // main thread is still not a place
  CHECK(rt.numPlaces() == 1);
}

TEST_CASE("task argument bytes must be fully consumed") {
  resetState();
  Runtime rt(RuntimeConfig{.places = 2, .workers = 2});
  try {
    rt.run([] {
      ByteWriter w;
      w.u64(3);
      w.u64(456);  // one u64 too many for slow-inc's single argument
      detail::spawnRaw(place(1), slowIncTask.id(), w.take());
    });
    FAIL("expected aggregated failure");
  } catch (const AggregateError& e) {
    CHECK(e.causes()[0].find("undecoded argument bytes") != std::string::npos);
  }
}
