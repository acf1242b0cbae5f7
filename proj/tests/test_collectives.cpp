#include <doctest.h>

#include <array>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <mutex>
#include <numeric>
#include <string>
#include <thread>
#include <vector>

#include "rdc/rng.hpp"
#include "rdc/runtime/api.hpp"

using namespace rdc;

namespace {

std::mutex g_m;
std::vector<std::string> g_errors;
std::array<std::vector<std::int64_t>, 8> g_rows;  // per-place results
std::array<Bytes, 8> g_bytes;

void resetState() {
  std::lock_guard l(g_m);
  g_errors.clear();
  for (auto& r : g_rows) r.clear();
  for (auto& b : g_bytes) b.clear();
}

void recordError(const std::string& s) {
  std::lock_guard l(g_m);
  g_errors.push_back(s);
}

// each member announces distinct counts; the exchange must transpose the
// matrix sendCounts[src][dst]
const auto alltoallTask = defineTask<>("alltoall-transpose", [] {
  auto g = TeamedPlaceGroup::world();
  int me = g.myRank();
  int n = g.size();
  std::vector<std::int64_t> send(static_cast<std::size_t>(n));
  for (int d = 0; d < n; ++d) send[static_cast<std::size_t>(d)] = 100 * me + d;
  auto recv = g.alltoall(send);
  std::lock_guard l(g_m);
  g_rows[static_cast<std::size_t>(me)] = recv;
});

const auto alltoallvTask = defineTask<>("alltoallv-exchange", [] {
  auto g = TeamedPlaceGroup::world();
  int me = g.myRank();
  int n = g.size();
  std::vector<Bytes> payloads;
  std::vector<std::int64_t> counts;
  for (int d = 0; d < n; ++d) {
    ByteWriter w;
    w.str("from " + std::to_string(me) + " to " + std::to_string(d));
    payloads.push_back(w.take());
    counts.push_back(static_cast<std::int64_t>(payloads.back().size()));
  }
  auto announced = g.alltoall(counts);
  auto got = g.alltoallv(payloads, announced);
  std::vector<std::int64_t> sizes;
  std::string joined;
  for (int s = 0; s < n; ++s) {
    ByteReader r(got[static_cast<std::size_t>(s)]);
    joined += r.str() + ";";
    sizes.push_back(static_cast<std::int64_t>(got[static_cast<std::size_t>(s)].size()));
  }
  std::lock_guard l(g_m);
  g_rows[static_cast<std::size_t>(me)] = sizes;
  g_bytes[static_cast<std::size_t>(me)] = Bytes(joined.begin(), joined.end());
});

const auto bcastTask = defineTask<std::int64_t>("bcast-from-root", [](std::int64_t rootId) {
  auto g = TeamedPlaceGroup::world();
  ByteWriter w;
  w.str("payload-of-" + std::to_string(rootId));
  Bytes mine = here().id() == static_cast<std::uint32_t>(rootId) ? w.take() : Bytes{};
  Bytes got = g.bcast(place(static_cast<std::uint32_t>(rootId)), mine);
  std::lock_guard l(g_m);
  g_bytes[here().id()] = got;
});

const auto gatherTask = defineTask<>("gather-to-root", [] {
  auto g = TeamedPlaceGroup::world();
  ByteWriter w;
  w.u32(here().id() * 11);
  auto got = g.gather(place(0), w.take());
  if (here().id() == 0) {
    std::vector<std::int64_t> vals;
    for (auto& b : got) {
      ByteReader r(b);
      vals.push_back(r.u32());
    }
    std::lock_guard l(g_m);
    g_rows[0] = vals;
  } else if (!got.empty()) {
    recordError("non-root saw gather data");
  }
});

const auto allgatherTask = defineTask<>("allgather-one", [] {
  auto g = TeamedPlaceGroup::world();
  auto all = g.allgather1(static_cast<std::int64_t>(here().id()) * 3 + 1);
  std::lock_guard l(g_m);
  g_rows[here().id()] = all;
});

const auto allreduceTask = defineTask<>("allreduce-weighted", [] {
  auto g = TeamedPlaceGroup::world();
  // non-commutative combine: (a, b) -> a*10 + b, exposes combination order
  ByteWriter w;
  w.i64(static_cast<std::int64_t>(here().id()) + 1);
  Bytes out = g.allreduceBytes(w.take(), [](const Bytes& a, const Bytes& b) {
    ByteReader ra(a), rb(b);
    ByteWriter ww;
    ww.i64(ra.i64() * 10 + rb.i64());
    return ww.take();
  });
  ByteReader r(out);
  std::lock_guard l(g_m);
  g_rows[here().id()] = {r.i64()};
});

const auto subgroupTask = defineTask<>("subgroup-collective", [] {
  TeamedPlaceGroup g({place(2), place(0)});  // rank 0 = place 2, rank 1 = place 0
  if (!g.contains(here())) return;
  auto all = g.allgather1(static_cast<std::int64_t>(here().id()) + 100);
  std::lock_guard l(g_m);
  g_rows[here().id()] = all;
});

const auto mismatchTask = defineTask<>("mismatched-op-kinds", [] {
  auto g = TeamedPlaceGroup::world();
  try {
    if (g.myRank() == 0) {
      g.allgather1(1);
    } else {
      g.barrier();
    }
  } catch (const ProtocolError& e) {
    recordError(std::string("protocol:") + e.what());
  } catch (const TimeoutError& e) {
    recordError(std::string("timeout:") + e.what());
  }
});

const auto missingMemberTask = defineTask<>("missing-member", [] {
  auto g = TeamedPlaceGroup::world();
  if (g.myRank() == 1) return;  // rank 1 never calls
  try {
    g.barrier();
    recordError("barrier returned despite a missing member");
  } catch (const TimeoutError&) {
    recordError("timeout-ok");
  }
});

// place 1 delays its matching call so the two concurrent callers on place 0
// reliably overlap; exactly one of them must win the epoch
const auto doubleCallTask = defineTask<>("double-concurrent-call", [] {
  auto g = TeamedPlaceGroup::world();
  if (here().id() == 0) {
    std::atomic<bool> firstLaunched{false};
    std::atomic<int> succeeded{0}, rejected{0};
    finish([&] {
      async([&] {
        firstLaunched = true;
        try {
          g.allgather1(7);
          succeeded++;
        } catch (const UsageError&) {
          rejected++;
        }
      });
      async([&] {
        while (!firstLaunched) std::this_thread::yield();
        std::this_thread::sleep_for(std::chrono::milliseconds(60));
        try {
          g.allgather1(7);
          succeeded++;
        } catch (const UsageError&) {
          rejected++;
        }
      });
    });
    if (succeeded != 1 || rejected != 1)
      recordError("expected one winner and one rejection, got " + std::to_string(succeeded.load()) +
                  "/" + std::to_string(rejected.load()));
  } else {
    std::this_thread::sleep_for(std::chrono::milliseconds(250));
    g.allgather1(7);
  }
});

const auto epochSequenceTask = defineTask<std::int64_t>("epoch-sequence", [](std::int64_t rounds) {
  auto g = TeamedPlaceGroup::world();
  std::int64_t acc = 0;
  for (std::int64_t i = 0; i < rounds; ++i) {
    auto all = g.allgather1(static_cast<std::int64_t>(here().id()) + i);
    acc += std::accumulate(all.begin(), all.end(), std::int64_t{0});
  }
  std::lock_guard l(g_m);
  g_rows[here().id()] = {acc};
});

}  // namespace

TEST_CASE("alltoall transposes the announced counts") {
  resetState();
  Runtime rt(RuntimeConfig{.places = 4, .workers = 2});
  rt.run([] { broadcastFlat(TeamedPlaceGroup::world(), alltoallTask); });
  // place d must have received 100*s + d from each s
  for (int d = 0; d < 4; ++d) {
    REQUIRE(g_rows[static_cast<std::size_t>(d)].size() == 4);
    for (int s = 0; s < 4; ++s)
      CHECK(g_rows[static_cast<std::size_t>(d)][static_cast<std::size_t>(s)] == 100 * s + d);
  }
}

TEST_CASE("alltoall on a single-member group is identity") {
  resetState();
  Runtime rt(RuntimeConfig{.places = 1, .workers = 1});
  rt.run([] { broadcastFlat(TeamedPlaceGroup::world(), alltoallTask); });
  REQUIRE(g_rows[0].size() == 1);
  CHECK(g_rows[0][0] == 0);
}

TEST_CASE("alltoallv delivers personalized payloads with verified lengths") {
  resetState();
  Runtime rt(RuntimeConfig{.places = 3, .workers = 2});
  rt.run([] { broadcastFlat(TeamedPlaceGroup::world(), alltoallvTask); });
  for (int d = 0; d < 3; ++d) {
    std::string joined(g_bytes[static_cast<std::size_t>(d)].begin(),
                       g_bytes[static_cast<std::size_t>(d)].end());
    std::string expect;
    for (int s = 0; s < 3; ++s)
      expect += "from " + std::to_string(s) + " to " + std::to_string(d) + ";";
    CHECK(joined == expect);
  }
}

TEST_CASE("bcast hands the root payload to every member") {
  resetState();
  Runtime rt(RuntimeConfig{.places = 4, .workers = 2});
  rt.run([] { broadcastFlat(TeamedPlaceGroup::world(), bcastTask, std::int64_t{2}); });
  for (int p = 0; p < 4; ++p) {
    ByteReader r(g_bytes[static_cast<std::size_t>(p)]);
    CHECK(r.str() == "payload-of-2");
  }
}

TEST_CASE("gather assembles rank-indexed payloads at the root only") {
  resetState();
  Runtime rt(RuntimeConfig{.places = 4, .workers = 2});
  rt.run([] { broadcastFlat(TeamedPlaceGroup::world(), gatherTask); });
  CHECK(g_errors.empty());
  CHECK(g_rows[0] == std::vector<std::int64_t>{0, 11, 22, 33});
}

TEST_CASE("allgather1 gives every member the same rank-indexed view") {
  resetState();
  Runtime rt(RuntimeConfig{.places = 4, .workers = 2});
  rt.run([] { broadcastFlat(TeamedPlaceGroup::world(), allgatherTask); });
  std::vector<std::int64_t> expect{1, 4, 7, 10};
  for (int p = 0; p < 4; ++p) CHECK(g_rows[static_cast<std::size_t>(p)] == expect);
}

TEST_CASE("allreduceBytes folds contributions in rank order everywhere") {
  resetState();
  Runtime rt(RuntimeConfig{.places = 4, .workers = 2});
  rt.run([] { broadcastFlat(TeamedPlaceGroup::world(), allreduceTask); });
  // ((1*10+2)*10+3)*10+4 = 1234
  for (int p = 0; p < 4; ++p) CHECK(g_rows[static_cast<std::size_t>(p)] == std::vector<std::int64_t>{1234});
}

TEST_CASE("collectives work on subgroups with group-relative ranks") {
  resetState();
  Runtime rt(RuntimeConfig{.places = 3, .workers = 2});
  rt.run([] { broadcastFlat(TeamedPlaceGroup::world(), subgroupTask); });
  // group order is {place2, place0}: rank 0 holds 102, rank 1 holds 100
  std::vector<std::int64_t> expect{102, 100};
  CHECK(g_rows[0] == expect);
  CHECK(g_rows[2] == expect);
  CHECK(g_rows[1].empty());
}

TEST_CASE("mismatched op kinds at one epoch are a protocol error") {
  resetState();
  Runtime rt(RuntimeConfig{.places = 2, .workers = 2,
                           .collectiveTimeout = std::chrono::milliseconds(400)});
  rt.run([] { broadcastFlat(TeamedPlaceGroup::world(), mismatchTask); });
  REQUIRE(!g_errors.empty());
  bool sawProtocol = false;
  for (auto& e : g_errors)
    if (e.rfind("protocol:", 0) == 0 && e.find("mismatch") != std::string::npos) sawProtocol = true;
  CHECK(sawProtocol);
}

TEST_CASE("a missing participant turns into a timeout, not a hang") {
  resetState();
  Runtime rt(RuntimeConfig{.places = 3, .workers = 2,
                           .collectiveTimeout = std::chrono::milliseconds(300)});
  rt.run([] { broadcastFlat(TeamedPlaceGroup::world(), missingMemberTask); });
  REQUIRE(g_errors.size() == 2);
  for (auto& e : g_errors) CHECK(e == "timeout-ok");
}

TEST_CASE("second concurrent caller on one place is rejected") {
  resetState();
  Runtime rt(RuntimeConfig{.places = 2, .workers = 4});
  rt.run([] { broadcastFlat(TeamedPlaceGroup::world(), doubleCallTask); });
  CHECK(g_errors.empty());
}

TEST_CASE("epochs keep repeated collectives of one group paired up") {
  resetState();
  Runtime rt(RuntimeConfig{.places = 4, .workers = 2});
  rt.run([] {
    broadcastFlat(TeamedPlaceGroup::world(), epochSequenceTask, std::int64_t{50});
  });
  // per round: sum of (id + i) over ids 0..3 = 6 + 4i; summed for i in [0,50)
  std::int64_t expect = 0;
  for (std::int64_t i = 0; i < 50; ++i) expect += 6 + 4 * i;
  for (int p = 0; p < 4; ++p)
    CHECK(g_rows[static_cast<std::size_t>(p)] == std::vector<std::int64_t>{expect});
}

TEST_CASE("env override parses for the collective timeout") {
  CHECK(RuntimeConfig::collectiveTimeoutFromEnv().count() == 30000);
  setenv("RDC_COLLECTIVE_TIMEOUT_MS", "1500", 1);
  CHECK(RuntimeConfig::collectiveTimeoutFromEnv().count() == 1500);
  setenv("RDC_COLLECTIVE_TIMEOUT_MS", "bogus", 1);
  CHECK(RuntimeConfig::collectiveTimeoutFromEnv().count() == 30000);
  unsetenv("RDC_COLLECTIVE_TIMEOUT_MS");
}
