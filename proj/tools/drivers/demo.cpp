#include "drivers/demo.hpp"

#include <mutex>
#include <utility>

#include "rdc/collections/dist_bag.hpp"
#include "rdc/collections/dist_chunked_list.hpp"
#include "rdc/collections/dist_id_map.hpp"
#include "rdc/collections/dist_map.hpp"
#include "rdc/relocation/move_manager.hpp"
#include "rdc/runtime/api.hpp"

namespace apps {

namespace {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

std::uint64_t mix64(std::uint64_t x) {
  x += kGolden;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::mutex gHelloMu;
HelloResult gHello;
bool gHelloSet = false;

void runHello(rdc::DistMap<std::string, std::string> greetings) {
  const rdc::TeamedPlaceGroup& g = greetings.group();
  int me = g.myRank();
  greetings.put(rdc::here().toString(), "says hello");
  if (me == 0) greetings.put("main", "running");

  rdc::CollectiveMoveManager mm(g);
  rdc::Place second = g.placeAt(g.size() > 1 ? 1 : 0);
  greetings.moveAtSync(
      [&](const std::string& k) { return k == "main" ? second : rdc::here(); }, mm);
  mm.sync();

  rdc::ByteWriter w;
  std::map<std::string, std::string> mine;
  greetings.forEachLocal([&](const std::string& k, const std::string& v) { mine[k] = v; });
  serialize(w, mine);
  std::vector<rdc::Bytes> all = g.allgatherBytes(w.take());

  if (me == 0) {
    HelloResult res;
    for (int r = 0; r < g.size(); ++r) {
      rdc::ByteReader rd(all[static_cast<std::size_t>(r)]);
      std::map<std::string, std::string> m;
      deserialize(rd, m);
      for (const auto& [k, v] : m)
        res.csvRows.push_back(std::to_string(r) + "," + k + "," + v);
      res.contents[static_cast<unsigned>(r)] = std::move(m);
    }
    std::lock_guard lock(gHelloMu);
    gHello = std::move(res);
    gHelloSet = true;
  }
}

const rdc::Task<rdc::DistMap<std::string, std::string>> kHelloTask =
    rdc::defineTask<rdc::DistMap<std::string, std::string>>("apps.demo.hello", &runHello);

std::mutex gRotMu;
RotateResult gRot;
bool gRotSet = false;

struct LaneHashes {
  std::uint64_t bag = 0;
  std::uint64_t chunked = 0;
  std::uint64_t keyed = 0;
};

LaneHashes localHashes(rdc::DistBag<std::int64_t>& bag, rdc::DistChunkedList<std::int64_t>& cl,
                       rdc::DistIdMap<std::int64_t>& ids) {
  LaneHashes h;
  bag.local().forEach(
      [&](const std::int64_t& v) { h.bag += mix64(static_cast<std::uint64_t>(v)); });
  cl.local().forEachIndexed([&](std::int64_t i, const std::int64_t& v) {
    h.chunked += mix64(static_cast<std::uint64_t>(i) * kGolden ^ static_cast<std::uint64_t>(v));
  });
  for (const auto& [k, v] : ids.localEntries())
    h.keyed += mix64(static_cast<std::uint64_t>(k) ^ mix64(static_cast<std::uint64_t>(v)));
  return h;
}

LaneHashes globalHashes(const rdc::TeamedPlaceGroup& g, const LaneHashes& mine) {
  rdc::ByteWriter w;
  w.u64(mine.bag);
  w.u64(mine.chunked);
  w.u64(mine.keyed);
  std::vector<rdc::Bytes> all = g.allgatherBytes(w.take());
  LaneHashes total;
  for (const rdc::Bytes& b : all) {
    rdc::ByteReader r(b);
    total.bag += r.u64();
    total.chunked += r.u64();
    total.keyed += r.u64();
  }
  return total;
}

void runRotate(rdc::DistBag<std::int64_t> bag, rdc::DistChunkedList<std::int64_t> cl,
               rdc::DistIdMap<std::int64_t> ids) {
  const rdc::TeamedPlaceGroup& g = bag.group();
  int me = g.myRank();
  int n = g.size();
  std::int64_t rank = me;

  for (std::int64_t j = 0; j < 50; ++j) bag.add(rank * 1000 + j);
  {
    std::vector<std::int64_t> vals;
    for (std::int64_t j = 0; j < 100; ++j) vals.push_back(rank * 1000 + j);
    cl.addChunk({rank * 100, rank * 100 + 100}, std::move(vals));
  }
  for (std::int64_t j = 0; j < 10; ++j) ids.put(rank * 10 + j, (rank * 10 + j) * 1001 + 5);

  LaneHashes before = globalHashes(g, localHashes(bag, cl, ids));

  rdc::Place dest = g.placeAt((me + 1) % n);
  rdc::CollectiveMoveManager mm(g);
  bag.moveAtSyncCount(20, dest, mm);
  for (const rdc::LongRange& r : cl.localRanges()) cl.moveRangeAtSync(r, dest, mm);
  ids.moveAtSync([&](std::int64_t) { return dest; }, mm);
  mm.sync();

  LaneHashes after = globalHashes(g, localHashes(bag, cl, ids));

  std::string ranges;
  for (const rdc::LongRange& r : cl.localRanges()) {
    if (!ranges.empty()) ranges += ';';
    ranges += std::to_string(r.from) + "-" + std::to_string(r.to);
  }
  std::string keys;
  for (std::int64_t k : ids.localKeys()) {
    if (!keys.empty()) keys += ';';
    keys += std::to_string(k);
  }

  rdc::ByteWriter w;
  w.i64(static_cast<std::int64_t>(bag.localSize()));
  w.str(ranges);
  w.str(keys);
  std::vector<rdc::Bytes> all = g.allgatherBytes(w.take());

  if (me == 0) {
    RotateResult res;
    res.conserved =
        before.bag == after.bag && before.chunked == after.chunked && before.keyed == after.keyed;
    for (int r = 0; r < n; ++r) {
      rdc::ByteReader rd(all[static_cast<std::size_t>(r)]);
      std::int64_t sz = rd.i64();
      std::string rs = rd.str();
      std::string ks = rd.str();
      res.bagSizes.push_back(sz);
      res.rangesPerPlace.push_back(rs);
      res.keysPerPlace.push_back(ks);
      res.csvRows.push_back(std::to_string(r) + "," + std::to_string(sz) + "," + rs + "," + ks);
    }
    std::lock_guard lock(gRotMu);
    gRot = std::move(res);
    gRotSet = true;
  }
}

const rdc::Task<rdc::DistBag<std::int64_t>, rdc::DistChunkedList<std::int64_t>,
                rdc::DistIdMap<std::int64_t>>
    kRotateTask = rdc::defineTask<rdc::DistBag<std::int64_t>, rdc::DistChunkedList<std::int64_t>,
                                  rdc::DistIdMap<std::int64_t>>("apps.demo.rotate", &runRotate);

}  // namespace

std::string helloCsvHeader() { return "place,key,value"; }

HelloResult helloInWorld() {
  rdc::TeamedPlaceGroup world = rdc::TeamedPlaceGroup::world();
  {
    std::lock_guard lock(gHelloMu);
    gHelloSet = false;
  }
  auto greetings = rdc::DistMap<std::string, std::string>::create(world);
  rdc::broadcastFlat(world, kHelloTask, greetings);
  std::lock_guard lock(gHelloMu);
  if (!gHelloSet) throw rdc::ProtocolError("hello finished without publishing a result");
  return std::move(gHello);
}

HelloResult helloRun(unsigned places, unsigned workers) {
  rdc::RuntimeConfig rc;
  rc.places = places;
  rc.workers = workers;
  rdc::Runtime rt(rc);
  HelloResult out;
  rt.run([&] { out = helloInWorld(); });
  return out;
}

std::string rotateCsvHeader() { return "place,bag_size,ranges,keys"; }

RotateResult rotateInWorld() {
  rdc::TeamedPlaceGroup world = rdc::TeamedPlaceGroup::world();
  {
    std::lock_guard lock(gRotMu);
    gRotSet = false;
  }
  auto bag = rdc::DistBag<std::int64_t>::create(world);
  auto cl = rdc::DistChunkedList<std::int64_t>::create(world);
  auto ids = rdc::DistIdMap<std::int64_t>::create(world);
  rdc::broadcastFlat(world, kRotateTask, bag, cl, ids);
  std::lock_guard lock(gRotMu);
  if (!gRotSet) throw rdc::ProtocolError("rotate finished without publishing a result");
  return std::move(gRot);
}

RotateResult rotateRun(unsigned places, unsigned workers) {
  rdc::RuntimeConfig rc;
  rc.places = places;
  rc.workers = workers;
  rdc::Runtime rt(rc);
  RotateResult out;
  rt.run([&] { out = rotateInWorld(); });
  return out;
}

}  // namespace apps
