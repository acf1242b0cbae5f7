#include "drivers/kmeans.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <mutex>
#include <utility>

#include "rdc/collections/dist_chunked_list.hpp"
#include "rdc/rng.hpp"
#include "rdc/runtime/api.hpp"

namespace apps {

namespace {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

struct Point {
  std::int64_t id = 0;
  std::vector<double> coords;
  std::int32_t cluster = 0;
};

void serialize(rdc::ByteWriter& w, const Point& p) {
  w.i64(p.id);
  rdc::serialize(w, p.coords);
  w.i32(p.cluster);
}

void deserialize(rdc::ByteReader& r, Point& p) {
  p.id = r.i64();
  rdc::deserialize(r, p.coords);
  p.cluster = r.i32();
}

/// Coordinates of global point i: the draws a single sequential SplitMix64
/// stream seeded `seed` would produce at positions [i*dim, (i+1)*dim), reached
/// directly through the generator's fixed state stride. The point set depends
/// only on (seed, dim, total count), never on how points split across places.
std::vector<double> pointCoords(std::uint64_t seed, std::int64_t i, int dim) {
  rdc::SplitMix64 g(seed + static_cast<std::uint64_t>(i) * static_cast<std::uint64_t>(dim) * kGolden);
  std::vector<double> c(static_cast<std::size_t>(dim));
  for (int d = 0; d < dim; ++d) c[static_cast<std::size_t>(d)] = g.nextDouble() * 100.0;
  return c;
}

double dist2(const double* a, const double* b, int dim) {
  double s = 0.0;
  for (int d = 0; d < dim; ++d) {
    double diff = a[d] - b[d];
    s += diff * diff;
  }
  return s;
}

void assignNearest(Point& p, const std::vector<double>& centroids, int k, int dim) {
  int best = 0;
  double bestD = dist2(p.coords.data(), centroids.data(), dim);
  for (int c = 1; c < k; ++c) {
    double d = dist2(p.coords.data(), centroids.data() + static_cast<std::size_t>(c) * dim, dim);
    if (d < bestD) {
      bestD = d;
      best = c;
    }
  }
  p.cluster = best;
}

/// Per-cluster coordinate sums and member counts.
struct AveragePosition {
  int k = 0, dim = 0;
  std::vector<double> sums;        // k*dim
  std::vector<std::int64_t> counts;  // k

  AveragePosition() = default;
  AveragePosition(int k_, int dim_)
      : k(k_), dim(dim_), sums(static_cast<std::size_t>(k_) * dim_, 0.0),
        counts(static_cast<std::size_t>(k_), 0) {}

  AveragePosition newReducer() const { return AveragePosition(k, dim); }

  void reduce(const Point& p) {
    auto base = static_cast<std::size_t>(p.cluster) * dim;
    for (int d = 0; d < dim; ++d) sums[base + d] += p.coords[static_cast<std::size_t>(d)];
    ++counts[static_cast<std::size_t>(p.cluster)];
  }

  void merge(const AveragePosition& o) {
    for (std::size_t i = 0; i < sums.size(); ++i) sums[i] += o.sums[i];
    for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += o.counts[i];
  }

  friend void serialize(rdc::ByteWriter& w, const AveragePosition& r) {
    for (double v : r.sums) w.f64(v);
    for (std::int64_t v : r.counts) w.i64(v);
  }
  friend void deserialize(rdc::ByteReader& rd, AveragePosition& r) {
    for (double& v : r.sums) v = rd.f64();
    for (std::int64_t& v : r.counts) v = rd.i64();
  }
};

/// Per cluster: the member point nearest to that cluster's target position,
/// ties broken toward the lowest point id. Clusters with no members keep
/// bestId = -1.
struct ClosestPoint {
  int k = 0, dim = 0;
  const std::vector<double>* targets = nullptr;  // k*dim, not part of the fold state
  std::vector<double> bestDist;
  std::vector<std::int64_t> bestId;
  std::vector<double> bestCoords;  // k*dim

  ClosestPoint() = default;
  ClosestPoint(int k_, int dim_, const std::vector<double>* targets_)
      : k(k_), dim(dim_), targets(targets_),
        bestDist(static_cast<std::size_t>(k_), std::numeric_limits<double>::infinity()),
        bestId(static_cast<std::size_t>(k_), -1),
        bestCoords(static_cast<std::size_t>(k_) * dim_, 0.0) {}

  ClosestPoint newReducer() const { return ClosestPoint(k, dim, targets); }

  void reduce(const Point& p) {
    auto c = static_cast<std::size_t>(p.cluster);
    double d = dist2(p.coords.data(), targets->data() + c * dim, dim);
    if (bestId[c] < 0 || d < bestDist[c] || (d == bestDist[c] && p.id < bestId[c])) {
      bestDist[c] = d;
      bestId[c] = p.id;
      for (int j = 0; j < dim; ++j)
        bestCoords[c * dim + j] = p.coords[static_cast<std::size_t>(j)];
    }
  }

  void merge(const ClosestPoint& o) {
    for (std::size_t c = 0; c < bestId.size(); ++c) {
      if (o.bestId[c] < 0) continue;
      if (bestId[c] < 0 || o.bestDist[c] < bestDist[c] ||
          (o.bestDist[c] == bestDist[c] && o.bestId[c] < bestId[c])) {
        bestDist[c] = o.bestDist[c];
        bestId[c] = o.bestId[c];
        for (int j = 0; j < dim; ++j) bestCoords[c * dim + j] = o.bestCoords[c * dim + j];
      }
    }
  }

  friend void serialize(rdc::ByteWriter& w, const ClosestPoint& r) {
    for (double v : r.bestDist) w.f64(v);
    for (std::int64_t v : r.bestId) w.i64(v);
    for (double v : r.bestCoords) w.f64(v);
  }
  friend void deserialize(rdc::ByteReader& rd, ClosestPoint& r) {
    for (double& v : r.bestDist) v = rd.f64();
    for (std::int64_t& v : r.bestId) v = rd.i64();
    for (double& v : r.bestCoords) v = rd.f64();
  }
};

std::vector<double> initialCentroids(const KMeansConfig& cfg) {
  std::vector<double> c;
  c.reserve(static_cast<std::size_t>(cfg.k) * cfg.dim);
  for (int i = 0; i < cfg.k; ++i) {
    std::vector<double> p = pointCoords(cfg.seed, i, cfg.dim);
    c.insert(c.end(), p.begin(), p.end());
  }
  return c;
}

/// Average targets for the next centroid step; a memberless cluster keeps its
/// previous centroid as the target.
std::vector<double> targetsFrom(const AveragePosition& avg, const std::vector<double>& prev) {
  std::vector<double> t(prev.size());
  for (int c = 0; c < avg.k; ++c) {
    auto base = static_cast<std::size_t>(c) * avg.dim;
    if (avg.counts[static_cast<std::size_t>(c)] > 0) {
      double n = static_cast<double>(avg.counts[static_cast<std::size_t>(c)]);
      for (int d = 0; d < avg.dim; ++d) t[base + d] = avg.sums[base + d] / n;
    } else {
      for (int d = 0; d < avg.dim; ++d) t[base + d] = prev[base + d];
    }
  }
  return t;
}

void applyClosest(const ClosestPoint& cp, std::vector<double>& centroids) {
  for (int c = 0; c < cp.k; ++c) {
    if (cp.bestId[static_cast<std::size_t>(c)] < 0) continue;  // empty: previous centroid stays
    auto base = static_cast<std::size_t>(c) * cp.dim;
    for (int d = 0; d < cp.dim; ++d) centroids[base + d] = cp.bestCoords[base + d];
  }
}

}  // namespace

// at namespace scope so the task machinery's lookup can see them
void serialize(rdc::ByteWriter& w, const KMeansConfig& c) {
  w.i64(c.pointsPerPlace);
  w.i32(c.dim);
  w.i32(c.k);
  w.i32(c.iterations);
  w.u32(c.places);
  w.u32(c.workers);
  w.u64(c.seed);
}

void deserialize(rdc::ByteReader& r, KMeansConfig& c) {
  c.pointsPerPlace = r.i64();
  c.dim = r.i32();
  c.k = r.i32();
  c.iterations = r.i32();
  c.places = r.u32();
  c.workers = r.u32();
  c.seed = r.u64();
}

namespace {

double msSince(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

std::string csvRow(int iter, double assignMs, double reduce1Ms, double reduce2Ms, double totalMs) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%d,%.3f,%.3f,%.3f,%.3f", iter, assignMs, reduce1Ms, reduce2Ms,
                totalMs);
  return buf;
}

std::mutex gResMu;
KMeansResult gRes;
bool gResSet = false;

void runRounds(const KMeansConfig& cfg, rdc::DistCol<Point> points) {
  const rdc::TeamedPlaceGroup& g = points.group();
  int me = g.myRank();
  std::int64_t from = me * cfg.pointsPerPlace;

  std::vector<Point> mine(static_cast<std::size_t>(cfg.pointsPerPlace));
  for (std::int64_t i = 0; i < cfg.pointsPerPlace; ++i) {
    mine[static_cast<std::size_t>(i)].id = from + i;
    mine[static_cast<std::size_t>(i)].coords = pointCoords(cfg.seed, from + i, cfg.dim);
  }
  points.addChunk(rdc::LongRange{from, from + cfg.pointsPerPlace}, std::move(mine));

  std::vector<double> centroids = initialCentroids(cfg);
  KMeansResult res;
  bool agreed = true;

  for (int iter = 0; iter < cfg.iterations; ++iter) {
    auto tIter = std::chrono::steady_clock::now();

    auto t0 = std::chrono::steady_clock::now();
    points.parallelForEachLocal([&](Point& p) { assignNearest(p, centroids, cfg.k, cfg.dim); },
                                cfg.workers);
    double assignMs = msSince(t0);

    t0 = std::chrono::steady_clock::now();
    AveragePosition avg = points.teamParallelReduce(AveragePosition(cfg.k, cfg.dim), cfg.workers);
    double reduce1Ms = msSince(t0);

    std::vector<double> targets = targetsFrom(avg, centroids);

    t0 = std::chrono::steady_clock::now();
    ClosestPoint cp = points.teamParallelReduce(ClosestPoint(cfg.k, cfg.dim, &targets),
                                                cfg.workers);
    double reduce2Ms = msSince(t0);

    centroids = targets;
    applyClosest(cp, centroids);
    double totalMs = msSince(tIter);

    // every place must have arrived at bit-identical centroids
    rdc::ByteWriter cw;
    for (double v : centroids) cw.f64(v);
    rdc::Bytes mineBytes = cw.take();
    std::vector<rdc::Bytes> all = g.allgatherBytes(mineBytes);
    for (const rdc::Bytes& b : all)
      if (b != mineBytes) agreed = false;

    if (me == 0) {
      res.trajectory.push_back(centroids);
      res.csvRows.push_back(csvRow(iter, assignMs, reduce1Ms, reduce2Ms, totalMs));
    }
  }

  if (me == 0) {
    res.centroids = centroids;
    res.centroidsAgreedEveryIteration = agreed;
    std::lock_guard lock(gResMu);
    gRes = std::move(res);
    gResSet = true;
  }
}

const rdc::Task<KMeansConfig, rdc::DistCol<Point>> kRoundsTask =
    rdc::defineTask<KMeansConfig, rdc::DistCol<Point>>("apps.kmeans.rounds", &runRounds);

}  // namespace

void kmeansValidate(const KMeansConfig& cfg) {
  if (cfg.k < 1) throw rdc::UsageError("kmeans: k must be at least 1");
  if (cfg.dim < 1) throw rdc::UsageError("kmeans: dim must be at least 1");
  if (cfg.iterations < 0) throw rdc::UsageError("kmeans: iterations must not be negative");
  if (cfg.pointsPerPlace < 1) throw rdc::UsageError("kmeans: need at least one point per place");
  if (cfg.places < 1) throw rdc::UsageError("kmeans: need at least one place");
  if (static_cast<std::int64_t>(cfg.k) > cfg.pointsPerPlace * cfg.places)
    throw rdc::UsageError("kmeans: k exceeds the total point count");
}

std::string kmeansCsvHeader() { return "iter,assign_ms,reduce1_ms,reduce2_ms,total_ms"; }

KMeansResult kmeansInWorld(const KMeansConfig& cfg) {
  rdc::TeamedPlaceGroup world = rdc::TeamedPlaceGroup::world();
  KMeansConfig actual = cfg;
  actual.places = static_cast<unsigned>(world.size());
  kmeansValidate(actual);
  {
    std::lock_guard lock(gResMu);
    gResSet = false;
  }
  auto points = rdc::DistCol<Point>::create(world);
  rdc::broadcastFlat(world, kRoundsTask, actual, points);
  std::lock_guard lock(gResMu);
  if (!gResSet) throw rdc::ProtocolError("kmeans finished without publishing a result");
  return std::move(gRes);
}

KMeansResult kmeansRun(const KMeansConfig& cfg) {
  kmeansValidate(cfg);
  rdc::RuntimeConfig rc;
  rc.places = cfg.places;
  rc.workers = cfg.workers;
  rdc::Runtime rt(rc);
  KMeansResult out;
  rt.run([&] { out = kmeansInWorld(cfg); });
  return out;
}

KMeansResult kmeansReference(const KMeansConfig& cfg) {
  kmeansValidate(cfg);
  std::int64_t total = cfg.pointsPerPlace * cfg.places;
  std::vector<Point> pts(static_cast<std::size_t>(total));
  for (std::int64_t i = 0; i < total; ++i) {
    pts[static_cast<std::size_t>(i)].id = i;
    pts[static_cast<std::size_t>(i)].coords = pointCoords(cfg.seed, i, cfg.dim);
  }

  std::vector<double> centroids = initialCentroids(cfg);
  KMeansResult res;
  for (int iter = 0; iter < cfg.iterations; ++iter) {
    for (Point& p : pts) assignNearest(p, centroids, cfg.k, cfg.dim);

    AveragePosition avg(cfg.k, cfg.dim);
    for (const Point& p : pts) avg.reduce(p);

    std::vector<double> targets = targetsFrom(avg, centroids);

    ClosestPoint cp(cfg.k, cfg.dim, &targets);
    for (const Point& p : pts) cp.reduce(p);

    centroids = targets;
    applyClosest(cp, centroids);
    res.trajectory.push_back(centroids);
    res.csvRows.push_back(csvRow(iter, 0.0, 0.0, 0.0, 0.0));
  }
  res.centroids = centroids;
  return res;
}

}  // namespace apps
