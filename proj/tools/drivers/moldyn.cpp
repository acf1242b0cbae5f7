#include "drivers/moldyn.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <utility>

#include "rdc/collections/cachable_chunked_list.hpp"
#include "rdc/parallel/accumulator.hpp"
#include "rdc/ranges/ranged_list_product.hpp"
#include "rdc/rng.hpp"
#include "rdc/runtime/api.hpp"

namespace apps {

namespace {

// Lennard-Jones liquid per the classic Java Grande molecular dynamics
// benchmark: reduced units, density 0.83134, timestep 0.064, cubic FCC
// lattice of 4*m^3 sites, cutoff m/4, minimum-image convention.
constexpr double kDensity = 0.83134;
constexpr double kTimestep = 0.064;
constexpr double kHsq2 = kTimestep * kTimestep * 0.5;
// Initial velocity scale; stands in for the benchmark's temperature scaling,
// sized so desk-scale runs bring pairs into cutoff range without blowups.
constexpr double kVelScale = kTimestep * 0.5;

struct Particle {
  double x = 0, y = 0, z = 0;
  double vx = 0, vy = 0, vz = 0;
  double fx = 0, fy = 0, fz = 0;
};

void serialize(rdc::ByteWriter& w, const Particle& p) {
  w.f64(p.x);
  w.f64(p.y);
  w.f64(p.z);
  w.f64(p.vx);
  w.f64(p.vy);
  w.f64(p.vz);
  w.f64(p.fx);
  w.f64(p.fy);
  w.f64(p.fz);
}

void deserialize(rdc::ByteReader& r, Particle& p) {
  p.x = r.f64();
  p.y = r.f64();
  p.z = r.f64();
  p.vx = r.f64();
  p.vy = r.f64();
  p.vz = r.f64();
  p.fx = r.f64();
  p.fy = r.f64();
  p.fz = r.f64();
}

struct Sp {
  double x = 0, y = 0, z = 0;
};

struct Geometry {
  std::int64_t mm = 0;
  double side = 0, sideh = 0, a = 0, rcoffSq = 0;
};

Geometry geometryFor(std::int64_t n) {
  std::int64_t mm = std::llround(std::cbrt(static_cast<double>(n) / 4.0));
  Geometry g;
  g.mm = mm;
  g.side = std::cbrt(static_cast<double>(n) / kDensity);
  g.sideh = g.side * 0.5;
  g.a = g.side / static_cast<double>(mm);
  double rcoff = static_cast<double>(mm) / 4.0;
  g.rcoffSq = rcoff * rcoff;
  return g;
}

/// Force one in-cutoff pair exerts: +f on the row particle, -f on the column
/// one. Returns false outside the cutoff. Shared verbatim with the reference
/// so both evaluate the identical expression tree.
inline bool ljPair(const Particle& a, const Particle& b, const Geometry& g, double& fx,
                   double& fy, double& fz) {
  double xx = a.x - b.x;
  double yy = a.y - b.y;
  double zz = a.z - b.z;
  if (xx > g.sideh) xx -= g.side;
  if (xx < -g.sideh) xx += g.side;
  if (yy > g.sideh) yy -= g.side;
  if (yy < -g.sideh) yy += g.side;
  if (zz > g.sideh) zz -= g.side;
  if (zz < -g.sideh) zz += g.side;
  double rd = xx * xx + yy * yy + zz * zz;
  if (rd > g.rcoffSq) return false;
  double rrd = 1.0 / rd;
  double rrd2 = rrd * rrd;
  double rrd4 = rrd2 * rrd2;
  double rrd6 = rrd2 * rrd4;
  double rrd7 = rrd6 * rrd;
  double r148 = rrd7 - 0.5 * rrd4;
  fx = xx * r148;
  fy = yy * r148;
  fz = zz * r148;
  return true;
}

/// Leapfrog step using the freshly reduced raw forces: scale, half-kick,
/// drift with single-correction wraparound, half-kick.
inline void moveParticle(Particle& p, const Geometry& g) {
  p.fx *= kHsq2;
  p.fy *= kHsq2;
  p.fz *= kHsq2;
  p.vx += p.fx;
  p.vy += p.fy;
  p.vz += p.fz;
  p.x += p.vx + p.fx;
  p.y += p.vy + p.fy;
  p.z += p.vz + p.fz;
  if (p.x < 0) p.x += g.side;
  if (p.x > g.side) p.x -= g.side;
  if (p.y < 0) p.y += g.side;
  if (p.y > g.side) p.y -= g.side;
  if (p.z < 0) p.z += g.side;
  if (p.z > g.side) p.z -= g.side;
  p.vx += p.fx;
  p.vy += p.fy;
  p.vz += p.fz;
}

/// FCC lattice in the benchmark's site order, then per-component Gaussian
/// velocities (seed 0 keeps them zero) with the mean subtracted so total
/// momentum starts at zero.
std::vector<Particle> buildLattice(const MolDynConfig& cfg) {
  Geometry g = geometryFor(cfg.n);
  std::vector<Particle> ps;
  ps.reserve(static_cast<std::size_t>(cfg.n));
  double a = g.a;
  for (int lg = 0; lg <= 1; ++lg)
    for (std::int64_t i = 0; i < g.mm; ++i)
      for (std::int64_t j = 0; j < g.mm; ++j)
        for (std::int64_t k = 0; k < g.mm; ++k) {
          Particle p;
          p.x = i * a + lg * a * 0.5;
          p.y = j * a + lg * a * 0.5;
          p.z = k * a;
          ps.push_back(p);
        }
  for (int lg = 1; lg <= 2; ++lg)
    for (std::int64_t i = 0; i < g.mm; ++i)
      for (std::int64_t j = 0; j < g.mm; ++j)
        for (std::int64_t k = 0; k < g.mm; ++k) {
          Particle p;
          p.x = i * a + (2 - lg) * a * 0.5;
          p.y = j * a + (lg - 1) * a * 0.5;
          p.z = k * a + a * 0.5;
          ps.push_back(p);
        }

  if (cfg.seed != 0) {
    rdc::SplitMix64 vg(cfg.seed);
    double mx = 0, my = 0, mz = 0;
    for (Particle& p : ps) {
      p.vx = vg.nextGaussian() * kVelScale;
      p.vy = vg.nextGaussian() * kVelScale;
      p.vz = vg.nextGaussian() * kVelScale;
      mx += p.vx;
      my += p.vy;
      mz += p.vz;
    }
    double n = static_cast<double>(ps.size());
    for (Particle& p : ps) {
      p.vx -= mx / n;
      p.vy -= my / n;
      p.vz -= mz / n;
    }
  }
  return ps;
}

}  // namespace

// at namespace scope so the task machinery's lookup can see them
void serialize(rdc::ByteWriter& w, const MolDynConfig& c) {
  w.i64(c.n);
  w.i32(c.iterations);
  w.u32(c.places);
  w.u32(c.workers);
  w.i32(c.ndivide);
  w.u64(c.seed);
}

void deserialize(rdc::ByteReader& r, MolDynConfig& c) {
  c.n = r.i64();
  c.iterations = r.i32();
  c.places = r.u32();
  c.workers = r.u32();
  c.ndivide = r.i32();
  c.seed = r.u64();
}

namespace {

double msSince(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

std::string csvRow(int iter, double forceMs, double allreduceMs, double moveMs) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "%d,%.3f,%.3f,%.3f", iter, forceMs, allreduceMs, moveMs);
  return buf;
}

void checkFinite(const rdc::ChunkedList<Particle>& shared) {
  std::vector<std::int64_t> bad;
  shared.forEachIndexed([&](std::int64_t i, const Particle& p) {
    if (!std::isfinite(p.fx) || !std::isfinite(p.fy) || !std::isfinite(p.fz)) bad.push_back(i);
  });
  if (bad.empty()) return;
  std::string msg = "moldyn: non-finite force on particles";
  for (std::int64_t i : bad) msg += " " + std::to_string(i);
  throw rdc::Error(msg);
}

std::vector<double> snapshotState(const rdc::ChunkedList<Particle>& shared) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(shared.size()) * 6);
  shared.forEach([&](const Particle& p) {
    out.push_back(p.x);
    out.push_back(p.y);
    out.push_back(p.z);
    out.push_back(p.vx);
    out.push_back(p.vy);
    out.push_back(p.vz);
  });
  return out;
}

std::mutex gResMu;
MolDynResult gRes;
bool gResSet = false;

void runMoldyn(const MolDynConfig& cfg, rdc::CachableChunkedList<Particle> particles) {
  const rdc::TeamedPlaceGroup& g = particles.group();
  int me = g.myRank();
  Geometry geo = geometryFor(cfg.n);

  if (me == 0) {
    particles.addChunk(rdc::LongRange{0, cfg.n}, buildLattice(cfg));
    particles.share({rdc::LongRange{0, cfg.n}});
  } else {
    particles.share();
  }

  rdc::ChunkedList<Particle>& shared = particles.shared();
  auto product =
      rdc::newProductTriangle(shared).teamedSplit(cfg.ndivide, cfg.ndivide, g, cfg.seed);
  rdc::Accumulator<Sp> acc(rdc::LongRange{0, cfg.n}, [](std::int64_t) { return Sp{}; },
                           rdc::AccPolicy::CompleteRange);

  MolDynResult res;
  std::atomic<std::int64_t> interactions{0};

  for (int iter = 0; iter < cfg.iterations; ++iter) {
    auto t0 = std::chrono::steady_clock::now();
    rdc::parallelForEach(
        shared, [](Particle& p) { p.fx = p.fy = p.fz = 0.0; }, cfg.workers);
    acc.reset();
    product.parallelForEachRow(
        acc,
        [&](rdc::ProductRow<Particle> row, auto cols, auto& blk) {
          Sp& si = blk.at(row.index);
          const Particle& pi = row.value;
          cols.forEach([&](std::int64_t j, Particle& pj) {
            double fx, fy, fz;
            if (!ljPair(pi, pj, geo, fx, fy, fz)) return;
            interactions.fetch_add(1, std::memory_order_relaxed);
            si.x += fx;
            si.y += fy;
            si.z += fz;
            Sp& sj = blk.at(j);
            sj.x -= fx;
            sj.y -= fy;
            sj.z -= fz;
          });
        },
        cfg.workers);
    rdc::parallelAccept(
        shared, acc,
        [](Particle& p, const Sp& s) {
          p.fx += s.x;
          p.fy += s.y;
          p.fz += s.z;
        },
        cfg.workers);
    double forceMs = msSince(t0);

    t0 = std::chrono::steady_clock::now();
    particles.allreducePrimitive(
        [](rdc::PrimitiveSink& sink, const Particle& p) {
          sink.emit(p.fx);
          sink.emit(p.fy);
          sink.emit(p.fz);
        },
        [](rdc::PrimitiveSource& src, Particle& p) {
          p.fx = src.next();
          p.fy = src.next();
          p.fz = src.next();
        },
        rdc::ReduceOp::Sum);
    double allreduceMs = msSince(t0);

    double nx = 0, ny = 0, nz = 0;
    shared.forEach([&](const Particle& p) {
      nx += p.fx;
      ny += p.fy;
      nz += p.fz;
    });
    res.netForceMaxAbs[0] = std::max(res.netForceMaxAbs[0], std::abs(nx));
    res.netForceMaxAbs[1] = std::max(res.netForceMaxAbs[1], std::abs(ny));
    res.netForceMaxAbs[2] = std::max(res.netForceMaxAbs[2], std::abs(nz));
    checkFinite(shared);

    t0 = std::chrono::steady_clock::now();
    rdc::parallelForEach(
        shared, [&](Particle& p) { moveParticle(p, geo); }, cfg.workers);
    double moveMs = msSince(t0);

    if (me == 0) res.csvRows.push_back(csvRow(iter, forceMs, allreduceMs, moveMs));
  }

  res.state = snapshotState(shared);
  std::vector<std::int64_t> perPlace = g.allgather1(interactions.load());
  res.interactionPairSteps = 0;
  for (std::int64_t v : perPlace) res.interactionPairSteps += v;

  rdc::ByteWriter sw;
  for (double v : res.state) sw.f64(v);
  rdc::Bytes mineBytes = sw.take();
  std::vector<rdc::Bytes> all = g.allgatherBytes(mineBytes);
  for (const rdc::Bytes& b : all)
    if (b != mineBytes) res.replicasAgreed = false;

  if (me == 0) {
    std::lock_guard lock(gResMu);
    gRes = std::move(res);
    gResSet = true;
  }
}

const rdc::Task<MolDynConfig, rdc::CachableChunkedList<Particle>> kMoldynTask =
    rdc::defineTask<MolDynConfig, rdc::CachableChunkedList<Particle>>("apps.moldyn.run",
                                                                      &runMoldyn);

}  // namespace

void moldynValidate(const MolDynConfig& cfg) {
  if (cfg.n < 4) throw rdc::UsageError("moldyn: particle count must be at least 4");
  std::int64_t mm = std::llround(std::cbrt(static_cast<double>(cfg.n) / 4.0));
  if (mm < 1 || 4 * mm * mm * mm != cfg.n)
    throw rdc::UsageError("moldyn: " + std::to_string(cfg.n) +
                          " is not a 4*m^3 cubic lattice count");
  if (cfg.iterations < 0) throw rdc::UsageError("moldyn: iterations must not be negative");
  if (cfg.ndivide < 1) throw rdc::UsageError("moldyn: ndivide must be at least 1");
  if (cfg.places < 1) throw rdc::UsageError("moldyn: need at least one place");
}

std::string moldynCsvHeader() { return "iter,force_ms,allreduce_ms,move_ms"; }

std::vector<std::int64_t> nonFiniteIndices(const std::vector<double>& forcesXyz) {
  std::vector<std::int64_t> bad;
  for (std::size_t i = 0; i + 3 <= forcesXyz.size(); i += 3)
    if (!std::isfinite(forcesXyz[i]) || !std::isfinite(forcesXyz[i + 1]) ||
        !std::isfinite(forcesXyz[i + 2]))
      bad.push_back(static_cast<std::int64_t>(i / 3));
  return bad;
}

MolDynResult moldynInWorld(const MolDynConfig& cfg) {
  rdc::TeamedPlaceGroup world = rdc::TeamedPlaceGroup::world();
  MolDynConfig actual = cfg;
  actual.places = static_cast<unsigned>(world.size());
  moldynValidate(actual);
  {
    std::lock_guard lock(gResMu);
    gResSet = false;
  }
  auto particles = rdc::CachableChunkedList<Particle>::create(world);
  rdc::broadcastFlat(world, kMoldynTask, actual, particles);
  std::lock_guard lock(gResMu);
  if (!gResSet) throw rdc::ProtocolError("moldyn finished without publishing a result");
  return std::move(gRes);
}

MolDynResult moldynRun(const MolDynConfig& cfg) {
  moldynValidate(cfg);
  rdc::RuntimeConfig rc;
  rc.places = cfg.places;
  rc.workers = cfg.workers;
  rdc::Runtime rt(rc);
  MolDynResult out;
  rt.run([&] { out = moldynInWorld(cfg); });
  return out;
}

MolDynResult moldynReference(const MolDynConfig& cfg) {
  moldynValidate(cfg);
  Geometry geo = geometryFor(cfg.n);
  std::vector<Particle> ps = buildLattice(cfg);
  std::int64_t n = cfg.n;

  MolDynResult res;
  for (int iter = 0; iter < cfg.iterations; ++iter) {
    for (Particle& p : ps) p.fx = p.fy = p.fz = 0.0;
    for (std::int64_t i = 0; i < n; ++i)
      for (std::int64_t j = i + 1; j < n; ++j) {
        double fx, fy, fz;
        if (!ljPair(ps[static_cast<std::size_t>(i)], ps[static_cast<std::size_t>(j)], geo, fx, fy,
                    fz))
          continue;
        ++res.interactionPairSteps;
        ps[static_cast<std::size_t>(i)].fx += fx;
        ps[static_cast<std::size_t>(i)].fy += fy;
        ps[static_cast<std::size_t>(i)].fz += fz;
        ps[static_cast<std::size_t>(j)].fx -= fx;
        ps[static_cast<std::size_t>(j)].fy -= fy;
        ps[static_cast<std::size_t>(j)].fz -= fz;
      }

    double nx = 0, ny = 0, nz = 0;
    std::vector<double> forces;
    forces.reserve(static_cast<std::size_t>(n) * 3);
    for (const Particle& p : ps) {
      nx += p.fx;
      ny += p.fy;
      nz += p.fz;
      forces.push_back(p.fx);
      forces.push_back(p.fy);
      forces.push_back(p.fz);
    }
    res.netForceMaxAbs[0] = std::max(res.netForceMaxAbs[0], std::abs(nx));
    res.netForceMaxAbs[1] = std::max(res.netForceMaxAbs[1], std::abs(ny));
    res.netForceMaxAbs[2] = std::max(res.netForceMaxAbs[2], std::abs(nz));
    std::vector<std::int64_t> bad = nonFiniteIndices(forces);
    if (!bad.empty()) {
      std::string msg = "moldyn: non-finite force on particles";
      for (std::int64_t i : bad) msg += " " + std::to_string(i);
      throw rdc::Error(msg);
    }

    for (Particle& p : ps) moveParticle(p, geo);
    res.csvRows.push_back(csvRow(iter, 0.0, 0.0, 0.0));
  }

  res.state.reserve(static_cast<std::size_t>(n) * 6);
  for (const Particle& p : ps) {
    res.state.push_back(p.x);
    res.state.push_back(p.y);
    res.state.push_back(p.z);
    res.state.push_back(p.vx);
    res.state.push_back(p.vy);
    res.state.push_back(p.vz);
  }
  return res;
}

}  // namespace apps
