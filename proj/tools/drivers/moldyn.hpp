#ifndef APPS_MOLDYN_HPP
#define APPS_MOLDYN_HPP

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace apps {

struct MolDynConfig {
  std::int64_t n = 256;  // 4*m^3 for an integer lattice edge m
  int iterations = 5;
  unsigned places = 1;
  unsigned workers = 1;
  int ndivide = 1;  // pair-space grid is ndivide x ndivide
  std::uint64_t seed = 0;  // 0 = zero initial velocities
};

void moldynValidate(const MolDynConfig& cfg);

struct MolDynResult {
  // per particle: x, y, z, vx, vy, vz
  std::vector<double> state;
  std::vector<std::string> csvRows;  // iter,force_ms,allreduce_ms,move_ms
  std::array<double, 3> netForceMaxAbs{0.0, 0.0, 0.0};
  std::int64_t interactionPairSteps = 0;  // pairs within cutoff, summed over iterations
  bool replicasAgreed = true;             // final particle state byte-identical on all places
};

std::string moldynCsvHeader();

MolDynResult moldynInWorld(const MolDynConfig& cfg);
MolDynResult moldynRun(const MolDynConfig& cfg);

/// Direct O(n^2) single-thread implementation of the same kernel and
/// integration order; bitwise comparable to a 1-place 1-worker ndivide=1 run.
MolDynResult moldynReference(const MolDynConfig& cfg);

/// Indices whose force components are not all finite (diagnostic helper).
std::vector<std::int64_t> nonFiniteIndices(const std::vector<double>& forcesXyz);

}  // namespace apps

#endif  // APPS_MOLDYN_HPP
