#ifndef APPS_KMEANS_HPP
#define APPS_KMEANS_HPP

#include <cstdint>
#include <string>
#include <vector>

namespace apps {

struct KMeansConfig {
  std::int64_t pointsPerPlace = 10000;
  int dim = 3;
  int k = 8;
  int iterations = 10;
  unsigned places = 1;
  unsigned workers = 2;
  std::uint64_t seed = 42;
};

/// Throws UsageError when the configuration cannot describe a run. Large
/// configurations are fine; nothing is allocated here.
void kmeansValidate(const KMeansConfig& cfg);

struct KMeansResult {
  std::vector<double> centroids;               // final, k*dim row-major
  std::vector<std::vector<double>> trajectory;  // per iteration, k*dim each
  std::vector<std::string> csvRows;             // iter,assign_ms,reduce1_ms,reduce2_ms,total_ms
  bool centroidsAgreedEveryIteration = true;    // byte equality across places, checked per iteration
};

std::string kmeansCsvHeader();

/// Runs inside an already-booted world; call from the root activity on
/// place 0. Every place of the world participates.
KMeansResult kmeansInWorld(const KMeansConfig& cfg);

/// Boots an in-process world sized from cfg and runs there.
KMeansResult kmeansRun(const KMeansConfig& cfg);

/// Sequential oracle over the identical synthetic point set: same generation,
/// same reduction order as a 1-place 1-worker run (bitwise comparable there,
/// 1e-9 comparable against multi-place runs).
KMeansResult kmeansReference(const KMeansConfig& cfg);

}  // namespace apps

#endif  // APPS_KMEANS_HPP
