// rdc-run --places N [--transport inproc|proc] [--workers W] -- <driver> <args>
//
// Boots a world on the chosen transport, runs one driver as the root
// activity on place 0, and prints (or writes) the driver's CSV. Exit codes:
// 0 success, 1 runtime failure, 2 usage.

#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "drivers/demo.hpp"
#include "drivers/kmeans.hpp"
#include "drivers/marketsim.hpp"
#include "drivers/moldyn.hpp"
#include "rdc/errors.hpp"
#include "rdc/runtime/proc_transport.hpp"
#include "rdc/runtime/runtime.hpp"

namespace {

struct Output {
  std::string header;
  std::vector<std::string> rows;
};

int emit(const Output& out, const std::string& path) {
  if (path.empty()) {
    std::cout << out.header << "\n";
    for (const std::string& r : out.rows) std::cout << r << "\n";
    return 0;
  }
  std::ofstream f(path);
  if (!f) {
    std::cerr << "cannot open " << path << " for writing\n";
    return 1;
  }
  f << out.header << "\n";
  for (const std::string& r : out.rows) f << r << "\n";
  return 0;
}

std::vector<std::string> splitArgs(int argc, char** argv, std::vector<std::string>& outer) {
  std::vector<std::string> driver;
  bool after = false;
  for (int i = 1; i < argc; ++i) {
    std::string a = argv[i];
    if (!after && a == "--") {
      after = true;
      continue;
    }
    (after ? driver : outer).push_back(std::move(a));
  }
  return driver;
}

// CLI11 parses back-to-front when fed a reversed vector
int parseWith(CLI::App& app, std::vector<std::string> args) {
  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    if (e.get_name() == "CallForHelp") {
      std::cout << app.help();
      return -1;
    }
    std::cerr << e.what() << "\n";
    return 2;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> outerArgs;
  std::vector<std::string> driverArgs = splitArgs(argc, argv, outerArgs);

  CLI::App outer{"distributed collections driver runner"};
  unsigned places = 1;
  unsigned workers = 2;
  std::string transport = "inproc";
  bool validateOnly = false;
  outer.add_option("--places", places, "number of places");
  outer.add_option("--workers", workers, "worker threads per place");
  outer.add_option("--transport", transport, "inproc or proc")
      ->check(CLI::IsMember({"inproc", "proc"}));
  outer.add_flag("--validate-only", validateOnly, "check the configuration and exit");
  if (int rc = parseWith(outer, outerArgs); rc != 0) return rc < 0 ? 0 : rc;

  if (driverArgs.empty()) {
    std::cerr << "usage: rdc-run --places N [--transport inproc|proc] [--workers W] -- "
                 "<driver> <driver-args>\n"
                 "drivers: kmeans moldyn marketsim hello rotate\n";
    return 2;
  }
  std::string driver = driverArgs.front();
  std::vector<std::string> rest(driverArgs.begin() + 1, driverArgs.end());

  std::string outPath;
  std::function<Output()> body;

  try {
    if (driver == "kmeans") {
      apps::KMeansConfig cfg;
      CLI::App km{"distributed k-means"};
      km.add_option("--points", cfg.pointsPerPlace, "points per place");
      km.add_option("--k", cfg.k, "clusters");
      km.add_option("--dim", cfg.dim, "dimensions");
      km.add_option("--iters", cfg.iterations, "iterations");
      km.add_option("--seed", cfg.seed, "point generation seed");
      km.add_option("--out", outPath, "CSV output file");
      if (int rc = parseWith(km, rest); rc != 0) return rc < 0 ? 0 : rc;
      cfg.places = places;
      cfg.workers = workers;
      apps::kmeansValidate(cfg);
      body = [cfg] {
        apps::KMeansResult r = apps::kmeansInWorld(cfg);
        return Output{apps::kmeansCsvHeader(), r.csvRows};
      };
    } else if (driver == "moldyn") {
      apps::MolDynConfig cfg;
      CLI::App md{"distributed molecular dynamics"};
      md.add_option("--n", cfg.n, "particles (4*m^3)");
      md.add_option("--iters", cfg.iterations, "iterations");
      md.add_option("--ndivide", cfg.ndivide, "interaction grid divisions");
      md.add_option("--seed", cfg.seed, "velocity seed, 0 starts at rest");
      md.add_option("--out", outPath, "CSV output file");
      if (int rc = parseWith(md, rest); rc != 0) return rc < 0 ? 0 : rc;
      cfg.places = places;
      cfg.workers = workers;
      apps::moldynValidate(cfg);
      body = [cfg] {
        apps::MolDynResult r = apps::moldynInWorld(cfg);
        return Output{apps::moldynCsvHeader(), r.csvRows};
      };
    } else if (driver == "marketsim") {
      apps::MarketSimConfig cfg;
      std::string lb = "none";
      CLI::App ms{"distributed market simulation"};
      ms.add_option("--agents", cfg.nAgents, "total agents");
      ms.add_option("--iters", cfg.iterations, "iterations");
      ms.add_option("--lb", lb, "none or level-extremes");
      ms.add_option("--lb-period", cfg.lbPeriod, "iterations between balance events");
      ms.add_option("--profile", cfg.profile, "slow:<place>:<factor>[,...] or disturb:<seed>:<periodIters>");
      ms.add_option("--seed", cfg.seed, "agent behavior seed");
      ms.add_option("--work-us", cfg.workUsPerAgent, "simulated microseconds per agent");
      ms.add_flag("--real-work", cfg.realWork, "busy-spin instead of accounting virtual time");
      ms.add_option("--out", outPath, "CSV output file");
      if (int rc = parseWith(ms, rest); rc != 0) return rc < 0 ? 0 : rc;
      cfg.lb = apps::parseLbStrategy(lb);
      cfg.places = places;
      cfg.workers = workers;
      apps::marketsimValidate(cfg);
      body = [cfg] {
        apps::MarketSimResult r = apps::marketsimInWorld(cfg);
        return Output{apps::marketsimCsvHeader(), r.csvRows};
      };
    } else if (driver == "hello") {
      CLI::App h{"distributed hello map"};
      h.add_option("--out", outPath, "CSV output file");
      if (int rc = parseWith(h, rest); rc != 0) return rc < 0 ? 0 : rc;
      body = [] {
        apps::HelloResult r = apps::helloInWorld();
        return Output{apps::helloCsvHeader(), r.csvRows};
      };
    } else if (driver == "rotate") {
      CLI::App ro{"multi-collection rotation"};
      ro.add_option("--out", outPath, "CSV output file");
      if (int rc = parseWith(ro, rest); rc != 0) return rc < 0 ? 0 : rc;
      body = [] {
        apps::RotateResult r = apps::rotateInWorld();
        if (!r.conserved) throw rdc::Error("rotation lost or duplicated entries");
        return Output{apps::rotateCsvHeader(), r.csvRows};
      };
    } else {
      std::cerr << "unknown driver '" << driver
                << "' (drivers: kmeans moldyn marketsim hello rotate)\n";
      return 2;
    }
  } catch (const rdc::Error& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }

  if (validateOnly) {
    std::cout << "configuration accepted: " << driver << " on " << places << " place(s), "
              << workers << " worker(s), " << transport << " transport\n";
    return 0;
  }

  rdc::RuntimeConfig rc;
  rc.places = places;
  rc.workers = workers;
  rc.collectiveTimeout = rdc::RuntimeConfig::collectiveTimeoutFromEnv();

  Output out;
  try {
    if (transport == "proc") {
      rdc::runProcWorld(rc, [&] { out = body(); });
    } else {
      rdc::Runtime rt(rc);
      rt.run([&] { out = body(); });
    }
  } catch (const std::exception& e) {
    std::cerr << "run failed: " << e.what() << "\n";
    return 1;
  }

  return emit(out, outPath);
}
