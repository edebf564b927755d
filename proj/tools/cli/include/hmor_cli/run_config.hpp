#pragma once

#include "hmor/metrics.hpp"
#include "hmor/solver.hpp"
#include "hmor/synth.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>

namespace hmor::cli {

struct GradCheckSettings {
  int points = 100;
  double epsilon = 1e-5;
  double tolerance = 1e-5;
};

struct EvalSettings {
  MetricConfig metrics;
  int audit_views = 1;  // camera normal plus audit_views - 1 sampled views
};

/// Everything a command may need. `solver.hmor` and `solver.weights` are
/// the single source for ordinal and data-term settings.
struct RunConfig {
  std::uint64_t seed = 0;
  GenSpec gen;
  int gen_count = 1;
  SolverConfig solver;
  EvalSettings eval;
  GradCheckSettings gradcheck;

  void validate() const;
};

/// Overlays the keys present in `doc` on the defaults. Unknown keys throw.
RunConfig run_config_from_json(const nlohmann::json& doc);
RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace hmor::cli
