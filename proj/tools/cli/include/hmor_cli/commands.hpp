#pragma once

#include "hmor_cli/run_config.hpp"

#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace hmor::cli {

enum class ExitCode : int {
  kOk = 0,
  kUnexpected = 1,
  kValidation = 2,
  kIo = 3,
  kNumerical = 4,
};

enum class Format { kCsv, kJson };

struct ScenePair {
  std::string name;
  std::filesystem::path pred;
  std::filesystem::path gt;
};

/// Pairs prediction and ground-truth files. Two files form one pair. Two
/// directories are matched by name: each ground-truth `S.json` takes
/// `S.pred.json` from the prediction directory, or `S.json` when the
/// directories differ. Files named `*.pred.json` are never ground truth.
std::vector<ScenePair> resolve_scene_pairs(const std::filesystem::path& pred,
                                           const std::filesystem::path& gt);

/// Throws InvalidInput naming the first differing field.
void require_compatible(const Scene& pred, const Scene& gt, bool same_person_count);

/// Runs fn(0..count-1) on up to `jobs` threads. Rethrows the exception of
/// the lowest failing index.
void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& fn);

struct GenArgs {
  RunConfig config;
  std::filesystem::path out;
};
ExitCode cmd_gen(const GenArgs& args, std::ostream& out);

struct LossArgs {
  RunConfig config;
  std::filesystem::path pred;
  std::filesystem::path gt;
  Format format = Format::kJson;
  std::optional<std::filesystem::path> out;
  int jobs = 1;
};
ExitCode cmd_loss(const LossArgs& args, std::ostream& out);

struct RefineArgs {
  RunConfig config;
  std::filesystem::path pred;
  std::filesystem::path gt;
  std::filesystem::path out;
  std::optional<std::filesystem::path> trace;  // defaults next to `out`
};
ExitCode cmd_refine(const RefineArgs& args, std::ostream& out);

struct EvalArgs {
  RunConfig config;
  std::filesystem::path pred;
  std::filesystem::path gt;
  Format format = Format::kJson;
  std::optional<std::filesystem::path> out_dir;
  int jobs = 1;
};
ExitCode cmd_eval(const EvalArgs& args, std::ostream& out);

struct GradCheckArgs {
  RunConfig config;
  Format format = Format::kCsv;
};
ExitCode cmd_gradcheck(const GradCheckArgs& args, std::ostream& out);

}  // namespace hmor::cli
