#include "hmor/error.hpp"
#include "hmor_cli/commands.hpp"

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <iostream>
#include <map>
#include <string>

namespace {

using namespace hmor;
using namespace hmor::cli;

void configure_logging() {
  auto logger = spdlog::stderr_color_mt("hmor");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  spdlog::set_level(spdlog::level::err);
  if (const char* env = std::getenv("HMOR_LOG")) {
    const std::string level = env;
    if (level == "info") spdlog::set_level(spdlog::level::info);
    if (level == "debug") spdlog::set_level(spdlog::level::debug);
  }
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kIo: return static_cast<int>(ExitCode::kIo);
    case ErrorKind::kNumerical:
    case ErrorKind::kSolver: return static_cast<int>(ExitCode::kNumerical);
    default: return static_cast<int>(ExitCode::kValidation);
  }
}

// Options shared by several subcommands; flags override the config file.
struct Common {
  std::string config_path;
  std::uint64_t seed = 0;
  int jobs = 1;
  std::map<const CLI::App*, Format> formats;

  void add_config_and_seed(CLI::App* app) {
    app->add_option("--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
    app->add_option("--seed", seed, "Random seed (overrides the config)");
  }
  void add_format(CLI::App* app, Format fallback) {
    Format& format = formats[app] = fallback;
    const std::map<std::string, Format> names{{"csv", Format::kCsv}, {"json", Format::kJson}};
    app->add_option("--format", format, "Output format")
        ->transform(CLI::CheckedTransformer(names, CLI::ignore_case));
  }
  void add_jobs(CLI::App* app) {
    app->add_option("--jobs", jobs, "Scenes evaluated in parallel")->check(CLI::PositiveNumber);
  }

  RunConfig load(const CLI::App* app) const {
    RunConfig config = config_path.empty() ? RunConfig{} : load_run_config(config_path);
    if (app->count("--seed") > 0) config.seed = seed;
    config.solver.seed = config.seed;
    return config;
  }
};

}  // namespace

int main(int argc, char** argv) {
  configure_logging();
  CLI::App app{"Ordinal depth-relation losses, pose metrics and scene refinement"};
  app.require_subcommand(1);

  Common common;

  // gen
  auto* gen = app.add_subcommand("gen", "Generate synthetic scenes");
  std::string gen_out;
  int persons = 1, count = 1;
  std::string perturb_type;
  double sigma_z = 0.0, sigma_xy = 0.0, offset = 0.0;
  std::vector<std::string> swaps;
  common.add_config_and_seed(gen);
  gen->add_option("--out", gen_out, "Output directory")->required();
  gen->add_option("--persons", persons, "Persons per scene");
  gen->add_option("--count", count, "Number of scenes");
  gen->add_option("--perturb", perturb_type, "Also write a perturbed prediction")
      ->check(CLI::IsMember({"none", "gauss", "swap", "offset"}));
  gen->add_option("--sigma-z", sigma_z, "Gaussian root-depth noise, mm");
  gen->add_option("--sigma-xy", sigma_xy, "Gaussian lateral joint noise, mm");
  gen->add_option("--swap", swaps, "Swap root depths of persons a:b (repeatable)");
  gen->add_option("--offset", offset, "Root depth offset, mm");

  // loss
  auto* loss = app.add_subcommand("loss", "Report HMOR and data-term losses");
  std::string pred_path, gt_path, out_path, trace_path;
  common.add_config_and_seed(loss);
  common.add_jobs(loss);
  common.add_format(loss, Format::kJson);
  loss->add_option("--pred", pred_path, "Prediction scene file or directory")->required();
  loss->add_option("--gt", gt_path, "Ground-truth scene file or directory")->required();
  loss->add_option("--out", out_path, "Write the report to this file");

  // refine
  auto* refine_cmd = app.add_subcommand("refine", "Refine a predicted scene");
  int steps = 0, views = 0;
  double step_size = 0.0;
  bool halving = false;
  common.add_config_and_seed(refine_cmd);
  refine_cmd->add_option("--pred", pred_path, "Prediction scene file")->required();
  refine_cmd->add_option("--gt", gt_path, "Ground-truth scene file")->required();
  refine_cmd->add_option("--out", out_path, "Refined scene output file")->required();
  refine_cmd->add_option("--trace", trace_path, "Objective trace CSV (default: <out>.trace.csv)");
  refine_cmd->add_option("--steps", steps, "Gradient steps");
  refine_cmd->add_option("--step-size", step_size, "Step size");
  refine_cmd->add_option("--views", views, "Views per step, camera normal included");
  refine_cmd->add_flag("--halving", halving, "Halve the step until the objective decreases");

  // eval
  auto* eval = app.add_subcommand("eval", "Evaluate predictions against ground truth");
  int audit = 0;
  common.add_config_and_seed(eval);
  common.add_jobs(eval);
  common.add_format(eval, Format::kJson);
  eval->add_option("--pred", pred_path, "Prediction scene file or directory")->required();
  eval->add_option("--gt", gt_path, "Ground-truth scene file or directory")->required();
  eval->add_option("--out", out_path, "Directory for report.json, report.csv, pck_curve.csv");
  eval->add_option("--audit-views", audit, "Views used to count ordinal violations");

  // gradcheck
  auto* gradcheck = app.add_subcommand("gradcheck", "Check analytic gradients");
  int points = 0;
  double epsilon = 0.0;
  common.add_config_and_seed(gradcheck);
  common.add_format(gradcheck, Format::kCsv);
  gradcheck->add_option("--points", points, "Random points per term");
  gradcheck->add_option("--epsilon", epsilon, "Finite-difference step");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(ExitCode::kValidation);
  }

  try {
    ExitCode code = ExitCode::kOk;
    if (gen->parsed()) {
      GenArgs args{common.load(gen), gen_out};
      auto& g = args.config.gen;
      if (gen->count("--persons") > 0) g.n_persons = persons;
      if (gen->count("--count") > 0) args.config.gen_count = count;
      if (!perturb_type.empty()) {
        if (perturb_type == "none") g.perturbation = NoPerturbation{};
        if (perturb_type == "gauss") g.perturbation = GaussPerturbation{sigma_xy, sigma_z};
        if (perturb_type == "offset") g.perturbation = RootOffset{offset};
        if (perturb_type == "swap") {
          DepthSwap swap;
          for (const auto& s : swaps) {
            const auto colon = s.find(':');
            if (colon == std::string::npos) throw InvalidInput("--swap expects a:b, got '" + s + "'");
            swap.pairs.emplace_back(std::stoi(s.substr(0, colon)), std::stoi(s.substr(colon + 1)));
          }
          g.perturbation = swap;
        }
      }
      code = cmd_gen(args, std::cout);
    } else if (loss->parsed()) {
      LossArgs args{common.load(loss), pred_path, gt_path, common.formats.at(loss), std::nullopt, common.jobs};
      if (!out_path.empty()) args.out = out_path;
      code = cmd_loss(args, std::cout);
    } else if (refine_cmd->parsed()) {
      RefineArgs args{common.load(refine_cmd), pred_path, gt_path, out_path, std::nullopt};
      auto& s = args.config.solver;
      if (refine_cmd->count("--steps") > 0) s.steps = steps;
      if (refine_cmd->count("--step-size") > 0) s.step_size = step_size;
      if (refine_cmd->count("--views") > 0) s.views_per_step = views;
      if (halving) s.step_halving = true;
      if (!trace_path.empty()) args.trace = trace_path;
      code = cmd_refine(args, std::cout);
    } else if (eval->parsed()) {
      EvalArgs args{common.load(eval), pred_path, gt_path, common.formats.at(eval), std::nullopt, common.jobs};
      if (eval->count("--audit-views") > 0) args.config.eval.audit_views = audit;
      if (!out_path.empty()) args.out_dir = out_path;
      code = cmd_eval(args, std::cout);
    } else if (gradcheck->parsed()) {
      GradCheckArgs args{common.load(gradcheck), common.formats.at(gradcheck)};
      if (gradcheck->count("--points") > 0) args.config.gradcheck.points = points;
      if (gradcheck->count("--epsilon") > 0) args.config.gradcheck.epsilon = epsilon;
      code = cmd_gradcheck(args, std::cout);
    }
    return static_cast<int>(code);
  } catch (const Error& e) {
    spdlog::debug("error kind {}", to_string(e.kind()));
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << "\n";
    return static_cast<int>(ExitCode::kUnexpected);
  }
}
