#include "hmor_cli/commands.hpp"

#include "hmor/error.hpp"
#include "hmor_cli/scene_file.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>
#include <variant>

namespace hmor::cli {

namespace fs = std::filesystem;

namespace {

using Cell = std::variant<std::string, double, long long>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
};

std::string cell_text(const Cell& cell) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::string>) {
          return v;
        } else {
          return fmt::format("{}", v);
        }
      },
      cell);
}

std::string to_csv(const Table& table) {
  std::string out;
  for (std::size_t c = 0; c < table.columns.size(); ++c) {
    out += (c ? "," : "") + table.columns[c];
  }
  out += '\n';
  for (const auto& row : table.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) out += (c ? "," : "") + cell_text(row[c]);
    out += '\n';
  }
  return out;
}

nlohmann::ordered_json to_json(const Table& table) {
  auto rows = nlohmann::ordered_json::array();
  for (const auto& row : table.rows) {
    nlohmann::ordered_json obj;
    for (std::size_t c = 0; c < row.size(); ++c) {
      std::visit([&](const auto& v) { obj[table.columns[c]] = v; }, row[c]);
    }
    rows.push_back(std::move(obj));
  }
  return rows;
}

std::string render(const Table& table, Format format) {
  if (format == Format::kCsv) return to_csv(table);
  nlohmann::ordered_json doc;
  doc["rows"] = to_json(table);
  return doc.dump(2) + "\n";
}

void ensure_directory(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw IoError("cannot create output directory '" + dir.string() + "'");
  }
}

bool is_pred_file(const fs::path& p) {
  const std::string name = p.filename().string();
  return name.size() > 10 && name.ends_with(".pred.json");
}

std::string scene_stem(const fs::path& p) {
  std::string name = p.filename().string();
  if (name.ends_with(".json")) name.resize(name.size() - 5);
  return name;
}

std::vector<ViewVector> audit_views(const Camera& camera, int count, std::uint64_t seed) {
  std::vector<ViewVector> views{ViewVector(camera.normal())};
  std::mt19937_64 rng(seed);
  for (int v = 1; v < count; ++v) views.push_back(sample_view(rng));
  return views;
}

}  // namespace

// ---------------------------------------------------------------------------

std::vector<ScenePair> resolve_scene_pairs(const fs::path& pred, const fs::path& gt) {
  if (!fs::exists(pred)) throw IoError("prediction path '" + pred.string() + "' does not exist");
  if (!fs::exists(gt)) throw IoError("ground-truth path '" + gt.string() + "' does not exist");
  const bool pred_dir = fs::is_directory(pred);
  const bool gt_dir = fs::is_directory(gt);
  if (pred_dir != gt_dir) {
    throw InvalidInput("prediction and ground truth must both be files or both be directories");
  }
  if (!gt_dir) return {{scene_stem(gt), pred, gt}};

  std::vector<fs::path> gt_files;
  for (const auto& entry : fs::directory_iterator(gt)) {
    const auto& p = entry.path();
    if (entry.is_regular_file() && p.extension() == ".json" && !is_pred_file(p)) {
      gt_files.push_back(p);
    }
  }
  std::sort(gt_files.begin(), gt_files.end());
  if (gt_files.empty()) throw InvalidInput("no scene files in '" + gt.string() + "'");

  const bool same_dir = fs::equivalent(pred, gt);
  std::vector<ScenePair> pairs;
  for (const auto& g : gt_files) {
    const std::string stem = scene_stem(g);
    fs::path candidate = pred / (stem + ".pred.json");
    if (!fs::exists(candidate) && !same_dir) candidate = pred / (stem + ".json");
    if (!fs::exists(candidate)) {
      throw IoError("no prediction for '" + g.string() + "' in '" + pred.string() + "'");
    }
    pairs.push_back({stem, candidate, g});
  }
  return pairs;
}

void require_compatible(const Scene& pred, const Scene& gt, bool same_person_count) {
  const auto& a = pred.topology;
  const auto& b = gt.topology;
  if (a.joint_count != b.joint_count) {
    throw InvalidInput(fmt::format("topology mismatch: topology.joints is {} in prediction, {} in ground truth",
                                   a.joint_count, b.joint_count));
  }
  if (a.root_index != b.root_index) {
    throw InvalidInput(fmt::format("topology mismatch: topology.root_index is {} in prediction, {} in ground truth",
                                   a.root_index, b.root_index));
  }
  if (a.parts != b.parts) {
    throw InvalidInput("topology mismatch: topology.parts differ between prediction and ground truth");
  }
  if (!(pred.camera == gt.camera)) {
    throw InvalidInput("camera mismatch: camera intrinsics differ between prediction and ground truth");
  }
  if (same_person_count && pred.person_count() != gt.person_count()) {
    throw InvalidInput(fmt::format("person count mismatch: persons has {} entries in prediction, {} in ground truth",
                                   pred.person_count(), gt.person_count()));
  }
}

void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers =
      std::min<std::size_t>(count, static_cast<std::size_t>(std::max(1, jobs)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(count);
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < count; i = next++) {
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

// ---------------------------------------------------------------------------

ExitCode cmd_gen(const GenArgs& args, std::ostream& out) {
  args.config.validate();
  ensure_directory(args.out);
  const bool perturbed = !std::holds_alternative<NoPerturbation>(args.config.gen.perturbation);
  for (int i = 0; i < args.config.gen_count; ++i) {
    GenSpec spec = args.config.gen;
    spec.seed = args.config.seed + static_cast<std::uint64_t>(i);
    const Scene gt = generate_scene(spec);
    const std::string stem = fmt::format("scene_{:04d}", i);
    save_scene(args.out / (stem + ".json"), gt);
    if (perturbed) save_scene(args.out / (stem + ".pred.json"), perturb(gt, spec));
    spdlog::debug("generated {} with seed {}", stem, spec.seed);
  }
  out << fmt::format("generated {} scene(s) with seed {} in {}\n", args.config.gen_count,
                     args.config.seed, args.out.string());
  return ExitCode::kOk;
}

ExitCode cmd_loss(const LossArgs& args, std::ostream& out) {
  args.config.validate();
  const auto pairs = resolve_scene_pairs(args.pred, args.gt);
  const SolverConfig& solver = args.config.solver;
  constexpr std::size_t kFields = 9;
  std::vector<std::array<double, kFields>> values(pairs.size());

  parallel_for(pairs.size(), args.jobs, [&](std::size_t i) {
    const Scene pred = load_scene(pairs[i].pred);
    const Scene gt = load_scene(pairs[i].gt);
    require_compatible(pred, gt, true);
    const auto views = audit_views(gt.camera, solver.views_per_step, args.config.seed);
    const auto view_pairs = build_view_pairs(gt, views, solver.hmor);
    const SceneParameterization params(pred, solver.free_variables, solver.hmor.depth_unit_scale);
    const auto result = objective(pred, view_pairs, gt, solver, params);

    const auto pred_m = to_loss_units(assemble_scene(pred), solver.hmor.depth_unit_scale);
    HmorLoss levels;
    for (const auto& vp : view_pairs) {
      const auto l = hmor_loss(pred_m, pred.topology, vp.pairs, vp.view, solver.hmor);
      levels.total += l.total;
      levels.instance += l.instance;
      levels.part += l.part;
      levels.joint += l.joint;
    }
    const double inv = 1.0 / static_cast<double>(view_pairs.size());
    const auto& c = result.components;
    values[i] = {result.value, levels.total * inv, levels.instance * inv, levels.part * inv,
                 levels.joint * inv, c.pose, c.init, c.refine, c.abs};
    spdlog::info("loss {}: total {}", pairs[i].name, result.value);
  });

  Table table{{"scene", "total", "hmor", "hmor_instance", "hmor_part", "hmor_joint", "pose",
               "init", "refine", "abs"},
              {}};
  std::array<double, kFields> mean{};
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    std::vector<Cell> row{pairs[i].name};
    for (std::size_t k = 0; k < kFields; ++k) {
      row.emplace_back(values[i][k]);
      mean[k] += values[i][k];
    }
    table.rows.push_back(std::move(row));
  }
  if (pairs.size() > 1) {
    std::vector<Cell> row{std::string("mean")};
    for (double v : mean) row.emplace_back(v / static_cast<double>(pairs.size()));
    table.rows.push_back(std::move(row));
  }
  const std::string text = render(table, args.format);
  if (args.out) {
    write_text(*args.out, text);
  } else {
    out << text;
  }
  return ExitCode::kOk;
}

ExitCode cmd_refine(const RefineArgs& args, std::ostream& out) {
  args.config.validate();
  const Scene pred = load_scene(args.pred);
  const Scene gt = load_scene(args.gt);
  require_compatible(pred, gt, true);

  const RefineResult result = refine(pred, gt, args.config.solver);

  fs::path trace_path = args.trace.value_or(fs::path(args.out).replace_extension(".trace.csv"));
  save_scene(args.out, result.refined);
  std::string csv = "step,value,violations\n";
  for (const auto& row : result.trace) {
    csv += fmt::format("{},{},{}\n", row.step, row.value, row.violations);
  }
  write_text(trace_path, csv);

  const auto& first = result.trace.front();
  const auto& last = result.trace.back();
  out << fmt::format("refined {} steps: objective {} -> {}, violations {} -> {}\n",
                     last.step, first.value, last.value, first.violations, last.violations);
  out << fmt::format("wrote {} and {}\n", args.out.string(), trace_path.string());
  return ExitCode::kOk;
}

ExitCode cmd_eval(const EvalArgs& args, std::ostream& out) {
  args.config.validate();
  const auto pairs = resolve_scene_pairs(args.pred, args.gt);
  const auto& settings = args.config.eval;
  std::vector<std::optional<MetricReport>> reports(pairs.size());
  std::vector<long long> joints_per_person(pairs.size());

  parallel_for(pairs.size(), args.jobs, [&](std::size_t i) {
    const Scene pred = load_scene(pairs[i].pred);
    const Scene gt = load_scene(pairs[i].gt);
    require_compatible(pred, gt, false);
    const auto views = audit_views(gt.camera, settings.audit_views, args.config.seed);
    reports[i] = evaluate(pred, gt, settings.metrics, views, args.config.solver.hmor);
    joints_per_person[i] = gt.topology.joint_count;
    spdlog::info("eval {}: abs_mpjpe {}", pairs[i].name, reports[i]->abs_mpjpe);
  });

  Table table{{"scene", "matched", "unmatched_pred", "unmatched_gt", "joints", "mpjpe",
               "pa_mpjpe", "abs_mpjpe", "pck_rel", "pck_abs", "auc_rel",
               "violations_instance", "violations_part", "violations_joint"},
              {}};
  // Pooled aggregate: per-joint metrics weighted by the joints they cover.
  double w_matched = 0.0, w_joints = 0.0;
  double mpjpe = 0.0, pa = 0.0, abs = 0.0, pck_rel = 0.0, pck_abs = 0.0, auc_rel = 0.0;
  long long matched = 0, unmatched_pred = 0, unmatched_gt = 0, joints = 0;
  ViolationCounts violations;
  std::vector<double> curve;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const MetricReport& r = *reports[i];
    const auto m = static_cast<long long>(r.matched_pairs.size());
    table.rows.push_back({pairs[i].name, m, static_cast<long long>(r.unmatched_pred),
                          static_cast<long long>(r.unmatched_gt), r.joint_count, r.mpjpe,
                          r.pa_mpjpe, r.abs_mpjpe, r.pck_rel, r.pck_abs, r.auc_rel,
                          r.ordinal_violations.instance, r.ordinal_violations.part,
                          r.ordinal_violations.joint});
    const auto mw = static_cast<double>(m * joints_per_person[i]);
    const double jw = static_cast<double>(r.joint_count);
    w_matched += mw;
    w_joints += jw;
    mpjpe += mw * r.mpjpe;
    pa += mw * r.pa_mpjpe;
    abs += mw * r.abs_mpjpe;
    pck_rel += jw * r.pck_rel;
    pck_abs += jw * r.pck_abs;
    auc_rel += jw * r.auc_rel;
    matched += m;
    unmatched_pred += r.unmatched_pred;
    unmatched_gt += r.unmatched_gt;
    joints += r.joint_count;
    violations += r.ordinal_violations;
    curve.resize(r.pck_rel_curve.size(), 0.0);
    for (std::size_t k = 0; k < r.pck_rel_curve.size(); ++k) {
      curve[k] += jw * r.pck_rel_curve[k].second;
    }
  }
  table.rows.push_back({std::string("all"), matched, unmatched_pred, unmatched_gt, joints,
                        mpjpe / w_matched, pa / w_matched, abs / w_matched, pck_rel / w_joints,
                        pck_abs / w_joints, auc_rel / w_joints, violations.instance,
                        violations.part, violations.joint});

  Table curve_table{{"threshold_mm", "pck_rel"}, {}};
  const auto& grid = reports.front()->pck_rel_curve;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    curve_table.rows.push_back({grid[k].first, curve[k] / w_joints});
  }

  if (args.out_dir) {
    ensure_directory(*args.out_dir);
    nlohmann::ordered_json doc;
    doc["rows"] = to_json(table);
    doc["pck_curve"] = to_json(curve_table);
    write_text(*args.out_dir / "report.json", doc.dump(2) + "\n");
    write_text(*args.out_dir / "report.csv", to_csv(table));
    write_text(*args.out_dir / "pck_curve.csv", to_csv(curve_table));
  }
  out << render(table, args.format);
  return ExitCode::kOk;
}

ExitCode cmd_gradcheck(const GradCheckArgs& args, std::ostream& out) {
  args.config.validate();
  const auto& settings = args.config.gradcheck;
  std::mt19937_64 rng(args.config.seed);
  Table table{{"term", "points", "max_rel_error", "tolerance", "status"}, {}};
  bool all_pass = true;
  for (GradTerm term : all_grad_terms()) {
    // The full objective is far costlier per point than a single term.
    const int points = term == GradTerm::kObjective ? std::max(1, settings.points / 10)
                                                    : settings.points;
    double worst = 0.0;
    for (int p = 0; p < points; ++p) {
      const GradProblem problem = random_grad_problem(term, rng, settings.epsilon);
      worst = std::max(worst, grad_check(problem.fn, problem.point, settings.epsilon));
    }
    const bool pass = worst < settings.tolerance;
    all_pass = all_pass && pass;
    table.rows.push_back({std::string(to_string(term)), static_cast<long long>(points), worst,
                          settings.tolerance, std::string(pass ? "pass" : "fail")});
  }
  out << render(table, args.format);
  return all_pass ? ExitCode::kOk : ExitCode::kNumerical;
}

}  // namespace hmor::cli
