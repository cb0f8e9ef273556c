#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rpinn/catalog.hpp"
#include "rpinn/csv.hpp"
#include "rpinn/runner.hpp"

namespace fs = std::filesystem;
using namespace rpinn;

namespace {

struct SolveFlags {
  std::string problem;
  std::string config;
  std::string method;
  std::vector<double> segments;
  std::optional<std::size_t> segment_count;
  std::string spacing;
  std::optional<std::size_t> max_segments;
  std::optional<std::size_t> epochs;
  std::optional<double> lr;
  std::optional<std::size_t> collocation;
  std::string quadrature;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::vector<std::string> params;
  bool normalize_input = false;
  bool raw_input = false;
  std::optional<double> bdf_step;
  std::optional<int> bdf_order;
  bool save_checkpoints = false;
};

// Flags override the config file, which overrides the preset.
RunConfig build_config(const SolveFlags& f) {
  RunConfig cfg = f.config.empty() ? RunConfig{} : load_run_config(f.config);
  if (!f.problem.empty()) {
    cfg.problem = f.problem;
    cfg.inline_problem.reset();
  }
  if (!f.method.empty()) cfg.method = parse_method(f.method);
  if (!f.segments.empty()) cfg.segments = f.segments;
  if (f.segment_count) cfg.segment_count = f.segment_count;
  if (!f.spacing.empty()) {
    if (f.spacing != "log" && f.spacing != "linear") throw ConfigError("--spacing must be 'log' or 'linear'");
    cfg.log_spacing = f.spacing == "log";
  }
  if (f.max_segments) cfg.max_segments = f.max_segments;
  if (f.epochs) cfg.epochs = f.epochs;
  if (f.lr) cfg.learning_rate = f.lr;
  if (f.collocation) cfg.collocation = f.collocation;
  if (!f.quadrature.empty()) cfg.quadrature = parse_transfer_rule(f.quadrature);
  if (f.seed) cfg.seed = f.seed;
  if (!f.out.empty()) cfg.out_dir = f.out;
  for (const auto& kv : f.params) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("--param expects key=value, got '" + kv + "'");
    try {
      cfg.parameters[kv.substr(0, eq)] = std::stod(kv.substr(eq + 1));
    } catch (const std::exception&) {
      throw ConfigError("--param " + kv.substr(0, eq) + " expects a number");
    }
  }
  if (f.normalize_input) cfg.normalize_input = true;
  if (f.raw_input) cfg.normalize_input = false;
  if (f.bdf_step) cfg.bdf_step = f.bdf_step;
  if (f.bdf_order) cfg.bdf_order = f.bdf_order;
  if (f.save_checkpoints) cfg.save_checkpoints = true;
  return cfg;
}

// A compare operand is a run directory, "dir:reference", or a config file to run first.
RunSource resolve_operand(const std::string& text, const fs::path& out_root, const char* tag) {
  RunSource src = RunSource::parse(text);
  if (fs::is_regular_file(src.dir)) {
    RunConfig cfg = load_run_config(src.dir);
    if (cfg.out_dir.empty()) cfg.out_dir = out_root / tag;
    std::cerr << "running " << src.dir.string() << " -> " << cfg.out_dir.string() << '\n';
    const auto result = execute(cfg, &std::cerr);
    src.dir = result.out_dir;
  }
  if (!fs::is_directory(src.dir)) throw ConfigError("'" + src.dir.string() + "' is neither a run directory nor a config file");
  return src;
}

int compare_command(const std::string& a, const std::string& b, const std::string& out) {
  try {
    const fs::path out_dir = out.empty() ? output_directory(RunConfig{}) / "comparison" : fs::path(out);
    const auto sa = resolve_operand(a, out_dir, "a");
    const auto sb = resolve_operand(b, out_dir, "b");
    const auto report = compare_runs(sa, sb, out_dir);
    std::cout << "compared " << report.points << " points of " << report.problem << '\n';
    for (std::size_t i = 0; i < report.species.size(); ++i) {
      std::cout << "  " << report.species[i] << ": max " << csv::format(report.max_abs_diff[i]) << ", l2 "
                << csv::format(report.l2_diff[i]) << ", relative " << csv::format(report.relative_max_diff[i])
                << '\n';
    }
    std::cout << "wrote " << (out_dir / "comparison.csv").string() << '\n';
    return exit_code::kOk;
  } catch (const ArgumentError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code::kMismatch;
  } catch (const UnknownProblem& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code::kUnknownProblem;
  } catch (const OutputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code::kOutputError;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code::kBadConfig;
  } catch (const TrainingDiverged& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code::kDiverged;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code::kFailure;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reduced-PINN solver for linear and stiff ODE initial value problems"};
  app.require_subcommand(1);

  SolveFlags f;
  auto* solve = app.add_subcommand("solve", "Train (or integrate) a problem and write CSV results");
  solve->add_option("problem", f.problem, "Preset name (see list-problems)");
  solve->add_option("-c,--config", f.config, "key = value config file");
  solve->add_option("-m,--method", f.method, "reduced | classical | bdf");
  solve->add_option("--segments", f.segments, "Segment boundaries, e.g. 0,0.1,0.4")->delimiter(',');
  solve->add_option("--segment-count", f.segment_count, "Split the domain into N segments");
  solve->add_option("--spacing", f.spacing, "Spacing for --segment-count: linear | log");
  solve->add_option("--max-segments", f.max_segments, "Keep only the first K segments of the plan");
  solve->add_option("--epochs", f.epochs, "Adam epochs per segment");
  solve->add_option("--lr", f.lr, "Adam learning rate");
  solve->add_option("--collocation", f.collocation, "Collocation points per segment");
  solve->add_option("--quadrature", f.quadrature, "Initial-value transfer rule: auto | trapezoid | simpson");
  solve->add_option("--seed", f.seed, "Initialization seed");
  solve->add_option("-o,--out", f.out, "Output directory (default $RPINN_OUTPUT_DIR or ./rpinn-out)");
  solve->add_option("-p,--param", f.params, "Problem parameter override key=value (repeatable)");
  solve->add_flag("--normalize-input", f.normalize_input, "Map each segment to [0, 1] before the network");
  solve->add_flag("--raw-input", f.raw_input, "Feed x to the network unscaled");
  solve->add_option("--bdf-step", f.bdf_step, "BDF step size");
  solve->add_option("--bdf-order", f.bdf_order, "BDF order (1 or 2)");
  solve->add_flag("--save-checkpoints", f.save_checkpoints, "Write trained network parameters");

  std::string cmp_a, cmp_b, cmp_out;
  auto* compare = app.add_subcommand("compare", "Compare two runs on a common grid");
  compare->add_option("a", cmp_a, "Run directory, dir:reference, or config file")->required();
  compare->add_option("b", cmp_b, "Run directory, dir:reference, or config file")->required();
  compare->add_option("-o,--out", cmp_out, "Where to write comparison.csv");

  auto* list = app.add_subcommand("list-problems", "Show the built-in problem presets");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : exit_code::kBadConfig;
  }

  if (*list) {
    for (const auto& name : problem_names()) {
      const auto inst = make_problem(name, {});
      std::printf("%-8s %s\n", name.c_str(), inst.description.c_str());
    }
    return exit_code::kOk;
  }
  if (*compare) return compare_command(cmp_a, cmp_b, cmp_out);

  RunConfig cfg;
  try {
    if (f.problem.empty() && f.config.empty()) throw ConfigError("solve needs a problem name or --config");
    cfg = build_config(f);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code::kBadConfig;
  }
  return run(cfg, std::cerr, std::cerr);
}
