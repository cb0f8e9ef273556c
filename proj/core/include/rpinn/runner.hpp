#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rpinn/catalog.hpp"
#include "rpinn/trainer.hpp"

namespace rpinn {

enum class Method { Reduced, Classical, Bdf };

[[nodiscard]] Method parse_method(std::string_view name);
[[nodiscard]] std::string_view to_string(Method method);

/// Exit codes of the command-line tool.
namespace exit_code {
inline constexpr int kOk = 0;
inline constexpr int kFailure = 1;
inline constexpr int kBadConfig = 2;
inline constexpr int kUnknownProblem = 3;
inline constexpr int kOutputError = 4;
inline constexpr int kDiverged = 5;
inline constexpr int kMismatch = 6;
}  // namespace exit_code

/// Everything a run needs. Unset optionals fall back to the problem preset.
struct RunConfig {
  std::string problem = "case2";
  ParameterMap parameters;
  std::optional<InlineLinearSpec> inline_problem;

  std::optional<std::vector<double>> segments;  // explicit boundaries
  std::optional<std::size_t> segment_count;
  std::optional<bool> log_spacing;
  std::optional<std::size_t> max_segments;  // keep only the first k segments of the plan

  std::optional<std::size_t> epochs;
  std::optional<std::size_t> collocation;
  std::optional<double> learning_rate;
  std::optional<double> beta1;
  std::optional<double> beta2;
  std::optional<double> epsilon;
  std::optional<double> loss_tolerance;
  std::optional<std::uint64_t> seed;
  std::optional<std::vector<std::size_t>> hidden_layers;
  std::optional<Activation> activation;
  std::optional<bool> normalize_input;
  std::optional<TransferRule> quadrature;
  std::optional<std::vector<double>> ic_weights;

  std::optional<int> bdf_order;
  std::optional<double> bdf_step;
  std::optional<double> newton_tol;
  std::optional<std::size_t> newton_max_iter;
  /// BDF reference steps per collocation interval when no closed form exists.
  std::size_t reference_refine = 4;

  Method method = Method::Reduced;
  std::filesystem::path out_dir;  // empty: $RPINN_OUTPUT_DIR, else ./rpinn-out
  bool save_checkpoints = false;
};

/// Parse a key = value config file with [problem], [plan], [train], [classical],
/// [bdf] and [run] sections. Throws ConfigError on unknown keys or bad values.
[[nodiscard]] RunConfig load_run_config(const std::filesystem::path& path);

/// Resolved output directory (config value, then $RPINN_OUTPUT_DIR, then ./rpinn-out).
[[nodiscard]] std::filesystem::path output_directory(const RunConfig& cfg);

struct RunResult {
  std::filesystem::path out_dir;
  std::vector<std::string> species;
  StateTable solution;
  std::optional<StateTable> reference;  // sampled on the solution grid
  std::vector<double> max_abs_error;
  std::vector<double> l2_error;
  std::vector<TrainReport> reports;
  double wall_seconds = 0.0;
};

/// Piecewise-linear interpolation of every species at x (clamped to the table range).
[[nodiscard]] std::vector<double> interpolate(const StateTable& table, double x);

/// BDF trajectory over a segment plan, each segment integrated with at least
/// `min_steps` steps (and no coarser than cfg.step_size). Linear IVPs are
/// integrated in companion form; only u is kept.
[[nodiscard]] StateTable segmented_bdf_reference(const Problem& problem, const std::vector<double>& boundaries,
                                                 const BdfConfig& cfg, std::size_t min_steps);

/// Solve, write solution.csv, convergence_segment_NNN.csv and summary.txt.
/// Throws on any failure (see run() for the exit-code mapping).
RunResult execute(const RunConfig& cfg, std::ostream* log = nullptr);

/// execute() with exceptions mapped to exit codes and diagnostics on `err`.
int run(const RunConfig& cfg, std::ostream& log, std::ostream& err);

/// One side of a comparison: a run directory, optionally using its reference columns.
struct RunSource {
  std::filesystem::path dir;
  bool use_reference = false;

  /// "path" or "path:reference".
  [[nodiscard]] static RunSource parse(std::string_view text);
};

struct ComparisonReport {
  std::string problem;
  std::vector<std::string> species;
  std::size_t points = 0;
  std::vector<double> max_abs_diff;
  std::vector<double> l2_diff;
  /// max_abs_diff divided by the range of the species in source b.
  std::vector<double> relative_max_diff;
};

/// Interpolate b onto a's grid (within the overlap), write comparison.csv and
/// comparison_summary.txt into `out_dir`. Throws ArgumentError on mismatched problems.
ComparisonReport compare_runs(const RunSource& a, const RunSource& b, const std::filesystem::path& out_dir);

}  // namespace rpinn
