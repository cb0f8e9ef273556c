#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "rpinn/errors.hpp"
#include "rpinn/neuralnet.hpp"
#include "rpinn/ode_model.hpp"
#include "rpinn/quadrature.hpp"
#include "rpinn/weakform.hpp"

namespace rpinn {

/// A problem is either an order-n linear IVP (solved through its Volterra form)
/// or a first-order system (solved through v_i = u_i').
using Problem = std::variant<LinearIVP, FirstOrderSystem>;

/// Number of networks (one per state variable).
[[nodiscard]] std::size_t network_count(const Problem& problem);
/// Length of the initial-value vector (n for a linear IVP, N for a system).
[[nodiscard]] std::size_t initial_value_count(const Problem& problem);
[[nodiscard]] const Interval& problem_domain(const Problem& problem);
[[nodiscard]] const std::vector<double>& problem_initial_values(const Problem& problem);
[[nodiscard]] Problem restrict_problem(const Problem& problem, Interval segment, std::vector<double> ics);

/// Rule for the integral that carries the end-of-segment state to the next segment.
/// Auto picks Simpson when the segment is narrower than 10 grid spacings.
enum class TransferRule { Auto, Trapezoid, Simpson };

[[nodiscard]] TransferRule parse_transfer_rule(std::string_view name);
[[nodiscard]] std::string_view to_string(TransferRule rule);

struct TrainConfig {
  std::size_t collocation_count = 101;
  std::size_t epochs = 20000;
  AdamSettings optimizer;
  double loss_tolerance = 1e-10;
  std::uint64_t seed = 0;
  std::vector<std::size_t> hidden_layers{50, 50, 50, 50};
  Activation activation = Activation::ReLU;
  /// Feed (x - s) / (e - s) to the network instead of raw x.
  bool normalize_input = false;
  TransferRule transfer = TransferRule::Auto;

  void validate() const;
};

/// Affine map from absolute x to network input.
struct InputMap {
  double offset = 0.0;
  double scale = 1.0;

  [[nodiscard]] double operator()(double x) const noexcept { return (x - offset) * scale; }
  [[nodiscard]] static InputMap for_segment(Interval segment, bool normalize);
};

/// v(x) = net(map(x)); holds its own copy of the network.
[[nodiscard]] ScalarFn as_function(const Mlp& net, InputMap map = {});

/// Per-species samples on the collocation grid: values[i][j] = v_i(x_j).
using GridValues = std::vector<std::vector<double>>;

/// Mean-squared integral residual on one segment's collocation grid.
/// Residual prefix integrals use cumulative trapezoid weights, so one pass
/// yields every collocation residual.
class SegmentObjective {
 public:
  virtual ~SegmentObjective() = default;

  [[nodiscard]] const UniformGrid& grid() const noexcept { return grid_; }
  /// Number of residual terms (equals the number of networks).
  [[nodiscard]] virtual std::size_t term_count() const noexcept = 0;

  /// R[i][j] = R_i(x_j)
  [[nodiscard]] virtual GridValues residuals(const GridValues& v) const = 0;

  /// (1/n) sum_j R_i(x_j)^2 and its gradient w.r.t. every v_k(x_m), written to `dv`.
  virtual double term_loss_and_gradient(std::size_t term, const GridValues& v, GridValues& dv) const = 0;

  /// Sum over terms; `dv` receives the total gradient.
  virtual double loss_and_gradient(const GridValues& v, GridValues& dv) const;
  [[nodiscard]] double loss(const GridValues& v) const;

 protected:
  explicit SegmentObjective(UniformGrid grid) : grid_(grid) {}
  void check_shape(const GridValues& v) const;

 private:
  UniformGrid grid_;
};

/// `segment_problem` must already carry the segment's domain and initial values.
[[nodiscard]] std::unique_ptr<SegmentObjective> make_objective(const Problem& segment_problem,
                                                               const UniformGrid& grid);

/// L = sum_i (1/n) sum_j R_i(x_j)^2 evaluated with networks.
[[nodiscard]] double loss(std::span<const Mlp> nets, const SegmentObjective& objective, InputMap map = {});
/// Same loss with arbitrary callables standing in for the networks.
[[nodiscard]] double loss(std::span<const ScalarFn> fns, const SegmentObjective& objective);

struct TrainReport {
  Interval segment;
  std::vector<double> loss_history;  // raw loss, one entry per executed epoch
  double initial_loss = 0.0;
  double final_loss = 0.0;  // lowest loss seen; its parameters are the ones returned
  std::size_t best_epoch = 0;
  bool early_stopped = false;
  double wall_seconds = 0.0;
  std::vector<double> start_state;
  std::vector<double> end_state;

  [[nodiscard]] std::vector<double> normalized_history() const;
  [[nodiscard]] double normalized_final_loss() const;
};

struct SegmentSolution {
  std::vector<Mlp> nets;
  InputMap input;
  TrainReport report;
  /// Reconstructed u on the collocation grid; derivs holds v. The last row equals end_state.
  StateTable table;
  /// Initial values for the successor segment.
  std::vector<double> end_state;
};

/// Train one network per state variable on [segment.a, segment.b] with the given
/// initial values, returning the lowest-loss parameters and the reconstruction.
[[nodiscard]] SegmentSolution train_segment(const Problem& problem, Interval segment, std::span<const double> ics,
                                            const TrainConfig& cfg);

/// (u, u', ..., u^(n-1)) at `at` recovered from v; seeds the next segment's initial values.
[[nodiscard]] std::vector<double> higher_order_ic_transfer(const ScalarFn& v, const VolterraForm& form, double at,
                                                           const QuadratureRule& quad);
[[nodiscard]] std::vector<double> higher_order_ic_transfer(const Mlp& net, InputMap map, const VolterraForm& form,
                                                           double at, const QuadratureRule& quad);

struct SegmentPlan {
  std::vector<double> boundaries;
  TrainConfig per_segment;

  [[nodiscard]] static SegmentPlan uniform(Interval span, std::size_t segments, TrainConfig cfg);
  [[nodiscard]] static SegmentPlan logarithmic(Interval span, std::size_t segments, TrainConfig cfg);

  [[nodiscard]] std::size_t segment_count() const noexcept {
    return boundaries.empty() ? 0 : boundaries.size() - 1;
  }
  [[nodiscard]] Interval segment(std::size_t i) const;
  /// The first `count` segments of this plan.
  [[nodiscard]] SegmentPlan truncated(std::size_t count) const;
  void validate() const;
};

struct SequentialSolution {
  StateTable table;
  std::vector<TrainReport> reports;
  /// boundary_states[k] is the state at boundaries[k] (initial values for segment k).
  std::vector<std::vector<double>> boundary_states;
};

/// A segment diverged; the solution up to the previous segment is attached.
class SegmentDiverged : public TrainingDiverged {
 public:
  SegmentDiverged(const std::string& what, std::size_t epoch, std::size_t segment,
                  std::shared_ptr<const SequentialSolution> partial)
      : TrainingDiverged(what, epoch), segment_(segment), partial_(std::move(partial)) {}

  [[nodiscard]] std::size_t segment() const noexcept { return segment_; }
  [[nodiscard]] const SequentialSolution& partial() const noexcept { return *partial_; }

 private:
  std::size_t segment_;
  std::shared_ptr<const SequentialSolution> partial_;
};

using SegmentCallback = std::function<void(std::size_t index, const SegmentSolution&)>;

/// Train the segments in order, feeding each segment's end state to the next.
[[nodiscard]] SequentialSolution solve_sequential(const Problem& problem, const SegmentPlan& plan,
                                                  const SegmentCallback& on_segment = {});

}  // namespace rpinn
