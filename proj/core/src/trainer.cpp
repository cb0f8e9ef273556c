#include "rpinn/trainer.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

namespace rpinn {

namespace {

using Eigen::Index;

constexpr std::size_t kSimpsonTransferSpacings = 10;

Index idx(std::size_t i) { return static_cast<Index>(i); }

GridValues zeros_like(const GridValues& v) {
  GridValues out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i].assign(v[i].size(), 0.0);
  return out;
}

class VolterraObjective final : public SegmentObjective {
 public:
  VolterraObjective(const VolterraForm& form, const UniformGrid& grid)
      : SegmentObjective(grid), discrete_(discretize(form, grid)) {}

  [[nodiscard]] std::size_t term_count() const noexcept override { return 1; }

  [[nodiscard]] GridValues residuals(const GridValues& v) const override {
    check_shape(v);
    const Eigen::VectorXd r = compute(v);
    return {std::vector<double>(r.data(), r.data() + r.size())};
  }

  double term_loss_and_gradient(std::size_t term, const GridValues& v, GridValues& dv) const override {
    if (term != 0) throw ArgumentError("Volterra objective has a single term");
    check_shape(v);
    const Eigen::VectorXd r = compute(v);
    const double n = static_cast<double>(r.size());
    const Eigen::VectorXd g = (2.0 / n) * (discrete_.op.transpose() * r);
    dv.assign(1, std::vector<double>(g.data(), g.data() + g.size()));
    return r.squaredNorm() / n;
  }

 private:
  [[nodiscard]] Eigen::VectorXd compute(const GridValues& v) const {
    const Eigen::Map<const Eigen::VectorXd> vv(v[0].data(), idx(v[0].size()));
    return discrete_.op * vv - discrete_.rhs;
  }

  DiscreteVolterra discrete_;
};

class SystemObjective final : public SegmentObjective {
 public:
  SystemObjective(const FirstOrderSystem& system, const UniformGrid& grid)
      : SegmentObjective(grid), system_(system), nodes_(grid.nodes()) {}

  [[nodiscard]] std::size_t term_count() const noexcept override { return system_.dim(); }

  [[nodiscard]] GridValues residuals(const GridValues& v) const override {
    check_shape(v);
    GridValues r;
    evaluate(v, r, nullptr);
    return r;
  }

  double term_loss_and_gradient(std::size_t term, const GridValues& v, GridValues& dv) const override {
    if (term >= system_.dim()) throw ArgumentError("residual term index out of range");
    check_shape(v);
    GridValues r;
    std::vector<double> jac;
    evaluate(v, r, &jac);
    return accumulate(r, jac, term, term + 1, dv);
  }

  double loss_and_gradient(const GridValues& v, GridValues& dv) const override {
    check_shape(v);
    GridValues r;
    std::vector<double> jac;
    evaluate(v, r, &jac);
    return accumulate(r, jac, 0, system_.dim(), dv);
  }

 private:
  // Residuals R_i(x_j) = v_i(x_j) - q_i(u(x_j), x_j) with u from prefix trapezoid
  // integrals; optionally the per-node Jacobians (row-major, node-major).
  void evaluate(const GridValues& v, GridValues& r, std::vector<double>* jac) const {
    const std::size_t dim = system_.dim();
    const std::size_t n = nodes_.size();
    const double dx = grid().spacing();
    const auto& mu = system_.init_values();
    std::vector<std::vector<double>> prefix(dim);
    for (std::size_t i = 0; i < dim; ++i) prefix[i] = cumulative_trapezoid(v[i], dx);
    r.assign(dim, std::vector<double>(n));
    if (jac) jac->assign(n * dim * dim, 0.0);
    std::vector<double> u(dim), q(dim);
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t i = 0; i < dim; ++i) u[i] = mu[i] + prefix[i][j];
      system_.rhs_into(u, nodes_[j], q);
      for (std::size_t i = 0; i < dim; ++i) r[i][j] = v[i][j] - q[i];
      if (jac) system_.jacobian_into(u, nodes_[j], std::span<double>(jac->data() + j * dim * dim, dim * dim));
    }
  }

  // Loss of terms [first, last) and its gradient. dR_i(x_j)/dv_k(x_m) =
  // delta_ik delta_jm - J_j(i,k) w_jm, where w are the prefix trapezoid weights.
  double accumulate(const GridValues& r, const std::vector<double>& jac, std::size_t first, std::size_t last,
                    GridValues& dv) const {
    const std::size_t dim = system_.dim();
    const std::size_t n = nodes_.size();
    const double scale = 2.0 / static_cast<double>(n);
    double total = 0.0;
    dv.assign(dim, std::vector<double>(n, 0.0));
    std::vector<double> through_u(n);
    for (std::size_t i = first; i < last; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        total += r[i][j] * r[i][j];
        dv[i][j] += scale * r[i][j];
      }
    }
    for (std::size_t k = 0; k < dim; ++k) {
      bool any = false;
      for (std::size_t j = 0; j < n; ++j) {
        double s = 0.0;
        for (std::size_t i = first; i < last; ++i) s += r[i][j] * jac[j * dim * dim + i * dim + k];
        through_u[j] = -scale * s;
        any = any || s != 0.0;
      }
      if (!any) continue;
      const auto back = cumulative_trapezoid_adjoint(through_u, grid().spacing());
      for (std::size_t m = 0; m < n; ++m) dv[k][m] += back[m];
    }
    return total / static_cast<double>(n);
  }

  FirstOrderSystem system_;
  std::vector<double> nodes_;
};

// sum_{i<=p} mu^(n-i-1) (x-a)^(p-i)/(p-i)!
double taylor_part(const VolterraForm& form, std::size_t p, double x) {
  const auto& mu = form.init_values();
  const std::size_t n = form.source_order();
  double out = 0.0;
  for (std::size_t i = 0; i <= p; ++i) out += mu[n - i - 1] * form.scaled_power(x - form.domain().a, p - i);
  return out;
}

bool use_simpson(TransferRule rule, const UniformGrid& grid) {
  switch (rule) {
    case TransferRule::Simpson:
      return true;
    case TransferRule::Trapezoid:
      return false;
    case TransferRule::Auto:
      break;
  }
  return grid.end() - grid.start() < static_cast<double>(kSimpsonTransferSpacings) * grid.spacing();
}

}  // namespace

std::size_t network_count(const Problem& problem) {
  return std::visit(
      [](const auto& p) -> std::size_t {
        if constexpr (std::is_same_v<std::decay_t<decltype(p)>, LinearIVP>) {
          return 1;
        } else {
          return p.dim();
        }
      },
      problem);
}

std::size_t initial_value_count(const Problem& problem) {
  return problem_initial_values(problem).size();
}

const Interval& problem_domain(const Problem& problem) {
  return std::visit([](const auto& p) -> const Interval& { return p.domain(); }, problem);
}

const std::vector<double>& problem_initial_values(const Problem& problem) {
  return std::visit([](const auto& p) -> const std::vector<double>& { return p.init_values(); }, problem);
}

Problem restrict_problem(const Problem& problem, Interval segment, std::vector<double> ics) {
  return std::visit([&](const auto& p) -> Problem { return p.restricted(segment, std::move(ics)); }, problem);
}

TransferRule parse_transfer_rule(std::string_view name) {
  if (name == "auto") return TransferRule::Auto;
  if (name == "trapezoid") return TransferRule::Trapezoid;
  if (name == "simpson") return TransferRule::Simpson;
  throw ConfigError("unknown quadrature '" + std::string(name) + "' (expected auto, trapezoid or simpson)");
}

std::string_view to_string(TransferRule rule) {
  switch (rule) {
    case TransferRule::Trapezoid:
      return "trapezoid";
    case TransferRule::Simpson:
      return "simpson";
    case TransferRule::Auto:
      break;
  }
  return "auto";
}

void TrainConfig::validate() const {
  if (collocation_count < 2) throw ConfigError("collocation_count must be at least 2");
  if (epochs < 1) throw ConfigError("epochs must be at least 1");
  if (hidden_layers.empty()) throw ConfigError("at least one hidden layer is required");
  for (auto w : hidden_layers) {
    if (w == 0) throw ConfigError("hidden layer width must be positive");
  }
  if (std::isnan(loss_tolerance)) throw ConfigError("loss tolerance must be a number");
  optimizer.validate();
}

InputMap InputMap::for_segment(Interval segment, bool normalize) {
  if (!normalize) return {};
  return {segment.a, 1.0 / segment.length()};
}

ScalarFn as_function(const Mlp& net, InputMap map) {
  auto shared = std::make_shared<const Mlp>(net);
  return [shared, map](double x) { return shared->forward(map(x)); };
}

double SegmentObjective::loss_and_gradient(const GridValues& v, GridValues& dv) const {
  double total = 0.0;
  GridValues part;
  dv = zeros_like(v);
  for (std::size_t t = 0; t < term_count(); ++t) {
    total += term_loss_and_gradient(t, v, part);
    for (std::size_t i = 0; i < dv.size(); ++i) {
      for (std::size_t j = 0; j < dv[i].size(); ++j) dv[i][j] += part[i][j];
    }
  }
  return total;
}

double SegmentObjective::loss(const GridValues& v) const {
  const auto r = residuals(v);
  double total = 0.0;
  for (const auto& row : r) {
    double s = 0.0;
    for (double x : row) s += x * x;
    total += s / static_cast<double>(row.size());
  }
  return total;
}

void SegmentObjective::check_shape(const GridValues& v) const {
  if (v.size() != term_count()) {
    throw ArgumentError("expected " + std::to_string(term_count()) + " state variables, got " +
                        std::to_string(v.size()));
  }
  for (const auto& row : v) {
    if (row.size() != grid_.count()) throw ArgumentError("grid values do not match the collocation grid");
  }
}

std::unique_ptr<SegmentObjective> make_objective(const Problem& segment_problem, const UniformGrid& grid) {
  if (const auto* ivp = std::get_if<LinearIVP>(&segment_problem)) {
    return std::make_unique<VolterraObjective>(build_volterra(*ivp), grid);
  }
  return std::make_unique<SystemObjective>(std::get<FirstOrderSystem>(segment_problem), grid);
}

double loss(std::span<const Mlp> nets, const SegmentObjective& objective, InputMap map) {
  if (nets.size() != objective.term_count()) throw ArgumentError("one network per state variable is required");
  auto inputs = objective.grid().nodes();
  for (auto& x : inputs) x = map(x);
  GridValues v;
  for (const auto& net : nets) v.push_back(net.forward_batch(inputs));
  return objective.loss(v);
}

double loss(std::span<const ScalarFn> fns, const SegmentObjective& objective) {
  if (fns.size() != objective.term_count()) throw ArgumentError("one function per state variable is required");
  const auto nodes = objective.grid().nodes();
  GridValues v(fns.size(), std::vector<double>(nodes.size()));
  for (std::size_t i = 0; i < fns.size(); ++i) {
    for (std::size_t j = 0; j < nodes.size(); ++j) v[i][j] = fns[i](nodes[j]);
  }
  return objective.loss(v);
}

std::vector<double> TrainReport::normalized_history() const {
  std::vector<double> out(loss_history.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = initial_loss > 0.0 ? loss_history[i] / initial_loss : loss_history[i];
  }
  return out;
}

double TrainReport::normalized_final_loss() const {
  return initial_loss > 0.0 ? final_loss / initial_loss : final_loss;
}

std::vector<double> higher_order_ic_transfer(const ScalarFn& v, const VolterraForm& form, double at,
                                             const QuadratureRule& quad) {
  std::vector<double> out(form.source_order());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = reconstruct(form, v, k, at, quad);
  return out;
}

std::vector<double> higher_order_ic_transfer(const Mlp& net, InputMap map, const VolterraForm& form, double at,
                                             const QuadratureRule& quad) {
  return higher_order_ic_transfer(as_function(net, map), form, at, quad);
}

SegmentSolution train_segment(const Problem& problem, Interval segment, std::span<const double> ics,
                              const TrainConfig& cfg) {
  cfg.validate();
  if (!(segment.b > segment.a)) throw ArgumentError("segment must satisfy start < end");
  if (ics.size() != initial_value_count(problem)) {
    throw ArgumentError("expected " + std::to_string(initial_value_count(problem)) + " initial values, got " +
                        std::to_string(ics.size()));
  }
  const auto started = std::chrono::steady_clock::now();
  const Problem local = restrict_problem(problem, segment, {ics.begin(), ics.end()});
  const UniformGrid grid(segment.a, segment.b, cfg.collocation_count);
  const auto objective = make_objective(local, grid);
  const InputMap map = InputMap::for_segment(segment, cfg.normalize_input);
  auto inputs = grid.nodes();
  for (auto& x : inputs) x = map(x);

  const std::size_t species = network_count(problem);
  const auto sizes = Mlp::layer_sizes_for(cfg.hidden_layers);
  std::vector<Mlp> nets(species, Mlp::he_initialized(sizes, cfg.activation, cfg.seed));
  std::vector<Mlp> best = nets;
  std::vector<AdamState> optim;
  for (const auto& net : nets) optim.push_back(AdamState::for_network(net, cfg.optimizer));
  std::vector<ForwardTape> tapes(species);
  std::vector<Gradient> grads;
  for (const auto& net : nets) grads.push_back(Gradient::zeros_like(net));

  SegmentSolution out;
  TrainReport& report = out.report;
  report.segment = segment;
  report.start_state.assign(ics.begin(), ics.end());
  report.loss_history.reserve(cfg.epochs);

  GridValues v(species), dv;
  double best_loss = std::numeric_limits<double>::infinity();
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = 0; i < species; ++i) {
      tapes[i].run(nets[i], inputs);
      const auto o = tapes[i].outputs();
      v[i].assign(o.begin(), o.end());
    }
    const double value = objective->loss_and_gradient(v, dv);
    if (!std::isfinite(value)) {
      throw TrainingDiverged("loss became non-finite at epoch " + std::to_string(epoch), epoch);
    }
    if (epoch == 0) report.initial_loss = value;
    report.loss_history.push_back(value);
    if (value < best_loss) {
      best_loss = value;
      best = nets;
      report.best_epoch = epoch;
    }
    if (value < cfg.loss_tolerance) {
      report.early_stopped = true;
      break;
    }
    for (std::size_t i = 0; i < species; ++i) {
      tapes[i].backward(dv[i], grads[i]);
      adam_step(nets[i], grads[i], optim[i]);
    }
  }
  report.final_loss = best_loss;

  // Reconstruction from the best parameters.
  GridValues vb(species);
  for (std::size_t i = 0; i < species; ++i) vb[i] = best[i].forward_batch(inputs);
  const auto nodes = grid.nodes();
  const std::size_t n = nodes.size();
  StateTable& table = out.table;
  table.grid = nodes;
  table.values.assign(n, std::vector<double>(species));
  table.derivs = std::vector<std::vector<double>>(n, std::vector<double>(species));
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < species; ++i) (*table.derivs)[j][i] = vb[i][j];
  }
  const bool simpson = use_simpson(cfg.transfer, grid);
  const QuadratureRule simpson_rule{QuadratureKind::Simpson, 3};

  if (const auto* ivp = std::get_if<LinearIVP>(&local)) {
    const VolterraForm form = build_volterra(*ivp);
    const std::size_t order = form.source_order();
    const Eigen::Map<const Eigen::VectorXd> vv(vb[0].data(), idx(n));
    out.end_state.resize(order);
    for (std::size_t k = 0; k < order; ++k) {
      const std::size_t p = order - k - 1;
      const Eigen::VectorXd integral = prefix_moment_operator(grid, p) * vv;
      if (k == 0) {
        for (std::size_t j = 0; j < n; ++j) table.values[j][0] = integral(idx(j)) + taylor_part(form, p, nodes[j]);
      }
      out.end_state[k] = integral(idx(n - 1)) + taylor_part(form, p, segment.b);
    }
    if (simpson) out.end_state = higher_order_ic_transfer(best[0], map, form, segment.b, simpson_rule);
  } else {
    const auto& mu = problem_initial_values(local);
    out.end_state.resize(species);
    for (std::size_t i = 0; i < species; ++i) {
      const auto prefix = cumulative_trapezoid(vb[i], grid.spacing());
      for (std::size_t j = 0; j < n; ++j) table.values[j][i] = mu[i] + prefix[j];
      out.end_state[i] = table.values[n - 1][i];
      if (simpson) {
        const SystemIntegralForm sif(std::get<FirstOrderSystem>(local));
        out.end_state[i] = reconstruct(sif, i, as_function(best[i], map), 0, segment.b, simpson_rule);
      }
    }
  }
  for (std::size_t i = 0; i < species; ++i) table.values[n - 1][i] = out.end_state[i];

  report.end_state = out.end_state;
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  out.nets = std::move(best);
  out.input = map;
  return out;
}

SegmentPlan SegmentPlan::uniform(Interval span, std::size_t segments, TrainConfig cfg) {
  if (segments < 1) throw ConfigError("a plan needs at least one segment");
  SegmentPlan plan;
  plan.per_segment = std::move(cfg);
  plan.boundaries.resize(segments + 1);
  const double width = (span.b - span.a) / static_cast<double>(segments);
  for (std::size_t k = 0; k < segments; ++k) plan.boundaries[k] = span.a + static_cast<double>(k) * width;
  plan.boundaries.back() = span.b;
  plan.validate();
  return plan;
}

SegmentPlan SegmentPlan::logarithmic(Interval span, std::size_t segments, TrainConfig cfg) {
  if (segments < 1) throw ConfigError("a plan needs at least one segment");
  if (!(span.a > 0.0)) throw ConfigError("logarithmic spacing needs a positive start");
  SegmentPlan plan;
  plan.per_segment = std::move(cfg);
  plan.boundaries.resize(segments + 1);
  const double la = std::log10(span.a);
  const double lb = std::log10(span.b);
  plan.boundaries.front() = span.a;
  for (std::size_t k = 1; k < segments; ++k) {
    plan.boundaries[k] = std::pow(10.0, la + (lb - la) * static_cast<double>(k) / static_cast<double>(segments));
  }
  plan.boundaries.back() = span.b;
  plan.validate();
  return plan;
}

Interval SegmentPlan::segment(std::size_t i) const {
  if (i >= segment_count()) throw ArgumentError("segment index out of range");
  return {boundaries[i], boundaries[i + 1]};
}

SegmentPlan SegmentPlan::truncated(std::size_t count) const {
  if (count < 1 || count > segment_count()) throw ConfigError("cannot truncate plan to that many segments");
  SegmentPlan out{std::vector<double>(boundaries.begin(), boundaries.begin() + static_cast<std::ptrdiff_t>(count + 1)),
                  per_segment};
  return out;
}

void SegmentPlan::validate() const {
  if (boundaries.size() < 2) throw ConfigError("a plan needs at least two boundaries");
  for (std::size_t k = 0; k < boundaries.size(); ++k) {
    if (!std::isfinite(boundaries[k])) throw ConfigError("plan boundaries must be finite");
    if (k > 0 && !(boundaries[k] > boundaries[k - 1])) {
      throw ConfigError("plan boundaries must be strictly increasing");
    }
  }
  per_segment.validate();
}

SequentialSolution solve_sequential(const Problem& problem, const SegmentPlan& plan,
                                    const SegmentCallback& on_segment) {
  plan.validate();
  const Interval& domain = problem_domain(problem);
  if (plan.boundaries.front() != domain.a) throw ConfigError("plan must start at the problem's initial time");
  if (plan.boundaries.back() > domain.b) throw ConfigError("plan extends past the problem domain");

  SequentialSolution out;
  out.table.derivs.emplace();
  std::vector<double> ics = problem_initial_values(problem);
  for (std::size_t k = 0; k < plan.segment_count(); ++k) {
    SegmentSolution seg;
    try {
      seg = train_segment(problem, plan.segment(k), ics, plan.per_segment);
    } catch (const TrainingDiverged& e) {
      throw SegmentDiverged("segment " + std::to_string(k) + " diverged: " + e.what(), e.epoch(), k,
                            std::make_shared<const SequentialSolution>(out));
    }
    const std::size_t skip = k == 0 ? 0 : 1;  // boundary row already present from the previous segment
    for (std::size_t j = skip; j < seg.table.size(); ++j) {
      out.table.grid.push_back(seg.table.grid[j]);
      out.table.values.push_back(seg.table.values[j]);
      out.table.derivs->push_back((*seg.table.derivs)[j]);
    }
    out.boundary_states.push_back(ics);
    ics = seg.end_state;
    out.reports.push_back(seg.report);
    if (on_segment) on_segment(k, seg);
  }
  out.boundary_states.push_back(ics);
  return out;
}

}  // namespace rpinn
