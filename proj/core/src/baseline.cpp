#include "rpinn/baseline.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <string>

#include "rpinn/errors.hpp"

namespace rpinn {

void ClassicalPinnConfig::validate() const {
  if (collocation_count < 2) throw ConfigError("collocation_count must be at least 2");
  if (epochs < 1) throw ConfigError("epochs must be at least 1");
  if (hidden_layers.empty()) throw ConfigError("at least one hidden layer is required");
  for (double a : ic_weights) {
    if (!(a >= 0.0)) throw ConfigError("initial-condition weights must be non-negative");
  }
  optimizer.validate();
}

std::vector<double> ClassicalPinnConfig::weights_for(std::size_t species) const {
  if (ic_weights.empty()) return std::vector<double>(species, 1.0);
  if (ic_weights.size() != species) throw ArgumentError("one initial-condition weight per species is required");
  return ic_weights;
}

double input_derivative(const Mlp& net, double x) {
  TangentTape tape;
  tape.run(net, std::span<const double>(&x, 1));
  return tape.input_derivatives().front();
}

double classical_loss_from_samples(const GridValues& u, const GridValues& du, const FirstOrderSystem& sys,
                                   const UniformGrid& grid, std::span<const double> ic_weights, GridValues* u_grad,
                                   GridValues* du_grad) {
  const std::size_t dim = sys.dim();
  const std::size_t n = grid.count();
  if (u.size() != dim || du.size() != dim || ic_weights.size() != dim) {
    throw ArgumentError("classical loss needs one network and one weight per species");
  }
  for (std::size_t i = 0; i < dim; ++i) {
    if (u[i].size() != n || du[i].size() != n) throw ArgumentError("samples do not match the collocation grid");
  }
  const auto nodes = grid.nodes();
  const double scale = 2.0 / static_cast<double>(n);
  const bool want_grad = u_grad != nullptr && du_grad != nullptr;
  if (want_grad) {
    u_grad->assign(dim, std::vector<double>(n, 0.0));
    du_grad->assign(dim, std::vector<double>(n, 0.0));
  }
  std::vector<double> state(dim), q(dim), jac(dim * dim);
  double ode = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < dim; ++i) state[i] = u[i][j];
    sys.rhs_into(state, nodes[j], q);
    if (want_grad) sys.jacobian_into(state, nodes[j], jac);
    for (std::size_t i = 0; i < dim; ++i) {
      const double r = du[i][j] - q[i];
      ode += r * r;
      if (want_grad) {
        (*du_grad)[i][j] += scale * r;
        for (std::size_t k = 0; k < dim; ++k) (*u_grad)[k][j] -= scale * r * jac[i * dim + k];
      }
    }
  }
  double total = ode / static_cast<double>(n);
  const auto& mu = sys.init_values();
  for (std::size_t i = 0; i < dim; ++i) {
    const double e = u[i][0] - mu[i];
    total += ic_weights[i] * e * e;
    if (want_grad) (*u_grad)[i][0] += 2.0 * ic_weights[i] * e;
  }
  return total;
}

double classical_loss(std::span<const Mlp> nets, const FirstOrderSystem& sys, const UniformGrid& grid,
                      std::span<const double> ic_weights, InputMap map) {
  if (nets.size() != sys.dim()) throw ArgumentError("one network per species is required");
  auto inputs = grid.nodes();
  for (auto& x : inputs) x = map(x);
  GridValues u, du;
  TangentTape tape;
  for (const auto& net : nets) {
    tape.run(net, inputs);
    u.emplace_back(tape.outputs().begin(), tape.outputs().end());
    std::vector<double> d(tape.input_derivatives().begin(), tape.input_derivatives().end());
    for (auto& x : d) x *= map.scale;
    du.push_back(std::move(d));
  }
  return classical_loss_from_samples(u, du, sys, grid, ic_weights);
}

ClassicalSolution train_classical(const FirstOrderSystem& sys, Interval segment, std::span<const double> ics,
                                  const ClassicalPinnConfig& cfg) {
  cfg.validate();
  if (!(segment.b > segment.a)) throw ArgumentError("segment must satisfy start < end");
  if (ics.size() != sys.dim()) throw ArgumentError("initial values must match the system dimension");
  const auto started = std::chrono::steady_clock::now();
  const FirstOrderSystem local = sys.restricted(segment, {ics.begin(), ics.end()});
  const UniformGrid grid(segment.a, segment.b, cfg.collocation_count);
  const InputMap map = InputMap::for_segment(segment, cfg.normalize_input);
  auto inputs = grid.nodes();
  for (auto& x : inputs) x = map(x);
  const std::size_t species = sys.dim();
  const auto weights = cfg.weights_for(species);

  const auto sizes = Mlp::layer_sizes_for(cfg.hidden_layers);
  std::vector<Mlp> nets(species, Mlp::he_initialized(sizes, cfg.activation, cfg.seed));
  std::vector<Mlp> best = nets;
  std::vector<AdamState> optim;
  for (const auto& net : nets) optim.push_back(AdamState::for_network(net, cfg.optimizer));
  std::vector<TangentTape> tapes(species);
  std::vector<Gradient> grads;
  for (const auto& net : nets) grads.push_back(Gradient::zeros_like(net));

  ClassicalSolution out;
  TrainReport& report = out.report;
  report.segment = segment;
  report.start_state.assign(ics.begin(), ics.end());
  GridValues u(species), du(species), gu, gdu;
  double best_loss = std::numeric_limits<double>::infinity();
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = 0; i < species; ++i) {
      tapes[i].run(nets[i], inputs);
      u[i].assign(tapes[i].outputs().begin(), tapes[i].outputs().end());
      du[i].assign(tapes[i].input_derivatives().begin(), tapes[i].input_derivatives().end());
      for (auto& d : du[i]) d *= map.scale;
    }
    const double value = classical_loss_from_samples(u, du, local, grid, weights, &gu, &gdu);
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
      for (auto& g : gdu[i]) g *= map.scale;
      tapes[i].backward(gu[i], gdu[i], grads[i]);
      adam_step(nets[i], grads[i], optim[i]);
    }
  }
  report.final_loss = best_loss;

  const auto nodes = grid.nodes();
  out.table.grid = nodes;
  out.table.values.assign(nodes.size(), std::vector<double>(species));
  out.table.derivs = std::vector<std::vector<double>>(nodes.size(), std::vector<double>(species));
  TangentTape tape;
  for (std::size_t i = 0; i < species; ++i) {
    tape.run(best[i], inputs);
    for (std::size_t j = 0; j < nodes.size(); ++j) {
      out.table.values[j][i] = tape.outputs()[j];
      (*out.table.derivs)[j][i] = tape.input_derivatives()[j] * map.scale;
    }
  }
  out.end_state = out.table.values.back();
  report.end_state = out.end_state;
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  out.nets = std::move(best);
  out.input = map;
  return out;
}

SequentialSolution solve_classical_sequential(const FirstOrderSystem& sys, const std::vector<double>& boundaries,
                                              const ClassicalPinnConfig& cfg) {
  if (boundaries.size() < 2) throw ConfigError("a plan needs at least two boundaries");
  if (boundaries.front() != sys.domain().a) throw ConfigError("plan must start at the problem's initial time");
  SequentialSolution out;
  out.table.derivs.emplace();
  std::vector<double> ics = sys.init_values();
  for (std::size_t k = 0; k + 1 < boundaries.size(); ++k) {
    ClassicalSolution seg;
    try {
      seg = train_classical(sys, {boundaries[k], boundaries[k + 1]}, ics, cfg);
    } catch (const TrainingDiverged& e) {
      throw SegmentDiverged("segment " + std::to_string(k) + " diverged: " + e.what(), e.epoch(), k,
                            std::make_shared<const SequentialSolution>(out));
    }
    const std::size_t skip = k == 0 ? 0 : 1;
    for (std::size_t j = skip; j < seg.table.size(); ++j) {
      out.table.grid.push_back(seg.table.grid[j]);
      out.table.values.push_back(seg.table.values[j]);
      out.table.derivs->push_back((*seg.table.derivs)[j]);
    }
    out.boundary_states.push_back(ics);
    ics = seg.end_state;
    out.reports.push_back(seg.report);
  }
  out.boundary_states.push_back(ics);
  return out;
}

}  // namespace rpinn
