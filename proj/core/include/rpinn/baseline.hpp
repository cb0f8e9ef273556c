#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "rpinn/neuralnet.hpp"
#include "rpinn/ode_model.hpp"
#include "rpinn/quadrature.hpp"
#include "rpinn/trainer.hpp"

namespace rpinn {

/// Strong-form PINN: networks model u directly and the loss is the mean squared
/// ODE residual plus weighted initial-condition penalties.
struct ClassicalPinnConfig {
  std::vector<double> ic_weights;  // alpha_i; empty means 1.0 for every species
  std::size_t collocation_count = 101;
  std::size_t epochs = 20000;
  AdamSettings optimizer;
  double loss_tolerance = 1e-10;
  std::uint64_t seed = 0;
  std::vector<std::size_t> hidden_layers{50, 50, 50, 50};
  Activation activation = Activation::Tanh;
  bool normalize_input = false;

  void validate() const;
  [[nodiscard]] std::vector<double> weights_for(std::size_t species) const;
};

/// dv/dx by forward propagation of the input tangent.
[[nodiscard]] double input_derivative(const Mlp& net, double x);

/// Loss from sampled u and u' on the grid; u[i][0] is taken as u_i(a).
/// `du_grad`/`u_grad`, when non-null, receive dL/du' and dL/du per node.
double classical_loss_from_samples(const GridValues& u, const GridValues& du, const FirstOrderSystem& sys,
                                   const UniformGrid& grid, std::span<const double> ic_weights,
                                   GridValues* u_grad = nullptr, GridValues* du_grad = nullptr);

/// Loss with networks; derivatives come from forward-mode tangents.
[[nodiscard]] double classical_loss(std::span<const Mlp> nets, const FirstOrderSystem& sys, const UniformGrid& grid,
                                    std::span<const double> ic_weights, InputMap map = {});

struct ClassicalSolution {
  std::vector<Mlp> nets;
  InputMap input;
  TrainReport report;
  StateTable table;  // u from the networks, derivs = du/dx
  std::vector<double> end_state;
};

/// `sys` is restricted to `segment` with `ics` before training.
[[nodiscard]] ClassicalSolution train_classical(const FirstOrderSystem& sys, Interval segment,
                                                std::span<const double> ics, const ClassicalPinnConfig& cfg);

/// Segment-by-segment classical training, passing u(end) forward as the next initial value.
[[nodiscard]] SequentialSolution solve_classical_sequential(const FirstOrderSystem& sys,
                                                            const std::vector<double>& boundaries,
                                                            const ClassicalPinnConfig& cfg);

}  // namespace rpinn
