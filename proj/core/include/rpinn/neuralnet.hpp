#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace rpinn {

enum class Activation { ReLU, Tanh };

[[nodiscard]] Activation parse_activation(std::string_view name);
[[nodiscard]] std::string_view to_string(Activation activation);

/// Scalar-in, scalar-out fully connected network: hidden layers apply
/// sigma(W a + b), the output layer is affine.
class Mlp {
 public:
  /// All parameters zero. `layer_sizes` must start and end with 1.
  Mlp(std::vector<std::size_t> layer_sizes, Activation activation);

  /// He-style init: weights ~ N(0, 2/fan_in), biases zero, deterministic in `seed`.
  [[nodiscard]] static Mlp he_initialized(std::vector<std::size_t> layer_sizes, Activation activation,
                                          std::uint64_t seed);

  /// {1, hidden..., 1}
  [[nodiscard]] static std::vector<std::size_t> layer_sizes_for(std::span<const std::size_t> hidden);

  [[nodiscard]] const std::vector<std::size_t>& layer_sizes() const noexcept { return layer_sizes_; }
  [[nodiscard]] Activation activation() const noexcept { return activation_; }
  /// Number of affine maps (hidden layers + output layer).
  [[nodiscard]] std::size_t layer_count() const noexcept { return weights_.size(); }
  [[nodiscard]] std::size_t parameter_count() const noexcept;

  [[nodiscard]] Eigen::MatrixXd& weight(std::size_t layer) { return weights_.at(layer); }
  [[nodiscard]] const Eigen::MatrixXd& weight(std::size_t layer) const { return weights_.at(layer); }
  [[nodiscard]] Eigen::VectorXd& bias(std::size_t layer) { return biases_.at(layer); }
  [[nodiscard]] const Eigen::VectorXd& bias(std::size_t layer) const { return biases_.at(layer); }

  [[nodiscard]] bool all_finite() const;

  /// Throws EvaluationError if any parameter is non-finite.
  [[nodiscard]] std::vector<double> forward_batch(std::span<const double> xs) const;
  [[nodiscard]] double forward(double x) const;

  /// Parameters flattened layer by layer: W (row-major) then b.
  [[nodiscard]] std::vector<double> flatten() const;
  void assign(std::span<const double> flat);

 private:
  std::vector<std::size_t> layer_sizes_;
  Activation activation_;
  std::vector<Eigen::MatrixXd> weights_;
  std::vector<Eigen::VectorXd> biases_;
};

/// dL/dtheta with the same shapes as an Mlp's parameters.
struct Gradient {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;

  [[nodiscard]] static Gradient zeros_like(const Mlp& net);
  void set_zero();
  [[nodiscard]] bool shape_matches(const Mlp& net) const;
  [[nodiscard]] bool all_finite() const;
  [[nodiscard]] std::vector<double> flatten() const;
  Gradient& operator+=(const Gradient& other);
};

/// Batched forward pass that keeps pre-activations for a reverse sweep.
/// Buffers are reused across calls, so one tape per network avoids
/// allocation inside a training loop.
class ForwardTape {
 public:
  void run(const Mlp& net, std::span<const double> xs);

  [[nodiscard]] std::span<const double> outputs() const noexcept;

  /// Accumulates sum_j upstream[j] * dv(x_j)/dtheta into `grad` (overwrites it).
  void backward(std::span<const double> upstream, Gradient& grad) const;

 private:
  const Mlp* net_ = nullptr;
  std::vector<Eigen::MatrixXd> pre_;  // pre-activations per affine layer
  std::vector<Eigen::MatrixXd> act_;  // act_[0] is the input row
  Eigen::RowVectorXd out_;
};

/// Forward pass carrying the input tangent dv/dx alongside v (forward-mode in x),
/// with a reverse sweep for losses that depend on both.
class TangentTape {
 public:
  void run(const Mlp& net, std::span<const double> xs);

  [[nodiscard]] std::span<const double> outputs() const noexcept;
  [[nodiscard]] std::span<const double> input_derivatives() const noexcept;

  /// Gradient of sum_j (g_value[j] * v(x_j) + g_deriv[j] * v'(x_j)) w.r.t. theta.
  void backward(std::span<const double> g_value, std::span<const double> g_deriv, Gradient& grad) const;

 private:
  const Mlp* net_ = nullptr;
  std::vector<Eigen::MatrixXd> pre_;
  std::vector<Eigen::MatrixXd> dpre_;  // tangent of pre-activations
  std::vector<Eigen::MatrixXd> act_;
  std::vector<Eigen::MatrixXd> dact_;
  Eigen::RowVectorXd out_;
  Eigen::RowVectorXd dout_;
};

/// Sum over the batch of upstream[j] * dv(x_j)/dtheta.
[[nodiscard]] Gradient grad_loss(const Mlp& net, std::span<const double> loss_grad_at_outputs,
                                 std::span<const double> xs);

struct AdamSettings {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void validate() const;
};

struct AdamState {
  Gradient first_moment;
  Gradient second_moment;
  std::uint64_t step_count = 0;
  AdamSettings settings;

  [[nodiscard]] static AdamState for_network(const Mlp& net, const AdamSettings& settings = {});
};

/// One bias-corrected Adam update of `net` in place.
void adam_step(Mlp& net, const Gradient& grad, AdamState& state);

/// Text checkpoint: header, activation, layer sizes, then parameters in
/// flatten() order with 17 significant digits.
void save_checkpoint(const Mlp& net, std::ostream& os);
[[nodiscard]] Mlp load_checkpoint(std::istream& is);

}  // namespace rpinn
