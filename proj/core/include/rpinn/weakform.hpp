#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "rpinn/ode_model.hpp"
#include "rpinn/quadrature.hpp"

namespace rpinn {

/// Second-kind Volterra equation v(x) + int_a^x psi(x,t) v(t) dt = g(x) obtained
/// from an order-n linear IVP by substituting v = u^(n). The initial values are
/// absorbed into g, so no separate initial-condition term is needed.
class VolterraForm {
 public:
  explicit VolterraForm(LinearIVP source);

  /// psi(x,t) = sum_{j<n} lambda_{n-j}(x) (x-t)^{n-j-1} / (n-j-1)!
  [[nodiscard]] double kernel(double x, double t) const;
  /// g(x) = f(x) - sum_j sum_{i<n-j} mu^(n-i-1) lambda_{n-j}(x) (x-a)^{n-j-i-1} / (n-j-i-1)!
  [[nodiscard]] double forcing(double x) const;

  [[nodiscard]] const Interval& domain() const noexcept { return source_.domain(); }
  [[nodiscard]] std::size_t source_order() const noexcept { return source_.order(); }
  [[nodiscard]] const LinearIVP& source() const noexcept { return source_; }
  [[nodiscard]] const std::vector<double>& init_values() const noexcept { return source_.init_values(); }

  /// h^p / p! with 0^0 = 1.
  [[nodiscard]] double scaled_power(double h, std::size_t p) const;

 private:
  LinearIVP source_;
  std::vector<double> inv_factorial_;  // 1/k! for k = 0..n
};

[[nodiscard]] VolterraForm build_volterra(const LinearIVP& ivp);

/// First-order system rewritten with v_i = u_i' and u_i(x) = mu_i + int_a^x v_i.
class SystemIntegralForm {
 public:
  explicit SystemIntegralForm(FirstOrderSystem system) : system_(std::move(system)) {}

  [[nodiscard]] const FirstOrderSystem& system() const noexcept { return system_; }
  [[nodiscard]] double lower_limit() const noexcept { return system_.domain().a; }
  [[nodiscard]] const std::vector<double>& init_values() const noexcept { return system_.init_values(); }
  [[nodiscard]] std::size_t dim() const noexcept { return system_.dim(); }

 private:
  FirstOrderSystem system_;
};

/// R(x) = v(x) + int_a^x psi(x,t) v(t) dt - g(x), integral by `quad` on [a, x].
[[nodiscard]] double residual(const VolterraForm& form, const ScalarFn& v, double x, const QuadratureRule& quad);

/// u^(k)(x) recovered from v = u^(n); requires k < n.
[[nodiscard]] double reconstruct(const VolterraForm& form, const ScalarFn& v, std::size_t k, double x,
                                 const QuadratureRule& quad);

/// u_i(x) = mu_i + int_a^x v_i(t) dt. Only k = 0 exists for a first-order system.
[[nodiscard]] double reconstruct(const SystemIntegralForm& sif, std::size_t component, const ScalarFn& v,
                                 std::size_t k, double x, const QuadratureRule& quad);

/// R_i(x) = v_i(x) - q_i(u(x), x) with u reconstructed from v.
[[nodiscard]] std::vector<double> system_residual(const SystemIntegralForm& sif, std::span<const ScalarFn> v,
                                                  double x, const QuadratureRule& quad);

/// Lower-triangular W with (W v)_j = int_{x_0}^{x_j} (x_j - t)^p / p! v(t) dt, using
/// trapezoid weights on the grid prefix x_0..x_j.
[[nodiscard]] Eigen::MatrixXd prefix_moment_operator(const UniformGrid& grid, std::size_t power);

/// Discretized Volterra residual on a collocation grid: R = op * v - rhs, where
/// op = I + K and K_jm = w_jm psi(x_j, x_m) with prefix trapezoid weights w_jm.
struct DiscreteVolterra {
  Eigen::MatrixXd op;
  Eigen::VectorXd rhs;
};

[[nodiscard]] DiscreteVolterra discretize(const VolterraForm& form, const UniformGrid& grid);

}  // namespace rpinn
