#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace rpinn {

using ScalarFn = std::function<double(double)>;

/// Right-hand side q(u, x) of a first-order system, written into `out` (length N).
using RhsFn = std::function<void(std::span<const double> u, double x, std::span<double> out)>;

/// Jacobian dq/du, row-major N x N, written into `out`.
using JacobianFn = std::function<void(std::span<const double> u, double x, std::span<double> out)>;

struct Interval {
  double a = 0.0;
  double b = 1.0;

  [[nodiscard]] bool contains(double x) const noexcept { return x >= a && x <= b; }
  [[nodiscard]] double length() const noexcept { return b - a; }
};

namespace functions {
[[nodiscard]] ScalarFn constant(double value);
/// amplitude * exp(rate * x)
[[nodiscard]] ScalarFn exponential(double amplitude, double rate);
}  // namespace functions

/// u^(n) + lambda_1(x) u^(n-1) + ... + lambda_n(x) u = f(x) on [a, b],
/// with u^(k)(a) = init_values[k] for k = 0..n-1.
class LinearIVP {
 public:
  LinearIVP(std::vector<ScalarFn> coeffs, ScalarFn forcing, Interval domain,
            std::vector<double> init_values);

  [[nodiscard]] std::size_t order() const noexcept { return coeffs_.size(); }
  /// lambda_i for i in 1..n (multiplies u^(n-i)).
  [[nodiscard]] double coeff(std::size_t i, double x) const;
  [[nodiscard]] double forcing(double x) const { return forcing_(x); }
  [[nodiscard]] const Interval& domain() const noexcept { return domain_; }
  [[nodiscard]] const std::vector<double>& init_values() const noexcept { return init_values_; }

  /// Same equation restricted to a sub-interval with new initial values at its start.
  [[nodiscard]] LinearIVP restricted(Interval segment, std::vector<double> init_values) const;

 private:
  std::vector<ScalarFn> coeffs_;
  ScalarFn forcing_;
  Interval domain_;
  std::vector<double> init_values_;
};

/// u' = q(u, x) on [a, b], u(a) = init_values.
class FirstOrderSystem {
 public:
  FirstOrderSystem(std::size_t dim, RhsFn rhs, Interval domain, std::vector<double> init_values,
                   std::optional<JacobianFn> jacobian = std::nullopt);

  [[nodiscard]] std::size_t dim() const noexcept { return dim_; }
  [[nodiscard]] const Interval& domain() const noexcept { return domain_; }
  [[nodiscard]] const std::vector<double>& init_values() const noexcept { return init_values_; }
  [[nodiscard]] bool has_jacobian() const noexcept { return jacobian_.has_value(); }

  /// Unchecked evaluation for inner loops.
  void rhs_into(std::span<const double> u, double x, std::span<double> out) const { rhs_(u, x, out); }

  /// Analytic Jacobian when available, otherwise forward differences with
  /// step 1e-8 * max(1, |u_i|).
  void jacobian_into(std::span<const double> u, double x, std::span<double> out) const;

  [[nodiscard]] FirstOrderSystem restricted(Interval segment, std::vector<double> init_values) const;

 private:
  std::size_t dim_;
  RhsFn rhs_;
  Interval domain_;
  std::vector<double> init_values_;
  std::optional<JacobianFn> jacobian_;
};

/// Sampled trajectory: values[j] is the state at grid[j].
struct StateTable {
  std::vector<double> grid;
  std::vector<std::vector<double>> values;
  std::optional<std::vector<std::vector<double>>> derivs;

  [[nodiscard]] std::size_t dim() const noexcept { return values.empty() ? 0 : values.front().size(); }
  [[nodiscard]] std::size_t size() const noexcept { return grid.size(); }
  /// Throws ArgumentError if the grid is not strictly increasing, shapes disagree,
  /// or an entry is non-finite.
  void validate() const;
  /// Column `species` as a contiguous vector.
  [[nodiscard]] std::vector<double> column(std::size_t species) const;
};

/// Strong-form residual u^(n) + sum_j lambda_{n-j} u^(j) - f at x.
/// `u_derivs` = [u, u', ..., u^(n)].
[[nodiscard]] double eval_linear_ode(const LinearIVP& ivp, std::span<const double> u_derivs, double x);

/// q(u, x) with domain and finiteness checks.
[[nodiscard]] std::vector<double> eval_rhs(const FirstOrderSystem& sys, std::span<const double> u, double x);

/// Companion-form first-order system with state (u, u', ..., u^(n-1)).
/// For n = 1 this is the scalar wrapper u' = f - lambda_1 u.
[[nodiscard]] FirstOrderSystem to_first_order(const LinearIVP& ivp);

}  // namespace rpinn
