#include "rpinn/weakform.hpp"

#include <cmath>
#include <utility>

#include "rpinn/errors.hpp"

namespace rpinn {

namespace {

void check_in_domain(const Interval& domain, double x) {
  if (!domain.contains(x)) throw DomainError("x outside the integral-form domain");
}

// Trapezoid prefix weight w_jm for the integral over [x_0, x_j].
double prefix_weight(std::size_t j, std::size_t m, double dx) {
  if (j == 0 || m > j) return 0.0;
  return (m == 0 || m == j) ? 0.5 * dx : dx;
}

}  // namespace

VolterraForm::VolterraForm(LinearIVP source) : source_(std::move(source)) {
  const std::size_t n = source_.order();
  inv_factorial_.resize(n + 1);
  inv_factorial_[0] = 1.0;
  for (std::size_t k = 1; k <= n; ++k) inv_factorial_[k] = inv_factorial_[k - 1] / static_cast<double>(k);
}

double VolterraForm::scaled_power(double h, std::size_t p) const {
  if (p == 0) return 1.0;
  double out = h;
  for (std::size_t k = 1; k < p; ++k) out *= h;
  return out * inv_factorial_.at(p);
}

double VolterraForm::kernel(double x, double t) const {
  const std::size_t n = source_order();
  double out = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    out += source_.coeff(n - j, x) * scaled_power(x - t, n - j - 1);
  }
  return out;
}

double VolterraForm::forcing(double x) const {
  const std::size_t n = source_order();
  const double a = domain().a;
  const auto& mu = init_values();
  double out = source_.forcing(x);
  for (std::size_t j = 0; j < n; ++j) {
    const double lambda = source_.coeff(n - j, x);
    for (std::size_t i = 0; i + j < n; ++i) {
      out -= mu[n - i - 1] * lambda * scaled_power(x - a, n - j - i - 1);
    }
  }
  return out;
}

VolterraForm build_volterra(const LinearIVP& ivp) {
  return VolterraForm(ivp);
}

double residual(const VolterraForm& form, const ScalarFn& v, double x, const QuadratureRule& quad) {
  check_in_domain(form.domain(), x);
  quad.validate();
  const double a = form.domain().a;
  const double integral = integrate([&](double t) { return form.kernel(x, t) * v(t); }, a, x, quad);
  return v(x) + integral - form.forcing(x);
}

double reconstruct(const VolterraForm& form, const ScalarFn& v, std::size_t k, double x,
                   const QuadratureRule& quad) {
  const std::size_t n = form.source_order();
  if (k >= n) throw ArgumentError("reconstruction order k must be below the ODE order");
  check_in_domain(form.domain(), x);
  const double a = form.domain().a;
  const std::size_t p = n - k - 1;
  double out = integrate([&](double t) { return form.scaled_power(x - t, p) * v(t); }, a, x, quad);
  const auto& mu = form.init_values();
  for (std::size_t i = 0; i <= p; ++i) out += mu[n - i - 1] * form.scaled_power(x - a, p - i);
  return out;
}

double reconstruct(const SystemIntegralForm& sif, std::size_t component, const ScalarFn& v, std::size_t k,
                   double x, const QuadratureRule& quad) {
  if (k != 0) throw ArgumentError("first-order systems only reconstruct k = 0");
  if (component >= sif.dim()) throw ArgumentError("component index out of range");
  check_in_domain(sif.system().domain(), x);
  return sif.init_values()[component] + integrate(v, sif.lower_limit(), x, quad);
}

std::vector<double> system_residual(const SystemIntegralForm& sif, std::span<const ScalarFn> v, double x,
                                    const QuadratureRule& quad) {
  const std::size_t n = sif.dim();
  if (v.size() != n) throw ArgumentError("system_residual needs one function per state variable");
  check_in_domain(sif.system().domain(), x);
  std::vector<double> u(n), q(n), out(n);
  for (std::size_t i = 0; i < n; ++i) u[i] = reconstruct(sif, i, v[i], 0, x, quad);
  sif.system().rhs_into(u, x, q);
  for (std::size_t i = 0; i < n; ++i) out[i] = v[i](x) - q[i];
  return out;
}

Eigen::MatrixXd prefix_moment_operator(const UniformGrid& grid, std::size_t power) {
  const std::size_t n = grid.count();
  const double dx = grid.spacing();
  const auto x = grid.nodes();
  double inv_fact = 1.0;
  for (std::size_t k = 2; k <= power; ++k) inv_fact /= static_cast<double>(k);
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t j = 1; j < n; ++j) {
    for (std::size_t m = 0; m <= j; ++m) {
      const double h = x[j] - x[m];
      double kern = 1.0;
      for (std::size_t k = 0; k < power; ++k) kern *= h;
      w(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(m)) = prefix_weight(j, m, dx) * kern * inv_fact;
    }
  }
  return w;
}

DiscreteVolterra discretize(const VolterraForm& form, const UniformGrid& grid) {
  const std::size_t n = grid.count();
  const double dx = grid.spacing();
  const auto x = grid.nodes();
  DiscreteVolterra out;
  const auto size = static_cast<Eigen::Index>(n);
  out.op = Eigen::MatrixXd::Identity(size, size);
  out.rhs.resize(size);
  for (std::size_t j = 0; j < n; ++j) {
    out.rhs(static_cast<Eigen::Index>(j)) = form.forcing(x[j]);
    for (std::size_t m = 0; m <= j && j > 0; ++m) {
      out.op(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(m)) +=
          prefix_weight(j, m, dx) * form.kernel(x[j], x[m]);
    }
  }
  return out;
}

}  // namespace rpinn
