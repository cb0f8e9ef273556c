#include "rpinn/ode_model.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "rpinn/errors.hpp"

namespace rpinn {

namespace functions {

ScalarFn constant(double value) {
  return [value](double) { return value; };
}

ScalarFn exponential(double amplitude, double rate) {
  return [amplitude, rate](double x) { return amplitude * std::exp(rate * x); };
}

}  // namespace functions

namespace {

void check_interval(const Interval& domain) {
  if (!std::isfinite(domain.a) || !std::isfinite(domain.b) || !(domain.a < domain.b)) {
    throw ArgumentError("domain must satisfy a < b with finite endpoints");
  }
}

}  // namespace

LinearIVP::LinearIVP(std::vector<ScalarFn> coeffs, ScalarFn forcing, Interval domain,
                     std::vector<double> init_values)
    : coeffs_(std::move(coeffs)),
      forcing_(std::move(forcing)),
      domain_(domain),
      init_values_(std::move(init_values)) {
  if (coeffs_.empty()) throw ArgumentError("linear IVP order must be at least 1");
  if (init_values_.size() != coeffs_.size()) {
    throw ArgumentError("linear IVP of order " + std::to_string(coeffs_.size()) + " needs " +
                        std::to_string(coeffs_.size()) + " initial values, got " +
                        std::to_string(init_values_.size()));
  }
  for (const auto& c : coeffs_) {
    if (!c) throw ArgumentError("linear IVP coefficient is empty");
  }
  if (!forcing_) throw ArgumentError("linear IVP forcing is empty");
  check_interval(domain_);
}

double LinearIVP::coeff(std::size_t i, double x) const {
  if (i < 1 || i > coeffs_.size()) throw ArgumentError("coefficient index out of range");
  return coeffs_[i - 1](x);
}

LinearIVP LinearIVP::restricted(Interval segment, std::vector<double> init_values) const {
  return LinearIVP(coeffs_, forcing_, segment, std::move(init_values));
}

FirstOrderSystem::FirstOrderSystem(std::size_t dim, RhsFn rhs, Interval domain,
                                   std::vector<double> init_values, std::optional<JacobianFn> jacobian)
    : dim_(dim),
      rhs_(std::move(rhs)),
      domain_(domain),
      init_values_(std::move(init_values)),
      jacobian_(std::move(jacobian)) {
  if (dim_ == 0) throw ArgumentError("system dimension must be at least 1");
  if (!rhs_) throw ArgumentError("system rhs is empty");
  if (init_values_.size() != dim_) throw ArgumentError("initial vector length must equal system dimension");
  if (jacobian_ && !*jacobian_) jacobian_.reset();
  check_interval(domain_);
}

void FirstOrderSystem::jacobian_into(std::span<const double> u, double x, std::span<double> out) const {
  if (u.size() != dim_ || out.size() != dim_ * dim_) throw ArgumentError("jacobian shape mismatch");
  if (jacobian_) {
    (*jacobian_)(u, x, out);
    return;
  }
  std::vector<double> base(dim_), shifted(dim_), probe(u.begin(), u.end());
  rhs_(u, x, base);
  for (std::size_t j = 0; j < dim_; ++j) {
    const double step = 1e-8 * std::max(1.0, std::abs(u[j]));
    probe[j] = u[j] + step;
    rhs_(probe, x, shifted);
    probe[j] = u[j];
    for (std::size_t i = 0; i < dim_; ++i) out[i * dim_ + j] = (shifted[i] - base[i]) / step;
  }
}

FirstOrderSystem FirstOrderSystem::restricted(Interval segment, std::vector<double> init_values) const {
  return FirstOrderSystem(dim_, rhs_, segment, std::move(init_values), jacobian_);
}

void StateTable::validate() const {
  if (values.size() != grid.size()) throw ArgumentError("state table row count differs from grid length");
  if (derivs && derivs->size() != grid.size()) throw ArgumentError("state table derivative rows differ from grid");
  for (std::size_t j = 1; j < grid.size(); ++j) {
    if (!(grid[j] > grid[j - 1])) throw ArgumentError("state table grid is not strictly increasing");
  }
  const std::size_t n = dim();
  auto check_rows = [n](const std::vector<std::vector<double>>& rows) {
    for (const auto& row : rows) {
      if (row.size() != n) throw ArgumentError("state table row has inconsistent width");
      for (double v : row) {
        if (!std::isfinite(v)) throw ArgumentError("state table contains a non-finite entry");
      }
    }
  };
  check_rows(values);
  if (derivs) check_rows(*derivs);
}

std::vector<double> StateTable::column(std::size_t species) const {
  std::vector<double> out;
  out.reserve(values.size());
  for (const auto& row : values) out.push_back(row.at(species));
  return out;
}

double eval_linear_ode(const LinearIVP& ivp, std::span<const double> u_derivs, double x) {
  const std::size_t n = ivp.order();
  if (u_derivs.size() != n + 1) throw ArgumentError("eval_linear_ode needs n+1 derivative values");
  if (!ivp.domain().contains(x)) throw DomainError("x outside the IVP domain");
  double r = u_derivs[n] - ivp.forcing(x);
  for (std::size_t j = 0; j < n; ++j) r += ivp.coeff(n - j, x) * u_derivs[j];
  return r;
}

std::vector<double> eval_rhs(const FirstOrderSystem& sys, std::span<const double> u, double x) {
  if (u.size() != sys.dim()) throw ArgumentError("state length must equal system dimension");
  if (!sys.domain().contains(x)) throw DomainError("x outside the system domain");
  std::vector<double> out(sys.dim());
  sys.rhs_into(u, x, out);
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!std::isfinite(out[i])) {
      throw EvaluationError("rhs component " + std::to_string(i) + " is not finite", i);
    }
  }
  return out;
}

FirstOrderSystem to_first_order(const LinearIVP& ivp) {
  const std::size_t n = ivp.order();
  RhsFn rhs = [ivp, n](std::span<const double> u, double x, std::span<double> out) {
    for (std::size_t k = 0; k + 1 < n; ++k) out[k] = u[k + 1];
    double top = ivp.forcing(x);
    for (std::size_t j = 0; j < n; ++j) top -= ivp.coeff(n - j, x) * u[j];
    out[n - 1] = top;
  };
  JacobianFn jac = [ivp, n](std::span<const double>, double x, std::span<double> out) {
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t k = 0; k + 1 < n; ++k) out[k * n + k + 1] = 1.0;
    for (std::size_t j = 0; j < n; ++j) out[(n - 1) * n + j] = -ivp.coeff(n - j, x);
  };
  return FirstOrderSystem(n, std::move(rhs), ivp.domain(), ivp.init_values(), std::move(jac));
}

}  // namespace rpinn
