#include "rpinn/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rpinn/errors.hpp"

namespace rpinn {

double exact_case1(double x, double c, double d, double mu0, double mu1) {
  if (d == 0.0) throw ArgumentError("exact_case1 requires d != 0");
  const double decay = std::exp(c * x);
  return (mu1 - c * mu0) / d * decay * std::sin(d * x) + mu0 * decay * std::cos(d * x);
}

double exact_case2(double x, double lambda, double mu0) {
  if (lambda == -1.0) throw ArgumentError("exact_case2 is resonant at lambda = -1");
  const double k = 1.0 / (1.0 + lambda);
  return (mu0 + k) * std::exp(lambda * x) - std::exp(-x) * k;
}

std::array<double, 2> exact_case3(double x, double lambda1, double lambda2, double mu1, double mu2) {
  const double fast = 0.5 * (mu1 + mu2) * std::exp(lambda1 * x);
  const double slow = 0.5 * (mu1 - mu2) * std::exp(lambda2 * x);
  return {fast + slow, fast - slow};
}

void BdfConfig::validate() const {
  if (order != 1 && order != 2) throw ConfigError("BDF order must be 1 or 2");
  if (!(step_size > 0.0) || !std::isfinite(step_size)) throw ConfigError("BDF step size must be positive");
  if (!(newton_tol > 0.0)) throw ConfigError("Newton tolerance must be positive");
  if (newton_max_iter < 1) throw ConfigError("Newton iteration limit must be at least 1");
}

namespace {

using Eigen::Index;

double inf_norm(const Eigen::VectorXd& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

std::string at_time(double t) {
  std::ostringstream os;
  os.precision(17);
  os << t;
  return os.str();
}

// Solve y - gamma*h*q(y, t) = c for y, starting from `y`.
void newton_solve(const FirstOrderSystem& sys, const BdfConfig& cfg, double gamma_h, double t,
                  const Eigen::VectorXd& c, Eigen::VectorXd& y) {
  const std::size_t n = sys.dim();
  const auto size = static_cast<Index>(n);
  Eigen::VectorXd q(size), residual(size);
  Eigen::MatrixXd jac(size, size);
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> jac_rm(size, size);
  for (std::size_t it = 0; it < cfg.newton_max_iter; ++it) {
    sys.rhs_into({y.data(), n}, t, {q.data(), n});
    residual = y - gamma_h * q - c;
    sys.jacobian_into({y.data(), n}, t, {jac_rm.data(), n * n});
    jac = Eigen::MatrixXd::Identity(size, size) - gamma_h * Eigen::MatrixXd(jac_rm);
    const Eigen::VectorXd delta = jac.partialPivLu().solve(-residual);
    y += delta;
    if (!y.allFinite()) throw StepFailure("BDF state became non-finite at x = " + at_time(t), t);
    if (inf_norm(delta) <= cfg.newton_tol * std::max(1.0, inf_norm(y))) return;
  }
  throw StepFailure("Newton iteration did not converge at x = " + at_time(t), t);
}

}  // namespace

StateTable bdf_integrate(const FirstOrderSystem& sys, const BdfConfig& cfg, Interval span) {
  cfg.validate();
  if (!(span.b > span.a)) throw ArgumentError("BDF span must satisfy start < end");
  const Interval& domain = sys.domain();
  if (span.a < domain.a || span.b > domain.b) throw DomainError("BDF span lies outside the system domain");

  const std::size_t n = sys.dim();
  const auto steps = static_cast<std::size_t>(std::ceil((span.b - span.a) / cfg.step_size - 1e-9));
  const std::size_t count = std::max<std::size_t>(steps, 1);
  const double h = (span.b - span.a) / static_cast<double>(count);

  StateTable table;
  table.grid.reserve(count + 1);
  table.values.reserve(count + 1);
  Eigen::VectorXd prev = Eigen::Map<const Eigen::VectorXd>(sys.init_values().data(), static_cast<Index>(n));
  Eigen::VectorXd prev2 = prev;
  table.grid.push_back(span.a);
  table.values.emplace_back(prev.data(), prev.data() + n);

  for (std::size_t k = 1; k <= count; ++k) {
    const double t = k == count ? span.b : span.a + static_cast<double>(k) * h;
    Eigen::VectorXd y = prev;
    if (cfg.order == 1 || k == 1) {
      newton_solve(sys, cfg, h, t, prev, y);
    } else {
      const Eigen::VectorXd c = (4.0 / 3.0) * prev - (1.0 / 3.0) * prev2;
      newton_solve(sys, cfg, (2.0 / 3.0) * h, t, c, y);
    }
    prev2 = prev;
    prev = y;
    table.grid.push_back(t);
    table.values.emplace_back(y.data(), y.data() + n);
  }
  return table;
}

}  // namespace rpinn
