#pragma once

#include <array>
#include <cstddef>

#include "rpinn/ode_model.hpp"

namespace rpinn {

/// u'' - 2c u' + (c^2 + d^2) u = 0, u(0) = mu0, u'(0) = mu1. Requires d != 0.
[[nodiscard]] double exact_case1(double x, double c, double d, double mu0, double mu1);

/// u' - lambda u = exp(-x), u(0) = mu0. Requires lambda != -1.
[[nodiscard]] double exact_case2(double x, double lambda, double mu0);

/// Symmetric 2x2 linear system with eigenvalues lambda1, lambda2.
[[nodiscard]] std::array<double, 2> exact_case3(double x, double lambda1, double lambda2, double mu1, double mu2);

struct BdfConfig {
  int order = 2;             // 1 = backward Euler, 2 = BDF2
  double step_size = 1e-5;   // shrunk slightly so the span divides evenly
  double newton_tol = 1e-12; // on max|delta| / max(1, max|u|)
  std::size_t newton_max_iter = 25;

  void validate() const;
};

/// Fixed-step BDF1/BDF2 with a full Newton solve per step (dense LU).
/// BDF2 is started with one backward-Euler step. The system's initial values are
/// taken as the state at span.a. Returns every step.
/// Throws StepFailure when Newton does not converge or the state turns non-finite.
[[nodiscard]] StateTable bdf_integrate(const FirstOrderSystem& sys, const BdfConfig& cfg, Interval span);

}  // namespace rpinn
