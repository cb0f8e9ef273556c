#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "closed_forms.hpp"
#include "rpinn/baseline.hpp"
#include "rpinn/catalog.hpp"
#include "rpinn/errors.hpp"

using namespace rpinn;

namespace {

struct Samples {
  GridValues u, du;
};

template <class U, class DU>
Samples sample(const UniformGrid& g, std::size_t dim, U u, DU du) {
  Samples s{GridValues(dim, std::vector<double>(g.count())), GridValues(dim, std::vector<double>(g.count()))};
  for (std::size_t j = 0; j < g.count(); ++j) {
    const auto a = u(g.node(j));
    const auto b = du(g.node(j));
    for (std::size_t i = 0; i < dim; ++i) {
      s.u[i][j] = a[i];
      s.du[i][j] = b[i];
    }
  }
  return s;
}

}  // namespace

TEST_CASE("input derivative") {
  Mlp lin({1, 1}, Activation::Tanh);
  lin.weight(0)(0, 0) = 3.0;
  lin.bias(0)(0) = 7.0;
  for (double x : {-2.0, 0.0, 5.0}) CHECK(input_derivative(lin, x) == 3.0);

  const Mlp zero({1, 6, 6, 1}, Activation::Tanh);
  CHECK(input_derivative(zero, 0.3) == 0.0);

  const auto net = Mlp::he_initialized({1, 16, 16, 1}, Activation::Tanh, 13);
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> X(-2.0, 2.0);
  for (int k = 0; k < 20; ++k) {
    const double x = X(rng), h = 1e-6;
    const double fd = (net.forward(x + h) - net.forward(x - h)) / (2 * h);
    const double d = input_derivative(net, x);
    CHECK(std::abs(d - fd) <= 1e-6 * std::max(1.0, std::abs(fd)));
  }
}

TEST_CASE("exact solutions null the classical loss") {
  const std::vector<double> w1{1.0}, w2{1.0, 1.0};
  {
    const auto sys = to_first_order(make_case2_ivp(-50.0, 2.0, {0.0, 0.05}));
    const UniformGrid g(0.0, 0.05, 101);
    const auto s = sample(
        g, 1, [](double x) { return std::vector<double>{oracle::case2_u(x, -50.0, 2.0)}; },
        [](double x) { return std::vector<double>{oracle::case2_du(x, -50.0, 2.0)}; });
    CHECK(classical_loss_from_samples(s.u, s.du, sys, g, w1) <= 1e-10);
  }
  {
    const auto sys = to_first_order(make_case1_ivp(-1.0, 10.0, 1.0, 10.0, {0.0, 0.4}));
    const UniformGrid g(0.0, 0.4, 101);
    const auto s = sample(
        g, 2,
        [](double x) {
          const auto d = oracle::case1_derivs(x, -1.0, 10.0, 1.0, 10.0);
          return std::vector<double>{d[0], d[1]};
        },
        [](double x) {
          const auto d = oracle::case1_derivs(x, -1.0, 10.0, 1.0, 10.0);
          return std::vector<double>{d[1], d[2]};
        });
    CHECK(classical_loss_from_samples(s.u, s.du, sys, g, w2) <= 1e-8);
  }
  {
    const auto sys = make_case3_system(-20.0, -2.0, 2.0, 0.0, {0.0, 1.0});
    const UniformGrid g(0.0, 1.0, 101);
    const auto s = sample(
        g, 2,
        [](double x) {
          const auto u = oracle::case3_u(x, -20.0, -2.0, 2.0, 0.0);
          return std::vector<double>{u[0], u[1]};
        },
        [](double x) {
          const auto u = oracle::case3_du(x, -20.0, -2.0, 2.0, 0.0);
          return std::vector<double>{u[0], u[1]};
        });
    CHECK(classical_loss_from_samples(s.u, s.du, sys, g, w2) <= 1e-8);
  }
}

TEST_CASE("zero networks on case 2") {
  const auto sys = to_first_order(make_case2_ivp(-50.0, 2.0, {0.0, 0.05}));
  const UniformGrid g(0.0, 0.05, 101);
  const std::vector<Mlp> nets{Mlp({1, 5, 1}, Activation::Tanh)};
  const std::vector<double> w{1.0};
  double ode = 0.0;
  for (double x : g.nodes()) ode += std::exp(-2.0 * x);
  ode /= 101.0;
  CHECK(classical_loss(nets, sys, g, w) == doctest::Approx(4.0 + ode).epsilon(1e-14));

  const auto homog = make_case3_system(-20.0, -2.0, 2.0, 0.0, {0.0, 1.0});
  const std::vector<Mlp> two(2, Mlp({1, 5, 1}, Activation::Tanh));
  const std::vector<double> w0{0.0, 0.0};
  CHECK(classical_loss(two, homog, g, w0) == 0.0);
  CHECK_THROWS_AS((void)classical_loss(nets, homog, g, w0), ArgumentError);
}

TEST_CASE("classical loss parameter gradient matches central differences") {
  const auto sys = make_case3_system(-20.0, -2.0, 2.0, 0.0, {0.0, 1.0});
  const UniformGrid g(0.0, 0.3, 11);
  const std::vector<double> w{1.0, 0.5};
  std::vector<Mlp> nets{Mlp::he_initialized({1, 6, 6, 1}, Activation::Tanh, 1),
                        Mlp::he_initialized({1, 6, 6, 1}, Activation::Tanh, 2)};
  const auto xs = g.nodes();

  GridValues u(2), du(2), gu, gdu;
  std::vector<TangentTape> tapes(2);
  for (std::size_t i = 0; i < 2; ++i) {
    tapes[i].run(nets[i], xs);
    u[i].assign(tapes[i].outputs().begin(), tapes[i].outputs().end());
    du[i].assign(tapes[i].input_derivatives().begin(), tapes[i].input_derivatives().end());
  }
  (void)classical_loss_from_samples(u, du, sys, g, w, &gu, &gdu);

  for (std::size_t i = 0; i < 2; ++i) {
    auto grad = Gradient::zeros_like(nets[i]);
    tapes[i].backward(gu[i], gdu[i], grad);
    const auto analytic = grad.flatten();
    auto theta = nets[i].flatten();
    double worst = 0.0;
    for (std::size_t p = 0; p < theta.size(); ++p) {
      const double keep = theta[p], h = 1e-6;
      theta[p] = keep + h;
      nets[i].assign(theta);
      const double lp = classical_loss(nets, sys, g, w);
      theta[p] = keep - h;
      nets[i].assign(theta);
      const double lm = classical_loss(nets, sys, g, w);
      theta[p] = keep;
      nets[i].assign(theta);
      const double fd = (lp - lm) / (2 * h);
      if (std::abs(analytic[p]) > 1e-6) worst = std::max(worst, std::abs(fd - analytic[p]) / std::abs(analytic[p]));
    }
    CHECK(worst < 1e-5);
  }
}

TEST_CASE("classical config") {
  ClassicalPinnConfig cfg;
  CHECK(cfg.activation == Activation::Tanh);
  CHECK(cfg.weights_for(3) == std::vector<double>{1.0, 1.0, 1.0});
  cfg.ic_weights = {2.0};
  CHECK_THROWS_AS((void)cfg.weights_for(2), ArgumentError);
  cfg.ic_weights = {-1.0};
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("classical training reduces its loss and chains segments") {
  const auto sys = make_case3_system(-20.0, -2.0, 2.0, 0.0, {0.0, 1.0});
  ClassicalPinnConfig cfg;
  cfg.epochs = 100;
  cfg.collocation_count = 21;
  cfg.hidden_layers = {8, 8};
  const std::vector<double> ics{2.0, 0.0};
  const auto one = train_classical(sys, {0.0, 0.1}, ics, cfg);
  CHECK(one.report.final_loss < one.report.initial_loss);
  CHECK(one.table.derivs.has_value());

  const auto seq = solve_classical_sequential(sys, {0.0, 0.1, 0.2}, cfg);
  REQUIRE(seq.reports.size() == 2);
  CHECK(seq.reports[1].start_state == seq.reports[0].end_state);
  CHECK(seq.table.size() == 41);
  CHECK_THROWS_AS((void)solve_classical_sequential(sys, {0.1, 0.2}, cfg), ConfigError);
}
