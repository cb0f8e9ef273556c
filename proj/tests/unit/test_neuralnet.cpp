#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <vector>

#include "rpinn/errors.hpp"
#include "rpinn/neuralnet.hpp"

using namespace rpinn;

namespace {

// L = sum_j (c_j v_j + v_j^2 / 2)
double probe_loss(const Mlp& net, const std::vector<double>& xs, const std::vector<double>& c) {
  const auto v = net.forward_batch(xs);
  double s = 0.0;
  for (std::size_t j = 0; j < v.size(); ++j) s += c[j] * v[j] + 0.5 * v[j] * v[j];
  return s;
}

Mlp affine(double w, double b) {
  Mlp net({1, 1}, Activation::ReLU);
  net.weight(0)(0, 0) = w;
  net.bias(0)(0) = b;
  return net;
}

}  // namespace

TEST_CASE("zero network outputs zero") {
  const Mlp net({1, 8, 8, 1}, Activation::Tanh);
  for (double y : net.forward_batch(std::vector<double>{-3.0, 0.0, 0.4, 12.0})) CHECK(y == 0.0);
}

TEST_CASE("hand-computed two-layer network") {
  Mlp net({1, 1, 1}, Activation::ReLU);
  net.weight(0)(0, 0) = 1.0;
  net.bias(0)(0) = -0.5;
  net.weight(1)(0, 0) = 2.0;
  net.bias(1)(0) = 1.0;
  CHECK(net.forward(1.0) == 2.0);
  CHECK(net.forward(0.25) == 1.0);  // ReLU clips
}

TEST_CASE("non-finite parameters are rejected") {
  Mlp net({1, 3, 1}, Activation::ReLU);
  net.bias(0)(1) = std::numeric_limits<double>::infinity();
  CHECK_FALSE(net.all_finite());
  CHECK_THROWS_AS((void)net.forward(0.1), EvaluationError);
  CHECK_THROWS_AS(Mlp({2, 3, 1}, Activation::ReLU), ArgumentError);
  CHECK_THROWS_AS(Mlp({1}, Activation::ReLU), ArgumentError);
}

TEST_CASE("seeded initialization is deterministic") {
  const auto sizes = Mlp::layer_sizes_for(std::vector<std::size_t>{50, 50, 50, 50});
  const auto a = Mlp::he_initialized(sizes, Activation::ReLU, 42);
  const auto b = Mlp::he_initialized(sizes, Activation::ReLU, 42);
  const auto c = Mlp::he_initialized(sizes, Activation::ReLU, 43);
  CHECK(a.flatten() == b.flatten());
  CHECK(a.flatten() != c.flatten());
  CHECK(a.parameter_count() == 2 * 50 + 3 * (50 * 50 + 50) + 51);
  const std::vector<double> xs{0.0, 0.013, 0.5, 1.0};
  CHECK(a.forward_batch(xs) == b.forward_batch(xs));
  for (std::size_t l = 0; l < a.layer_count(); ++l) CHECK(a.bias(l).isZero());
}

TEST_CASE("he initialization variance") {
  const auto net = Mlp::he_initialized({1, 400, 400, 1}, Activation::ReLU, 1);
  const auto& W = net.weight(1);
  const double mean = W.mean();
  const double var = (W.array() - mean).square().mean();
  CHECK(std::abs(mean) < 0.01);
  CHECK(var == doctest::Approx(2.0 / 400.0).epsilon(0.03));
}

TEST_CASE("regression pin for the default seeded network") {
  const auto net = Mlp::he_initialized(Mlp::layer_sizes_for(std::vector<std::size_t>{50, 50, 50, 50}),
                                       Activation::ReLU, 0);
  // zero biases and x = 0 give exactly zero; the second pin exercises the weights
  CHECK(net.forward(0.0) == 0.0);
  CHECK(net.forward(0.5) == doctest::Approx(PIN_FORWARD_HALF).epsilon(1e-15));
}

TEST_CASE("ReLU network is piecewise linear") {
  const auto net = Mlp::he_initialized({1, 20, 20, 1}, Activation::ReLU, 5);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(-2.0, 2.0);
  int checked = 0;
  for (int trial = 0; trial < 200 && checked < 20; ++trial) {
    const double x0 = U(rng), h = 1e-4;
    const double y0 = net.forward(x0 - h), y1 = net.forward(x0), y2 = net.forward(x0 + h);
    // skip the rare triples straddling a kink
    const double a = net.forward(x0 - 2 * h), b = net.forward(x0 + 2 * h);
    if (std::abs((y1 - a) - (b - y1)) > 1e-9) continue;
    CHECK(std::abs((y1 - y0) - (y2 - y1)) <= 1e-10);
    ++checked;
  }
  CHECK(checked >= 10);
}

TEST_CASE("grad_loss hand examples") {
  const auto net = Mlp::he_initialized({1, 4, 1}, Activation::Tanh, 2);
  const std::vector<double> xs{0.1, 0.2, 0.3};
  const std::vector<double> zeros(3, 0.0);
  const auto g = grad_loss(net, zeros, xs);
  for (double e : g.flatten()) CHECK(e == 0.0);

  // v = w x, L = v(2)^2 with w = 3: dL/dw = 2 * 6 * 2
  const auto lin = affine(3.0, 0.0);
  const std::vector<double> x2{2.0};
  const std::vector<double> up{2.0 * lin.forward(2.0)};
  const auto gl = grad_loss(lin, up, x2);
  CHECK(gl.weights[0](0, 0) == 24.0);
  CHECK(gl.biases[0](0) == 12.0);

  const std::vector<double> wrong{1.0};
  CHECK_THROWS_AS((void)grad_loss(net, wrong, xs), ArgumentError);
}

TEST_CASE("parameter gradients match central differences on tanh networks") {
  const std::vector<std::vector<std::size_t>> shapes{{1, 5, 1}, {1, 10, 10, 1}};
  for (const auto& shape : shapes) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      auto net = Mlp::he_initialized(shape, Activation::Tanh, seed);
      std::mt19937_64 rng(seed + 100);
      std::normal_distribution<double> N;
      for (std::size_t l = 0; l < net.layer_count(); ++l)
        for (Eigen::Index i = 0; i < net.bias(l).size(); ++i) net.bias(l)(i) = 0.3 * N(rng);
      std::vector<double> xs(9), c(9);
      for (std::size_t j = 0; j < xs.size(); ++j) {
        xs[j] = -1.0 + 0.25 * static_cast<double>(j);
        c[j] = N(rng);
      }
      const auto v = net.forward_batch(xs);
      std::vector<double> up(xs.size());
      for (std::size_t j = 0; j < xs.size(); ++j) up[j] = c[j] + v[j];
      const auto analytic = grad_loss(net, up, xs).flatten();

      auto theta = net.flatten();
      double worst = 0.0;
      for (std::size_t p = 0; p < theta.size(); ++p) {
        const double h = 1e-5 * std::max(1.0, std::abs(theta[p]));
        const double keep = theta[p];
        theta[p] = keep + h;
        net.assign(theta);
        const double lp = probe_loss(net, xs, c);
        theta[p] = keep - h;
        net.assign(theta);
        const double lm = probe_loss(net, xs, c);
        theta[p] = keep;
        const double fd = (lp - lm) / (2 * h);
        if (std::abs(analytic[p]) > 1e-8) worst = std::max(worst, std::abs(fd - analytic[p]) / std::abs(analytic[p]));
      }
      net.assign(theta);
      CHECK(worst < 1e-5);
    }
  }
}

TEST_CASE("adam") {
  SUBCASE("zero gradient leaves parameters unchanged") {
    auto net = Mlp::he_initialized({1, 6, 1}, Activation::Tanh, 3);
    const auto before = net.flatten();
    auto state = AdamState::for_network(net);
    adam_step(net, Gradient::zeros_like(net), state);
    CHECK(net.flatten() == before);
    CHECK(state.step_count == 1);
  }
  SUBCASE("first step moves by about lr") {
    auto net = affine(0.0, 0.0);
    auto state = AdamState::for_network(net, AdamSettings{0.1, 0.9, 0.999, 1e-8});
    auto g = Gradient::zeros_like(net);
    g.weights[0](0, 0) = 1.0;
    adam_step(net, g, state);
    CHECK(net.weight(0)(0, 0) == doctest::Approx(-0.1 / (1.0 + 1e-8)).epsilon(1e-14));
    CHECK(net.bias(0)(0) == 0.0);
    const double first = net.weight(0)(0, 0);
    adam_step(net, g, state);
    CHECK(net.weight(0)(0, 0) < first);
  }
  SUBCASE("lr = 0 never changes parameters") {
    auto net = Mlp::he_initialized({1, 6, 1}, Activation::Tanh, 3);
    const auto before = net.flatten();
    auto state = AdamState::for_network(net, AdamSettings{0.0, 0.9, 0.999, 1e-8});
    auto g = Gradient::zeros_like(net);
    g.weights[1].setConstant(5.0);
    for (int k = 0; k < 10; ++k) adam_step(net, g, state);
    CHECK(net.flatten() == before);
  }
  SUBCASE("shape mismatch") {
    auto net = Mlp::he_initialized({1, 6, 1}, Activation::Tanh, 3);
    auto state = AdamState::for_network(net);
    const auto other = Mlp::he_initialized({1, 5, 1}, Activation::Tanh, 3);
    CHECK_THROWS_AS(adam_step(net, Gradient::zeros_like(other), state), ArgumentError);
  }
  SUBCASE("settings validation") {
    CHECK_THROWS_AS((AdamSettings{1e-3, 1.0, 0.999, 1e-8}.validate()), ConfigError);
    CHECK_THROWS_AS((AdamSettings{1e-3, 0.9, 0.0, 1e-8}.validate()), ConfigError);
    CHECK_THROWS_AS((AdamSettings{1e-3, 0.9, 0.999, 0.0}.validate()), ConfigError);
  }
}

TEST_CASE("checkpoint round trip is exact") {
  const auto net = Mlp::he_initialized({1, 7, 3, 1}, Activation::Tanh, 9);
  std::stringstream ss;
  save_checkpoint(net, ss);
  const auto back = load_checkpoint(ss);
  CHECK(back.layer_sizes() == net.layer_sizes());
  CHECK(back.activation() == Activation::Tanh);
  CHECK(back.flatten() == net.flatten());

  std::stringstream bad("not a checkpoint");
  CHECK_THROWS_AS((void)load_checkpoint(bad), ConfigError);
  std::stringstream truncated(ss.str().substr(0, ss.str().size() / 2));
  CHECK_THROWS_AS((void)load_checkpoint(truncated), ConfigError);
}

TEST_CASE("activation names") {
  CHECK(parse_activation("tanh") == Activation::Tanh);
  CHECK(parse_activation(to_string(Activation::ReLU)) == Activation::ReLU);
  CHECK_THROWS_AS((void)parse_activation("gelu"), ConfigError);
}
