// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.
//
//   acceptance --cli <path-to-rpinn> [--long] [criterion numbers...]
//
// --long adds the full 250-segment ROBER run (informational, never gating).

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "../unit/closed_forms.hpp"
#include "rpinn/catalog.hpp"
#include "rpinn/neuralnet.hpp"
#include "rpinn/oracles.hpp"
#include "rpinn/quadrature.hpp"
#include "rpinn/runner.hpp"
#include "rpinn/weakform.hpp"

using namespace rpinn;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string g(double v) { return fmt("%.3g", v); }

fs::path g_cli;
fs::path g_scratch;

fs::path scratch(const std::string& name) {
  const auto dir = g_scratch / name;
  fs::remove_all(dir);
  return dir;
}

constexpr double kC = -1.0, kD = 10.0, kMu0 = 1.0, kMu1 = 10.0;
constexpr double kLam = -50.0, kMu = 2.0;
constexpr double kL1 = -20.0, kL2 = -2.0;

double rel(double got, double want) { return std::abs(got - want) / std::max(1.0, std::abs(want)); }

Outcome weak_form() {
  const auto f1 = build_volterra(make_case1_ivp(kC, kD, kMu0, kMu1, {0.0, 0.4}));
  const auto f2 = build_volterra(make_case2_ivp(kLam, kMu, {0.0, 0.05}));
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    double x = 0.4 * U(rng), t = 0.4 * U(rng);
    if (t > x) std::swap(x, t);
    worst = std::max(worst, rel(f1.kernel(x, t), oracle::case1_kernel(x, t, kC, kD)));
    worst = std::max(worst, rel(f1.forcing(x), oracle::case1_forcing(x, kC, kD, kMu0, kMu1)));
    const double y = 0.05 * U(rng), s = y * U(rng);
    worst = std::max(worst, rel(f2.kernel(y, s), oracle::case2_kernel(kLam)));
    worst = std::max(worst, rel(f2.forcing(y), oracle::case2_forcing(y, kLam, kMu)));
  }
  return {worst <= 1e-12, "max relative deviation " + g(worst) + " (limit 1e-12)"};
}

// max_j |R(x_j)| over an n-point domain grid, integral over the grid prefix.
double scalar_null(const VolterraForm& f, const ScalarFn& v, std::size_t n) {
  const UniformGrid grid(f.domain().a, f.domain().b, n);
  double worst = 0.0;
  for (std::size_t j = 1; j < n; ++j) {
    worst = std::max(worst, std::abs(residual(f, v, grid.node(j), {QuadratureKind::Trapezoid, j + 1})));
  }
  return worst;
}

double system_null(const SystemIntegralForm& f, std::span<const ScalarFn> v, Interval dom, std::size_t n) {
  const UniformGrid grid(dom.a, dom.b, n);
  double worst = 0.0;
  for (std::size_t j = 1; j < n; ++j) {
    for (double r : system_residual(f, v, grid.node(j), {QuadratureKind::Trapezoid, j + 1})) {
      worst = std::max(worst, std::abs(r));
    }
  }
  return worst;
}

Outcome residual_null() {
  const auto f1 = build_volterra(make_case1_ivp(kC, kD, kMu0, kMu1, {0.0, 0.4}));
  const auto f2 = build_volterra(make_case2_ivp(kLam, kMu, {0.0, 0.05}));
  const SystemIntegralForm f3(make_case3_system(kL1, kL2, 2.0, 0.0, {0.0, 1.0}));
  const ScalarFn v1 = [](double t) { return oracle::case1_derivs(t, kC, kD, kMu0, kMu1)[2]; };
  const ScalarFn v2 = [](double t) { return oracle::case2_du(t, kLam, kMu); };
  const std::vector<ScalarFn> v3{[](double t) { return oracle::case3_du(t, kL1, kL2, 2.0, 0.0)[0]; },
                                 [](double t) { return oracle::case3_du(t, kL1, kL2, 2.0, 0.0)[1]; }};
  const double r[3] = {scalar_null(f1, v1, 201), scalar_null(f2, v2, 201), system_null(f3, v3, {0.0, 1.0}, 201)};
  const double fine[3] = {scalar_null(f1, v1, 401), scalar_null(f2, v2, 401), system_null(f3, v3, {0.0, 1.0}, 401)};
  bool pass = true;
  std::string detail;
  for (int i = 0; i < 3; ++i) {
    const double ratio = r[i] / fine[i];
    pass = pass && r[i] <= 1e-5 && ratio > 3.5 && ratio < 4.5;
    detail += "case" + std::to_string(i + 1) + " max|R| " + g(r[i]) + " ratio " + fmt("%.2f", ratio) + "; ";
  }
  return {pass, detail + "limit 1e-5 on 201 points, ratio 4 +- 0.5"};
}

// L = sum_j (c_j v_j + v_j^2 / 2), so dL/dv_j = c_j + v_j
double probe_loss(const Mlp& net, const std::vector<double>& xs, const std::vector<double>& c) {
  const auto v = net.forward_batch(xs);
  double s = 0.0;
  for (std::size_t j = 0; j < v.size(); ++j) s += c[j] * v[j] + 0.5 * v[j] * v[j];
  return s;
}

Outcome gradients() {
  const std::vector<std::vector<std::size_t>> shapes{{1, 8, 1}, {1, 12, 12, 1}};
  double worst = 0.0;
  for (const auto& shape : shapes) {
    for (std::uint64_t seed = 10; seed < 15; ++seed) {
      auto net = Mlp::he_initialized(shape, Activation::Tanh, seed);
      std::mt19937_64 rng(seed);
      std::normal_distribution<double> N;
      for (std::size_t l = 0; l < net.layer_count(); ++l)
        for (Eigen::Index i = 0; i < net.bias(l).size(); ++i) net.bias(l)(i) = 0.3 * N(rng);
      std::vector<double> xs(11), c(11);
      for (std::size_t j = 0; j < xs.size(); ++j) {
        xs[j] = -1.0 + 0.2 * static_cast<double>(j);
        c[j] = N(rng);
      }
      const auto v = net.forward_batch(xs);
      std::vector<double> up(xs.size());
      for (std::size_t j = 0; j < xs.size(); ++j) up[j] = c[j] + v[j];
      const auto analytic = grad_loss(net, up, xs).flatten();
      auto theta = net.flatten();
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
        net.assign(theta);
        if (std::abs(analytic[p]) > 1e-8) {
          worst = std::max(worst, std::abs((lp - lm) / (2 * h) - analytic[p]) / std::abs(analytic[p]));
        }
      }
    }
  }
  return {worst < 1e-5, "worst relative error " + g(worst) + " over 2 shapes x 5 seeds (limit 1e-5)"};
}

RunResult run_preset(const std::string& problem, const std::string& dir) {
  RunConfig cfg;
  cfg.problem = problem;
  cfg.out_dir = scratch(dir);
  return execute(cfg);
}

std::string timing(double seconds) { return fmt("%.0f s", seconds); }

Outcome case2() {
  const auto r = run_preset("case2", "case2");
  const double err = r.max_abs_error[0];
  const double norm = r.reports.front().normalized_final_loss();
  return {err <= 1e-2 && norm <= 1e-3,
          "max abs error " + g(err) + " (limit 1e-2), normalized loss " + g(norm) + " (limit 1e-3), " +
              timing(r.wall_seconds)};
}

Outcome case1() {
  const auto r = run_preset("case1", "case1");
  const double err = r.max_abs_error[0];
  return {r.reports.size() == 2 && err <= 2e-2, std::to_string(r.reports.size()) + " segments, max abs error " +
                                                     g(err) + " (limit 2e-2), " + timing(r.wall_seconds)};
}

Outcome case3() {
  const auto r = run_preset("case3", "case3");
  const double worst = std::max(r.max_abs_error[0], r.max_abs_error[1]);
  return {r.reports.size() == 5 && worst <= 5e-2, "max abs error u1 " + g(r.max_abs_error[0]) + ", u2 " +
                                                      g(r.max_abs_error[1]) + " (limit 5e-2), " +
                                                      timing(r.wall_seconds)};
}

Outcome rober(std::size_t segments, const std::string& dir) {
  RunConfig cfg;
  cfg.problem = "rober";
  if (segments > 0) cfg.max_segments = segments;
  cfg.out_dir = scratch(dir);
  const auto r = execute(cfg);
  double mass = 0.0;
  for (const auto& u : r.solution.values) mass = std::max(mass, std::abs(u[0] + u[1] + u[2] - 1.0));
  bool pass = mass <= 1e-2;
  std::string detail = std::to_string(r.reports.size()) + " segments, max |mass - 1| " + g(mass) + " (limit 1e-2)";
  for (std::size_t i = 0; i < 3; ++i) {
    const auto ref = r.reference->column(i);
    const auto [lo, hi] = std::minmax_element(ref.begin(), ref.end());
    const double relative = r.max_abs_error[i] / (*hi - *lo);
    pass = pass && relative <= 5e-2;
    detail += ", " + r.species[i] + " " + g(relative);
  }
  return {pass, detail + " of range vs BDF (limit 5e-2), " + timing(r.wall_seconds)};
}

FirstOrderSystem decay() {
  return FirstOrderSystem(
      1, [](std::span<const double> u, double, std::span<double> out) { out[0] = -u[0]; }, {0.0, 1.0}, {1.0},
      [](std::span<const double>, double, std::span<double> J) { J[0] = -1.0; });
}

Outcome bdf() {
  bool pass = true;
  std::string detail;
  for (int order : {1, 2}) {
    auto end_error = [order](double h) {
      BdfConfig cfg;
      cfg.order = order;
      cfg.step_size = h;
      return std::abs(bdf_integrate(decay(), cfg, {0.0, 1.0}).values.back()[0] - std::exp(-1.0));
    };
    const double tol = order == 1 ? 0.15 : 0.2;
    double prev = end_error(1.0 / 50.0);
    detail += "BDF" + std::to_string(order) + " rates";
    for (double h : {1.0 / 100.0, 1.0 / 200.0, 1.0 / 400.0}) {
      const double now = end_error(h);
      const double rate = std::log2(prev / now);
      pass = pass && std::abs(rate - order) <= tol;
      detail += " " + fmt("%.3f", rate);
      prev = now;
    }
    detail += "; ";
  }
  const auto t = bdf_integrate(make_rober_system(0.04, 3e7, 1e4, {1e-5, 0.1}), BdfConfig{}, {1e-5, 0.1});
  double mass = 0.0;
  for (const auto& u : t.values) mass = std::max(mass, std::abs(u[0] + u[1] + u[2] - 1.0));
  pass = pass && mass <= 1e-10;
  return {pass, detail + "ROBER max |mass - 1| " + g(mass) + " (limit 1e-10)"};
}

Outcome quadrature() {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> U(-4.0, 4.0);
  double worst_trap = 0.0, worst_simp = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    double a = U(rng), b = U(rng);
    if (a > b) std::swap(a, b);
    const double c0 = U(rng), c1 = U(rng), c2 = U(rng), c3 = U(rng);
    const auto affine = [&](double x) { return c0 + c1 * x; };
    const double affine_exact = c0 * (b - a) + 0.5 * c1 * (b * b - a * a);
    const auto cubic = [&](double x) { return c0 + x * (c1 + x * (c2 + x * c3)); };
    const auto F = [&](double x) { return x * (c0 + x * (c1 / 2 + x * (c2 / 3 + x * c3 / 4))); };
    worst_trap = std::max(worst_trap, rel(integrate(affine, a, b, {QuadratureKind::Trapezoid, 33}), affine_exact));
    worst_simp = std::max(worst_simp, rel(integrate(cubic, a, b, {QuadratureKind::Simpson, 3}), F(b) - F(a)));
  }
  return {worst_trap <= 1e-12 && worst_simp <= 1e-12,
          "trapezoid on affine " + g(worst_trap) + ", simpson on cubic " + g(worst_simp) + " (limit 1e-12)"};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

Outcome determinism() {
  if (g_cli.empty()) return {false, "no --cli path given"};
  std::vector<fs::path> dirs{scratch("seed7-a"), scratch("seed7-b")};
  for (const auto& d : dirs) {
    const std::string cmd = "\"" + g_cli.string() + "\" solve case2 --seed 7 -o \"" + d.string() + "\" > /dev/null";
    if (std::system(cmd.c_str()) != 0) return {false, "cli run failed: " + cmd};
  }
  std::size_t compared = 0;
  for (const auto& entry : fs::directory_iterator(dirs[0])) {
    if (entry.path().extension() != ".csv") continue;
    const auto other = dirs[1] / entry.path().filename();
    if (!fs::exists(other) || slurp(entry.path()) != slurp(other)) {
      return {false, entry.path().filename().string() + " differs between runs"};
    }
    ++compared;
  }
  return {compared >= 2, std::to_string(compared) + " CSV files bit-identical across two runs"};
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> check;
};

}  // namespace

int main(int argc, char** argv) {
  bool long_run = false;
  std::vector<int> only;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--cli" && i + 1 < argc) {
      g_cli = argv[++i];
    } else if (arg == "--long") {
      long_run = true;
    } else {
      only.push_back(std::atoi(arg.c_str()));
    }
  }
  g_scratch = fs::temp_directory_path() / ("rpinn-acceptance-" + std::to_string(::getpid()));
  fs::create_directories(g_scratch);

  const std::vector<Criterion> criteria{
      {1, "weak-form correctness", weak_form},
      {2, "residual-null oracle", residual_null},
      {3, "gradient fidelity", gradients},
      {4, "case 2 stiff scalar", case2},
      {5, "case 1 two segments", case1},
      {6, "case 3 five segments", case3},
      {7, "ROBER first 25 segments", [] { return rober(25, "rober25"); }},
      {8, "BDF oracle orders", bdf},
      {9, "quadrature exactness", quadrature},
      {10, "determinism", determinism},
  };

  int failed = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    Outcome o;
    const auto started = std::chrono::steady_clock::now();
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    if (!o.pass) ++failed;
    std::printf("%s criterion %2d  %-24s %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(),
                secs);
    std::fflush(stdout);
  }
  if (long_run) {
    Outcome o;
    try {
      o = rober(0, "rober-full");
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    std::printf("INFO full ROBER run (not gating): %s %s\n", o.pass ? "within bounds" : "outside bounds",
                o.detail.c_str());
  }
  fs::remove_all(g_scratch);
  std::printf("%d criteria failed\n", failed);
  return failed == 0 ? 0 : 1;
}
