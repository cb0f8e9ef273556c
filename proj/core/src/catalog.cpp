#include "rpinn/catalog.hpp"

#include <cmath>
#include <sstream>
#include <utility>

#include <boost/algorithm/string.hpp>

namespace rpinn {

namespace {

double number(std::string_view text) {
  std::string s(text);
  boost::algorithm::trim(s);
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw ConfigError("expected a number, got '" + s + "'");
  }
  if (used != s.size()) throw ConfigError("expected a number, got '" + s + "'");
  return v;
}

ParameterMap merged(ParameterMap defaults, const ParameterMap& overrides, std::string_view problem) {
  for (const auto& [key, value] : overrides) {
    auto it = defaults.find(key);
    if (it == defaults.end()) {
      throw ConfigError("problem '" + std::string(problem) + "' has no parameter '" + key + "'");
    }
    if (!std::isfinite(value)) throw ConfigError("parameter '" + key + "' must be finite");
    it->second = value;
  }
  return defaults;
}

TrainConfig default_train(std::size_t epochs) {
  TrainConfig cfg;
  cfg.epochs = epochs;
  return cfg;
}

}  // namespace

LinearIVP make_case1_ivp(double c, double d, double mu0, double mu1, Interval domain) {
  return LinearIVP({functions::constant(-2.0 * c), functions::constant(c * c + d * d)}, functions::constant(0.0),
                   domain, {mu0, mu1});
}

LinearIVP make_case2_ivp(double lambda, double mu0, Interval domain) {
  return LinearIVP({functions::constant(-lambda)}, functions::exponential(1.0, -1.0), domain, {mu0});
}

FirstOrderSystem make_case3_system(double lambda1, double lambda2, double mu1, double mu2, Interval domain) {
  const double p = 0.5 * (lambda1 + lambda2);
  const double m = 0.5 * (lambda1 - lambda2);
  RhsFn rhs = [p, m](std::span<const double> u, double, std::span<double> out) {
    out[0] = p * u[0] + m * u[1];
    out[1] = m * u[0] + p * u[1];
  };
  JacobianFn jac = [p, m](std::span<const double>, double, std::span<double> out) {
    out[0] = p;
    out[1] = m;
    out[2] = m;
    out[3] = p;
  };
  return FirstOrderSystem(2, std::move(rhs), domain, {mu1, mu2}, std::move(jac));
}

FirstOrderSystem make_rober_system(double k1, double k2, double k3, Interval domain, std::vector<double> u0) {
  RhsFn rhs = [k1, k2, k3](std::span<const double> u, double, std::span<double> out) {
    const double r1 = k1 * u[0];
    const double r2 = k2 * u[1] * u[1];
    const double r3 = k3 * u[1] * u[2];
    out[0] = -r1 + r3;
    out[1] = r1 - r2 - r3;
    out[2] = r2;
  };
  JacobianFn jac = [k1, k2, k3](std::span<const double> u, double, std::span<double> out) {
    out[0] = -k1;
    out[1] = k3 * u[2];
    out[2] = k3 * u[1];
    out[3] = k1;
    out[4] = -2.0 * k2 * u[1] - k3 * u[2];
    out[5] = -k3 * u[1];
    out[6] = 0.0;
    out[7] = 2.0 * k2 * u[1];
    out[8] = 0.0;
  };
  return FirstOrderSystem(3, std::move(rhs), domain, std::move(u0), std::move(jac));
}

ScalarFn parse_function_spec(std::string_view spec) {
  std::string s(spec);
  boost::algorithm::trim(s);
  const auto colon = s.find(':');
  if (colon == std::string::npos) throw ConfigError("function spec '" + s + "' needs a kind prefix");
  const std::string kind = s.substr(0, colon);
  std::vector<std::string> args;
  boost::algorithm::split(args, s.substr(colon + 1), boost::is_any_of(","));
  if (kind == "const" && args.size() == 1) return functions::constant(number(args[0]));
  if (kind == "exp" && args.size() == 2) return functions::exponential(number(args[0]), number(args[1]));
  throw ConfigError("unsupported function spec '" + s + "' (use const:<c> or exp:<amplitude>,<rate>)");
}

std::vector<std::string> problem_names() { return {"case1", "case2", "case3", "rober"}; }

ProblemInstance make_problem(std::string_view name, const ParameterMap& overrides) {
  if (name == "case1") {
    auto p = merged({{"c", -1.0}, {"d", 10.0}, {"mu0", 1.0}, {"mu1", 10.0}, {"a", 0.0}, {"b", 0.4}}, overrides, name);
    const double c = p["c"], d = p["d"], mu0 = p["mu0"], mu1 = p["mu1"];
    const Interval domain{p["a"], p["b"]};
    const double a = domain.a;
    std::vector<double> bounds{domain.a, domain.b};
    if (domain.a + 0.1 < domain.b) bounds.insert(bounds.begin() + 1, domain.a + 0.1);
    return ProblemInstance{"case1", "second-order mild ODE u'' - 2c u' + (c^2+d^2) u = 0",
                           make_case1_ivp(c, d, mu0, mu1, domain), {"u"},
                           [=](double x) { return std::vector<double>{exact_case1(x - a, c, d, mu0, mu1)}; },
                           SegmentPlan{bounds, default_train(20000)}, BdfConfig{}, p};
  }
  if (name == "case2") {
    auto p = merged({{"lambda", -50.0}, {"mu0", 2.0}, {"a", 0.0}, {"b", 0.05}}, overrides, name);
    const double lambda = p["lambda"], mu0 = p["mu0"];
    const Interval domain{p["a"], p["b"]};
    if (domain.a != 0.0) throw ConfigError("case2 forcing exp(-x) fixes the start at a = 0");
    return ProblemInstance{"case2", "stiff scalar ODE u' - lambda u = exp(-x)", make_case2_ivp(lambda, mu0, domain),
                           {"u"},
                           [=](double x) { return std::vector<double>{exact_case2(x, lambda, mu0)}; },
                           SegmentPlan::uniform(domain, 1, default_train(20000)), BdfConfig{}, p};
  }
  if (name == "case3") {
    auto p = merged({{"lambda1", -20.0}, {"lambda2", -2.0}, {"mu1", 2.0}, {"mu2", 0.0}, {"a", 0.0}, {"b", 1.0}},
                    overrides, name);
    const double l1 = p["lambda1"], l2 = p["lambda2"], mu1 = p["mu1"], mu2 = p["mu2"];
    const Interval domain{p["a"], p["b"]};
    const double a = domain.a;
    return ProblemInstance{"case3", "stiff 2x2 linear system with eigenvalues lambda1, lambda2",
                           make_case3_system(l1, l2, mu1, mu2, domain), {"u1", "u2"},
                           [=](double x) {
                             const auto u = exact_case3(x - a, l1, l2, mu1, mu2);
                             return std::vector<double>{u[0], u[1]};
                           },
                           SegmentPlan::uniform(domain, 5, default_train(20000)), BdfConfig{}, p};
  }
  if (name == "rober" || name == "case4") {
    auto p = merged({{"k1", 0.04}, {"k2", 3e7}, {"k3", 1e4}, {"a", 1e-5}, {"b", 1e-1}}, overrides, name);
    const Interval domain{p["a"], p["b"]};
    // u2 and u3 are O(1e-5) and O(1e-11): the losses sit below the generic 1e-10 stop
    auto train = default_train(5000);
    train.loss_tolerance = 0.0;
    return ProblemInstance{"rober", "Robertson chemical kinetics (stiff, nonlinear, 3 species)",
                           make_rober_system(p["k1"], p["k2"], p["k3"], domain), {"u1", "u2", "u3"}, {},
                           SegmentPlan::logarithmic(domain, 250, train), BdfConfig{}, p};
  }
  throw UnknownProblem("unknown problem '" + std::string(name) + "'");
}

ProblemInstance make_inline_problem(const InlineLinearSpec& spec) {
  if (spec.coeffs.empty()) throw ConfigError("inline linear problem needs at least one coefficient");
  std::vector<ScalarFn> coeffs;
  for (const auto& c : spec.coeffs) coeffs.push_back(parse_function_spec(c));
  return ProblemInstance{"linear", "inline order-" + std::to_string(spec.coeffs.size()) + " linear IVP",
                         LinearIVP(std::move(coeffs), parse_function_spec(spec.forcing), spec.domain, spec.init_values),
                         {"u"}, {}, SegmentPlan::uniform(spec.domain, 1, default_train(20000)), BdfConfig{},
                         ParameterMap{{"a", spec.domain.a}, {"b", spec.domain.b}}};
}

}  // namespace rpinn
