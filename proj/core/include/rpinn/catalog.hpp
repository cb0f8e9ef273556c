#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rpinn/errors.hpp"
#include "rpinn/oracles.hpp"
#include "rpinn/trainer.hpp"

namespace rpinn {

class UnknownProblem : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

using ParameterMap = std::map<std::string, double, std::less<>>;

/// A named benchmark with its default segment plan and, when known, a closed-form solution.
struct ProblemInstance {
  std::string name;
  std::string description;
  Problem problem;
  std::vector<std::string> species;
  /// Closed-form solution per species; empty when only the BDF oracle is available.
  std::function<std::vector<double>(double)> exact;
  SegmentPlan default_plan;
  BdfConfig bdf;
  /// The full parameter set after overrides, for echoing into run summaries.
  ParameterMap parameters;
};

[[nodiscard]] LinearIVP make_case1_ivp(double c, double d, double mu0, double mu1, Interval domain);
[[nodiscard]] LinearIVP make_case2_ivp(double lambda, double mu0, Interval domain);
[[nodiscard]] FirstOrderSystem make_case3_system(double lambda1, double lambda2, double mu1, double mu2,
                                                 Interval domain);
/// Robertson kinetics with analytic Jacobian.
[[nodiscard]] FirstOrderSystem make_rober_system(double k1, double k2, double k3, Interval domain,
                                                 std::vector<double> u0 = {1.0, 0.0, 0.0});

/// Built-in scalar functions for config files: "const:<c>" or "exp:<amplitude>,<rate>".
[[nodiscard]] ScalarFn parse_function_spec(std::string_view spec);

/// Order-n linear IVP described entirely in config terms.
struct InlineLinearSpec {
  std::vector<std::string> coeffs;  // lambda_1..lambda_n as function specs
  std::string forcing = "const:0";
  Interval domain{0.0, 1.0};
  std::vector<double> init_values;
};

[[nodiscard]] std::vector<std::string> problem_names();

/// Throws UnknownProblem for an unknown name and ConfigError for an unknown parameter key.
[[nodiscard]] ProblemInstance make_problem(std::string_view name, const ParameterMap& overrides = {});
[[nodiscard]] ProblemInstance make_inline_problem(const InlineLinearSpec& spec);

}  // namespace rpinn
