#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace rpinn {

enum class QuadratureKind { Trapezoid, Simpson };

/// Newton-Cotes rule selector. `points` is the composite-trapezoid grid size and
/// is ignored by the three-point Simpson rule.
struct QuadratureRule {
  QuadratureKind kind = QuadratureKind::Trapezoid;
  std::size_t points = 101;

  /// Throws ConfigError when a trapezoid rule has fewer than two points.
  void validate() const;
};

[[nodiscard]] QuadratureKind parse_quadrature_kind(std::string_view name);
[[nodiscard]] std::string_view to_string(QuadratureKind kind);

/// Equi-spaced nodes on [start, end]. The last node is pinned to `end` so that
/// adjacent segments share their boundary bit-for-bit.
class UniformGrid {
 public:
  UniformGrid(double start, double end, std::size_t count);

  [[nodiscard]] double start() const noexcept { return start_; }
  [[nodiscard]] double end() const noexcept { return end_; }
  [[nodiscard]] std::size_t count() const noexcept { return count_; }
  [[nodiscard]] double spacing() const noexcept { return spacing_; }
  [[nodiscard]] double node(std::size_t i) const;
  [[nodiscard]] std::vector<double> nodes() const;

 private:
  double start_;
  double end_;
  std::size_t count_;
  double spacing_;
};

/// Composite trapezoid rule over equi-spaced samples.
[[nodiscard]] double trapezoid(std::span<const double> values, double spacing);

/// Running trapezoid integral: out[0] = 0, out[j] = integral over the first j panels.
[[nodiscard]] std::vector<double> cumulative_trapezoid(std::span<const double> values, double spacing);

/// Transpose of cumulative_trapezoid viewed as a linear map. Given upstream
/// sensitivities dL/dout[j], returns dL/dvalues[m]. Used to backpropagate
/// through prefix integrals.
[[nodiscard]] std::vector<double> cumulative_trapezoid_adjoint(std::span<const double> upstream,
                                                               double spacing);

/// Three-point Simpson rule with interior node at the midpoint (a+b)/2.
[[nodiscard]] double simpson3(double h_a, double h_mid, double h_b, double a, double b);

/// Integrate a callable over [a, b] with the given rule. Returns 0 when a == b.
template <class F>
[[nodiscard]] double integrate(F&& h, double a, double b, const QuadratureRule& rule) {
  rule.validate();
  if (a == b) return 0.0;
  if (rule.kind == QuadratureKind::Simpson) {
    return simpson3(h(a), h(0.5 * (a + b)), h(b), a, b);
  }
  const UniformGrid grid(a, b, rule.points);
  std::vector<double> samples(grid.count());
  for (std::size_t i = 0; i < grid.count(); ++i) samples[i] = h(grid.node(i));
  return trapezoid(samples, grid.spacing());
}

}  // namespace rpinn
