#include "rpinn/quadrature.hpp"

#include <cmath>
#include <string>

#include "rpinn/errors.hpp"

namespace rpinn {

void QuadratureRule::validate() const {
  if (kind == QuadratureKind::Trapezoid && points < 2) {
    throw ConfigError("trapezoid quadrature needs at least 2 points, got " + std::to_string(points));
  }
}

QuadratureKind parse_quadrature_kind(std::string_view name) {
  if (name == "trapezoid") return QuadratureKind::Trapezoid;
  if (name == "simpson") return QuadratureKind::Simpson;
  throw ConfigError("unknown quadrature rule '" + std::string(name) + "'");
}

std::string_view to_string(QuadratureKind kind) {
  return kind == QuadratureKind::Simpson ? "simpson" : "trapezoid";
}

UniformGrid::UniformGrid(double start, double end, std::size_t count)
    : start_(start), end_(end), count_(count), spacing_(0.0) {
  if (count < 2) throw ArgumentError("uniform grid needs at least 2 nodes");
  if (!(end > start) || !std::isfinite(start) || !std::isfinite(end)) {
    throw ArgumentError("uniform grid needs finite start < end");
  }
  spacing_ = (end - start) / static_cast<double>(count - 1);
}

double UniformGrid::node(std::size_t i) const {
  if (i >= count_) throw ArgumentError("grid node index out of range");
  if (i + 1 == count_) return end_;
  return start_ + static_cast<double>(i) * spacing_;
}

std::vector<double> UniformGrid::nodes() const {
  std::vector<double> out(count_);
  for (std::size_t i = 0; i < count_; ++i) out[i] = node(i);
  return out;
}

double trapezoid(std::span<const double> values, double spacing) {
  if (values.size() < 2) throw ArgumentError("trapezoid needs at least 2 samples");
  if (!(spacing > 0.0)) throw ArgumentError("trapezoid spacing must be positive");
  double interior = 0.0;
  for (std::size_t i = 1; i + 1 < values.size(); ++i) interior += values[i];
  return 0.5 * spacing * (values.front() + 2.0 * interior + values.back());
}

std::vector<double> cumulative_trapezoid(std::span<const double> values, double spacing) {
  if (values.empty()) throw ArgumentError("cumulative_trapezoid needs at least 1 sample");
  if (!(spacing > 0.0)) throw ArgumentError("cumulative_trapezoid spacing must be positive");
  std::vector<double> out(values.size());
  out[0] = 0.0;
  for (std::size_t j = 1; j < values.size(); ++j) {
    out[j] = out[j - 1] + spacing * (values[j - 1] + values[j]) * 0.5;
  }
  return out;
}

std::vector<double> cumulative_trapezoid_adjoint(std::span<const double> upstream, double spacing) {
  if (upstream.empty()) throw ArgumentError("cumulative_trapezoid_adjoint needs at least 1 entry");
  if (!(spacing > 0.0)) throw ArgumentError("cumulative_trapezoid_adjoint spacing must be positive");
  // out[j] = sum_{m<=j} w_jm v[m] with w_jm = dx/2 at m in {0, j} (j >= 1), dx in between.
  const std::size_t n = upstream.size();
  std::vector<double> out(n, 0.0);
  double tail = 0.0;  // sum of upstream[j] for j > m
  for (std::size_t m = n; m-- > 1;) {
    out[m] = 0.5 * spacing * upstream[m] + spacing * tail;
    tail += upstream[m];
  }
  out[0] = 0.5 * spacing * tail;
  return out;
}

double simpson3(double h_a, double h_mid, double h_b, double a, double b) {
  if (!(b > a)) throw ArgumentError("simpson3 requires b > a");
  return (b - a) / 6.0 * (h_a + 4.0 * h_mid + h_b);
}

}  // namespace rpinn
