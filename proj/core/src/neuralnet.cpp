#include "rpinn/neuralnet.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <utility>

#include "rpinn/errors.hpp"

namespace rpinn {

namespace {

using Eigen::Index;

Index idx(std::size_t i) { return static_cast<Index>(i); }

void apply_activation(Activation act, const Eigen::MatrixXd& z, Eigen::MatrixXd& out) {
  if (act == Activation::ReLU) {
    out = z.cwiseMax(0.0);
  } else {
    out = z.array().tanh().matrix();
  }
}

// sigma'(z); ReLU'(0) is taken as 0.
void activation_slope(Activation act, const Eigen::MatrixXd& z, Eigen::MatrixXd& out) {
  if (act == Activation::ReLU) {
    out = (z.array() > 0.0).cast<double>().matrix();
  } else {
    out = (1.0 - z.array().tanh().square()).matrix();
  }
}

void check_parameters(const Mlp& net) {
  if (!net.all_finite()) throw EvaluationError("network has non-finite parameters", 0);
}

Eigen::Map<const Eigen::RowVectorXd> as_row(std::span<const double> xs) {
  return {xs.data(), idx(xs.size())};
}

}  // namespace

Activation parse_activation(std::string_view name) {
  if (name == "relu") return Activation::ReLU;
  if (name == "tanh") return Activation::Tanh;
  throw ConfigError("unknown activation '" + std::string(name) + "'");
}

std::string_view to_string(Activation activation) {
  return activation == Activation::ReLU ? "relu" : "tanh";
}

Mlp::Mlp(std::vector<std::size_t> layer_sizes, Activation activation)
    : layer_sizes_(std::move(layer_sizes)), activation_(activation) {
  if (layer_sizes_.size() < 2) throw ArgumentError("network needs at least input and output layers");
  if (layer_sizes_.front() != 1 || layer_sizes_.back() != 1) {
    throw ArgumentError("network input and output widths must both be 1");
  }
  for (std::size_t l = 0; l + 1 < layer_sizes_.size(); ++l) {
    if (layer_sizes_[l] == 0 || layer_sizes_[l + 1] == 0) throw ArgumentError("layer width must be positive");
    weights_.push_back(Eigen::MatrixXd::Zero(idx(layer_sizes_[l + 1]), idx(layer_sizes_[l])));
    biases_.push_back(Eigen::VectorXd::Zero(idx(layer_sizes_[l + 1])));
  }
}

Mlp Mlp::he_initialized(std::vector<std::size_t> layer_sizes, Activation activation, std::uint64_t seed) {
  Mlp net(std::move(layer_sizes), activation);
  std::mt19937_64 rng(seed);
  for (auto& w : net.weights_) {
    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / static_cast<double>(w.cols())));
    for (Index r = 0; r < w.rows(); ++r) {
      for (Index c = 0; c < w.cols(); ++c) w(r, c) = dist(rng);
    }
  }
  return net;
}

std::vector<std::size_t> Mlp::layer_sizes_for(std::span<const std::size_t> hidden) {
  std::vector<std::size_t> sizes{1};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(1);
  return sizes;
}

std::size_t Mlp::parameter_count() const noexcept {
  std::size_t n = 0;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    n += static_cast<std::size_t>(weights_[l].size() + biases_[l].size());
  }
  return n;
}

bool Mlp::all_finite() const {
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    if (!weights_[l].allFinite() || !biases_[l].allFinite()) return false;
  }
  return true;
}

std::vector<double> Mlp::forward_batch(std::span<const double> xs) const {
  ForwardTape tape;
  tape.run(*this, xs);
  const auto out = tape.outputs();
  return {out.begin(), out.end()};
}

double Mlp::forward(double x) const {
  return forward_batch(std::span<const double>(&x, 1)).front();
}

std::vector<double> Mlp::flatten() const {
  std::vector<double> flat;
  flat.reserve(parameter_count());
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    const auto& w = weights_[l];
    for (Index r = 0; r < w.rows(); ++r) {
      for (Index c = 0; c < w.cols(); ++c) flat.push_back(w(r, c));
    }
    for (Index r = 0; r < biases_[l].size(); ++r) flat.push_back(biases_[l](r));
  }
  return flat;
}

void Mlp::assign(std::span<const double> flat) {
  if (flat.size() != parameter_count()) throw ArgumentError("flat parameter vector has the wrong length");
  std::size_t k = 0;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    auto& w = weights_[l];
    for (Index r = 0; r < w.rows(); ++r) {
      for (Index c = 0; c < w.cols(); ++c) w(r, c) = flat[k++];
    }
    for (Index r = 0; r < biases_[l].size(); ++r) biases_[l](r) = flat[k++];
  }
}

Gradient Gradient::zeros_like(const Mlp& net) {
  Gradient g;
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    g.weights.push_back(Eigen::MatrixXd::Zero(net.weight(l).rows(), net.weight(l).cols()));
    g.biases.push_back(Eigen::VectorXd::Zero(net.bias(l).size()));
  }
  return g;
}

void Gradient::set_zero() {
  for (auto& w : weights) w.setZero();
  for (auto& b : biases) b.setZero();
}

bool Gradient::shape_matches(const Mlp& net) const {
  if (weights.size() != net.layer_count() || biases.size() != net.layer_count()) return false;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    if (weights[l].rows() != net.weight(l).rows() || weights[l].cols() != net.weight(l).cols()) return false;
    if (biases[l].size() != net.bias(l).size()) return false;
  }
  return true;
}

bool Gradient::all_finite() const {
  for (std::size_t l = 0; l < weights.size(); ++l) {
    if (!weights[l].allFinite() || !biases[l].allFinite()) return false;
  }
  return true;
}

std::vector<double> Gradient::flatten() const {
  std::vector<double> flat;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    const auto& w = weights[l];
    for (Index r = 0; r < w.rows(); ++r) {
      for (Index c = 0; c < w.cols(); ++c) flat.push_back(w(r, c));
    }
    for (Index r = 0; r < biases[l].size(); ++r) flat.push_back(biases[l](r));
  }
  return flat;
}

Gradient& Gradient::operator+=(const Gradient& other) {
  if (other.weights.size() != weights.size()) throw ArgumentError("gradient shape mismatch");
  for (std::size_t l = 0; l < weights.size(); ++l) {
    weights[l] += other.weights[l];
    biases[l] += other.biases[l];
  }
  return *this;
}

void ForwardTape::run(const Mlp& net, std::span<const double> xs) {
  check_parameters(net);
  net_ = &net;
  const std::size_t layers = net.layer_count();
  pre_.resize(layers);
  act_.resize(layers);
  act_[0] = as_row(xs);
  for (std::size_t l = 0; l < layers; ++l) {
    pre_[l].noalias() = net.weight(l) * act_[l];
    pre_[l].colwise() += net.bias(l);
    if (l + 1 < layers) apply_activation(net.activation(), pre_[l], act_[l + 1]);
  }
  out_ = pre_.back().row(0);
}

std::span<const double> ForwardTape::outputs() const noexcept {
  return {out_.data(), static_cast<std::size_t>(out_.size())};
}

void ForwardTape::backward(std::span<const double> upstream, Gradient& grad) const {
  if (net_ == nullptr) throw ArgumentError("backward called before run");
  if (upstream.size() != static_cast<std::size_t>(out_.size())) {
    throw ArgumentError("upstream gradient length must equal the batch size");
  }
  if (!grad.shape_matches(*net_)) grad = Gradient::zeros_like(*net_);
  const std::size_t layers = net_->layer_count();
  Eigen::MatrixXd g = as_row(upstream);
  Eigen::MatrixXd slope;
  for (std::size_t l = layers; l-- > 0;) {
    grad.weights[l].noalias() = g * act_[l].transpose();
    grad.biases[l] = g.rowwise().sum();
    if (l == 0) break;
    activation_slope(net_->activation(), pre_[l - 1], slope);
    Eigen::MatrixXd next = net_->weight(l).transpose() * g;
    g = next.cwiseProduct(slope);
  }
}

void TangentTape::run(const Mlp& net, std::span<const double> xs) {
  check_parameters(net);
  net_ = &net;
  const std::size_t layers = net.layer_count();
  pre_.resize(layers);
  dpre_.resize(layers);
  act_.resize(layers);
  dact_.resize(layers);
  act_[0] = as_row(xs);
  dact_[0] = Eigen::MatrixXd::Ones(1, idx(xs.size()));
  Eigen::MatrixXd slope;
  for (std::size_t l = 0; l < layers; ++l) {
    pre_[l].noalias() = net.weight(l) * act_[l];
    pre_[l].colwise() += net.bias(l);
    dpre_[l].noalias() = net.weight(l) * dact_[l];
    if (l + 1 < layers) {
      apply_activation(net.activation(), pre_[l], act_[l + 1]);
      activation_slope(net.activation(), pre_[l], slope);
      dact_[l + 1] = slope.cwiseProduct(dpre_[l]);
    }
  }
  out_ = pre_.back().row(0);
  dout_ = dpre_.back().row(0);
}

std::span<const double> TangentTape::outputs() const noexcept {
  return {out_.data(), static_cast<std::size_t>(out_.size())};
}

std::span<const double> TangentTape::input_derivatives() const noexcept {
  return {dout_.data(), static_cast<std::size_t>(dout_.size())};
}

void TangentTape::backward(std::span<const double> g_value, std::span<const double> g_deriv,
                           Gradient& grad) const {
  if (net_ == nullptr) throw ArgumentError("backward called before run");
  const auto n = static_cast<std::size_t>(out_.size());
  if (g_value.size() != n || g_deriv.size() != n) throw ArgumentError("upstream length must equal the batch size");
  if (!grad.shape_matches(*net_)) grad = Gradient::zeros_like(*net_);
  const std::size_t layers = net_->layer_count();
  const Activation act = net_->activation();

  Eigen::MatrixXd gz = as_row(g_value);   // d/d pre-activation
  Eigen::MatrixXd gdz = as_row(g_deriv);  // d/d pre-activation tangent
  Eigen::MatrixXd slope, curvature;
  for (std::size_t l = layers; l-- > 0;) {
    grad.weights[l].noalias() = gz * act_[l].transpose();
    grad.weights[l].noalias() += gdz * dact_[l].transpose();
    grad.biases[l] = gz.rowwise().sum();
    if (l == 0) break;
    const Eigen::MatrixXd ga = net_->weight(l).transpose() * gz;
    const Eigen::MatrixXd gda = net_->weight(l).transpose() * gdz;
    const Eigen::MatrixXd& z = pre_[l - 1];
    activation_slope(act, z, slope);
    if (act == Activation::ReLU) {
      gz = ga.cwiseProduct(slope);
    } else {
      const Eigen::ArrayXXd s = z.array().tanh();
      curvature = (-2.0 * s * (1.0 - s.square())).matrix();
      gz = ga.cwiseProduct(slope) + gda.cwiseProduct(curvature).cwiseProduct(dpre_[l - 1]);
    }
    gdz = gda.cwiseProduct(slope);
  }
}

Gradient grad_loss(const Mlp& net, std::span<const double> loss_grad_at_outputs, std::span<const double> xs) {
  if (loss_grad_at_outputs.size() != xs.size()) {
    throw ArgumentError("loss gradient length must equal the number of inputs");
  }
  ForwardTape tape;
  tape.run(net, xs);
  Gradient grad = Gradient::zeros_like(net);
  tape.backward(loss_grad_at_outputs, grad);
  return grad;
}

void AdamSettings::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) throw ConfigError("learning rate must be >= 0");
  if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0)) {
    throw ConfigError("Adam betas must lie in (0, 1)");
  }
  if (!(epsilon > 0.0)) throw ConfigError("Adam epsilon must be positive");
}

AdamState AdamState::for_network(const Mlp& net, const AdamSettings& settings) {
  settings.validate();
  AdamState state;
  state.first_moment = Gradient::zeros_like(net);
  state.second_moment = Gradient::zeros_like(net);
  state.settings = settings;
  return state;
}

void adam_step(Mlp& net, const Gradient& grad, AdamState& state) {
  if (!grad.shape_matches(net) || !state.first_moment.shape_matches(net) ||
      !state.second_moment.shape_matches(net)) {
    throw ArgumentError("Adam step shape mismatch");
  }
  const auto& s = state.settings;
  ++state.step_count;
  const double t = static_cast<double>(state.step_count);
  const double c1 = 1.0 - std::pow(s.beta1, t);
  const double c2 = 1.0 - std::pow(s.beta2, t);
  auto update = [&](auto& param, const auto& g, auto& m, auto& v) {
    m = s.beta1 * m + (1.0 - s.beta1) * g;
    v = s.beta2 * v + (1.0 - s.beta2) * g.cwiseProduct(g);
    param.array() -= s.learning_rate * (m.array() / c1) / ((v.array() / c2).sqrt() + s.epsilon);
  };
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    update(net.weight(l), grad.weights[l], state.first_moment.weights[l], state.second_moment.weights[l]);
    update(net.bias(l), grad.biases[l], state.first_moment.biases[l], state.second_moment.biases[l]);
  }
}

void save_checkpoint(const Mlp& net, std::ostream& os) {
  os << "rpinn-mlp 1\n";
  os << "activation " << to_string(net.activation()) << '\n';
  os << "layers " << net.layer_sizes().size();
  for (auto w : net.layer_sizes()) os << ' ' << w;
  os << '\n';
  const auto flat = net.flatten();
  os << "parameters " << flat.size() << '\n';
  std::ostringstream line;
  line.precision(17);
  for (double p : flat) {
    line.str("");
    line << p;
    os << line.str() << '\n';
  }
}

Mlp load_checkpoint(std::istream& is) {
  std::string tag;
  int version = 0;
  if (!(is >> tag >> version) || tag != "rpinn-mlp" || version != 1) {
    throw ConfigError("not an rpinn-mlp v1 checkpoint");
  }
  std::string act_name;
  if (!(is >> tag >> act_name) || tag != "activation") throw ConfigError("checkpoint missing activation");
  std::size_t count = 0;
  if (!(is >> tag >> count) || tag != "layers") throw ConfigError("checkpoint missing layer sizes");
  std::vector<std::size_t> sizes(count);
  for (auto& s : sizes) {
    if (!(is >> s)) throw ConfigError("checkpoint layer sizes truncated");
  }
  Mlp net(sizes, parse_activation(act_name));
  std::size_t nparams = 0;
  if (!(is >> tag >> nparams) || tag != "parameters" || nparams != net.parameter_count()) {
    throw ConfigError("checkpoint parameter count does not match its layer sizes");
  }
  std::vector<double> flat(nparams);
  for (auto& p : flat) {
    if (!(is >> p)) throw ConfigError("checkpoint parameters truncated");
  }
  net.assign(flat);
  return net;
}

}  // namespace rpinn
