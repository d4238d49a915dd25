#include "pregrasp/network.hpp"

#include <cmath>
#include <stdexcept>

namespace pregrasp {

namespace {

MatrixXd uniform_matrix(int rows, int cols, double bound, RngStream& rng) {
  MatrixXd m(rows, cols);
  for (int c = 0; c < cols; ++c)
    for (int r = 0; r < rows; ++r) m(r, c) = rng.uniform(-bound, bound);
  return m;
}

}  // namespace

Network::Network(int input_dim, const std::vector<int>& hidden, int output_dim, RngStream& rng,
                 double final_layer_scale) {
  if (input_dim <= 0 || output_dim <= 0) throw std::invalid_argument("Network: bad dimensions");
  std::vector<int> widths{input_dim};
  widths.insert(widths.end(), hidden.begin(), hidden.end());
  widths.push_back(output_dim);
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    const int in = widths[i];
    const int out = widths[i + 1];
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    Layer layer;
    layer.weights = uniform_matrix(out, in, bound, rng);
    layer.bias = uniform_matrix(out, 1, bound, rng).col(0);
    layer.activation = (i + 2 == widths.size()) ? Activation::Identity : Activation::Relu;
    if (i + 2 == widths.size() && final_layer_scale != 1.0) {
      layer.weights *= final_layer_scale;
      layer.bias *= final_layer_scale;
    }
    layers.push_back(std::move(layer));
  }
}

MatrixXd Network::forward(const MatrixXd& input, ForwardCache* cache) const {
  if (layers.empty()) throw std::invalid_argument("Network::forward: empty network");
  if (input.rows() != layers.front().weights.cols())
    throw std::invalid_argument("Network::forward: input width mismatch");
  if (cache) {
    cache->inputs.clear();
    cache->preactivations.clear();
  }
  MatrixXd x = input;
  for (const auto& layer : layers) {
    if (cache) cache->inputs.push_back(x);
    MatrixXd z = layer.weights * x;
    z.colwise() += layer.bias;
    if (cache) cache->preactivations.push_back(z);
    x = (layer.activation == Activation::Relu) ? z.cwiseMax(0.0).eval() : std::move(z);
  }
  return x;
}

GradientBundle Network::backward(const ForwardCache& cache, const MatrixXd& output_grad,
                                 MatrixXd* input_grad) const {
  if (cache.inputs.size() != layers.size() || cache.preactivations.size() != layers.size())
    throw std::invalid_argument("Network::backward: cache does not match network");
  if (output_grad.rows() != output_dim() || output_grad.cols() != cache.inputs.front().cols())
    throw std::invalid_argument("Network::backward: output gradient shape mismatch");

  GradientBundle bundle;
  bundle.layers.resize(layers.size());
  MatrixXd delta = output_grad;
  for (int i = static_cast<int>(layers.size()) - 1; i >= 0; --i) {
    const Layer& layer = layers[i];
    if (layer.activation == Activation::Relu)
      delta = delta.cwiseProduct(
          (cache.preactivations[i].array() > 0.0).cast<double>().matrix());
    bundle.layers[i].weights.noalias() = delta * cache.inputs[i].transpose();
    bundle.layers[i].bias = delta.rowwise().sum();
    if (i > 0 || input_grad) {
      const MatrixXd next = layer.weights.transpose() * delta;
      if (i == 0 && input_grad) *input_grad = next;
      delta = next;
    }
  }
  return bundle;
}

GradientBundle Network::zero_gradients() const {
  GradientBundle bundle;
  bundle.layers.reserve(layers.size());
  for (const auto& layer : layers)
    bundle.layers.push_back({MatrixXd::Zero(layer.weights.rows(), layer.weights.cols()),
                             VectorXd::Zero(layer.bias.size())});
  return bundle;
}

std::size_t Network::parameter_count() const {
  std::size_t n = 0;
  for (const auto& layer : layers) n += layer.weights.size() + layer.bias.size();
  return n;
}

AdamState AdamState::for_network(const Network& net) {
  AdamState state;
  for (const auto& layer : net.layers) {
    state.first_moment.push_back({MatrixXd::Zero(layer.weights.rows(), layer.weights.cols()),
                                  VectorXd::Zero(layer.bias.size())});
    state.second_moment.push_back({MatrixXd::Zero(layer.weights.rows(), layer.weights.cols()),
                                   VectorXd::Zero(layer.bias.size())});
  }
  return state;
}

namespace {

template <typename Param, typename Grad>
void adam_tensor(Param& param, const Grad& grad, Param& m, Param& v, double lr, double b1,
                 double b2, double eps, double bias1, double bias2) {
  m = b1 * m + (1.0 - b1) * grad;
  v = b2 * v + (1.0 - b2) * grad.cwiseProduct(grad);
  param.array() -= lr * (m.array() / bias1) / ((v.array() / bias2).sqrt() + eps);
}

}  // namespace

void adam_update(AdamState& state, Network& net, const GradientBundle& grads, double lr) {
  if (grads.layers.size() != net.layers.size())
    throw std::invalid_argument("adam_update: gradient bundle shape mismatch");
  if (!(lr > 0.0)) throw std::invalid_argument("adam_update: learning rate must be positive");
  state.step += 1;
  const double bias1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bias2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    if (grads.layers[i].weights.rows() != net.layers[i].weights.rows() ||
        grads.layers[i].weights.cols() != net.layers[i].weights.cols())
      throw std::invalid_argument("adam_update: gradient bundle shape mismatch");
    adam_tensor(net.layers[i].weights, grads.layers[i].weights, state.first_moment[i].weights,
                state.second_moment[i].weights, lr, state.beta1, state.beta2, state.epsilon,
                bias1, bias2);
    adam_tensor(net.layers[i].bias, grads.layers[i].bias, state.first_moment[i].bias,
                state.second_moment[i].bias, lr, state.beta1, state.beta2, state.epsilon, bias1,
                bias2);
  }
}

double adam_update_scalar(AdamScalar& state, double value, double grad, double lr) {
  state.step += 1;
  state.first_moment = state.beta1 * state.first_moment + (1.0 - state.beta1) * grad;
  state.second_moment = state.beta2 * state.second_moment + (1.0 - state.beta2) * grad * grad;
  const double m_hat = state.first_moment / (1.0 - std::pow(state.beta1, state.step));
  const double v_hat = state.second_moment / (1.0 - std::pow(state.beta2, state.step));
  return value - lr * m_hat / (std::sqrt(v_hat) + state.epsilon);
}

GaussianPolicyOutput split_policy_output(const MatrixXd& actor_output) {
  const int dim = static_cast<int>(actor_output.rows()) / 2;
  if (actor_output.rows() != 2 * dim)
    throw std::invalid_argument("split_policy_output: odd output height");
  GaussianPolicyOutput out;
  out.mean = actor_output.topRows(dim);
  const MatrixXd raw = actor_output.bottomRows(dim);
  out.log_std = raw.cwiseMax(kLogStdMin).cwiseMin(kLogStdMax);
  out.log_std_clamp_mask =
      ((raw.array() > kLogStdMin) && (raw.array() < kLogStdMax)).cast<double>();
  return out;
}

SquashedSample sample_squashed_action(const GaussianPolicyOutput& out, const MatrixXd& noise) {
  if (noise.rows() != out.mean.rows() || noise.cols() != out.mean.cols())
    throw std::invalid_argument("sample_squashed_action: noise shape mismatch");
  if (!noise.allFinite()) throw std::invalid_argument("sample_squashed_action: non-finite noise");
  SquashedSample s;
  s.noise = noise;
  s.std = out.log_std.array().exp();
  const MatrixXd raw_pre = out.mean + noise.cwiseProduct(s.std);
  const MatrixXd pre = raw_pre.cwiseMax(-kPreSquashLimit).cwiseMin(kPreSquashLimit);
  s.pre_squash_active = ((raw_pre.array() > -kPreSquashLimit) &&
                         (raw_pre.array() < kPreSquashLimit))
                            .cast<double>();
  s.action = pre.array().tanh();

  // Gaussian log-density of the pre-squash sample minus the tanh
  // change-of-variables correction
  const double log_sqrt_2pi = 0.5 * std::log(2.0 * M_PI);
  Eigen::ArrayXXd per_component = -0.5 * noise.array().square() - out.log_std.array() -
                                  log_sqrt_2pi -
                                  (1.0 - s.action.array().square() + kSquashEpsilon).log();
  s.log_prob = per_component.colwise().sum().matrix();
  return s;
}

MatrixXd squashed_sample_backward(const GaussianPolicyOutput& out, const SquashedSample& sample,
                                  const MatrixXd& action_grad, const RowVectorXd& log_prob_grad) {
  const auto a = sample.action.array();
  const Eigen::ArrayXXd one_minus_a2 = 1.0 - a.square();
  const Eigen::ArrayXXd correction_denom = one_minus_a2 + kSquashEpsilon;

  // log_prob reaches each action component through the squash correction
  Eigen::ArrayXXd grad_a = action_grad.array();
  grad_a += (2.0 * a / correction_denom).rowwise() * log_prob_grad.array();

  // through tanh and the pre-squash clamp
  const Eigen::ArrayXXd grad_pre = grad_a * one_minus_a2 * sample.pre_squash_active.array();

  MatrixXd result(2 * out.mean.rows(), out.mean.cols());
  // d pre / d mean = 1
  result.topRows(out.mean.rows()) = grad_pre.matrix();
  // d pre / d log_std = noise * std; log_prob also depends on log_std directly (-1)
  Eigen::ArrayXXd grad_log_std = grad_pre * sample.noise.array() * sample.std.array();
  grad_log_std.rowwise() -= log_prob_grad.array();
  result.bottomRows(out.mean.rows()) =
      (grad_log_std * out.log_std_clamp_mask.array()).matrix();
  return result;
}

double compare_gradients_to_finite_differences(const Network& net, const VectorXd& input, double h,
                                               const GradientBundle& bundle) {
  if (!(h > 0.0)) throw std::invalid_argument("finite differences: h must be positive");
  Network probe = net;
  auto loss = [&]() { return probe.forward(input).sum(); };

  double max_rel = 0.0;
  auto accumulate = [&](double analytic, double* param) {
    const double saved = *param;
    *param = saved + h;
    const double up = loss();
    *param = saved - h;
    const double down = loss();
    *param = saved;
    const double fd = (up - down) / (2.0 * h);
    const double rel =
        std::abs(fd - analytic) / std::max({std::abs(fd), std::abs(analytic), 1e-3});
    max_rel = std::max(max_rel, rel);
  };

  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    auto& weights = probe.layers[l].weights;
    for (int c = 0; c < weights.cols(); ++c)
      for (int r = 0; r < weights.rows(); ++r)
        accumulate(bundle.layers[l].weights(r, c), &weights(r, c));
    auto& bias = probe.layers[l].bias;
    for (int r = 0; r < bias.size(); ++r) accumulate(bundle.layers[l].bias(r), &bias(r));
  }
  return max_rel;
}

double finite_difference_check(const Network& net, const VectorXd& input, double h) {
  ForwardCache cache;
  const MatrixXd out = net.forward(input, &cache);
  const GradientBundle bundle = net.backward(cache, MatrixXd::Ones(out.rows(), out.cols()));
  return compare_gradients_to_finite_differences(net, input, h, bundle);
}

}  // namespace pregrasp
