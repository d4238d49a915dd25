#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

#include "pregrasp/rng.hpp"

namespace pregrasp {

using Eigen::MatrixXd;
using Eigen::RowVectorXd;
using Eigen::VectorXd;

enum class Activation { Relu, Identity };

struct Layer {
  MatrixXd weights;  // out x in
  VectorXd bias;     // out
  Activation activation = Activation::Relu;
};

/// Per-layer inputs and pre-activations retained by forward for the exact
/// reverse pass. Columns are batch entries.
struct ForwardCache {
  std::vector<MatrixXd> inputs;
  std::vector<MatrixXd> preactivations;
};

struct LayerGrad {
  MatrixXd weights;
  VectorXd bias;
};

struct GradientBundle {
  std::vector<LayerGrad> layers;
};

/// Plain feed-forward network: affine layers with rectifier activations on
/// hidden layers and identity output, double precision throughout.
class Network {
 public:
  Network() = default;
  /// Uniform fan-in initialization; the final layer is scaled by
  /// final_layer_scale (used to start policies near zero action).
  Network(int input_dim, const std::vector<int>& hidden, int output_dim, RngStream& rng,
          double final_layer_scale = 1.0);

  MatrixXd forward(const MatrixXd& input, ForwardCache* cache = nullptr) const;

  /// Exact reverse-mode gradients of sum_k(output .* output_grad) with
  /// respect to all parameters; optionally also with respect to the input.
  GradientBundle backward(const ForwardCache& cache, const MatrixXd& output_grad,
                          MatrixXd* input_grad = nullptr) const;

  GradientBundle zero_gradients() const;

  int input_dim() const { return layers.empty() ? 0 : static_cast<int>(layers.front().weights.cols()); }
  int output_dim() const { return layers.empty() ? 0 : static_cast<int>(layers.back().weights.rows()); }
  std::size_t parameter_count() const;

  std::vector<Layer> layers;
};

/// Bias-corrected adaptive-moment estimates, one pair per parameter tensor.
struct AdamState {
  std::vector<LayerGrad> first_moment;
  std::vector<LayerGrad> second_moment;
  long step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static AdamState for_network(const Network& net);
};

void adam_update(AdamState& state, Network& net, const GradientBundle& grads, double lr);

struct AdamScalar {
  double first_moment = 0.0;
  double second_moment = 0.0;
  long step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

double adam_update_scalar(AdamScalar& state, double value, double grad, double lr);

inline constexpr double kLogStdMin = -20.0;
inline constexpr double kLogStdMax = 2.0;
inline constexpr double kSquashEpsilon = 1e-6;
// tanh saturates to exactly 1.0 in double precision near 19.06; staying
// below that keeps actions strictly inside (-1, 1)
inline constexpr double kPreSquashLimit = 18.0;

/// Mean and clamped log-standard-deviation of the action Gaussian.
/// Columns are batch entries.
struct GaussianPolicyOutput {
  MatrixXd mean;
  MatrixXd log_std;              // after clamping to [kLogStdMin, kLogStdMax]
  MatrixXd log_std_clamp_mask;   // 1 where the clamp was inactive
};

/// Splits a raw actor output (2*action_dim x batch) into mean rows and
/// clamped log-std rows.
GaussianPolicyOutput split_policy_output(const MatrixXd& actor_output);

/// Squashed Gaussian sample with its log-density. Keeps the intermediates
/// needed by squashed_sample_backward.
struct SquashedSample {
  MatrixXd action;        // tanh(mean + noise * std), strictly inside (-1, 1)
  RowVectorXd log_prob;   // per batch column
  MatrixXd noise;
  MatrixXd std;
  MatrixXd pre_squash_active;  // 1 where the pre-squash clamp was inactive
};

SquashedSample sample_squashed_action(const GaussianPolicyOutput& out, const MatrixXd& noise);

/// Gradient of (action_grad . action + log_prob_grad . log_prob) with
/// respect to the raw actor output, as a (2*action_dim x batch) matrix.
MatrixXd squashed_sample_backward(const GaussianPolicyOutput& out, const SquashedSample& sample,
                                  const MatrixXd& action_grad, const RowVectorXd& log_prob_grad);

/// Max relative error between an externally supplied gradient bundle and
/// central finite differences of sum(forward(input)) over all parameters.
double compare_gradients_to_finite_differences(const Network& net, const VectorXd& input, double h,
                                               const GradientBundle& bundle);

/// Max relative error of the network's own backward pass against central
/// finite differences over every parameter.
double finite_difference_check(const Network& net, const VectorXd& input, double h);

}  // namespace pregrasp
