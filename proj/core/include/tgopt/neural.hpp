#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace tgopt {

enum class Activation { Linear, ReLU, Tanh, Sigmoid };
enum class LossKind { MSE, BCE };
enum class MetricKind { MSE, LogLoss, ErrorRate, AUC };

std::string_view to_string(Activation a) noexcept;
Activation activation_from_string(std::string_view s);
std::string_view to_string(LossKind k) noexcept;
LossKind loss_kind_from_string(std::string_view s);

/// Sigmoid outputs are clamped to [kSigmoidClamp, 1 - kSigmoidClamp].
inline constexpr double kSigmoidClamp = 1e-7;

/// Feed-forward network shape: widths run input -> hidden... -> output.
struct NetSpec {
  std::vector<int> layer_widths;
  Activation hidden_activation = Activation::Tanh;
  Activation output_activation = Activation::Linear;
  double learning_rate = 1e-3;

  void validate() const;
  int input_width() const { return layer_widths.front(); }
  int output_width() const { return layer_widths.back(); }
  std::size_t n_layers() const { return layer_widths.size() - 1; }
  /// Activation applied after dense layer `layer`.
  Activation activation(std::size_t layer) const {
    return layer + 1 == n_layers() ? output_activation : hidden_activation;
  }
};

struct DenseLayer {
  Eigen::MatrixXd weights;  // out x in
  Eigen::VectorXd bias;     // out
};

struct Params {
  std::vector<DenseLayer> layers;

  std::size_t parameter_count() const;
  Eigen::VectorXd flatten() const;
  void assign_flat(const Eigen::VectorXd& flat);
  Params zeros_like() const;
  bool all_finite() const;
};

/// Trainable parameter count of a dense stack with these widths.
std::size_t parameter_count(std::span<const int> layer_widths);

/// Glorot-uniform weights, zero biases.
Params init_params(const NetSpec& spec, std::uint64_t seed);
/// Same initialization rule for an arbitrary list of (in, out) shapes.
Params init_layers(std::span<const std::pair<int, int>> shapes, std::uint64_t seed);

/// Per-layer activations recorded during a forward pass; needed for backprop.
struct ForwardTape {
  std::vector<Eigen::MatrixXd> inputs;
  std::vector<Eigen::MatrixXd> outputs;
};

Eigen::MatrixXd apply_activation(Activation a, const Eigen::MatrixXd& z);

/// Runs a stack of dense layers; rows of x are samples.
Eigen::MatrixXd forward_layers(std::span<const DenseLayer> layers,
                               std::span<const Activation> activations, const Eigen::MatrixXd& x,
                               ForwardTape* tape = nullptr);

/// Backpropagates d(loss)/d(output) through a stack recorded in `tape`.
/// Gradients are accumulated into `grads`; returns d(loss)/d(input).
Eigen::MatrixXd backward_layers(std::span<const DenseLayer> layers,
                                std::span<const Activation> activations, const ForwardTape& tape,
                                const Eigen::MatrixXd& grad_output, std::span<DenseLayer> grads);

/// Throws Error(ShapeMismatch) when x.cols() differs from the input width.
Eigen::MatrixXd forward(const NetSpec& spec, const Params& params, const Eigen::MatrixXd& x);

double loss(LossKind kind, const Eigen::VectorXd& pred, const Eigen::VectorXd& y);
/// d(mean loss)/d(pred).
Eigen::VectorXd loss_gradient(LossKind kind, const Eigen::VectorXd& pred,
                              const Eigen::VectorXd& y);

/// Exact gradient of the mean batch loss with respect to every parameter.
Params grad(const NetSpec& spec, const Params& params, const Eigen::MatrixXd& x,
            const Eigen::VectorXd& y, LossKind kind);

struct AdamState {
  Params m;
  Params v;
  long step = 0;

  static AdamState for_params(const Params& p);
};

inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEpsilon = 1e-8;

/// One bias-corrected Adam update, in place.
void adam_step(Params& params, const Params& grads, AdamState& state, double learning_rate);

/// Curve checkpoints used when none are configured.
std::vector<double> default_curve_checkpoints();

struct TrainConfig {
  int epochs = 100;
  /// Unset selects clamp(n / 16, 8, 128).
  std::optional<int> batch_size;
  std::uint64_t seed = 0;
  LossKind loss_kind = LossKind::MSE;
  std::vector<double> curve_checkpoints = default_curve_checkpoints();

  void validate() const;
  int effective_batch_size(std::size_t n_rows) const;
};

int auto_batch_size(std::size_t n_rows);

struct CurvePoint {
  double fraction;
  double loss;
};

struct LearningCurve {
  std::vector<CurvePoint> points;

  /// Loss recorded at `fraction`, if present.
  std::optional<double> at(double fraction) const;
};

/// Step indices (1-based) at which each checkpoint fraction is recorded.
std::vector<long> checkpoint_steps(std::span<const double> fractions, long total_steps);

struct TrainResult {
  Params params;
  LearningCurve curve;
  double final_val_loss = 0.0;
};

/// Mini-batch Adam for config.epochs, validating at each curve checkpoint.
/// `init` warm-starts from existing parameters.
TrainResult train(const NetSpec& spec, const TrainConfig& config, const Eigen::MatrixXd& x_train,
                  const Eigen::VectorXd& y_train, const Eigen::MatrixXd& x_val,
                  const Eigen::VectorXd& y_val, const Params* init = nullptr);

double metric(MetricKind kind, const Eigen::VectorXd& pred, const Eigen::VectorXd& y);
MetricKind metric_for(LossKind kind) noexcept;

}  // namespace tgopt
