#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>

#include "tgopt/data_model.hpp"
#include "tgopt/neural.hpp"

namespace tgopt {

/// Floor applied to loss denominators of degenerate zero-loss tasks.
inline constexpr double kCurveEpsilon = 1e-12;

/// Single-task baseline plus the learning-curve features derived from it.
struct StlResult {
  std::string task_id;
  double final_loss = 0.0;  // loss metric on the test split
  LearningCurve curve;      // validation loss over training
  std::map<double, double> curve_grads;
  double fit_a = 0.0;
  double fit_b = 0.0;
  double target_mean = 0.0;
  double target_sigma = 0.0;
  double target_var = 0.0;
  std::size_t sample_size = 0;
  /// Classification only (AUC is absent when the test split has one class).
  std::optional<double> test_error_rate;
  std::optional<double> test_auc;
};

/// Trains one network on the task's train split and summarizes the run.
/// Target statistics and sample size describe the training rows.
StlResult run_stl(const TaskSplit& task, const NetSpec& spec, const TrainConfig& config);

/// (L(x) - L(1)) / L(1), with L(1) floored at kCurveEpsilon.
double curve_gradient(const LearningCurve& curve, double fraction);

/// Least squares fit of y = a ln(x) + b.
std::pair<double, double> fit_log(std::span<const double> x, std::span<const double> y);

/// Fits y_i = a ln(i) + b where i = 1, 2, ... indexes the curve points and
/// y_i = (L_i - L_1) / L_1 is the relative change from the first recorded loss.
std::pair<double, double> fit_log_curve(const LearningCurve& curve);

}  // namespace tgopt
