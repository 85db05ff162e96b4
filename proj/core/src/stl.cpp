#include "tgopt/stl.hpp"

#include <cmath>

#include "tgopt/error.hpp"
#include "tgopt/rng.hpp"

namespace tgopt {

double curve_gradient(const LearningCurve& curve, double fraction) {
  const auto at_x = curve.at(fraction);
  const auto at_end = curve.at(1.0);
  if (!at_x || !at_end) {
    throw Error(ErrorCode::MissingCheckpoint, "no curve point at " + std::to_string(fraction));
  }
  const double end = std::max(*at_end, kCurveEpsilon);
  return (*at_x - *at_end) / end;
}

std::pair<double, double> fit_log(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw Error(ErrorCode::DegenerateFit, "need at least 2 points");
  }
  const double n = static_cast<double>(x.size());
  double sl = 0.0;
  double sll = 0.0;
  double sy = 0.0;
  double sly = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0)) throw Error(ErrorCode::DegenerateFit, "log fit needs x > 0");
    const double l = std::log(x[i]);
    sl += l;
    sll += l * l;
    sy += y[i];
    sly += l * y[i];
  }
  const double det = n * sll - sl * sl;
  if (std::abs(det) <= 1e-14 * std::max(1.0, n * sll)) {
    throw Error(ErrorCode::DegenerateFit, "all x values are equal");
  }
  const double a = (n * sly - sl * sy) / det;
  const double b = (sy - a * sl) / n;
  return {a, b};
}

std::pair<double, double> fit_log_curve(const LearningCurve& curve) {
  if (curve.points.size() < 2) throw Error(ErrorCode::DegenerateFit, "need at least 2 points");
  const double first = std::max(curve.points.front().loss, kCurveEpsilon);
  std::vector<double> x;
  std::vector<double> y;
  for (std::size_t i = 0; i < curve.points.size(); ++i) {
    x.push_back(static_cast<double>(i + 1));
    y.push_back((curve.points[i].loss - curve.points.front().loss) / first);
  }
  return fit_log(x, y);
}

StlResult run_stl(const TaskSplit& task, const NetSpec& spec, const TrainConfig& config) {
  TrainConfig cfg = config;
  cfg.seed = derive_seed(config.seed, "stl:" + task.id());
  const auto trained = train(spec, cfg, task.train.features, task.train.targets,
                             task.val.features, task.val.targets);

  StlResult r;
  r.task_id = task.id();
  r.curve = trained.curve;
  const Eigen::VectorXd pred = forward(spec, trained.params, task.test.features).col(0);
  r.final_loss = metric(metric_for(config.loss_kind), pred, task.test.targets);
  if (task.test.kind == TaskKind::Classification) {
    r.test_error_rate = metric(MetricKind::ErrorRate, pred, task.test.targets);
    try {
      r.test_auc = metric(MetricKind::AUC, pred, task.test.targets);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::DegenerateLabels) throw;
    }
  }
  for (const auto& p : r.curve.points) {
    if (p.fraction < 1.0) r.curve_grads[p.fraction] = curve_gradient(r.curve, p.fraction);
  }
  std::tie(r.fit_a, r.fit_b) = fit_log_curve(r.curve);

  const auto& y = task.train.targets;
  r.sample_size = task.train.n_samples();
  r.target_mean = y.mean();
  r.target_var = (y.array() - r.target_mean).square().mean();
  r.target_sigma = std::sqrt(r.target_var);
  // Keep the documented identity exact.
  r.target_var = r.target_sigma * r.target_sigma;
  return r;
}

}  // namespace tgopt
