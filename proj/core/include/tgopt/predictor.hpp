#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tgopt/data_model.hpp"
#include "tgopt/eval_cache.hpp"
#include "tgopt/features.hpp"
#include "tgopt/neural.hpp"
#include "tgopt/partition.hpp"

namespace tgopt {

/// Predictor network shape and the group features it reads.
struct PredictorArch {
  std::vector<std::string> feature_names = GroupFeatures::names();
  std::vector<int> hidden_widths{14, 10, 21, 15};
  Activation hidden_activation = Activation::Tanh;
  Activation output_activation = Activation::Linear;
  double learning_rate = 0.001247;

  void validate() const;
  NetSpec net_spec() const;
  std::size_t parameter_count() const;
};

struct PredictorConfig {
  int epochs = 200;
  std::optional<int> batch_size;
  std::uint64_t seed = 0;
  /// update_predictor continues from the current weights when true.
  bool warm_start = true;
};

struct TrainingRecord {
  GroupKey group;
  GroupFeatures features;
  double observed_gain = 0.0;
};

struct PredictorModel {
  std::vector<std::string> feature_names;
  NormalizationStats input_norm;
  NetSpec net;
  Params params;
  std::size_t trained_on = 0;

  /// Raw (unnormalized) feature row in feature_names order.
  Eigen::RowVectorXd feature_row(const GroupFeatures& gf) const;
  Eigen::VectorXd predict_rows(const Eigen::MatrixXd& raw) const;
};

/// Keeps the last record per group, ordered by GroupKey.
std::vector<TrainingRecord> dedup_records(std::span<const TrainingRecord> records);

/// Throws Error(TooFewRecords) with fewer than 10 distinct groups.
PredictorModel train_predictor(std::span<const TrainingRecord> records, const PredictorArch& arch,
                               const PredictorConfig& config);

/// Retrains on the full record set, from the current weights when
/// config.warm_start is set.
PredictorModel update_predictor(const PredictorModel& model,
                                std::span<const TrainingRecord> records,
                                const PredictorConfig& config);

double predict_gain(const PredictorModel& model, const GroupFeatures& gf);

/// Mean squared error of the model on a record set.
double predictor_mse(const PredictorModel& model, std::span<const TrainingRecord> records);

/// 1 - SSE/SST. Throws Error(ZeroVariance) when actual is constant.
double r_squared(std::span<const double> pred, std::span<const double> actual);

/// Everything needed to turn predicted gains into partition losses.
struct PredictionContext {
  const PairwiseTables* tables = nullptr;
  std::span<const TaskProfile> profiles;
};

/// Sum over groups: cached loss when known, else STL for singletons,
/// (1 - pair gain) * sum STL for pairs and (1 - predicted gain) * sum STL for
/// larger groups. A null model uses the mean pairwise gain for larger groups.
/// Throws Error(MissingPrerequisite).
double predict_partition_loss(const PredictorModel* model, const Partition& p,
                              const PredictionContext& ctx, const EvalCache& cache);

/// Training records for every cached group of size >= 3.
std::vector<TrainingRecord> records_from_cache(const EvalCache& cache,
                                               const PredictionContext& ctx);

/// Partition loss estimate queried by the search loop.
class LossSurrogate {
 public:
  virtual ~LossSurrogate() = default;
  virtual double predict(const Partition& p, const EvalCache& cache) = 0;
  /// Called every gamma_retrain iterations with everything evaluated so far.
  virtual void update(const EvalCache&) {}
};

/// Surrogate backed by the groupwise gain predictor.
class GainPredictorSurrogate : public LossSurrogate {
 public:
  GainPredictorSurrogate(PredictionContext ctx, PredictorArch arch, PredictorConfig config,
                         std::optional<PredictorModel> model = std::nullopt);

  double predict(const Partition& p, const EvalCache& cache) override;
  void update(const EvalCache& cache) override;

  const std::optional<PredictorModel>& model() const noexcept { return model_; }
  int n_updates() const noexcept { return n_updates_; }

 private:
  PredictionContext ctx_;
  PredictorArch arch_;
  PredictorConfig config_;
  std::optional<PredictorModel> model_;
  int n_updates_ = 0;
};

}  // namespace tgopt
