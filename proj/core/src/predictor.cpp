#include "tgopt/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "tgopt/error.hpp"
#include "tgopt/mtl.hpp"
#include "tgopt/rng.hpp"

namespace tgopt {

void PredictorArch::validate() const {
  if (feature_names.empty()) throw Error(ErrorCode::InvalidSpec, "predictor needs >= 1 feature");
  const auto& known = GroupFeatures::names();
  for (const auto& f : feature_names) {
    if (std::find(known.begin(), known.end(), f) == known.end()) {
      throw Error(ErrorCode::MissingFeature, "unknown group feature '" + f + "'");
    }
  }
  if (hidden_widths.empty()) throw Error(ErrorCode::InvalidSpec, "predictor needs >= 1 hidden layer");
  for (int w : hidden_widths) {
    if (w < 1) throw Error(ErrorCode::InvalidSpec, "hidden width must be >= 1");
  }
  if (!(learning_rate > 0.0)) throw Error(ErrorCode::InvalidSpec, "learning rate must be > 0");
}

NetSpec PredictorArch::net_spec() const {
  NetSpec spec;
  spec.layer_widths.push_back(static_cast<int>(feature_names.size()));
  spec.layer_widths.insert(spec.layer_widths.end(), hidden_widths.begin(), hidden_widths.end());
  spec.layer_widths.push_back(1);
  spec.hidden_activation = hidden_activation;
  spec.output_activation = output_activation;
  spec.learning_rate = learning_rate;
  return spec;
}

std::size_t PredictorArch::parameter_count() const {
  const auto spec = net_spec();
  return tgopt::parameter_count(spec.layer_widths);
}

Eigen::RowVectorXd PredictorModel::feature_row(const GroupFeatures& gf) const {
  const FeatureVector fv = gf.to_vector();
  Eigen::RowVectorXd row(static_cast<Eigen::Index>(feature_names.size()));
  for (std::size_t k = 0; k < feature_names.size(); ++k) {
    row(static_cast<Eigen::Index>(k)) = fv.at(feature_names[k]);
  }
  return row;
}

Eigen::VectorXd PredictorModel::predict_rows(const Eigen::MatrixXd& raw) const {
  const Eigen::MatrixXd out = forward(net, params, input_norm.apply(raw));
  return out.col(0);
}

std::vector<TrainingRecord> dedup_records(std::span<const TrainingRecord> records) {
  std::map<GroupKey, const TrainingRecord*> latest;
  for (const auto& r : records) latest[r.group] = &r;
  std::vector<TrainingRecord> out;
  out.reserve(latest.size());
  for (const auto& [g, r] : latest) out.push_back(*r);
  return out;
}

namespace {

constexpr std::size_t kMinRecords = 10;

struct Design {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
};

Design design_matrix(std::span<const TrainingRecord> records,
                     const std::vector<std::string>& names) {
  Design d{Eigen::MatrixXd(static_cast<Eigen::Index>(records.size()),
                           static_cast<Eigen::Index>(names.size())),
           Eigen::VectorXd(static_cast<Eigen::Index>(records.size()))};
  for (std::size_t i = 0; i < records.size(); ++i) {
    const FeatureVector fv = records[i].features.to_vector();
    for (std::size_t k = 0; k < names.size(); ++k) {
      d.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = fv.at(names[k]);
    }
    d.y(static_cast<Eigen::Index>(i)) = records[i].observed_gain;
  }
  return d;
}

PredictorModel fit(std::span<const TrainingRecord> raw_records, const NetSpec& spec,
                   const std::vector<std::string>& names, const PredictorConfig& config,
                   const Params* init) {
  const auto records = dedup_records(raw_records);
  if (records.size() < kMinRecords) {
    throw Error(ErrorCode::TooFewRecords, "predictor needs >= 10 distinct groups, got " +
                                              std::to_string(records.size()));
  }
  const Design d = design_matrix(records, names);

  PredictorModel model;
  model.feature_names = names;
  model.input_norm = NormalizationStats::compute(d.x);
  model.net = spec;
  model.trained_on = records.size();

  const Eigen::MatrixXd xz = model.input_norm.apply(d.x);
  TrainConfig tc;
  tc.epochs = config.epochs;
  tc.batch_size = config.batch_size;
  tc.seed = config.seed;
  tc.loss_kind = LossKind::MSE;
  tc.curve_checkpoints = {1.0};
  auto result = train(spec, tc, xz, d.y, xz, d.y, init);
  model.params = std::move(result.params);
  return model;
}

}  // namespace

PredictorModel train_predictor(std::span<const TrainingRecord> records, const PredictorArch& arch,
                               const PredictorConfig& config) {
  arch.validate();
  return fit(records, arch.net_spec(), arch.feature_names, config, nullptr);
}

PredictorModel update_predictor(const PredictorModel& model,
                                std::span<const TrainingRecord> records,
                                const PredictorConfig& config) {
  PredictorModel next = fit(records, model.net, model.feature_names, config,
                            config.warm_start ? &model.params : nullptr);
  next.trained_on = std::max(next.trained_on, model.trained_on);
  return next;
}

double predict_gain(const PredictorModel& model, const GroupFeatures& gf) {
  return model.predict_rows(model.feature_row(gf))(0);
}

double predictor_mse(const PredictorModel& model, std::span<const TrainingRecord> records) {
  const auto deduped = dedup_records(records);
  const Design d = design_matrix(deduped, model.feature_names);
  return (model.predict_rows(d.x) - d.y).squaredNorm() / static_cast<double>(d.y.size());
}

double r_squared(std::span<const double> pred, std::span<const double> actual) {
  if (pred.size() != actual.size() || actual.size() < 2) {
    throw Error(ErrorCode::ShapeMismatch, "r_squared needs equal lengths >= 2");
  }
  double mean = 0.0;
  for (double a : actual) mean += a;
  mean /= static_cast<double>(actual.size());
  double sse = 0.0;
  double sst = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    sse += (pred[i] - actual[i]) * (pred[i] - actual[i]);
    sst += (actual[i] - mean) * (actual[i] - mean);
  }
  if (sst <= 0.0) throw Error(ErrorCode::ZeroVariance, "actual values are constant");
  return 1.0 - sse / sst;
}

namespace {

GroupFeatures features_for(const GroupKey& g, const PredictionContext& ctx) {
  if (!ctx.tables) throw Error(ErrorCode::MissingPrerequisite, "no pairwise tables");
  try {
    return group_features(g, *ctx.tables, ctx.profiles);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::MissingPairGain) {
      throw Error(ErrorCode::MissingPrerequisite, e.what());
    }
    throw;
  }
}

}  // namespace

double predict_partition_loss(const PredictorModel* model, const Partition& p,
                              const PredictionContext& ctx, const EvalCache& cache) {
  double total = 0.0;
  for (const auto& g : p.groups()) {
    if (const auto* e = cache.find(g)) {
      total += e->total_loss;
      continue;
    }
    const double stl = cache.stl_sum(g);
    if (g.size() == 1) {
      total += stl;
    } else if (g.size() == 2) {
      if (!ctx.tables) throw Error(ErrorCode::MissingPrerequisite, "no pairwise tables");
      const double gain = ctx.tables->gain(static_cast<Eigen::Index>(g.members()[0]),
                                           static_cast<Eigen::Index>(g.members()[1]));
      if (std::isnan(gain)) {
        throw Error(ErrorCode::MissingPrerequisite, "no pairwise gain for " + g.to_string());
      }
      total += (1.0 - gain) * stl;
    } else {
      const GroupFeatures gf = features_for(g, ctx);
      const double gain = model ? predict_gain(*model, gf) : gf.pair_gain_mean;
      total += (1.0 - gain) * stl;
    }
  }
  return total;
}

std::vector<TrainingRecord> records_from_cache(const EvalCache& cache,
                                               const PredictionContext& ctx) {
  std::vector<TrainingRecord> out;
  for (const auto& [g, e] : cache.entries()) {
    if (g.size() < 3) continue;
    out.push_back({g, features_for(g, ctx), relative_mtl_gain(cache.stl_sum(g), e.total_loss)});
  }
  return out;
}

GainPredictorSurrogate::GainPredictorSurrogate(PredictionContext ctx, PredictorArch arch,
                                               PredictorConfig config,
                                               std::optional<PredictorModel> model)
    : ctx_(ctx), arch_(std::move(arch)), config_(config), model_(std::move(model)) {}

double GainPredictorSurrogate::predict(const Partition& p, const EvalCache& cache) {
  return predict_partition_loss(model_ ? &*model_ : nullptr, p, ctx_, cache);
}

void GainPredictorSurrogate::update(const EvalCache& cache) {
  const auto records = records_from_cache(cache, ctx_);
  if (records.size() < kMinRecords) return;
  PredictorConfig cfg = config_;
  cfg.seed = derive_seed(config_.seed, static_cast<std::uint64_t>(++n_updates_));
  model_ = model_ ? update_predictor(*model_, records, cfg) : train_predictor(records, arch_, cfg);
}

}  // namespace tgopt
