#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "tgopt/partition.hpp"
#include "tgopt/stl.hpp"

namespace tgopt {

enum class DistanceKind { Euclidean, Manhattan, Hamming };

std::string_view to_string(DistanceKind k) noexcept;

/// Guard for nS / nP denominators.
inline constexpr double kFeatureEpsilon = 1e-12;

struct DistanceOptions {
  /// Row cap per sample; larger samples are replaced by a seeded subsample.
  std::size_t cap = 512;
  std::uint64_t seed = 0x5eedULL;
};

double row_distance(DistanceKind kind, const Eigen::Ref<const Eigen::RowVectorXd>& a,
                    const Eigen::Ref<const Eigen::RowVectorXd>& b);

/// Mean distance over all unordered row pairs. Hamming is the fraction of
/// differing coordinates and needs 0/1 data (Error(NonBinaryForHamming)).
double avg_within_distance(const Eigen::MatrixXd& rows, DistanceKind kind,
                           const DistanceOptions& opts = {});
/// Mean distance over all cross pairs (one row from each sample).
double avg_between_distance(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, DistanceKind kind,
                            const DistanceOptions& opts = {});
/// avg_within_distance of the union of both samples.
double avg_combined_distance(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                             DistanceKind kind, const DistanceOptions& opts = {});

/// One distance family used by the pair catalog: a metric on raw or
/// z-scored features.
struct DistanceVariant {
  std::string name;  // "dE", "dM", "dH", "dE_scaled", "dM_scaled"
  DistanceKind kind;
  bool scaled;
};

/// Variants for a dataset: dE, dM, dE_scaled, dM_scaled for real-valued
/// features; dE, dM, dH for binary features.
std::vector<DistanceVariant> distance_variants(bool binary_features);

/// Per-task inputs of the pair catalog (computed once per task).
struct TaskProfile {
  std::string id;
  std::size_t sample_size = 0;
  Eigen::VectorXd targets;
  Eigen::MatrixXd raw_features;
  Eigen::MatrixXd scaled_features;
  StlResult stl;
  /// avg_within_distance per variant, in distance_variants() order.
  std::vector<double> within;
};

TaskProfile make_task_profile(const Task& raw_train, const Task& scaled_train, StlResult stl,
                              bool binary_features, const DistanceOptions& opts = {});

/// Statistics taken from the model trained on all tasks.
struct SharedPairStats {
  double inter_task_affinity = 0.0;  // mean of Z(i,j) and Z(j,i)
  double weight_dot = 0.0;           // W_i . W_j
};

/// Named feature vector with a fixed column order.
class FeatureVector {
 public:
  FeatureVector() = default;
  void add(std::string name, double value);
  std::size_t size() const noexcept { return values_.size(); }
  const std::vector<std::string>& names() const noexcept { return names_; }
  const std::vector<double>& values() const noexcept { return values_; }
  std::optional<double> get(std::string_view name) const;
  /// Throws Error(MissingFeature).
  double at(std::string_view name) const;

 private:
  std::vector<std::string> names_;
  std::vector<double> values_;
};

using PairFeatures = FeatureVector;

/// Canonical pair-catalog column names: 70 for real-valued features,
/// 64 for binary features.
std::vector<std::string> pair_feature_names(bool binary_features);

/// Full pair catalog for (ti, tj). Per-task entries carry suffix _i / _j and
/// swap under argument exchange; every other entry is symmetric.
PairFeatures pair_features(const TaskProfile& ti, const TaskProfile& tj,
                           const SharedPairStats& shared, bool binary_features,
                           const DistanceOptions& opts = {});

/// Lookup tables over task pairs; entries not yet computed hold NaN.
struct PairwiseTables {
  Eigen::MatrixXd gain;      // relative MTL gain of the pair model
  Eigen::MatrixXd weight_dot;
  Eigen::MatrixXd distance;  // between-task distance of the designated kind

  static PairwiseTables empty(std::size_t n_tasks);
  std::size_t n_tasks() const { return static_cast<std::size_t>(gain.rows()); }
};

struct GroupFeatures {
  double n_tasks = 0;
  double mean_sample_size = 0;
  double mean_target_var = 0;
  double mean_target_sigma = 0;
  double mean_group_distance = 0;
  double pair_gain_mean = 0;
  double pair_gain_var = 0;
  double pair_gain_std = 0;
  double pair_wdot_mean = 0;

  static const std::vector<std::string>& names();
  FeatureVector to_vector() const;
};

/// Group-level summary for |group| >= 3; pair statistics use population
/// moments over the C(k,2) unordered pairs. Throws Error(MissingPairGain).
GroupFeatures group_features(const GroupKey& group, const PairwiseTables& tables,
                             std::span<const TaskProfile> profiles);

/// Designated distance for group features: Hamming on binary features,
/// otherwise Euclidean on z-scored features.
double designated_pair_distance(const TaskProfile& ti, const TaskProfile& tj, bool binary_features,
                                const DistanceOptions& opts = {});

/// Pearson correlation. Throws Error(ZeroVariance) for a constant input.
double pearson(std::span<const double> x, std::span<const double> y);

}  // namespace tgopt
