#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "tgopt/partition.hpp"

namespace tgopt {

enum class GainTransform { Exponential, Logistic };
enum class Linkage { Single, Average, Complete };

std::string_view to_string(GainTransform t) noexcept;
GainTransform gain_transform_from_string(std::string_view s);
std::string_view to_string(Linkage l) noexcept;
Linkage linkage_from_string(std::string_view s);

/// exp(-gain) or 1 / (1 + exp(gain)).
double gain_distance(GainTransform t, double gain);

/// Agglomerative clustering on transformed pairwise gains, cut at k clusters.
/// Equal linkage distances merge the pair with the smaller task ids first.
/// Throws Error(MissingPairGain) for a NaN off-diagonal entry.
Partition hierarchical_baseline(const Eigen::MatrixXd& pair_gains, GainTransform transform,
                                Linkage linkage, std::size_t k);

struct KMeansFit {
  std::size_t k = 0;
  Partition partition;
  double inertia = 0.0;
};

struct KMeansResult {
  std::vector<KMeansFit> fits;  // one per k, ascending
  std::size_t elbow = 0;        // index into fits
};

/// Lloyd's algorithm with k-means++ seeding and `restarts` restarts per k;
/// the elbow is the k with the largest second difference of inertia.
/// Throws Error(DegenerateVectors) when all vectors coincide.
KMeansResult kmeans_baseline(std::span<const Eigen::VectorXd> vectors, std::size_t k_min,
                             std::size_t k_max, std::uint64_t seed, int restarts = 20);

/// One k-means run (exposed for tests).
KMeansFit kmeans_fit(std::span<const Eigen::VectorXd> vectors, std::size_t k, std::uint64_t seed,
                     int restarts = 20);

}  // namespace tgopt
