#include "tgopt/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "tgopt/error.hpp"
#include "tgopt/rng.hpp"

namespace tgopt {

std::string_view to_string(GainTransform t) noexcept {
  return t == GainTransform::Exponential ? "exponential" : "logistic";
}

GainTransform gain_transform_from_string(std::string_view s) {
  if (s == "exponential") return GainTransform::Exponential;
  if (s == "logistic") return GainTransform::Logistic;
  throw Error(ErrorCode::ConfigInvalid, "unknown gain transform '" + std::string(s) + "'");
}

std::string_view to_string(Linkage l) noexcept {
  switch (l) {
    case Linkage::Single: return "single";
    case Linkage::Average: return "average";
    case Linkage::Complete: return "complete";
  }
  return "average";
}

Linkage linkage_from_string(std::string_view s) {
  if (s == "single") return Linkage::Single;
  if (s == "average") return Linkage::Average;
  if (s == "complete") return Linkage::Complete;
  throw Error(ErrorCode::ConfigInvalid, "unknown linkage '" + std::string(s) + "'");
}

double gain_distance(GainTransform t, double gain) {
  return t == GainTransform::Exponential ? std::exp(-gain) : 1.0 / (1.0 + std::exp(gain));
}

Partition hierarchical_baseline(const Eigen::MatrixXd& pair_gains, GainTransform transform,
                                Linkage linkage, std::size_t k) {
  const auto n = static_cast<std::size_t>(pair_gains.rows());
  if (pair_gains.cols() != pair_gains.rows() || n == 0) {
    throw Error(ErrorCode::ShapeMismatch, "gain matrix must be square and nonempty");
  }
  if (k < 1 || k > n) throw Error(ErrorCode::OutOfRange, "k must be in [1, n]");

  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(pair_gains.rows(), pair_gains.cols());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double g = pair_gains(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      if (std::isnan(g)) {
        throw Error(ErrorCode::MissingPairGain,
                    "no gain for pair (" + std::to_string(i) + "," + std::to_string(j) + ")");
      }
      d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = gain_distance(transform, g);
      d(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = gain_distance(transform, g);
    }
  }

  // Clusters stay sorted by smallest member, so scanning (a, b) with a < b
  // visits candidate merges in task-id order.
  std::vector<std::vector<std::size_t>> clusters;
  for (std::size_t i = 0; i < n; ++i) clusters.push_back({i});

  auto link = [&](const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
    double best = linkage == Linkage::Single ? std::numeric_limits<double>::infinity() : 0.0;
    for (auto i : a) {
      for (auto j : b) {
        const double v = d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        if (linkage == Linkage::Single) best = std::min(best, v);
        else if (linkage == Linkage::Complete) best = std::max(best, v);
        else best += v;
      }
    }
    if (linkage == Linkage::Average) best /= static_cast<double>(a.size() * b.size());
    return best;
  };

  while (clusters.size() > k) {
    std::size_t ba = 0;
    std::size_t bb = 1;
    double bd = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < clusters.size(); ++a) {
      for (std::size_t b = a + 1; b < clusters.size(); ++b) {
        const double v = link(clusters[a], clusters[b]);
        if (v < bd) {
          bd = v;
          ba = a;
          bb = b;
        }
      }
    }
    auto merged = clusters[ba];
    merged.insert(merged.end(), clusters[bb].begin(), clusters[bb].end());
    std::sort(merged.begin(), merged.end());
    clusters[ba] = std::move(merged);
    clusters.erase(clusters.begin() + static_cast<std::ptrdiff_t>(bb));
  }

  std::vector<GroupKey> groups;
  for (auto& c : clusters) groups.emplace_back(std::move(c));
  return Partition(n, std::move(groups));
}

namespace {

struct Assignment {
  std::vector<std::size_t> labels;
  double inertia = 0.0;
};

Assignment lloyd(std::span<const Eigen::VectorXd> x, std::size_t k, Rng& rng) {
  const std::size_t n = x.size();
  std::vector<Eigen::VectorXd> centers;
  centers.push_back(x[rng.index(n)]);
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  while (centers.size() < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], (x[i] - centers.back()).squaredNorm());
      total += d2[i];
    }
    std::size_t pick = 0;
    if (total <= 0.0) {
      pick = rng.index(n);
    } else {
      double u = rng.uniform() * total;
      pick = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        u -= d2[i];
        if (u < 0.0 && d2[i] > 0.0) {
          pick = i;
          break;
        }
      }
    }
    centers.push_back(x[pick]);
  }

  Assignment a;
  a.labels.assign(n, 0);
  for (int iter = 0; iter < 300; ++iter) {
    bool changed = iter == 0;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t best = 0;
      double bd = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < k; ++c) {
        const double v = (x[i] - centers[c]).squaredNorm();
        if (v < bd) {
          bd = v;
          best = c;
        }
      }
      if (a.labels[i] != best) {
        a.labels[i] = best;
        changed = true;
      }
    }
    if (!changed) break;
    for (std::size_t c = 0; c < k; ++c) {
      Eigen::VectorXd sum = Eigen::VectorXd::Zero(x[0].size());
      std::size_t count = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (a.labels[i] == c) {
          sum += x[i];
          ++count;
        }
      }
      if (count > 0) centers[c] = sum / static_cast<double>(count);
    }
  }
  a.inertia = 0.0;
  for (std::size_t i = 0; i < n; ++i) a.inertia += (x[i] - centers[a.labels[i]]).squaredNorm();
  return a;
}

void check_vectors(std::span<const Eigen::VectorXd> vectors) {
  if (vectors.empty()) throw Error(ErrorCode::DegenerateVectors, "no task vectors");
  for (const auto& v : vectors) {
    if (v.size() != vectors[0].size()) {
      throw Error(ErrorCode::ShapeMismatch, "task vectors differ in length");
    }
  }
  bool all_same = true;
  for (const auto& v : vectors) all_same = all_same && v == vectors[0];
  if (all_same) throw Error(ErrorCode::DegenerateVectors, "all task vectors are identical");
}

}  // namespace

KMeansFit kmeans_fit(std::span<const Eigen::VectorXd> vectors, std::size_t k, std::uint64_t seed,
                     int restarts) {
  check_vectors(vectors);
  if (k < 1 || k > vectors.size()) throw Error(ErrorCode::OutOfRange, "k must be in [1, n]");
  Assignment best;
  best.inertia = std::numeric_limits<double>::infinity();
  for (int r = 0; r < std::max(1, restarts); ++r) {
    Rng rng(derive_seed(derive_seed(seed, static_cast<std::uint64_t>(k)),
                        static_cast<std::uint64_t>(r)));
    auto a = lloyd(vectors, k, rng);
    if (a.inertia < best.inertia) best = std::move(a);
  }
  return {k, Partition::from_labels(best.labels), best.inertia};
}

KMeansResult kmeans_baseline(std::span<const Eigen::VectorXd> vectors, std::size_t k_min,
                             std::size_t k_max, std::uint64_t seed, int restarts) {
  check_vectors(vectors);
  if (k_min < 1 || k_min > k_max || k_max > vectors.size()) {
    throw Error(ErrorCode::OutOfRange, "k range must lie in [1, n]");
  }
  KMeansResult res;
  for (std::size_t k = k_min; k <= k_max; ++k) res.fits.push_back(kmeans_fit(vectors, k, seed, restarts));
  if (res.fits.size() >= 3) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i + 1 < res.fits.size(); ++i) {
      const double d2 = res.fits[i - 1].inertia - 2.0 * res.fits[i].inertia + res.fits[i + 1].inertia;
      if (d2 > best) {
        best = d2;
        res.elbow = i;
      }
    }
  } else {
    res.elbow = res.fits.size() - 1;
  }
  return res;
}

}  // namespace tgopt
