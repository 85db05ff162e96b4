#include <cmath>
#include <limits>

#include "check_code.hpp"
#include "tgopt/baselines.hpp"
#include "tgopt/rng.hpp"

using namespace tgopt;

namespace {

// Gains high inside blocks {0,1,2}, {3,4}, {5} and negative across them.
Eigen::MatrixXd block_gains() {
  const int block[] = {0, 0, 0, 1, 1, 2};
  Eigen::MatrixXd g(6, 6);
  for (int i = 0; i < 6; ++i) {
    for (int j = 0; j < 6; ++j) {
      g(i, j) = i == j ? 0.0 : block[i] == block[j] ? 0.4 + 0.01 * (i + j) : -0.3 - 0.01 * (i + j);
    }
  }
  return g;
}

}  // namespace

TEST_CASE("gain distances") {
  CHECK(gain_distance(GainTransform::Exponential, 0.0) == doctest::Approx(1.0));
  CHECK(gain_distance(GainTransform::Exponential, 1.0) == doctest::Approx(std::exp(-1.0)));
  CHECK(gain_distance(GainTransform::Logistic, 0.0) == doctest::Approx(0.5));
  CHECK(gain_distance(GainTransform::Logistic, 2.0) < gain_distance(GainTransform::Logistic, 1.0));
  CHECK(gain_transform_from_string("logistic") == GainTransform::Logistic);
  CHECK(linkage_from_string(to_string(Linkage::Complete)) == Linkage::Complete);
  CHECK_THROWS_AS(linkage_from_string("ward"), Error);
}

TEST_CASE("hierarchical clustering recovers blocks under every linkage") {
  const Partition want(6, {GroupKey{0, 1, 2}, GroupKey{3, 4}, GroupKey{5}});
  for (auto l : {Linkage::Single, Linkage::Average, Linkage::Complete}) {
    for (auto t : {GainTransform::Exponential, GainTransform::Logistic}) {
      CHECK(hierarchical_baseline(block_gains(), t, l, 3) == want);
    }
  }
}

TEST_CASE("hierarchical cut extremes") {
  const auto g = block_gains();
  CHECK(hierarchical_baseline(g, GainTransform::Exponential, Linkage::Average, 6) ==
        Partition::singletons(6));
  CHECK(hierarchical_baseline(g, GainTransform::Exponential, Linkage::Average, 1) ==
        Partition::single_group(6));
}

TEST_CASE("equal distances merge the lowest ids first") {
  Eigen::MatrixXd g = Eigen::MatrixXd::Constant(4, 4, 0.2);
  const auto p = hierarchical_baseline(g, GainTransform::Exponential, Linkage::Single, 3);
  CHECK(p == Partition(4, {GroupKey{0, 1}, GroupKey{2}, GroupKey{3}}));
}

TEST_CASE("missing gains are rejected") {
  auto g = block_gains();
  g(1, 4) = g(4, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_CODE(hierarchical_baseline(g, GainTransform::Exponential, Linkage::Average, 2),
             ErrorCode::MissingPairGain);
}

TEST_CASE("k-means recovers separated clusters and picks the elbow") {
  Rng rng(1);
  std::vector<Eigen::VectorXd> v;
  const double centers[3][2] = {{0, 0}, {10, 0}, {0, 10}};
  for (int i = 0; i < 9; ++i) {
    Eigen::VectorXd x(2);
    x << centers[i % 3][0] + 0.1 * rng.normal(), centers[i % 3][1] + 0.1 * rng.normal();
    v.push_back(x);
  }
  const auto r = kmeans_baseline(v, 2, 5, 7);
  REQUIRE(r.fits.size() == 4);
  CHECK(r.fits[r.elbow].k == 3);
  CHECK(r.fits[r.elbow].partition ==
        Partition(9, {GroupKey{0, 3, 6}, GroupKey{1, 4, 7}, GroupKey{2, 5, 8}}));
  for (std::size_t i = 1; i < r.fits.size(); ++i) {
    CHECK(r.fits[i].inertia <= r.fits[i - 1].inertia + 1e-12);
  }
  CHECK(kmeans_fit(v, 3, 7).inertia == doctest::Approx(r.fits[1].inertia));
}

TEST_CASE("k-means with fewer than three fits uses the last k") {
  std::vector<Eigen::VectorXd> v;
  for (int i = 0; i < 4; ++i) v.push_back(Eigen::VectorXd::Constant(1, i * i));
  const auto r = kmeans_baseline(v, 2, 3, 1);
  REQUIRE(r.fits.size() == 2);
  CHECK(r.elbow == 1);
}

TEST_CASE("identical vectors are degenerate") {
  std::vector<Eigen::VectorXd> v(5, Eigen::VectorXd::Ones(3));
  CHECK_CODE(kmeans_baseline(v, 2, 3, 1), ErrorCode::DegenerateVectors);
}
