#include <cmath>
#include <limits>

#include "check_code.hpp"
#include "tgopt/features.hpp"
#include "tgopt/rng.hpp"

using namespace tgopt;

namespace {

TaskProfile profile(const std::string& id, int rows, std::uint64_t seed, bool binary = false) {
  Rng rng(seed);
  Task t;
  t.id = id;
  t.features.resize(rows, 3);
  t.targets.resize(rows);
  for (Eigen::Index i = 0; i < t.features.size(); ++i) {
    t.features.data()[i] = binary ? double(rng.index(2)) : rng.normal();
  }
  for (int i = 0; i < rows; ++i) t.targets(i) = rng.normal();
  StlResult stl;
  stl.task_id = id;
  stl.fit_a = rng.normal();
  stl.fit_b = rng.normal();
  for (double f : default_curve_checkpoints()) stl.curve.points.push_back({f, rng.uniform(0.5, 1.5)});
  for (const auto& c : stl.curve.points) {
    if (c.fraction < 1.0) stl.curve_grads[c.fraction] = curve_gradient(stl.curve, c.fraction);
  }
  return make_task_profile(t, t, stl, binary);
}

}  // namespace

TEST_CASE("row distances") {
  Eigen::RowVectorXd a(3);
  Eigen::RowVectorXd b(3);
  a << 0, 0, 1;
  b << 3, 4, 1;
  CHECK(row_distance(DistanceKind::Euclidean, a, b) == doctest::Approx(5.0));
  CHECK(row_distance(DistanceKind::Manhattan, a, b) == doctest::Approx(7.0));
  a << 0, 1, 1;
  b << 1, 1, 0;
  CHECK(row_distance(DistanceKind::Hamming, a, b) == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("average distances") {
  Eigen::MatrixXd x(3, 1);
  x << 0, 1, 3;
  CHECK(avg_within_distance(x, DistanceKind::Manhattan) == doctest::Approx(2.0));
  Eigen::MatrixXd y(1, 1);
  y << 10;
  CHECK(avg_between_distance(x, y, DistanceKind::Manhattan) == doctest::Approx(26.0 / 3.0));
  // Union {0,1,3,10}: pair sum 1+3+10+2+9+7 = 32 over 6 pairs.
  CHECK(avg_combined_distance(x, y, DistanceKind::Manhattan) == doctest::Approx(32.0 / 6.0));
  Eigen::MatrixXd nb(2, 1);
  nb << 0, 0.5;
  CHECK_CODE(avg_within_distance(nb, DistanceKind::Hamming), ErrorCode::NonBinaryForHamming);
}

TEST_CASE("capped subsample is deterministic") {
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(300, 2);
  DistanceOptions o;
  o.cap = 50;
  const double a = avg_within_distance(x, DistanceKind::Euclidean, o);
  CHECK(a == avg_within_distance(x, DistanceKind::Euclidean, o));
  CHECK(a == doctest::Approx(avg_within_distance(x, DistanceKind::Euclidean)).epsilon(0.2));
}

TEST_CASE("variants by feature type") {
  CHECK(distance_variants(false).size() == 4);
  CHECK(distance_variants(true).size() == 3);
  CHECK(pair_feature_names(false).size() == 70);
  CHECK(pair_feature_names(true).size() == 64);
}

TEST_CASE("pair catalog swaps per-task entries under exchange") {
  const auto a = profile("a", 12, 1);
  const auto b = profile("b", 9, 2);
  const SharedPairStats s{0.3, -0.2};
  const auto ab = pair_features(a, b, s, false);
  const auto ba = pair_features(b, a, s, false);
  CHECK(ab.names() == pair_feature_names(false));
  for (const auto& name : ab.names()) {
    const bool first = name.size() > 2 && name.compare(name.size() - 2, 2, "_i") == 0;
    const bool second = name.size() > 2 && name.compare(name.size() - 2, 2, "_j") == 0;
    if (first) {
      CHECK(ab.at(name) == ba.at(name.substr(0, name.size() - 2) + "_j"));
    } else if (!second) {
      CHECK_MESSAGE(ab.at(name) == doctest::Approx(ba.at(name)), name);
    }
  }
  CHECK(ab.at("inter_task_affinity") == 0.3);
  CHECK(ab.at("sample_size_i") == 12);
  CHECK_CODE(ab.at("nope"), ErrorCode::MissingFeature);
}

TEST_CASE("binary catalog has Hamming variants") {
  const auto a = profile("a", 10, 3, true);
  const auto b = profile("b", 10, 4, true);
  const auto f = pair_features(a, b, {}, true);
  CHECK(f.size() == 64);
  CHECK(f.get("dH_between").has_value());
  CHECK_FALSE(f.get("dE_scaled_between").has_value());
}

TEST_CASE("group features") {
  std::vector<TaskProfile> ps{profile("a", 10, 1), profile("b", 20, 2), profile("c", 30, 3)};
  auto tables = PairwiseTables::empty(3);
  CHECK(std::isnan(tables.gain(0, 1)));
  const double gains[3] = {0.1, 0.2, 0.6};
  int k = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = i + 1; j < 3; ++j, ++k) {
      tables.gain(i, j) = tables.gain(j, i) = gains[k];
      tables.weight_dot(i, j) = tables.weight_dot(j, i) = 1.0;
      tables.distance(i, j) = tables.distance(j, i) = 2.0 * (k + 1);
    }
  }
  const auto g = group_features(GroupKey{0, 1, 2}, tables, ps);
  CHECK(g.n_tasks == 3);
  CHECK(g.mean_sample_size == doctest::Approx(20.0));
  CHECK(g.pair_gain_mean == doctest::Approx(0.3));
  CHECK(g.pair_gain_var == doctest::Approx((0.04 + 0.01 + 0.09) / 3.0));
  CHECK(g.pair_gain_std == doctest::Approx(std::sqrt(g.pair_gain_var)));
  CHECK(g.mean_group_distance == doctest::Approx(4.0));
  CHECK(g.pair_wdot_mean == doctest::Approx(1.0));
  CHECK(g.to_vector().names() == GroupFeatures::names());

  tables.gain(0, 2) = tables.gain(2, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_CODE(group_features(GroupKey{0, 1, 2}, tables, ps), ErrorCode::MissingPairGain);
}

TEST_CASE("pearson") {
  const std::vector<double> x{1, 2, 3, 4};
  const std::vector<double> y{2, 4, 6, 8};
  const std::vector<double> z{4, 3, 2, 1};
  const std::vector<double> c{1, 1, 1, 1};
  CHECK(pearson(x, y) == doctest::Approx(1.0));
  CHECK(pearson(x, z) == doctest::Approx(-1.0));
  CHECK_CODE(pearson(x, c), ErrorCode::ZeroVariance);
}

TEST_CASE("row duplication keeps between distances and shrinks within distances") {
  const Eigen::MatrixXd a = Eigen::MatrixXd::Random(6, 2);
  const Eigen::MatrixXd b = Eigen::MatrixXd::Random(5, 2);
  Eigen::MatrixXd a2(12, 2);
  Eigen::MatrixXd b2(10, 2);
  a2 << a, a;
  b2 << b, b;
  const auto k = DistanceKind::Euclidean;
  CHECK(avg_between_distance(a2, b2, k) == doctest::Approx(avg_between_distance(a, b, k)));
  // Copies of a row pair at distance 0, so the distinct-pair mean falls by 2(n-1)/(2n-1).
  CHECK(avg_within_distance(a2, k) ==
        doctest::Approx(avg_within_distance(a, k) * 2.0 * 5.0 / 11.0));
}
