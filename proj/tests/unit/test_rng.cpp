#include <set>

#include "doctest.h"
#include "tgopt/rng.hpp"

using namespace tgopt;

TEST_CASE("same seed gives the same stream") {
  Rng a(42);
  Rng b(42);
  for (int i = 0; i < 100; ++i) CHECK(a() == b());
}

TEST_CASE("derived seeds differ by label and are stable") {
  CHECK(derive_seed(1, "stl") == derive_seed(1, "stl"));
  CHECK(derive_seed(1, "stl") != derive_seed(1, "pairs"));
  CHECK(derive_seed(1, "stl") != derive_seed(2, "stl"));
  CHECK(derive_seed(5, std::uint64_t{0}) != derive_seed(5, std::uint64_t{1}));
}

TEST_CASE("fnv1a matches the reference vectors") {
  CHECK(fnv1a("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cULL);
}

TEST_CASE("uniform and index stay in range") {
  Rng r(3);
  for (int i = 0; i < 10000; ++i) {
    const double u = r.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    CHECK(r.index(7) < 7);
    const int k = r.uniform_int(-2, 2);
    CHECK(k >= -2);
    CHECK(k <= 2);
  }
}

TEST_CASE("normal has roughly zero mean and unit variance") {
  Rng r(9);
  double s = 0.0;
  double ss = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = r.normal();
    s += z;
    ss += z * z;
  }
  CHECK(s / n == doctest::Approx(0.0).epsilon(0.01));
  CHECK(ss / n == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("bernoulli extremes") {
  Rng r(1);
  for (int i = 0; i < 100; ++i) {
    CHECK_FALSE(r.bernoulli(0.0));
    CHECK(r.bernoulli(1.0));
  }
}

TEST_CASE("sample_without_replacement returns sorted distinct indices") {
  Rng r(4);
  const auto s = r.sample_without_replacement(20, 8);
  REQUIRE(s.size() == 8);
  CHECK(std::set<std::size_t>(s.begin(), s.end()).size() == 8);
  CHECK(std::is_sorted(s.begin(), s.end()));
  CHECK(s.back() < 20);
}
