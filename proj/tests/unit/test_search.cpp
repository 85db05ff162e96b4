#include <cmath>
#include <limits>
#include <set>

#include "check_code.hpp"
#include "tgopt/search.hpp"

using namespace tgopt;

namespace {

// Tasks t and t + 3 share a cluster; a pure cluster group is 30% cheaper than
// its members alone and every foreign member adds a 10% penalty.
class FakeEvaluator : public GroupEvaluator {
 public:
  explicit FakeEvaluator(std::size_t n) : n_(n) {}
  GroupEval evaluate(const GroupKey& g) override {
    ++calls;
    std::set<std::size_t> clusters;
    for (auto t : g) clusters.insert(t % 3);
    const double factor = clusters.size() == 1 ? 0.7 : 1.0 + 0.1 * static_cast<double>(clusters.size());
    GroupEval e;
    for (std::size_t i = 0; i < g.size(); ++i) e.per_task_loss.push_back(factor);
    e.total_loss = factor * static_cast<double>(g.size());
    return e;
  }
  long calls = 0;

 private:
  std::size_t n_;
};

EvalCache unit_cache(std::size_t n) { return EvalCache(std::vector<double>(n, 1.0)); }

std::vector<Partition> evaluated_sample(std::size_t n, EvalCache& cache, GroupEvaluator& ev,
                                        int size, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Partition> out;
  for (int i = 0; i < size; ++i) {
    out.push_back(sample_uniform_partition(n, rng));
    evaluate_partition(out.back(), cache, ev);
  }
  return out;
}

class InfiniteSurrogate : public LossSurrogate {
 public:
  double predict(const Partition&, const EvalCache&) override {
    return std::numeric_limits<double>::infinity();
  }
};

}  // namespace

TEST_CASE("bell numbers and enumeration") {
  const int expected[] = {1, 1, 2, 5, 15, 52, 203, 877};
  for (int n = 0; n < 8; ++n) CHECK(bell_number(n) == expected[n]);
  for (std::size_t n = 1; n <= 6; ++n) {
    const auto all = enumerate_partitions(n);
    CHECK(all.size() == static_cast<std::size_t>(expected[n]));
    CHECK(std::set<Partition>(all.begin(), all.end()).size() == all.size());
  }
  CHECK_CODE(enumerate_partitions(13), ErrorCode::OutOfRange);
  CHECK_CODE(bell_number(513), ErrorCode::OutOfRange);
}

TEST_CASE("uniform sampler returns valid partitions") {
  Rng rng(1);
  for (int i = 0; i < 200; ++i) {
    const auto p = sample_uniform_partition(9, rng);
    CHECK(p.n_tasks() == 9);
  }
  CHECK(sample_uniform_partition(1, rng) == Partition::singletons(1));
}

TEST_CASE("mutation moves exactly one task") {
  Rng rng(2);
  Partition p = Partition::singletons(6);
  for (int i = 0; i < 2000; ++i) {
    const auto q = mutate_groups(p, rng);
    CHECK(differs_by_single_move(p, q));
    p = q;
  }
  const auto three = Partition::singletons(3);
  for (int i = 0; i < 50; ++i) CHECK(mutate_groups(three, rng).n_groups() == 2);
  // A single group can only split off one task.
  const auto one = Partition::single_group(4);
  for (int i = 0; i < 50; ++i) CHECK(mutate_groups(one, rng).n_groups() == 2);
}

TEST_CASE("acceptance probability") {
  CHECK(accept_probability(2.0, 1.0, 5.0) == 1.0);
  CHECK(accept_probability(2.0, 2.0, 5.0) == 1.0);
  CHECK(accept_probability(2.0, 3.0, 0.5) == doctest::Approx(std::exp(-0.5)));
  CHECK(accept_probability(1.0, 1000.0, 10.0) >= 0.0);
}

TEST_CASE("evaluate_partition counts only fresh groups") {
  auto cache = unit_cache(6);
  FakeEvaluator ev(6);
  const Partition p(6, {GroupKey{0, 3}, GroupKey{1, 4}, GroupKey{2}, GroupKey{5}});
  const auto a = evaluate_partition(p, cache, ev);
  CHECK(a.fresh_trainings == 2);
  CHECK(a.total_loss == doctest::Approx(1.4 + 1.4 + 2.0));
  const auto b = evaluate_partition(p, cache, ev);
  CHECK(b.fresh_trainings == 0);
  CHECK(b.total_loss == a.total_loss);
  CHECK(ev.calls == 2);
  CHECK(cache.partition_loss(p).value() == doctest::Approx(a.total_loss));
}

TEST_CASE("search config") {
  SearchConfig c;
  c.gamma_max = 11;
  CHECK(c.pi_at(0) == doctest::Approx(0.1));
  CHECK(c.pi_at(10) == doctest::Approx(0.01));
  CHECK(c.pi_at(5) == doctest::Approx(0.055));
  c.start_rank = 4;
  CHECK_CODE(c.validate(), ErrorCode::ConfigInvalid);
  c.start_rank = 1;
  c.pi_t_end = 0.5;
  CHECK_CODE(c.validate(), ErrorCode::ConfigInvalid);
}

TEST_CASE("zero iterations returns the best sample partition") {
  auto cache = unit_cache(6);
  FakeEvaluator ev(6);
  const auto sample = evaluated_sample(6, cache, ev, 10, 3);
  SearchConfig c;
  c.gamma_max = 0;
  InfiniteSurrogate s;
  const auto r = search_with_predictor(sample, cache, ev, s, c);
  CHECK(r.mtl_trainings == 0);
  CHECK(r.trace.empty());
  double best = std::numeric_limits<double>::infinity();
  for (const auto& p : sample) best = std::min(best, *cache.partition_loss(p));
  CHECK(r.best_loss == best);
  CHECK(r.start == r.best);
  c.start_rank = 2;
  const auto r2 = search_with_predictor(sample, cache, ev, s, c);
  CHECK(r2.start != r2.best);
  CHECK(*cache.partition_loss(r2.start) >= best);
}

TEST_CASE("unevaluated sample partitions are rejected") {
  auto cache = unit_cache(4);
  FakeEvaluator ev(4);
  const std::vector<Partition> sample{Partition::single_group(4)};
  InfiniteSurrogate s;
  CHECK_CODE(search_with_predictor(sample, cache, ev, s, SearchConfig{}),
             ErrorCode::MissingPrerequisite);
}

TEST_CASE("pi of one with an infinite surrogate matches plain randomized search") {
  FakeEvaluator ev(6);
  auto c1 = unit_cache(6);
  const auto sample = evaluated_sample(6, c1, ev, 8, 4);
  auto c2 = c1;
  SearchConfig cfg;
  cfg.gamma_max = 150;
  cfg.seed = 9;
  cfg.pi_t_start = cfg.pi_t_end = 1.0;
  InfiniteSurrogate s;
  const auto a = search_with_predictor(sample, c1, ev, s, cfg);
  const auto b = randomized_search(sample, c2, ev, cfg);
  REQUIRE(a.trace.size() == b.trace.size());
  for (std::size_t i = 0; i < a.trace.size(); ++i) {
    CHECK(a.trace[i].mutated == b.trace[i].mutated);
    CHECK(a.trace[i].accepted == b.trace[i].accepted);
    CHECK(a.trace[i].true_loss == b.trace[i].true_loss);
    CHECK(a.trace[i].trained);
  }
  CHECK(a.best == b.best);
  CHECK(a.mtl_trainings == b.mtl_trainings);
}

TEST_CASE("randomized search finds the planted clusters and respects the budget") {
  FakeEvaluator ev(6);
  auto cache = unit_cache(6);
  const auto sample = evaluated_sample(6, cache, ev, 8, 5);
  SearchConfig cfg;
  cfg.gamma_max = 2000;
  cfg.seed = 1;
  const auto r = randomized_search(sample, cache, ev, cfg);
  CHECK(r.best == Partition(6, {GroupKey{0, 3}, GroupKey{1, 4}, GroupKey{2, 5}}));
  CHECK(r.best_loss == doctest::Approx(4.2));

  auto c2 = unit_cache(6);
  const auto s2 = evaluated_sample(6, c2, ev, 8, 5);
  cfg.budget_mtl = 5;
  const auto capped = randomized_search(s2, c2, ev, cfg);
  CHECK(capped.mtl_trainings <= 5);
  CHECK(capped.budget_exhausted);
  for (const auto& t : capped.trace) CHECK(t.mtl_trainings <= 5);
}

TEST_CASE("gated search trains fewer partitions than it visits") {
  FakeEvaluator ev(6);
  auto cache = unit_cache(6);
  const auto sample = evaluated_sample(6, cache, ev, 8, 6);
  SearchConfig cfg;
  cfg.gamma_max = 300;
  InfiniteSurrogate s;
  const auto r = search_with_predictor(sample, cache, ev, s, cfg);
  long trained = 0;
  for (const auto& t : r.trace) trained += t.trained ? 1 : 0;
  CHECK(trained < 100);
  CHECK(r.trace.back().best_so_far == r.best_loss);
}

TEST_CASE("random search baseline") {
  FakeEvaluator ev(6);
  auto cache = unit_cache(6);
  const auto r = random_search_baseline(cache, ev, 20, 3);
  CHECK(r.mtl_trainings >= 20);
  CHECK(r.best_loss <= 6.0);
  CHECK(cache.partition_loss(r.best).value() == r.best_loss);
  auto again = unit_cache(6);
  CHECK(random_search_baseline(again, ev, 20, 3).best == r.best);
  // Three tasks have only four multi-task groups; the loop stops when none are left.
  FakeEvaluator small(3);
  auto c3 = unit_cache(3);
  CHECK(random_search_baseline(c3, small, 100, 1).mtl_trainings == 4);
}
