#include "tgopt/search.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tgopt/error.hpp"

namespace tgopt {

using boost::multiprecision::cpp_int;

cpp_int bell_number(int n) {
  if (n < 0 || n > 512) throw Error(ErrorCode::OutOfRange, "bell_number needs 0 <= n <= 512");
  if (n == 0) return 1;
  std::vector<cpp_int> row{1};
  for (int i = 1; i < n; ++i) {
    std::vector<cpp_int> next;
    next.reserve(row.size() + 1);
    next.push_back(row.back());
    for (const auto& v : row) next.push_back(next.back() + v);
    row = std::move(next);
  }
  return row.back();
}

std::vector<Partition> enumerate_partitions(std::size_t n) {
  if (n == 0 || n > 12) throw Error(ErrorCode::OutOfRange, "enumerate_partitions needs 1 <= n <= 12");
  std::vector<Partition> out;
  // Restricted growth strings: a[0] = 0, a[i] <= 1 + max(a[0..i-1]).
  std::vector<std::size_t> a(n, 0);
  std::vector<std::size_t> mx(n, 0);
  while (true) {
    out.push_back(Partition::from_labels(a));
    std::size_t i = n - 1;
    while (i > 0 && a[i] == mx[i - 1] + 1) --i;
    if (i == 0) break;
    ++a[i];
    mx[i] = std::max(mx[i - 1], a[i]);
    for (std::size_t j = i + 1; j < n; ++j) {
      a[j] = 0;
      mx[j] = mx[i];
    }
  }
  return out;
}

namespace {

// Stam's block-count weights k^n / k!, normalized over a truncated support.
std::vector<double> stam_weights(std::size_t n) {
  const double dn = static_cast<double>(n);
  std::vector<double> logw;
  double peak = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 1;; ++k) {
    const double dk = static_cast<double>(k);
    const double lw = dn * std::log(dk) - std::lgamma(dk + 1.0);
    logw.push_back(lw);
    peak = std::max(peak, lw);
    if (k > n && lw < peak - 60.0) break;
  }
  std::vector<double> w(logw.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    w[i] = std::exp(logw[i] - peak);
    sum += w[i];
  }
  for (double& x : w) x /= sum;
  return w;
}

}  // namespace

Partition sample_uniform_partition(std::size_t n, Rng& rng) {
  if (n == 0) throw Error(ErrorCode::OutOfRange, "sample_uniform_partition needs n >= 1");
  const auto w = stam_weights(n);
  std::vector<std::size_t> labels(n);
  while (true) {
    double u = rng.uniform();
    std::size_t k = w.size();
    for (std::size_t i = 0; i < w.size(); ++i) {
      u -= w[i];
      if (u < 0.0) {
        k = i + 1;
        break;
      }
    }
    if (k > n) continue;  // some block would be empty
    std::vector<bool> used(k, false);
    std::size_t n_used = 0;
    for (auto& l : labels) {
      l = rng.index(k);
      if (!used[l]) {
        used[l] = true;
        ++n_used;
      }
    }
    if (n_used == k) return Partition::from_labels(labels);
  }
}

Partition mutate_groups(const Partition& p, Rng& rng) {
  const std::size_t n = p.n_tasks();
  if (n < 2) throw Error(ErrorCode::OutOfRange, "mutate_groups needs >= 2 tasks");
  const std::size_t t = rng.index(n);
  const std::size_t old = p.group_of(t);
  std::vector<std::vector<std::size_t>> groups;
  for (const auto& g : p.groups()) groups.emplace_back(g.begin(), g.end());

  if (groups[old].size() == 1) {
    groups.erase(groups.begin() + static_cast<std::ptrdiff_t>(old));
    groups[rng.index(groups.size())].push_back(t);
  } else {
    auto& src = groups[old];
    src.erase(std::find(src.begin(), src.end(), t));
    // Candidates: every other group, then the fresh singleton {t}.
    const std::size_t choice = rng.index(groups.size());
    std::size_t target = choice < old ? choice : choice + 1;
    if (target == groups.size()) {
      groups.push_back({t});
    } else {
      groups[target].push_back(t);
    }
  }
  std::vector<GroupKey> keys;
  keys.reserve(groups.size());
  for (auto& g : groups) keys.emplace_back(std::move(g));
  return Partition(n, std::move(keys));
}

double accept_probability(double loss, double new_loss, double k) {
  if (!(k > 0.0)) throw Error(ErrorCode::OutOfRange, "acceptance temperature must be > 0");
  return std::min(1.0, std::exp((loss - new_loss) * k));
}

PartitionEval evaluate_partition(const Partition& p, EvalCache& cache, GroupEvaluator& evaluator) {
  PartitionEval out;
  for (const auto& g : p.groups()) {
    if (const auto* e = cache.find(g)) {
      out.total_loss += e->total_loss;
      continue;
    }
    if (g.size() == 1) {
      throw Error(ErrorCode::MissingPrerequisite, "no STL loss for task " + g.to_string());
    }
    GroupEval e = evaluator.evaluate(g);
    out.total_loss += e.total_loss;
    cache.insert(g, std::move(e));
    ++out.fresh_trainings;
  }
  return out;
}

void SearchConfig::validate() const {
  if (gamma_max < 0) throw Error(ErrorCode::ConfigInvalid, "gamma_max must be >= 0");
  if (gamma_retrain < 1) throw Error(ErrorCode::ConfigInvalid, "gamma_retrain must be >= 1");
  if (k && !(*k > 0.0)) throw Error(ErrorCode::ConfigInvalid, "K must be > 0");
  if (!(pi_t_start > 0.0 && pi_t_start <= 1.0)) {
    throw Error(ErrorCode::ConfigInvalid, "pi_t_start must be in (0, 1]");
  }
  if (pi_t_end < 0.0 || pi_t_end > pi_t_start) {
    throw Error(ErrorCode::ConfigInvalid, "pi_t_end must be in [0, pi_t_start]");
  }
  if (budget_mtl && *budget_mtl < 0) throw Error(ErrorCode::ConfigInvalid, "budget must be >= 0");
  if (start_rank < 1 || start_rank > 3) {
    throw Error(ErrorCode::ConfigInvalid, "start_rank must be 1, 2 or 3");
  }
}

double SearchConfig::pi_at(int i) const {
  if (gamma_max <= 1) return pi_t_start;
  const double f = static_cast<double>(i) / static_cast<double>(gamma_max - 1);
  return pi_t_start + (pi_t_end - pi_t_start) * f;
}

namespace {

struct Ranked {
  Partition p;
  double loss;
};

std::vector<Ranked> rank_sample(std::span<const Partition> sample, const EvalCache& cache) {
  if (sample.empty()) throw Error(ErrorCode::MissingPrerequisite, "empty partition sample");
  std::vector<Ranked> ranked;
  for (const auto& p : sample) {
    auto loss = cache.partition_loss(p);
    if (!loss) {
      throw Error(ErrorCode::MissingPrerequisite, "sample partition not evaluated: " + p.to_string());
    }
    ranked.push_back({p, *loss});
  }
  std::stable_sort(ranked.begin(), ranked.end(), [](const Ranked& a, const Ranked& b) {
    return a.loss < b.loss || (a.loss == b.loss && a.p < b.p);
  });
  ranked.erase(std::unique(ranked.begin(), ranked.end(),
                           [](const Ranked& a, const Ranked& b) { return a.p == b.p; }),
               ranked.end());
  return ranked;
}

SearchResult annealing_loop(std::span<const Partition> sample, EvalCache& cache,
                            GroupEvaluator& evaluator, LossSurrogate* surrogate,
                            const SearchConfig& config) {
  config.validate();
  const auto ranked = rank_sample(sample, cache);
  const std::size_t start = std::min<std::size_t>(config.start_rank, ranked.size()) - 1;

  SearchResult res;
  res.start = ranked[start].p;
  res.best = ranked.front().p;
  res.best_loss = ranked.front().loss;

  const double k = config.k ? *config.k : 10.0 / cache.stl_total();
  Rng mutate_rng(derive_seed(config.seed, "mutate"));
  Rng gate_rng(derive_seed(config.seed, "gate"));
  Rng accept_rng(derive_seed(config.seed, "accept"));

  Partition current = res.start;
  double current_loss = ranked[start].loss;

  for (int i = 1; i <= config.gamma_max; ++i) {
    TraceRecord rec;
    rec.iteration = i;
    rec.mutated = mutate_groups(current, mutate_rng);
    if (surrogate) rec.predicted_loss = surrogate->predict(rec.mutated, cache);

    // Without a surrogate every mutation is trained.
    bool train = !surrogate || rec.predicted_loss < current_loss;
    if (!train) train = gate_rng.bernoulli(config.pi_at(i - 1));

    if (train) {
      if (config.budget_mtl) {
        const auto need = static_cast<long>(cache.missing_groups(rec.mutated).size());
        if (res.mtl_trainings + need > *config.budget_mtl) {
          res.budget_exhausted = true;
          break;
        }
      }
      const auto ev = evaluate_partition(rec.mutated, cache, evaluator);
      res.mtl_trainings += ev.fresh_trainings;
      rec.trained = true;
      rec.true_loss = ev.total_loss;
      if (accept_rng.uniform() < accept_probability(current_loss, ev.total_loss, k)) {
        rec.accepted = true;
        current = rec.mutated;
        current_loss = ev.total_loss;
      }
      if (ev.total_loss < res.best_loss) {
        res.best_loss = ev.total_loss;
        res.best = rec.mutated;
      }
    }
    rec.best_so_far = res.best_loss;
    rec.mtl_trainings = res.mtl_trainings;
    res.trace.push_back(std::move(rec));

    if (surrogate && i % config.gamma_retrain == 0) surrogate->update(cache);
  }
  return res;
}

}  // namespace

SearchResult search_with_predictor(std::span<const Partition> sample, EvalCache& cache,
                                   GroupEvaluator& evaluator, LossSurrogate& surrogate,
                                   const SearchConfig& config) {
  return annealing_loop(sample, cache, evaluator, &surrogate, config);
}

SearchResult randomized_search(std::span<const Partition> sample, EvalCache& cache,
                               GroupEvaluator& evaluator, const SearchConfig& config) {
  return annealing_loop(sample, cache, evaluator, nullptr, config);
}

RandomSearchResult random_search_baseline(EvalCache& cache, GroupEvaluator& evaluator,
                                          long budget_mtl, std::uint64_t seed) {
  const std::size_t n = cache.n_tasks();
  RandomSearchResult res;
  res.best = Partition::singletons(n);
  res.best_loss = cache.stl_total();
  Rng rng(derive_seed(seed, "random_search"));
  // Small task sets can run out of unseen groups; give up after this many
  // consecutive draws without a fresh training.
  constexpr long kMaxStale = 10000;
  long stale = 0;
  while (res.mtl_trainings < budget_mtl && stale < kMaxStale) {
    const Partition p = sample_uniform_partition(n, rng);
    ++res.draws;
    const auto ev = evaluate_partition(p, cache, evaluator);
    res.mtl_trainings += ev.fresh_trainings;
    stale = ev.fresh_trainings > 0 ? 0 : stale + 1;
    if (ev.total_loss < res.best_loss) {
      res.best_loss = ev.total_loss;
      res.best = p;
    }
  }
  return res;
}

}  // namespace tgopt
