#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "tgopt/eval_cache.hpp"
#include "tgopt/partition.hpp"
#include "tgopt/predictor.hpp"
#include "tgopt/rng.hpp"

namespace tgopt {

/// Exact Bell number via the Bell triangle. Throws Error(OutOfRange) above 512.
boost::multiprecision::cpp_int bell_number(int n);

/// Every set partition of n tasks (n <= 12, else Error(OutOfRange)).
std::vector<Partition> enumerate_partitions(std::size_t n);

/// Exactly uniform over all B(n) partitions (Stam's method with rejection of
/// labelings that leave a block empty).
Partition sample_uniform_partition(std::size_t n, Rng& rng);

/// Moves one uniformly chosen task. A singleton task joins a surviving group;
/// otherwise it moves to another group or to a fresh singleton.
Partition mutate_groups(const Partition& p, Rng& rng);

/// min(1, exp((loss - new_loss) * k)).
double accept_probability(double loss, double new_loss, double k);

/// Trains (or looks up) a multi-task group.
class GroupEvaluator {
 public:
  virtual ~GroupEvaluator() = default;
  virtual GroupEval evaluate(const GroupKey& group) = 0;
};

struct PartitionEval {
  double total_loss = 0.0;
  long fresh_trainings = 0;
};

/// Sums group losses, evaluating and caching groups not seen before.
PartitionEval evaluate_partition(const Partition& p, EvalCache& cache, GroupEvaluator& evaluator);

struct SearchConfig {
  int gamma_max = 500;
  int gamma_retrain = 5;
  /// Acceptance temperature; unset means 10 / sum of STL losses.
  std::optional<double> k;
  double pi_t_start = 0.1;
  double pi_t_end = 0.01;
  std::uint64_t seed = 0;
  /// Hard cap on fresh MTL trainings during the search loop.
  std::optional<long> budget_mtl;
  /// Start from the best (1), second (2) or third (3) sample partition.
  int start_rank = 1;

  void validate() const;
  /// Quick-reject training probability at 0-based iteration i.
  double pi_at(int i) const;
};

struct TraceRecord {
  int iteration = 0;
  Partition mutated;
  double predicted_loss = std::numeric_limits<double>::infinity();
  bool trained = false;
  std::optional<double> true_loss;
  bool accepted = false;
  double best_so_far = 0.0;
  long mtl_trainings = 0;  // cumulative fresh trainings in this run
};

struct SearchResult {
  Partition start;
  Partition best;
  double best_loss = 0.0;
  long mtl_trainings = 0;
  bool budget_exhausted = false;
  std::vector<TraceRecord> trace;
};

/// Simulated annealing over partitions with a surrogate quick-reject gate.
/// Every sample partition must already be in the cache.
SearchResult search_with_predictor(std::span<const Partition> sample, EvalCache& cache,
                                   GroupEvaluator& evaluator, LossSurrogate& surrogate,
                                   const SearchConfig& config);

/// The same annealing loop with every mutation trained (no surrogate).
SearchResult randomized_search(std::span<const Partition> sample, EvalCache& cache,
                               GroupEvaluator& evaluator, const SearchConfig& config);

struct RandomSearchResult {
  Partition best;
  double best_loss = 0.0;
  long mtl_trainings = 0;
  long draws = 0;
};

/// Evaluates uniform random partitions until fresh trainings reach budget.
/// Starts from the all-singleton partition.
RandomSearchResult random_search_baseline(EvalCache& cache, GroupEvaluator& evaluator,
                                          long budget_mtl, std::uint64_t seed);

}  // namespace tgopt
