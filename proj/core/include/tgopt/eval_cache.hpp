#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "tgopt/partition.hpp"

namespace tgopt {

/// Outcome of evaluating one group: the sum of its per-task test losses.
struct GroupEval {
  double total_loss = 0.0;
  /// Loss per member, in GroupKey order.
  std::vector<double> per_task_loss;
  /// Classification only; empty for regression. Undefined AUCs are NaN.
  std::vector<double> per_task_error_rate;
  std::vector<double> per_task_auc;
};

/// Every group evaluated so far in a run. Singletons hold STL losses and are
/// seeded on construction; entries never change once written.
class EvalCache {
 public:
  EvalCache() = default;
  explicit EvalCache(std::span<const double> stl_losses);

  std::size_t n_tasks() const noexcept { return stl_losses_.size(); }
  std::span<const double> stl_losses() const noexcept { return stl_losses_; }
  double stl_sum(const GroupKey& group) const;
  double stl_total() const;

  const GroupEval* find(const GroupKey& group) const;
  bool contains(const GroupKey& group) const { return find(group) != nullptr; }
  /// Returns false (and keeps the old value) if the group is already present.
  bool insert(const GroupKey& group, GroupEval eval);

  const std::map<GroupKey, GroupEval>& entries() const noexcept { return entries_; }
  /// Number of multi-task groups stored.
  std::size_t n_multi() const;

  /// Sum of cached group losses, or nullopt when some group is missing.
  std::optional<double> partition_loss(const Partition& p) const;
  /// Groups of p that still need training.
  std::vector<GroupKey> missing_groups(const Partition& p) const;

 private:
  std::vector<double> stl_losses_;
  std::map<GroupKey, GroupEval> entries_;
};

}  // namespace tgopt
