#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace tgopt {

/// Sorted, deduplicated, nonempty list of task indices.
class GroupKey {
 public:
  GroupKey() = default;
  explicit GroupKey(std::vector<std::size_t> members);
  GroupKey(std::initializer_list<std::size_t> members)
      : GroupKey(std::vector<std::size_t>(members)) {}

  const std::vector<std::size_t>& members() const noexcept { return members_; }
  std::size_t size() const noexcept { return members_.size(); }
  bool empty() const noexcept { return members_.empty(); }
  std::size_t front() const { return members_.front(); }
  bool contains(std::size_t task) const;

  auto begin() const noexcept { return members_.begin(); }
  auto end() const noexcept { return members_.end(); }

  std::string to_string() const;

  friend auto operator<=>(const GroupKey&, const GroupKey&) = default;
  friend bool operator==(const GroupKey&, const GroupKey&) = default;

 private:
  std::vector<std::size_t> members_;
};

/// Disjoint cover of tasks {0..n-1}; groups kept in canonical order
/// (sorted by smallest member).
class Partition {
 public:
  Partition() = default;
  /// Validates and canonicalizes. Throws Error(InvalidPartition).
  Partition(std::size_t n_tasks, std::vector<GroupKey> groups);

  /// labels[i] is the block label of task i; labels need not be contiguous.
  static Partition from_labels(std::span<const std::size_t> labels);
  static Partition singletons(std::size_t n_tasks);
  static Partition single_group(std::size_t n_tasks);

  std::size_t n_tasks() const noexcept { return n_tasks_; }
  std::size_t n_groups() const noexcept { return groups_.size(); }
  const std::vector<GroupKey>& groups() const noexcept { return groups_; }
  /// Index into groups() of the group holding task.
  std::size_t group_of(std::size_t task) const;
  /// Canonical block label per task (label = group index).
  std::vector<std::size_t> labels() const;

  std::string to_string() const;

  friend bool operator==(const Partition&, const Partition&) = default;
  friend auto operator<=>(const Partition&, const Partition&) = default;

 private:
  std::size_t n_tasks_ = 0;
  std::vector<GroupKey> groups_;
};

/// True when groups are nonempty, pairwise disjoint and cover {0..n-1}.
bool is_valid_partition(std::size_t n_tasks, std::span<const GroupKey> groups);

/// True when b != a and b can be obtained from a by moving exactly one task
/// to another (possibly new) block.
bool differs_by_single_move(const Partition& a, const Partition& b);

}  // namespace tgopt
