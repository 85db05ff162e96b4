#include "tgopt/partition.hpp"

#include <algorithm>
#include <map>
#include <sstream>

#include "tgopt/error.hpp"

namespace tgopt {

GroupKey::GroupKey(std::vector<std::size_t> members) : members_(std::move(members)) {
  std::sort(members_.begin(), members_.end());
  members_.erase(std::unique(members_.begin(), members_.end()), members_.end());
  if (members_.empty()) throw Error(ErrorCode::InvalidPartition, "empty group");
}

bool GroupKey::contains(std::size_t task) const {
  return std::binary_search(members_.begin(), members_.end(), task);
}

std::string GroupKey::to_string() const {
  std::ostringstream os;
  os << '{';
  for (std::size_t i = 0; i < members_.size(); ++i) {
    if (i) os << ',';
    os << members_[i];
  }
  os << '}';
  return os.str();
}

bool is_valid_partition(std::size_t n_tasks, std::span<const GroupKey> groups) {
  std::vector<int> seen(n_tasks, 0);
  for (const auto& g : groups) {
    if (g.empty()) return false;
    for (auto t : g) {
      if (t >= n_tasks || seen[t]++) return false;
    }
  }
  return std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; });
}

Partition::Partition(std::size_t n_tasks, std::vector<GroupKey> groups)
    : n_tasks_(n_tasks), groups_(std::move(groups)) {
  if (!is_valid_partition(n_tasks_, groups_)) {
    throw Error(ErrorCode::InvalidPartition, "groups do not form a disjoint cover of " +
                                                 std::to_string(n_tasks_) + " tasks");
  }
  std::sort(groups_.begin(), groups_.end(),
            [](const GroupKey& a, const GroupKey& b) { return a.front() < b.front(); });
}

Partition Partition::from_labels(std::span<const std::size_t> labels) {
  std::map<std::size_t, std::vector<std::size_t>> blocks;
  for (std::size_t i = 0; i < labels.size(); ++i) blocks[labels[i]].push_back(i);
  std::vector<GroupKey> groups;
  groups.reserve(blocks.size());
  for (auto& [label, members] : blocks) groups.emplace_back(std::move(members));
  return Partition(labels.size(), std::move(groups));
}

Partition Partition::singletons(std::size_t n_tasks) {
  std::vector<GroupKey> groups;
  for (std::size_t i = 0; i < n_tasks; ++i) groups.push_back(GroupKey{i});
  return Partition(n_tasks, std::move(groups));
}

Partition Partition::single_group(std::size_t n_tasks) {
  std::vector<std::size_t> all(n_tasks);
  for (std::size_t i = 0; i < n_tasks; ++i) all[i] = i;
  return Partition(n_tasks, {GroupKey(std::move(all))});
}

std::size_t Partition::group_of(std::size_t task) const {
  for (std::size_t g = 0; g < groups_.size(); ++g) {
    if (groups_[g].contains(task)) return g;
  }
  throw Error(ErrorCode::OutOfRange, "task " + std::to_string(task) + " not in partition");
}

std::vector<std::size_t> Partition::labels() const {
  std::vector<std::size_t> out(n_tasks_);
  for (std::size_t g = 0; g < groups_.size(); ++g) {
    for (auto t : groups_[g]) out[t] = g;
  }
  return out;
}

std::string Partition::to_string() const {
  std::string s = "{";
  for (std::size_t g = 0; g < groups_.size(); ++g) {
    if (g) s += ',';
    s += groups_[g].to_string();
  }
  return s + '}';
}

namespace {

// Partition of all tasks except `skip`, as sorted groups (empty ones dropped).
std::vector<std::vector<std::size_t>> without_task(const Partition& p, std::size_t skip) {
  std::vector<std::vector<std::size_t>> out;
  for (const auto& g : p.groups()) {
    std::vector<std::size_t> members;
    for (auto t : g) {
      if (t != skip) members.push_back(t);
    }
    if (!members.empty()) out.push_back(std::move(members));
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

bool differs_by_single_move(const Partition& a, const Partition& b) {
  if (a.n_tasks() != b.n_tasks() || a == b) return false;
  for (std::size_t t = 0; t < a.n_tasks(); ++t) {
    if (without_task(a, t) == without_task(b, t)) return true;
  }
  return false;
}

}  // namespace tgopt
