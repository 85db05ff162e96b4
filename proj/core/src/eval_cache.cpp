#include "tgopt/eval_cache.hpp"

#include <string>

#include "tgopt/error.hpp"

namespace tgopt {

EvalCache::EvalCache(std::span<const double> stl_losses)
    : stl_losses_(stl_losses.begin(), stl_losses.end()) {
  for (std::size_t t = 0; t < stl_losses_.size(); ++t) {
    entries_.emplace(GroupKey{t}, GroupEval{stl_losses_[t], {stl_losses_[t]}, {}, {}});
  }
}

double EvalCache::stl_sum(const GroupKey& group) const {
  double s = 0.0;
  for (auto t : group) {
    if (t >= stl_losses_.size()) {
      throw Error(ErrorCode::MissingPrerequisite, "no STL loss for task " + std::to_string(t));
    }
    s += stl_losses_[t];
  }
  return s;
}

double EvalCache::stl_total() const {
  double s = 0.0;
  for (double l : stl_losses_) s += l;
  return s;
}

const GroupEval* EvalCache::find(const GroupKey& group) const {
  auto it = entries_.find(group);
  return it == entries_.end() ? nullptr : &it->second;
}

bool EvalCache::insert(const GroupKey& group, GroupEval eval) {
  return entries_.emplace(group, std::move(eval)).second;
}

std::size_t EvalCache::n_multi() const {
  std::size_t n = 0;
  for (const auto& [g, e] : entries_) n += g.size() > 1 ? 1 : 0;
  return n;
}

std::optional<double> EvalCache::partition_loss(const Partition& p) const {
  double total = 0.0;
  for (const auto& g : p.groups()) {
    const auto* e = find(g);
    if (!e) return std::nullopt;
    total += e->total_loss;
  }
  return total;
}

std::vector<GroupKey> EvalCache::missing_groups(const Partition& p) const {
  std::vector<GroupKey> out;
  for (const auto& g : p.groups()) {
    if (!contains(g)) out.push_back(g);
  }
  return out;
}

}  // namespace tgopt
