#pragma once

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tgopt/data_model.hpp"
#include "tgopt/eval_cache.hpp"
#include "tgopt/mtl.hpp"
#include "tgopt/search.hpp"

namespace tgopt {

/// Hex SHA-256 of a byte string.
std::string sha256_hex(std::string_view bytes);

/// Trains hard-parameter-sharing models for groups of task indices.
/// Results are memoized in memory and, when a directory is given, on disk
/// under <dir>/<sha256>.json keyed by the fingerprint and the task ids.
class MtlGroupEvaluator : public GroupEvaluator {
 public:
  MtlGroupEvaluator(std::span<const TaskSplit> splits, MtlArch arch, TrainConfig config,
                    std::string fingerprint, std::optional<std::filesystem::path> cache_dir = {});

  GroupEval evaluate(const GroupKey& group) override;
  /// Evaluates several groups with up to `jobs` worker threads.
  std::vector<GroupEval> evaluate_many(std::span<const GroupKey> groups, int jobs);

  /// Models actually trained by this object (memo and disk misses).
  long physical_trainings() const;
  const MtlArch& arch() const noexcept { return arch_; }
  const TrainConfig& train_config() const noexcept { return config_; }
  std::span<const TaskSplit> splits() const noexcept { return splits_; }

 private:
  std::optional<GroupEval> lookup(const GroupKey& group);
  void store(const GroupKey& group, const GroupEval& eval);
  std::filesystem::path disk_path(const GroupKey& group) const;

  std::span<const TaskSplit> splits_;
  MtlArch arch_;
  TrainConfig config_;
  std::string fingerprint_;
  std::optional<std::filesystem::path> cache_dir_;
  mutable std::mutex mu_;
  std::map<GroupKey, GroupEval> memo_;
  long physical_ = 0;
};

/// Per-member losses of a trained group, in GroupKey order.
GroupEval group_eval_from(const GroupKey& group, std::span<const TaskSplit> splits,
                          const MtlResult& result);

}  // namespace tgopt
