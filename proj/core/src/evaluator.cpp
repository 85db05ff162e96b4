#include "tgopt/evaluator.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

#include <openssl/evp.h>

#include "json.hpp"
#include "tgopt/error.hpp"
#include "tgopt/io.hpp"

namespace tgopt {

using nlohmann::json;

namespace {

json doubles_json(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(std::isfinite(x) ? json(x) : json(nullptr));
  return a;
}

std::vector<double> doubles_from(const json& j) {
  std::vector<double> v;
  for (const auto& x : j) {
    v.push_back(x.is_null() ? std::numeric_limits<double>::quiet_NaN() : x.get<double>());
  }
  return v;
}

}  // namespace

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorCode::Io, "sha256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xf]);
  }
  return out;
}

GroupEval group_eval_from(const GroupKey& group, std::span<const TaskSplit> splits,
                          const MtlResult& result) {
  GroupEval e;
  e.total_loss = result.total_loss;
  for (auto t : group) {
    const auto& id = splits[t].id();
    e.per_task_loss.push_back(result.per_task_loss.at(id));
    if (auto it = result.per_task_error_rate.find(id); it != result.per_task_error_rate.end()) {
      e.per_task_error_rate.push_back(it->second);
    }
    if (!result.per_task_error_rate.empty()) {
      auto it = result.per_task_auc.find(id);
      e.per_task_auc.push_back(it != result.per_task_auc.end()
                                   ? it->second
                                   : std::numeric_limits<double>::quiet_NaN());
    }
  }
  return e;
}

MtlGroupEvaluator::MtlGroupEvaluator(std::span<const TaskSplit> splits, MtlArch arch,
                                     TrainConfig config, std::string fingerprint,
                                     std::optional<std::filesystem::path> cache_dir)
    : splits_(splits),
      arch_(std::move(arch)),
      config_(std::move(config)),
      fingerprint_(std::move(fingerprint)),
      cache_dir_(std::move(cache_dir)) {
  if (cache_dir_) std::filesystem::create_directories(*cache_dir_);
}

std::filesystem::path MtlGroupEvaluator::disk_path(const GroupKey& group) const {
  std::string key = fingerprint_;
  for (auto t : group) key += "\x1f" + splits_[t].id();
  return *cache_dir_ / (sha256_hex(key) + ".json");
}

std::optional<GroupEval> MtlGroupEvaluator::lookup(const GroupKey& group) {
  {
    std::lock_guard lock(mu_);
    if (auto it = memo_.find(group); it != memo_.end()) return it->second;
  }
  if (!cache_dir_) return std::nullopt;
  const auto path = disk_path(group);
  std::ifstream in(path);
  if (!in) return std::nullopt;
  try {
    const json j = json::parse(in);
    GroupEval e;
    e.total_loss = j.at("total_loss").get<double>();
    e.per_task_loss = j.at("per_task_loss").get<std::vector<double>>();
    e.per_task_error_rate = doubles_from(j.value("per_task_error_rate", json::array()));
    e.per_task_auc = doubles_from(j.value("per_task_auc", json::array()));
    if (e.per_task_loss.size() != group.size()) return std::nullopt;
    std::lock_guard lock(mu_);
    memo_.emplace(group, e);
    return e;
  } catch (const json::exception&) {
    return std::nullopt;  // unreadable entry: retrain and overwrite
  }
}

void MtlGroupEvaluator::store(const GroupKey& group, const GroupEval& eval) {
  {
    std::lock_guard lock(mu_);
    memo_.emplace(group, eval);
    ++physical_;
  }
  if (!cache_dir_) return;
  json j;
  j["schema_version"] = 1;
  std::vector<std::string> ids;
  for (auto t : group) ids.push_back(splits_[t].id());
  j["tasks"] = ids;
  j["total_loss"] = eval.total_loss;
  j["per_task_loss"] = eval.per_task_loss;
  if (!eval.per_task_error_rate.empty()) j["per_task_error_rate"] = doubles_json(eval.per_task_error_rate);
  if (!eval.per_task_auc.empty()) j["per_task_auc"] = doubles_json(eval.per_task_auc);
  write_file_atomic(disk_path(group), j.dump(2) + "\n");
}

GroupEval MtlGroupEvaluator::evaluate(const GroupKey& group) {
  if (auto e = lookup(group)) return *e;
  std::vector<TaskSplit> members;
  for (auto t : group) members.push_back(splits_[t]);
  const MtlResult r = train_mtl(members, arch_, config_);
  GroupEval e = group_eval_from(group, splits_, r);
  store(group, e);
  return e;
}

std::vector<GroupEval> MtlGroupEvaluator::evaluate_many(std::span<const GroupKey> groups,
                                                        int jobs) {
  std::vector<GroupEval> out(groups.size());
  const auto n_workers = static_cast<std::size_t>(std::max(1, jobs));
  if (n_workers == 1 || groups.size() < 2) {
    for (std::size_t i = 0; i < groups.size(); ++i) out[i] = evaluate(groups[i]);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  std::vector<std::thread> workers;
  for (std::size_t w = 0; w < std::min(n_workers, groups.size()); ++w) {
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < groups.size(); i = next++) {
        try {
          out[i] = evaluate(groups[i]);
        } catch (...) {
          std::lock_guard lock(failure_mu);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : workers) t.join();
  if (failure) std::rethrow_exception(failure);
  return out;
}

long MtlGroupEvaluator::physical_trainings() const {
  std::lock_guard lock(mu_);
  return physical_;
}

}  // namespace tgopt
