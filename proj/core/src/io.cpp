#include "tgopt/io.hpp"

#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>

#include "json.hpp"
#include "tgopt/error.hpp"

namespace tgopt {

using nlohmann::json;

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error(ErrorCode::Io, "write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot replace " + path.string() + ": " + ec.message());
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

namespace {

json parse(std::string_view text) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Io, std::string("malformed JSON: ") + e.what());
  }
}

template <class F>
auto guarded(F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Io, std::string("unexpected JSON layout: ") + e.what());
  }
}

json header_json(const ArtifactHeader& h) {
  return {{"schema_version", h.schema_version}, {"config_hash", h.config_hash}, {"seed", h.seed}};
}

// JSON has no infinities or NaN; they are written as null.
json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(number(m(i, j)));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from(const json& j) {
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = rows ? static_cast<Eigen::Index>(j[0].size()) : 0;
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index k = 0; k < cols; ++k) {
      const auto& v = j[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
      m(i, k) = v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>();
    }
  }
  return m;
}

json vector_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(number(v(i)));
  return a;
}

json doubles_json(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(number(x));
  return a;
}

std::vector<double> doubles_from(const json& j) {
  std::vector<double> v;
  for (const auto& x : j) {
    v.push_back(x.is_null() ? std::numeric_limits<double>::quiet_NaN() : x.get<double>());
  }
  return v;
}

json optional_number(const std::optional<double>& v) { return v ? number(*v) : json(nullptr); }

std::optional<double> optional_from(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

Eigen::VectorXd vector_from(const json& j) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    v(static_cast<Eigen::Index>(i)) =
        j[i].is_null() ? std::numeric_limits<double>::quiet_NaN() : j[i].get<double>();
  }
  return v;
}

json params_json(const Params& p) {
  json layers = json::array();
  for (const auto& l : p.layers) {
    layers.push_back({{"weights", matrix_json(l.weights)}, {"bias", vector_json(l.bias)}});
  }
  return layers;
}

Params params_from(const json& j) {
  Params p;
  for (const auto& l : j) p.layers.push_back({matrix_from(l.at("weights")), vector_from(l.at("bias"))});
  return p;
}

json net_json(const NetSpec& s) {
  return {{"layer_widths", s.layer_widths},
          {"hidden_activation", to_string(s.hidden_activation)},
          {"output_activation", to_string(s.output_activation)},
          {"learning_rate", s.learning_rate}};
}

NetSpec net_from(const json& j) {
  NetSpec s;
  s.layer_widths = j.at("layer_widths").get<std::vector<int>>();
  s.hidden_activation = activation_from_string(j.at("hidden_activation").get<std::string>());
  s.output_activation = activation_from_string(j.at("output_activation").get<std::string>());
  s.learning_rate = j.at("learning_rate").get<double>();
  return s;
}

json group_ids(const GroupKey& g, std::span<const std::string> ids) {
  json a = json::array();
  for (auto t : g) a.push_back(ids[t]);
  return a;
}

GroupKey group_from(const json& j, std::span<const std::string> ids) {
  std::vector<std::size_t> members;
  for (const auto& id : j) {
    const auto s = id.get<std::string>();
    std::size_t idx = ids.size();
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (ids[i] == s) idx = i;
    }
    if (idx == ids.size()) throw Error(ErrorCode::Io, "unknown task id '" + s + "'");
    members.push_back(idx);
  }
  return GroupKey(std::move(members));
}

json partition_json(const Partition& p, std::span<const std::string> ids) {
  json a = json::array();
  for (const auto& g : p.groups()) a.push_back(group_ids(g, ids));
  return a;
}

}  // namespace

ArtifactHeader read_header(std::string_view text) {
  const json j = parse(text);
  return guarded([&] {
    return ArtifactHeader{j.at("schema_version").get<int>(), j.at("config_hash").get<std::string>(),
                          j.at("seed").get<std::uint64_t>()};
  });
}

std::string params_to_json(const Params& p) { return json{{"layers", params_json(p)}}.dump(); }

Params params_from_json(std::string_view text) {
  const json j = parse(text);
  return guarded([&] { return params_from(j.at("layers")); });
}

std::string predictor_to_json(const PredictorModel& m, const ArtifactHeader& h) {
  json j = header_json(h);
  j["feature_names"] = m.feature_names;
  j["norm_stats"] = {{"mean", vector_json(m.input_norm.mean)},
                     {"std", vector_json(m.input_norm.std)},
                     {"constant", m.input_norm.constant}};
  j["net"] = net_json(m.net);
  j["net"]["layers"] = params_json(m.params);
  j["trained_on"] = m.trained_on;
  return j.dump(2) + "\n";
}

PredictorModel predictor_from_json(std::string_view text) {
  const json j = parse(text);
  return guarded([&] {
    PredictorModel m;
    m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    m.input_norm.mean = vector_from(j.at("norm_stats").at("mean"));
    m.input_norm.std = vector_from(j.at("norm_stats").at("std"));
    m.input_norm.constant = j.at("norm_stats").at("constant").get<std::vector<bool>>();
    m.net = net_from(j.at("net"));
    m.params = params_from(j.at("net").at("layers"));
    m.trained_on = j.at("trained_on").get<std::size_t>();
    return m;
  });
}

std::string stl_results_to_json(std::span<const StlResult> results, const ArtifactHeader& h) {
  json j = header_json(h);
  json tasks = json::array();
  for (const auto& r : results) {
    json curve = json::array();
    for (const auto& p : r.curve.points) curve.push_back({p.fraction, number(p.loss)});
    json grads = json::array();
    for (const auto& [f, g] : r.curve_grads) grads.push_back({f, number(g)});
    tasks.push_back({{"task_id", r.task_id},
                     {"final_loss", r.final_loss},
                     {"curve", curve},
                     {"curve_grads", grads},
                     {"fit_a", r.fit_a},
                     {"fit_b", r.fit_b},
                     {"target_mean", r.target_mean},
                     {"target_sigma", r.target_sigma},
                     {"target_var", r.target_var},
                     {"sample_size", r.sample_size},
                     {"test_error_rate", optional_number(r.test_error_rate)},
                     {"test_auc", optional_number(r.test_auc)}});
  }
  j["tasks"] = std::move(tasks);
  return j.dump(2) + "\n";
}

std::vector<StlResult> stl_results_from_json(std::string_view text) {
  const json j = parse(text);
  return guarded([&] {
    std::vector<StlResult> out;
    for (const auto& t : j.at("tasks")) {
      StlResult r;
      r.task_id = t.at("task_id").get<std::string>();
      r.final_loss = t.at("final_loss").get<double>();
      for (const auto& p : t.at("curve")) r.curve.points.push_back({p[0].get<double>(), p[1].get<double>()});
      for (const auto& g : t.at("curve_grads")) r.curve_grads[g[0].get<double>()] = g[1].get<double>();
      r.fit_a = t.at("fit_a").get<double>();
      r.fit_b = t.at("fit_b").get<double>();
      r.target_mean = t.at("target_mean").get<double>();
      r.target_sigma = t.at("target_sigma").get<double>();
      r.target_var = t.at("target_var").get<double>();
      r.sample_size = t.at("sample_size").get<std::size_t>();
      r.test_error_rate = optional_from(t, "test_error_rate");
      r.test_auc = optional_from(t, "test_auc");
      out.push_back(std::move(r));
    }
    return out;
  });
}

std::string eval_cache_to_json(const EvalCache& cache, std::span<const std::string> task_ids,
                               const ArtifactHeader& h) {
  json j = header_json(h);
  j["stl_losses"] = std::vector<double>(cache.stl_losses().begin(), cache.stl_losses().end());
  json groups = json::array();
  for (const auto& [g, e] : cache.entries()) {
    if (g.size() < 2) continue;
    json entry = {{"tasks", group_ids(g, task_ids)},
                  {"total_loss", e.total_loss},
                  {"per_task_loss", e.per_task_loss}};
    if (!e.per_task_error_rate.empty()) entry["per_task_error_rate"] = doubles_json(e.per_task_error_rate);
    if (!e.per_task_auc.empty()) entry["per_task_auc"] = doubles_json(e.per_task_auc);
    groups.push_back(std::move(entry));
  }
  j["groups"] = std::move(groups);
  return j.dump(2) + "\n";
}

EvalCache eval_cache_from_json(std::string_view text, std::span<const std::string> task_ids) {
  const json j = parse(text);
  return guarded([&] {
    const auto stl = j.at("stl_losses").get<std::vector<double>>();
    EvalCache cache(stl);
    for (const auto& entry : j.at("groups")) {
      GroupEval e;
      e.total_loss = entry.at("total_loss").get<double>();
      e.per_task_loss = entry.at("per_task_loss").get<std::vector<double>>();
      e.per_task_error_rate = doubles_from(entry.value("per_task_error_rate", json::array()));
      e.per_task_auc = doubles_from(entry.value("per_task_auc", json::array()));
      cache.insert(group_from(entry.at("tasks"), task_ids), std::move(e));
    }
    return cache;
  });
}

std::string partition_to_json(const Partition& p, std::span<const std::string> task_ids) {
  return partition_json(p, task_ids).dump();
}

Partition partition_from_json(std::string_view text, std::span<const std::string> task_ids) {
  const json j = parse(text);
  return guarded([&] {
    std::vector<GroupKey> groups;
    for (const auto& g : j) groups.push_back(group_from(g, task_ids));
    return Partition(task_ids.size(), std::move(groups));
  });
}

std::string trace_record_to_jsonl(const TraceRecord& r, std::span<const std::string> task_ids) {
  json j = {{"iteration", r.iteration},
            {"mutated_partition", partition_json(r.mutated, task_ids)},
            {"predicted_loss", number(r.predicted_loss)},
            {"trained", r.trained},
            {"true_loss", r.true_loss ? number(*r.true_loss) : json(nullptr)},
            {"accepted", r.accepted},
            {"best_so_far", number(r.best_so_far)},
            {"mtl_trainings", r.mtl_trainings}};
  return j.dump();
}

}  // namespace tgopt
