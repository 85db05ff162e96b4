#include <algorithm>
#include <cmath>
#include <set>

#include "json.hpp"
#include "tgopt/error.hpp"
#include "tgopt/evaluator.hpp"
#include "tgopt/experiment.hpp"
#include "tgopt/io.hpp"
#include "tgopt/rng.hpp"

namespace tgopt {

using nlohmann::json;

namespace {

// Reads known keys from one JSON object and rejects anything else.
class Section {
 public:
  Section(const json& j, std::string name) : j_(j), name_(std::move(name)) {
    if (!j_.is_object()) fail("must be an object");
  }

  template <class T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key) || j_.at(key).is_null()) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception&) {
      fail(std::string("bad value for '") + key + "'");
    }
  }

  template <class T>
  void get(const char* key, std::optional<T>& out) {
    seen_.insert(key);
    if (!j_.contains(key) || j_.at(key).is_null()) return;
    T v{};
    get(key, v);
    out = v;
  }

  std::optional<Section> sub(const char* key) {
    seen_.insert(key);
    if (!j_.contains(key) || j_.at(key).is_null()) return std::nullopt;
    return Section(j_.at(key), name_ + "." + key);
  }

  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (!seen_.count(k)) fail("unknown key '" + k + "'");
    }
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw Error(ErrorCode::ConfigInvalid, name_ + ": " + what);
  }

 private:
  const json& j_;
  std::string name_;
  std::set<std::string> seen_;
};

Activation activation_field(Section& s, const char* key, Activation def) {
  std::string name(to_string(def));
  s.get(key, name);
  try {
    return activation_from_string(name);
  } catch (const Error&) {
    s.fail("unknown activation '" + name + "'");
  }
}

json dataset_json(const DatasetConfig& d) {
  json j;
  j["source"] = d.source;
  j["path"] = d.path.generic_string();
  j["task_id_column"] = d.schema.task_id_column;
  j["target_column"] = d.schema.target_column;
  j["kind"] = d.schema.kind_override ? json(std::string(to_string(*d.schema.kind_override)))
                                      : json(nullptr);
  j["synthetic"] = {{"n_tasks", d.synthetic.n_tasks},
                    {"n_clusters", d.synthetic.n_clusters},
                    {"dim", d.synthetic.dim},
                    {"samples_per_task", d.synthetic.samples_per_task},
                    {"noise", d.synthetic.noise},
                    {"seed", d.synthetic.seed}};
  j["split"] = {{"train", d.train_frac}, {"val", d.val_frac}, {"test", d.test_frac}};
  j["normalize"] = d.normalize;
  j["distance_cap"] = d.distance_cap;
  return j;
}

json model_json(const ModelConfig& m) {
  json j;
  j["stl"] = {{"hidden", m.stl_hidden}, {"learning_rate", m.stl_learning_rate}};
  j["hidden_activation"] = to_string(m.hidden_activation);
  j["mtl"] = {{"pre", m.mtl.pre_widths},
              {"shared", m.mtl.shared_widths},
              {"post", m.mtl.post_widths},
              {"learning_rate", m.mtl.learning_rate}};
  j["epochs"] = m.epochs;
  j["batch_size"] = m.batch_size ? json(*m.batch_size) : json(nullptr);
  j["affinity_every"] = m.affinity_every;
  j["predictor"] = {{"features", m.predictor.feature_names},
                    {"hidden", m.predictor.hidden_widths},
                    {"hidden_activation", to_string(m.predictor.hidden_activation)},
                    {"output_activation", to_string(m.predictor.output_activation)},
                    {"learning_rate", m.predictor.learning_rate},
                    {"epochs", m.predictor_epochs},
                    {"warm_start", m.predictor_warm_start},
                    {"nas", {{"iters", m.nas_iters}, {"omega", m.nas_omega}, {"p", m.nas_p}}}};
  return j;
}

json search_json(const SearchConfig& s) {
  return {{"gamma_max", s.gamma_max},
          {"gamma_retrain", s.gamma_retrain},
          {"K", s.k ? json(*s.k) : json(nullptr)},
          {"pi_t_start", s.pi_t_start},
          {"pi_t_end", s.pi_t_end},
          {"budget_mtl", s.budget_mtl ? json(*s.budget_mtl) : json(nullptr)},
          {"start_rank", s.start_rank}};
}

json baselines_json(const BaselineConfig& b) {
  return {{"hierarchical", b.hierarchical},   {"transform", to_string(b.transform)},
          {"linkage", to_string(b.linkage)},   {"k_min", b.k_min},
          {"k_max", b.k_max},                  {"kmeans", b.kmeans},
          {"random_search", b.random_search}};
}

json report_json(const ReportConfig& r) {
  return {{"artifact_dir", r.artifact_dir.generic_string()},
          {"repeats", r.repeats},
          {"include_wall_seconds", r.include_wall_seconds}};
}

json full_json(const RunConfig& c) {
  return {{"seed", c.seed},
          {"dataset", dataset_json(c.dataset)},
          {"model", model_json(c.model)},
          {"sample", {{"size", c.sample.size ? json(*c.sample.size) : json(nullptr)}}},
          {"search", search_json(c.search)},
          {"baselines", baselines_json(c.baselines)},
          {"report", report_json(c.report)}};
}

}  // namespace

RunConfig parse_run_config(std::string_view text, const std::filesystem::path& base_dir) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigInvalid, std::string("not valid JSON: ") + e.what());
  }
  RunConfig c;
  c.base_dir = base_dir;
  Section top(root, "config");
  top.get("seed", c.seed);

  if (auto d = top.sub("dataset")) {
    auto& ds = c.dataset;
    d->get("source", ds.source);
    std::string path;
    d->get("path", path);
    ds.path = path;
    d->get("task_id_column", ds.schema.task_id_column);
    d->get("target_column", ds.schema.target_column);
    std::optional<std::string> kind;
    d->get("kind", kind);
    if (kind) {
      try {
        ds.schema.kind_override = task_kind_from_string(*kind);
      } catch (const Error&) {
        d->fail("unknown kind '" + *kind + "'");
      }
    }
    if (auto s = d->sub("synthetic")) {
      s->get("n_tasks", ds.synthetic.n_tasks);
      s->get("n_clusters", ds.synthetic.n_clusters);
      s->get("dim", ds.synthetic.dim);
      s->get("samples_per_task", ds.synthetic.samples_per_task);
      s->get("noise", ds.synthetic.noise);
      s->get("seed", ds.synthetic.seed);
      s->finish();
    }
    if (auto s = d->sub("split")) {
      s->get("train", ds.train_frac);
      s->get("val", ds.val_frac);
      s->get("test", ds.test_frac);
      s->finish();
    }
    d->get("normalize", ds.normalize);
    d->get("distance_cap", ds.distance_cap);
    d->finish();
  }

  if (auto m = top.sub("model")) {
    auto& mc = c.model;
    if (auto s = m->sub("stl")) {
      s->get("hidden", mc.stl_hidden);
      s->get("learning_rate", mc.stl_learning_rate);
      s->finish();
    }
    mc.hidden_activation = activation_field(*m, "hidden_activation", mc.hidden_activation);
    if (auto s = m->sub("mtl")) {
      s->get("pre", mc.mtl.pre_widths);
      s->get("shared", mc.mtl.shared_widths);
      s->get("post", mc.mtl.post_widths);
      s->get("learning_rate", mc.mtl.learning_rate);
      s->finish();
    }
    m->get("epochs", mc.epochs);
    m->get("batch_size", mc.batch_size);
    m->get("affinity_every", mc.affinity_every);
    if (auto p = m->sub("predictor")) {
      p->get("features", mc.predictor.feature_names);
      p->get("hidden", mc.predictor.hidden_widths);
      mc.predictor.hidden_activation =
          activation_field(*p, "hidden_activation", mc.predictor.hidden_activation);
      mc.predictor.output_activation =
          activation_field(*p, "output_activation", mc.predictor.output_activation);
      p->get("learning_rate", mc.predictor.learning_rate);
      p->get("epochs", mc.predictor_epochs);
      p->get("warm_start", mc.predictor_warm_start);
      if (auto n = p->sub("nas")) {
        n->get("iters", mc.nas_iters);
        n->get("omega", mc.nas_omega);
        n->get("p", mc.nas_p);
        n->finish();
      }
      p->finish();
    }
    m->finish();
  }

  if (auto s = top.sub("sample")) {
    s->get("size", c.sample.size);
    s->finish();
  }

  if (auto s = top.sub("search")) {
    s->get("gamma_max", c.search.gamma_max);
    s->get("gamma_retrain", c.search.gamma_retrain);
    s->get("K", c.search.k);
    s->get("pi_t_start", c.search.pi_t_start);
    s->get("pi_t_end", c.search.pi_t_end);
    s->get("budget_mtl", c.search.budget_mtl);
    s->get("start_rank", c.search.start_rank);
    s->finish();
  }

  if (auto b = top.sub("baselines")) {
    auto& bc = c.baselines;
    b->get("hierarchical", bc.hierarchical);
    std::string transform(to_string(bc.transform));
    std::string linkage(to_string(bc.linkage));
    b->get("transform", transform);
    b->get("linkage", linkage);
    bc.transform = gain_transform_from_string(transform);
    bc.linkage = linkage_from_string(linkage);
    b->get("k_min", bc.k_min);
    b->get("k_max", bc.k_max);
    b->get("kmeans", bc.kmeans);
    b->get("random_search", bc.random_search);
    b->finish();
  }

  if (auto r = top.sub("report")) {
    std::string dir = c.report.artifact_dir.generic_string();
    r->get("artifact_dir", dir);
    c.report.artifact_dir = dir;
    r->get("repeats", c.report.repeats);
    r->get("include_wall_seconds", c.report.include_wall_seconds);
    r->finish();
  }
  top.finish();
  c.validate();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const Error& e) {
    throw Error(ErrorCode::ConfigInvalid, e.what());
  }
  return parse_run_config(text, path.has_parent_path() ? path.parent_path() : ".");
}

void RunConfig::validate() const {
  auto bad = [](const std::string& what) { throw Error(ErrorCode::ConfigInvalid, what); };
  if (dataset.source == "csv") {
    if (dataset.path.empty()) bad("dataset.path is required for csv input");
    if (!std::filesystem::exists(dataset_path())) {
      bad("dataset.path does not exist: " + dataset_path().string());
    }
  } else if (dataset.source == "synthetic") {
    const auto& s = dataset.synthetic;
    if (s.n_tasks < 2 || s.n_clusters < 1 || s.dim < 1 || s.samples_per_task < 2) {
      bad("dataset.synthetic needs n_tasks >= 2, n_clusters >= 1, dim >= 1, samples >= 2");
    }
  } else {
    bad("dataset.source must be 'synthetic' or 'csv'");
  }
  try {
    SplitSpec{dataset.train_frac, dataset.val_frac, dataset.test_frac, 0}.validate();
  } catch (const Error& e) {
    bad(e.what());
  }
  if (dataset.distance_cap < 2) bad("dataset.distance_cap must be >= 2");
  if (model.epochs < 1) bad("model.epochs must be >= 1");
  if (model.batch_size && *model.batch_size < 1) bad("model.batch_size must be >= 1");
  if (model.affinity_every < 1) bad("model.affinity_every must be >= 1");
  if (!(model.stl_learning_rate > 0.0)) bad("model.stl.learning_rate must be > 0");
  for (int w : model.stl_hidden) {
    if (w < 1) bad("model.stl.hidden widths must be >= 1");
  }
  try {
    model.mtl.validate();
    model.predictor.validate();
  } catch (const Error& e) {
    bad(e.what());
  }
  const auto& known = GroupFeatures::names();
  for (const auto& f : model.predictor.feature_names) {
    if (std::find(known.begin(), known.end(), f) == known.end()) {
      bad("model.predictor.features: unknown feature '" + f + "'");
    }
  }
  if (model.predictor_epochs < 1) bad("model.predictor.epochs must be >= 1");
  if (model.nas_iters < 0) bad("model.predictor.nas.iters must be >= 0");
  if (sample.size && *sample.size < 1) bad("sample.size must be >= 1");
  search.validate();
  if (baselines.k_min < 1 || baselines.k_max < baselines.k_min) bad("baselines k range is empty");
  if (report.repeats < 1) bad("report.repeats must be >= 1");
}

std::filesystem::path RunConfig::artifact_dir() const {
  return report.artifact_dir.is_absolute() ? report.artifact_dir : base_dir / report.artifact_dir;
}

std::filesystem::path RunConfig::dataset_path() const {
  return dataset.path.is_absolute() ? dataset.path : base_dir / dataset.path;
}

std::string run_config_to_json(const RunConfig& config) { return full_json(config).dump(2) + "\n"; }

std::string config_hash(const RunConfig& config) {
  return sha256_hex(full_json(config).dump()).substr(0, 16);
}

std::uint64_t stage_seed(const RunConfig& config, std::string_view stage) {
  return derive_seed(config.seed, stage);
}

// Hash of the config sections a stage depends on; artifacts carry it so later
// stages can detect output produced under different settings.
std::string stage_config_hash(const RunConfig& config, std::string_view stage) {
  const json full = full_json(config);
  json subset = {{"seed", full["seed"]}, {"dataset", full["dataset"]}};
  if (stage == "ingest") return sha256_hex(subset.dump()).substr(0, 16);
  subset["model"] = full["model"];
  if (stage == "stl" || stage == "pairs") return sha256_hex(subset.dump()).substr(0, 16);
  subset["sample"] = full["sample"];
  if (stage == "sample" || stage == "predictor") return sha256_hex(subset.dump()).substr(0, 16);
  subset["search"] = full["search"];
  subset["repeats"] = full["report"]["repeats"];
  if (stage == "search") return sha256_hex(subset.dump()).substr(0, 16);
  subset["baselines"] = full["baselines"];
  if (stage == "baselines") return sha256_hex(subset.dump()).substr(0, 16);
  return config_hash(config);
}

std::string mtl_fingerprint(const RunConfig& config) {
  const json full = full_json(config);
  json subset = {{"seed", full["seed"]}, {"dataset", full["dataset"]}};
  subset["mtl"] = full["model"]["mtl"];
  subset["hidden_activation"] = full["model"]["hidden_activation"];
  subset["epochs"] = full["model"]["epochs"];
  subset["batch_size"] = full["model"]["batch_size"];
  return sha256_hex(subset.dump());
}

}  // namespace tgopt
