#include <chrono>
#include <cmath>
#include <initializer_list>
#include <iostream>
#include <limits>

#include "json.hpp"
#include "tgopt/error.hpp"
#include "tgopt/experiment.hpp"
#include "tgopt/io.hpp"
#include "tgopt/rng.hpp"

namespace tgopt {

using nlohmann::json;

namespace {

namespace fs = std::filesystem;

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }
json optional_number(const std::optional<double>& v) { return v ? number(*v) : json(nullptr); }
std::optional<double> optional_from(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(number(m(i, k)));
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

Eigen::VectorXd vector_from(const json& j) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  return v;
}

json task_json(const Task& t) { return {{"x", matrix_json(t.features)}, {"y", vector_json(t.targets)}}; }

Task task_from(const json& j, const std::string& id, TaskKind kind) {
  Task t;
  t.id = id;
  t.kind = kind;
  t.targets = vector_from(j.at("y"));
  t.features = matrix_from(j.at("x"));
  if (t.features.rows() == 0) t.features.resize(0, 0);
  return t;
}

json partition_json(const Partition& p, std::span<const std::string> ids) {
  return json::parse(partition_to_json(p, ids));
}

Partition partition_from(const json& j, std::span<const std::string> ids) {
  return partition_from_json(j.dump(), ids);
}

json metrics_json(const PartitionMetrics& m) {
  return {{"mean_error_rate", optional_number(m.mean_error_rate)},
          {"mean_auc", optional_number(m.mean_auc)}};
}

void log(std::string_view stage, const std::string& msg) {
  std::clog << "[" << stage << "] " << msg << "\n";
}

class Pipeline {
 public:
  Pipeline(const RunConfig& config, int jobs) : c_(config), jobs_(jobs), dir_(config.artifact_dir()) {}

  void run(std::string_view stage) {
    const auto start = std::chrono::steady_clock::now();
    if (stage == "ingest") ingest();
    else if (stage == "stl") stl();
    else if (stage == "pairs") pairs();
    else if (stage == "sample") sample();
    else if (stage == "predictor") predictor();
    else if (stage == "search") search(start);
    else if (stage == "baselines") baselines();
    else if (stage == "report") report();
    else throw Error(ErrorCode::ConfigInvalid, "unknown stage '" + std::string(stage) + "'");
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    record_timing(stage, secs);
  }

 private:
  ArtifactHeader header(std::string_view stage) const {
    return {kSchemaVersion, stage_config_hash(c_, stage), c_.seed};
  }

  json header_json(std::string_view stage) const {
    const auto h = header(stage);
    return {{"schema_version", h.schema_version}, {"config_hash", h.config_hash}, {"seed", h.seed}};
  }

  // Reads an artifact written by `stage`, insisting it matches this config.
  std::string require(const std::string& file, std::string_view stage) const {
    const auto path = dir_ / file;
    if (!fs::exists(path)) {
      throw Error(ErrorCode::MissingPrerequisiteStage,
                  path.string() + " not found; run `tgopt " + std::string(stage) + "` first");
    }
    std::string text = read_file(path);
    if (read_header(text).config_hash != stage_config_hash(c_, stage)) {
      throw Error(ErrorCode::MissingPrerequisiteStage,
                  path.string() + " was produced under a different configuration; rerun `tgopt " +
                      std::string(stage) + "`");
    }
    return text;
  }

  // True when every file exists and carries this config's hash for `stage`.
  bool up_to_date(std::initializer_list<const char*> files, std::string_view stage) const {
    for (const char* f : files) {
      const auto path = dir_ / f;
      if (!fs::exists(path)) return false;
      try {
        if (read_header(read_file(path)).config_hash != stage_config_hash(c_, stage)) return false;
      } catch (const Error&) {
        return false;
      }
    }
    return true;
  }

  void write(const std::string& file, const json& j) const {
    write_file_atomic(dir_ / file, j.dump(2) + "\n");
  }

  // ---- loaders ---------------------------------------------------------

  PreparedData& data() {
    if (data_) return *data_;
    const json j = json::parse(require("dataset.json", "ingest"));
    const auto kind = task_kind_from_string(j.at("kind").get<std::string>());
    std::vector<TaskSplit> splits;
    for (const auto& t : j.at("tasks")) {
      const auto id = t.at("id").get<std::string>();
      splits.push_back({task_from(t.at("train"), id, kind), task_from(t.at("val"), id, kind),
                        task_from(t.at("test"), id, kind)});
    }
    NormalizationStats norm;
    norm.mean = vector_from(j.at("norm").at("mean"));
    norm.std = vector_from(j.at("norm").at("std"));
    norm.constant = j.at("norm").at("constant").get<std::vector<bool>>();
    std::optional<Partition> truth;
    std::vector<std::string> ids;
    for (const auto& s : splits) ids.push_back(s.id());
    if (!j.at("true_partition").is_null()) truth = partition_from(j.at("true_partition"), ids);
    data_ = assemble_data(j.at("feature_names").get<std::vector<std::string>>(), kind,
                          std::move(splits), std::move(norm), c_.dataset.normalize,
                          std::move(truth));
    return *data_;
  }

  std::vector<std::string> ids() { return data().task_ids(); }

  std::vector<StlResult>& stl_results() {
    if (!stl_) stl_ = stl_results_from_json(require("stl.json", "stl"));
    return *stl_;
  }

  EvalCache load_cache(const std::string& file, std::string_view stage) {
    const auto task_ids = ids();
    return eval_cache_from_json(require(file, stage), task_ids);
  }

  MtlGroupEvaluator& evaluator() {
    if (!evaluator_) evaluator_ = make_evaluator(data(), c_, true);
    return *evaluator_;
  }

  const json& pairs_json() {
    if (!pairs_) pairs_ = json::parse(require("pairs.json", "pairs"));
    return *pairs_;
  }

  PairwiseTables tables() {
    const auto& j = pairs_json();
    return {matrix_from(j.at("gain")), matrix_from(j.at("weight_dot")),
            matrix_from(j.at("distance"))};
  }

  std::vector<TaskProfile>& profiles() {
    if (!profiles_) profiles_ = make_profiles(data(), stl_results(), c_);
    return *profiles_;
  }

  // ---- stages ----------------------------------------------------------

  void ingest() {
    const PreparedData d = prepare_data(c_);
    json j = header_json("ingest");
    j["source"] = c_.dataset.source;
    j["kind"] = to_string(d.kind);
    j["feature_names"] = d.feature_names;
    j["binary_features"] = d.binary_features;
    json tasks = json::array();
    for (const auto& s : d.raw_splits) {
      tasks.push_back({{"id", s.id()},
                       {"train", task_json(s.train)},
                       {"val", task_json(s.val)},
                       {"test", task_json(s.test)}});
    }
    j["tasks"] = std::move(tasks);
    j["norm"] = {{"mean", vector_json(d.norm.mean)},
                 {"std", vector_json(d.norm.std)},
                 {"constant", d.norm.constant}};
    const auto task_ids = d.task_ids();
    j["true_partition"] =
        d.true_partition ? partition_json(*d.true_partition, task_ids) : json(nullptr);
    write("dataset.json", j);
    log("ingest", std::to_string(d.raw_splits.size()) + " tasks, " +
                      std::to_string(d.feature_names.size()) + " features");
  }

  void stl() {
    const auto results = compute_stl(data(), c_, jobs_);
    write_file_atomic(dir_ / "stl.json", stl_results_to_json(results, header("stl")));
    double sum = 0.0;
    for (const auto& r : results) sum += r.final_loss;
    log("stl", std::to_string(results.size()) + " models, total loss " + std::to_string(sum));
  }

  void pairs() {
    if (up_to_date({"pairs.json", "cache_pairs.json", "features_schema.json"}, "pairs") &&
        fs::exists(dir_ / "features.csv")) {
      log("pairs", "up to date, 0 new trainings");
      return;
    }
    const auto task_ids = ids();
    EvalCache cache(stl_losses(stl_results()));
    const long before = evaluator().physical_trainings();
    const auto ps = compute_pairs(data(), profiles(), c_, cache, evaluator(), jobs_);
    const long trained = evaluator().physical_trainings() - before;

    json j = header_json("pairs");
    j["task_ids"] = task_ids;
    j["planned_pairs"] = plan_pairs(task_ids.size()).size();
    j["gain"] = matrix_json(ps.tables.gain);
    j["weight_dot"] = matrix_json(ps.tables.weight_dot);
    j["distance"] = matrix_json(ps.tables.distance);
    j["all_in_one"] = {{"total_loss", ps.all_in_one.total_loss},
                       {"z_matrix_task_ids", ps.all_in_one.task_ids},
                       {"z_matrix", matrix_json(*ps.all_in_one.z_matrix)}};
    json vecs = json::object();
    for (const auto& [id, v] : ps.all_in_one.task_vectors) vecs[id] = vector_json(v);
    j["task_vectors"] = std::move(vecs);
    write("pairs.json", j);
    write_file_atomic(dir_ / "cache_pairs.json", eval_cache_to_json(cache, task_ids, header("pairs")));

    // Pair feature table and its schema.
    const auto names = pair_feature_names(data().binary_features);
    std::string csv = "# schema_version=" + std::to_string(kSchemaVersion) +
                      " config_hash=" + header("pairs").config_hash +
                      " seed=" + std::to_string(c_.seed) + "\ntask_i,task_j";
    for (const auto& n : names) csv += "," + n;
    csv += "\n";
    const auto planned = plan_pairs(task_ids.size());
    for (std::size_t k = 0; k < planned.size(); ++k) {
      csv += task_ids[planned[k].members()[0]] + "," + task_ids[planned[k].members()[1]];
      for (double v : ps.pair_features[k].values()) {
        char buf[40];
        std::snprintf(buf, sizeof buf, ",%.17g", v);
        csv += buf;
      }
      csv += "\n";
    }
    write_file_atomic(dir_ / "features.csv", csv);
    json schema = header_json("pairs");
    schema["binary_features"] = data().binary_features;
    schema["key_columns"] = {"task_i", "task_j"};
    schema["feature_columns"] = names;
    schema["n_features"] = names.size();
    schema["group_feature_columns"] = GroupFeatures::names();
    write("features_schema.json", schema);

    // The all-task model is trained directly, outside the evaluator.
    log("pairs", std::to_string(planned.size()) + " pairs planned, " + std::to_string(trained) +
                     " trained, " + std::to_string(static_cast<long>(planned.size()) - trained) +
                     " from cache; all-task model trained");
  }

  void sample() {
    const auto task_ids = ids();
    EvalCache cache = load_cache("cache_pairs.json", "pairs");
    const long before = evaluator().physical_trainings();
    const auto ss = compute_sample(task_ids.size(), c_, cache, evaluator(), jobs_);
    json j = header_json("sample");
    json parts = json::array();
    for (const auto& p : ss.partitions) parts.push_back(partition_json(p, task_ids));
    j["partitions"] = std::move(parts);
    j["losses"] = ss.losses;
    j["mtl_trainings"] = ss.mtl_trainings;
    write("sample.json", j);
    write_file_atomic(dir_ / "cache_sample.json",
                      eval_cache_to_json(cache, task_ids, header("sample")));
    log("sample", std::to_string(ss.partitions.size()) + " partitions, " +
                      std::to_string(ss.mtl_trainings) + " new groups (" +
                      std::to_string(evaluator().physical_trainings() - before) + " trained)");
  }

  PredictorConfig predictor_config(std::uint64_t seed) const {
    PredictorConfig pc;
    pc.epochs = c_.model.predictor_epochs;
    pc.seed = seed;
    pc.warm_start = c_.model.predictor_warm_start;
    return pc;
  }

  void predictor() {
    const EvalCache cache = load_cache("cache_sample.json", "sample");
    const PairwiseTables t = tables();
    const PredictionContext ctx{&t, profiles()};
    const auto records = records_from_cache(cache, ctx);
    PredictorArch arch = c_.model.predictor;
    const auto seed = stage_seed(c_, "predictor");

    if (c_.model.nas_iters > 0) {
      auto shuffled = dedup_records(records);
      Rng rng(derive_seed(seed, "nas_split"));
      rng.shuffle(std::span<TrainingRecord>(shuffled));
      const std::size_t n_val = std::max<std::size_t>(2, shuffled.size() / 5);
      if (shuffled.size() < n_val + 10) {
        throw Error(ErrorCode::TooFewRecords, "architecture search needs >= 12 group records");
      }
      const std::span<const TrainingRecord> val(shuffled.data(), n_val);
      const std::span<const TrainingRecord> train(shuffled.data() + n_val, shuffled.size() - n_val);
      SearchSpace space;
      space.available_features = GroupFeatures::names();
      const auto pc = predictor_config(derive_seed(seed, "nas_train"));
      const auto nas = nas_search(
          arch, space, c_.model.nas_iters, c_.model.nas_p,
          [&](const ArchCandidate& a) { return arch_score(a, train, val, c_.model.nas_omega, pc); },
          derive_seed(seed, "nas"));
      std::string csv = "iteration,score,accepted,changed,candidate_hash\n";
      for (const auto& e : nas.log) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.10g", e.score);
        csv += std::to_string(e.iteration) + "," + buf + "," + (e.accepted ? "1" : "0") + "," +
               std::string(to_string(e.changed)) + "," + e.candidate_hash + "\n";
      }
      write_file_atomic(dir_ / "nas_log.csv", csv);
      arch = nas.best;
    }

    const auto model = train_predictor(records, arch, predictor_config(seed));
    write_file_atomic(dir_ / "predictor.json", predictor_to_json(model, header("predictor")));
    std::vector<double> pred;
    std::vector<double> actual;
    for (const auto& r : dedup_records(records)) {
      pred.push_back(predict_gain(model, r.features));
      actual.push_back(r.observed_gain);
    }
    char buf[128];
    std::snprintf(buf, sizeof buf, "%zu,%.10g,%.10g\n", model.trained_on,
                  predictor_mse(model, records), r_squared(pred, actual));
    write_file_atomic(dir_ / "predictor_log.csv", std::string("records,train_mse,train_r2\n") + buf);
    log("predictor", "trained on " + std::to_string(model.trained_on) + " groups");
  }

  void search(std::chrono::steady_clock::time_point start) {
    const auto task_ids = ids();
    const EvalCache base = load_cache("cache_sample.json", "sample");
    const json sj = json::parse(require("sample.json", "sample"));
    std::vector<Partition> sample_parts;
    for (const auto& p : sj.at("partitions")) sample_parts.push_back(partition_from(p, task_ids));
    const auto model = predictor_from_json(require("predictor.json", "predictor"));
    const PairwiseTables t = tables();
    const PredictionContext ctx{&t, profiles()};

    json runs = json::array();
    std::optional<std::size_t> best_run;
    double best_loss = std::numeric_limits<double>::infinity();
    Partition best;
    long total_trainings = 0;
    fs::create_directories(dir_ / "traces");
    for (int r = 0; r < c_.report.repeats; ++r) {
      EvalCache cache = base;
      GainPredictorSurrogate surrogate(
          ctx, c_.model.predictor,
          predictor_config(derive_seed(stage_seed(c_, "predictor_update"), static_cast<std::uint64_t>(r))),
          model);
      SearchConfig sc = c_.search;
      sc.seed = derive_seed(stage_seed(c_, "search"), static_cast<std::uint64_t>(r));
      const auto res = search_with_predictor(sample_parts, cache, evaluator(), surrogate, sc);

      std::string trace = header_json("search").dump() + "\n";
      for (const auto& rec : res.trace) trace += trace_record_to_jsonl(rec, task_ids) + "\n";
      write_file_atomic(dir_ / "traces" / ("trace_" + std::to_string(r) + ".jsonl"), trace);
      if (r == 0) write_file_atomic(dir_ / "trace.jsonl", trace);

      runs.push_back({{"repeat", r},
                      {"seed", sc.seed},
                      {"start_partition", partition_json(res.start, task_ids)},
                      {"best_partition", partition_json(res.best, task_ids)},
                      {"total_loss", res.best_loss},
                      {"mtl_trainings", res.mtl_trainings},
                      {"budget_exhausted", res.budget_exhausted},
                      {"metrics", metrics_json(partition_metrics(res.best, cache, stl_results()))}});
      total_trainings += res.mtl_trainings;
      if (res.best_loss < best_loss) {
        best_loss = res.best_loss;
        best = res.best;
        best_run = static_cast<std::size_t>(r);
      }
      log("search", "repeat " + std::to_string(r) + ": loss " + std::to_string(res.best_loss) +
                        " with " + std::to_string(res.mtl_trainings) + " trainings");
    }
    json j = header_json("search");
    j["best_partition"] = partition_json(best, task_ids);
    j["total_loss"] = best_loss;
    j["mtl_trainings"] = total_trainings;
    j["best_repeat"] = *best_run;
    j["runs"] = std::move(runs);
    if (c_.report.include_wall_seconds) {
      j["wall_seconds"] =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
    write("result.json", j);
  }

  json method_json(std::vector<double> losses, double trainings, const PartitionMetrics& m,
                   json extra = json::object()) {
    extra["losses"] = std::move(losses);
    extra["mtl_trainings"] = trainings;
    extra["metrics"] = metrics_json(m);
    return extra;
  }

  void baselines() {
    const auto task_ids = ids();
    const std::size_t n = task_ids.size();
    const EvalCache base = load_cache("cache_sample.json", "sample");
    const EvalCache pair_cache = load_cache("cache_pairs.json", "pairs");
    const json result = json::parse(require("result.json", "search"));
    const auto& stl = stl_results();

    json j = header_json("baselines");
    json methods = json::object();
    const Partition singles = Partition::singletons(n);
    methods["STL"] = method_json({base.stl_total()}, 0, partition_metrics(singles, base, stl));
    const auto ps = pairwise_summary(pair_cache);
    const double n_pairs = static_cast<double>(plan_pairs(n).size());
    methods["PairwiseAll"] = method_json({ps.all_pairs_total}, n_pairs, {});
    methods["PairwiseOptimal"] = method_json({ps.optimal_pairs_total}, n_pairs, {});
    const Partition everyone = Partition::single_group(n);
    methods["SimpleMTL"] = method_json({*base.partition_loss(everyone)}, 1,
                                       partition_metrics(everyone, base, stl));

    if (c_.baselines.hierarchical) {
      EvalCache cache = base;
      const Eigen::MatrixXd gain = matrix_from(pairs_json().at("gain"));
      const std::size_t k_hi = std::min(c_.baselines.k_max, n > 1 ? n - 1 : 1);
      const std::size_t k_lo = std::min(c_.baselines.k_min, k_hi);
      json per_k = json::array();
      long fresh = 0;
      std::optional<Partition> best;
      double best_loss = std::numeric_limits<double>::infinity();
      for (std::size_t k = k_lo; k <= k_hi; ++k) {
        const auto p = hierarchical_baseline(gain, c_.baselines.transform, c_.baselines.linkage, k);
        const auto ev = evaluate_partition(p, cache, evaluator());
        fresh += ev.fresh_trainings;
        per_k.push_back({{"k", k}, {"partition", partition_json(p, task_ids)}, {"loss", ev.total_loss}});
        if (ev.total_loss < best_loss) {
          best_loss = ev.total_loss;
          best = p;
        }
      }
      methods["Hierarchical"] = method_json(
          {best_loss}, static_cast<double>(fresh), partition_metrics(*best, cache, stl),
          {{"partition", partition_json(*best, task_ids)}, {"per_k", per_k}});
    }

    if (c_.baselines.kmeans && n >= 3) {
      std::vector<Eigen::VectorXd> vecs;
      for (const auto& id : task_ids) vecs.push_back(vector_from(pairs_json().at("task_vectors").at(id)));
      try {
        const auto km = kmeans_baseline(vecs, 2, n - 1, stage_seed(c_, "kmeans"));
        EvalCache cache = base;
        const auto& fit = km.fits[km.elbow];
        const auto ev = evaluate_partition(fit.partition, cache, evaluator());
        json inertia = json::array();
        for (const auto& f : km.fits) inertia.push_back({{"k", f.k}, {"inertia", f.inertia}});
        methods["KMeans"] = method_json({ev.total_loss}, static_cast<double>(ev.fresh_trainings),
                                        partition_metrics(fit.partition, cache, stl),
                                        {{"partition", partition_json(fit.partition, task_ids)},
                                         {"elbow_k", fit.k},
                                         {"inertia", inertia}});
      } catch (const Error& e) {
        if (e.code() != ErrorCode::DegenerateVectors) throw;
        log("baselines", std::string("k-means skipped: ") + e.what());
      }
    }

    if (c_.baselines.random_search) {
      std::vector<double> losses;
      double trainings = 0.0;
      json runs = json::array();
      std::vector<PartitionMetrics> metrics;
      for (const auto& run : result.at("runs")) {
        EvalCache cache = base;
        const long budget = run.at("mtl_trainings").get<long>();
        const auto r = random_search_baseline(
            cache, evaluator(), budget,
            derive_seed(stage_seed(c_, "random_search"), run.at("repeat").get<std::uint64_t>()));
        losses.push_back(r.best_loss);
        trainings += static_cast<double>(r.mtl_trainings);
        metrics.push_back(partition_metrics(r.best, cache, stl));
        runs.push_back({{"budget", budget},
                        {"mtl_trainings", r.mtl_trainings},
                        {"draws", r.draws},
                        {"total_loss", r.best_loss},
                        {"partition", partition_json(r.best, task_ids)}});
      }
      methods["RandomSearch"] =
          method_json(losses, trainings / static_cast<double>(losses.size()), average(metrics),
                      {{"runs", runs}});
    }
    j["methods"] = std::move(methods);
    write("baselines.json", j);
    log("baselines", "done");
  }

  static PartitionMetrics average(const std::vector<PartitionMetrics>& ms) {
    PartitionMetrics out;
    double e = 0.0;
    double a = 0.0;
    std::size_t ne = 0;
    std::size_t na = 0;
    for (const auto& m : ms) {
      if (m.mean_error_rate) {
        e += *m.mean_error_rate;
        ++ne;
      }
      if (m.mean_auc) {
        a += *m.mean_auc;
        ++na;
      }
    }
    if (ne) out.mean_error_rate = e / static_cast<double>(ne);
    if (na) out.mean_auc = a / static_cast<double>(na);
    return out;
  }

  void report() {
    const json b = json::parse(require("baselines.json", "baselines"));
    const json result = json::parse(require("result.json", "search"));
    std::vector<ReportRow> rows;
    for (const char* name : {"STL", "PairwiseAll", "PairwiseOptimal", "SimpleMTL", "Hierarchical",
                             "KMeans", "RandomSearch"}) {
      if (!b.at("methods").contains(name)) continue;
      const auto& m = b.at("methods").at(name);
      rows.push_back({name, m.at("losses").get<std::vector<double>>(),
                      m.at("mtl_trainings").get<double>(),
                      optional_from(m.at("metrics").at("mean_error_rate")),
                      optional_from(m.at("metrics").at("mean_auc"))});
    }
    ReportRow ours{"Ours", {}, 0.0, std::nullopt, std::nullopt};
    std::vector<PartitionMetrics> metrics;
    for (const auto& run : result.at("runs")) {
      ours.losses.push_back(run.at("total_loss").get<double>());
      ours.mtl_trainings += run.at("mtl_trainings").get<double>();
      metrics.push_back({optional_from(run.at("metrics").at("mean_error_rate")),
                         optional_from(run.at("metrics").at("mean_auc"))});
    }
    ours.mtl_trainings /= static_cast<double>(std::max<std::size_t>(1, ours.losses.size()));
    const auto avg = average(metrics);
    ours.mean_error_rate = avg.mean_error_rate;
    ours.mean_auc = avg.mean_auc;
    rows.push_back(std::move(ours));
    emit_report(rows, dir_, header("report"));
    log("report", "wrote report.csv and report.md");
  }

  void record_timing(std::string_view stage, double secs) const {
    json t = json::object();
    const auto path = dir_ / "timing.json";
    if (fs::exists(path)) {
      try {
        t = json::parse(read_file(path));
      } catch (const json::exception&) {
        t = json::object();
      }
    }
    t["stages"][std::string(stage)] = secs;
    write_file_atomic(path, t.dump(2) + "\n");
  }

  const RunConfig& c_;
  int jobs_;
  fs::path dir_;
  std::optional<PreparedData> data_;
  std::optional<std::vector<StlResult>> stl_;
  std::optional<json> pairs_;
  std::optional<std::vector<TaskProfile>> profiles_;
  std::unique_ptr<MtlGroupEvaluator> evaluator_;
};

}  // namespace

void run_stage(std::string_view stage, const RunConfig& config, int jobs) {
  config.validate();
  std::filesystem::create_directories(config.artifact_dir());
  Pipeline pipeline(config, jobs);
  if (stage == "all") {
    for (const auto& s : pipeline_order()) pipeline.run(s);
    return;
  }
  pipeline.run(stage);
}

}  // namespace tgopt
