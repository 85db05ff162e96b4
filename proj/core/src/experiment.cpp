#include "tgopt/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "tgopt/error.hpp"
#include "tgopt/io.hpp"
#include "tgopt/rng.hpp"

namespace tgopt {

namespace {

template <class F>
void parallel_for(std::size_t n, int jobs, F&& body) {
  const auto workers = std::min<std::size_t>(static_cast<std::size_t>(std::max(1, jobs)), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(mu);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

Task normalized(const Task& t, const NormalizationStats& norm) {
  Task out = t;
  out.features = norm.apply(t.features);
  return out;
}

}  // namespace

std::size_t default_sample_size(std::size_t n_tasks) {
  const auto scaled = static_cast<std::size_t>(std::ceil(1.5 * static_cast<double>(n_tasks)));
  return std::max<std::size_t>(50, scaled);
}

std::vector<GroupKey> plan_pairs(std::size_t n_tasks) {
  std::vector<GroupKey> pairs;
  pairs.reserve(n_tasks * (n_tasks - (n_tasks > 0 ? 1 : 0)) / 2);
  for (std::size_t i = 0; i < n_tasks; ++i) {
    for (std::size_t j = i + 1; j < n_tasks; ++j) pairs.push_back(GroupKey{i, j});
  }
  return pairs;
}

std::vector<std::string> PreparedData::task_ids() const {
  std::vector<std::string> ids;
  for (const auto& s : raw_splits) ids.push_back(s.id());
  return ids;
}

LossKind PreparedData::loss_kind() const {
  return kind == TaskKind::Classification ? LossKind::BCE : LossKind::MSE;
}

PreparedData assemble_data(std::vector<std::string> feature_names, TaskKind kind,
                           std::vector<TaskSplit> raw_splits, NormalizationStats norm,
                           bool normalize, std::optional<Partition> true_partition) {
  PreparedData d;
  d.feature_names = std::move(feature_names);
  d.kind = kind;
  d.raw_splits = std::move(raw_splits);
  d.norm = std::move(norm);
  d.true_partition = std::move(true_partition);
  d.binary_features = true;
  for (const auto& s : d.raw_splits) {
    for (const Task* t : {&s.train, &s.val, &s.test}) {
      d.binary_features =
          d.binary_features && (t->features.array() == 0.0 || t->features.array() == 1.0).all();
    }
  }
  for (const auto& s : d.raw_splits) {
    if (normalize) {
      d.splits.push_back({normalized(s.train, d.norm), normalized(s.val, d.norm),
                          normalized(s.test, d.norm)});
    } else {
      d.splits.push_back(s);
    }
  }
  return d;
}

PreparedData prepare_data(const RunConfig& config) {
  TaskSet ts;
  std::optional<Partition> truth;
  if (config.dataset.source == "csv") {
    ts = load_taskset(config.dataset_path(), config.dataset.schema);
  } else {
    auto synth = synth_taskset(config.dataset.synthetic);
    ts = std::move(synth.tasks);
    truth = std::move(synth.true_partition);
  }
  SplitSpec spec{config.dataset.train_frac, config.dataset.val_frac, config.dataset.test_frac,
                 stage_seed(config, "ingest")};
  auto raw_splits = split_taskset(ts, spec);

  Eigen::Index rows = 0;
  for (const auto& s : raw_splits) rows += s.train.features.rows();
  Eigen::MatrixXd pooled(rows, static_cast<Eigen::Index>(ts.dim()));
  Eigen::Index at = 0;
  for (const auto& s : raw_splits) {
    pooled.middleRows(at, s.train.features.rows()) = s.train.features;
    at += s.train.features.rows();
  }
  return assemble_data(ts.feature_names(), ts.kind(), std::move(raw_splits),
                       NormalizationStats::compute(pooled), config.dataset.normalize,
                       std::move(truth));
}

NetSpec stl_net_spec(const RunConfig& config, const PreparedData& data) {
  NetSpec spec;
  spec.layer_widths.push_back(static_cast<int>(data.feature_names.size()));
  for (int w : config.model.stl_hidden) spec.layer_widths.push_back(w);
  spec.layer_widths.push_back(1);
  spec.hidden_activation = config.model.hidden_activation;
  spec.output_activation =
      data.kind == TaskKind::Classification ? Activation::Sigmoid : Activation::Linear;
  spec.learning_rate = config.model.stl_learning_rate;
  return spec;
}

TrainConfig train_config(const RunConfig& config, const PreparedData& data, std::uint64_t seed) {
  TrainConfig tc;
  tc.epochs = config.model.epochs;
  tc.batch_size = config.model.batch_size;
  tc.seed = seed;
  tc.loss_kind = data.loss_kind();
  return tc;
}

std::vector<StlResult> compute_stl(const PreparedData& data, const RunConfig& config, int jobs) {
  const NetSpec spec = stl_net_spec(config, data);
  const TrainConfig tc = train_config(config, data, stage_seed(config, "stl"));
  std::vector<StlResult> out(data.splits.size());
  parallel_for(out.size(), jobs, [&](std::size_t t) { out[t] = run_stl(data.splits[t], spec, tc); });
  return out;
}

std::vector<double> stl_losses(std::span<const StlResult> stl) {
  std::vector<double> out;
  for (const auto& r : stl) out.push_back(r.final_loss);
  return out;
}

std::unique_ptr<MtlGroupEvaluator> make_evaluator(const PreparedData& data,
                                                  const RunConfig& config, bool use_disk) {
  MtlArch arch = config.model.mtl;
  arch.hidden_activation = config.model.hidden_activation;
  arch.output_activation =
      data.kind == TaskKind::Classification ? Activation::Sigmoid : Activation::Linear;
  std::optional<std::filesystem::path> dir;
  if (use_disk) dir = config.artifact_dir() / "mtl_cache";
  return std::make_unique<MtlGroupEvaluator>(data.splits, arch,
                                             train_config(config, data, stage_seed(config, "mtl")),
                                             mtl_fingerprint(config), dir);
}

std::vector<TaskProfile> make_profiles(const PreparedData& data, std::span<const StlResult> stl,
                                       const RunConfig& config) {
  const DistanceOptions opts{config.dataset.distance_cap, stage_seed(config, "features")};
  std::vector<TaskProfile> out;
  for (std::size_t t = 0; t < data.raw_splits.size(); ++t) {
    const Task& raw = data.raw_splits[t].train;
    out.push_back(make_task_profile(raw, normalized(raw, data.norm), stl[t], data.binary_features,
                                    opts));
  }
  return out;
}

PairStage compute_pairs(const PreparedData& data, std::span<const TaskProfile> profiles,
                        const RunConfig& config, EvalCache& cache, MtlGroupEvaluator& evaluator,
                        int jobs) {
  const std::size_t n = data.splits.size();
  const auto pairs = plan_pairs(n);
  PairStage out;
  out.tables = PairwiseTables::empty(n);

  const auto evals = evaluator.evaluate_many(pairs, jobs);
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    if (cache.insert(pairs[k], evals[k])) ++out.mtl_trainings;
  }

  // One model on every task: simple-MTL baseline, affinity and task vectors.
  MtlOptions options;
  options.record_affinity = true;
  options.affinity_every = config.model.affinity_every;
  std::vector<std::size_t> everyone(n);
  for (std::size_t t = 0; t < n; ++t) everyone[t] = t;
  const GroupKey all(everyone);
  out.all_in_one =
      train_mtl_model(data.splits, evaluator.arch(), evaluator.train_config(), options).result;
  if (cache.insert(all, group_eval_from(all, data.splits, out.all_in_one))) ++out.mtl_trainings;

  std::map<std::string, Eigen::Index> z_index;
  for (std::size_t k = 0; k < out.all_in_one.task_ids.size(); ++k) {
    z_index[out.all_in_one.task_ids[k]] = static_cast<Eigen::Index>(k);
  }
  const auto& z = *out.all_in_one.z_matrix;
  const DistanceOptions opts{config.dataset.distance_cap, stage_seed(config, "features")};

  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const auto i = pairs[k].members()[0];
    const auto j = pairs[k].members()[1];
    const auto& id_i = data.splits[i].id();
    const auto& id_j = data.splits[j].id();
    const auto ei = static_cast<Eigen::Index>(i);
    const auto ej = static_cast<Eigen::Index>(j);
    const double gain = relative_mtl_gain(cache.stl_sum(pairs[k]), cache.find(pairs[k])->total_loss);
    const double wdot = out.all_in_one.task_vectors.at(id_i).dot(out.all_in_one.task_vectors.at(id_j));
    const double dist = designated_pair_distance(profiles[i], profiles[j], data.binary_features, opts);
    out.tables.gain(ei, ej) = out.tables.gain(ej, ei) = gain;
    out.tables.weight_dot(ei, ej) = out.tables.weight_dot(ej, ei) = wdot;
    out.tables.distance(ei, ej) = out.tables.distance(ej, ei) = dist;
  }

  out.pair_features.resize(pairs.size());
  parallel_for(pairs.size(), jobs, [&](std::size_t k) {
    const auto i = pairs[k].members()[0];
    const auto j = pairs[k].members()[1];
    const auto zi = z_index.at(data.splits[i].id());
    const auto zj = z_index.at(data.splits[j].id());
    SharedPairStats shared{0.5 * (z(zi, zj) + z(zj, zi)),
                           out.tables.weight_dot(static_cast<Eigen::Index>(i),
                                                 static_cast<Eigen::Index>(j))};
    out.pair_features[k] =
        pair_features(profiles[i], profiles[j], shared, data.binary_features, opts);
  });
  return out;
}

SampleStage compute_sample(std::size_t n_tasks, const RunConfig& config, EvalCache& cache,
                           MtlGroupEvaluator& evaluator, int jobs) {
  SampleStage out;
  Rng rng(stage_seed(config, "sample"));
  const std::size_t size = config.sample.size.value_or(default_sample_size(n_tasks));
  std::vector<GroupKey> todo;
  std::set<GroupKey> queued;
  for (std::size_t s = 0; s < size; ++s) {
    out.partitions.push_back(sample_uniform_partition(n_tasks, rng));
    for (const auto& g : cache.missing_groups(out.partitions.back())) {
      if (queued.insert(g).second) todo.push_back(g);
    }
  }
  const auto evals = evaluator.evaluate_many(todo, jobs);
  for (std::size_t k = 0; k < todo.size(); ++k) {
    if (cache.insert(todo[k], evals[k])) ++out.mtl_trainings;
  }
  for (const auto& p : out.partitions) out.losses.push_back(*cache.partition_loss(p));
  return out;
}

PairwiseSummary pairwise_summary(const EvalCache& cache) {
  const std::size_t n = cache.n_tasks();
  PairwiseSummary s;
  for (std::size_t t = 0; t < n; ++t) {
    double sum = 0.0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t u = 0; u < n; ++u) {
      if (u == t) continue;
      const GroupKey g{std::min(t, u), std::max(t, u)};
      const auto* e = cache.find(g);
      if (!e) throw Error(ErrorCode::MissingPairGain, "no pair model for " + g.to_string());
      const double l = e->per_task_loss[t < u ? 0 : 1];
      sum += l;
      best = std::min(best, l);
    }
    if (n > 1) {
      s.all_pairs_total += sum / static_cast<double>(n - 1);
      s.optimal_pairs_total += best;
    }
  }
  return s;
}

PartitionMetrics partition_metrics(const Partition& p, const EvalCache& cache,
                                   std::span<const StlResult> stl) {
  double err = 0.0;
  double auc = 0.0;
  std::size_t n_err = 0;
  std::size_t n_auc = 0;
  for (const auto& g : p.groups()) {
    if (g.size() == 1) {
      const auto& r = stl[g.front()];
      if (r.test_error_rate) {
        err += *r.test_error_rate;
        ++n_err;
      }
      if (r.test_auc) {
        auc += *r.test_auc;
        ++n_auc;
      }
      continue;
    }
    const auto* e = cache.find(g);
    if (!e) continue;
    for (double v : e->per_task_error_rate) {
      err += v;
      ++n_err;
    }
    for (double v : e->per_task_auc) {
      if (std::isnan(v)) continue;
      auc += v;
      ++n_auc;
    }
  }
  PartitionMetrics m;
  if (n_err == p.n_tasks()) m.mean_error_rate = err / static_cast<double>(n_err);
  if (n_auc > 0 && n_err == p.n_tasks()) m.mean_auc = auc / static_cast<double>(n_auc);
  return m;
}

ReportStats mean_std(std::span<const double> values) {
  ReportStats s;
  if (values.empty()) return s;
  for (double v : values) s.mean += v;
  s.mean /= static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  s.std = std::sqrt(ss / static_cast<double>(values.size()));
  return s;
}

const std::vector<std::string>& report_columns() {
  static const std::vector<std::string> cols{"method",     "total_loss_mean", "total_loss_std",
                                             "repeats",    "mtl_trainings",   "mean_error_rate",
                                             "mean_auc"};
  return cols;
}

namespace {

std::string fmt(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string fmt_opt(const std::optional<double>& v, int digits) {
  return v ? fmt(*v, digits) : std::string();
}

}  // namespace

std::string report_csv(std::span<const ReportRow> rows) {
  std::ostringstream out;
  const auto& cols = report_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << '\n';
  for (const auto& r : rows) {
    const auto st = mean_std(r.losses);
    out << r.method << ',' << fmt(st.mean, 6) << ',' << fmt(st.std, 6) << ',' << r.losses.size()
        << ',' << fmt(r.mtl_trainings, 1) << ',' << fmt_opt(r.mean_error_rate, 6) << ','
        << fmt_opt(r.mean_auc, 6) << '\n';
  }
  return out.str();
}

std::string report_markdown(std::span<const ReportRow> rows) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (mean_std(rows[i].losses).mean < mean_std(rows[best].losses).mean) best = i;
  }
  std::ostringstream out;
  out << "| Method | Total loss | Repeats | MTL trainings | Error rate | AUC |\n";
  out << "|---|---|---|---|---|---|\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    const auto st = mean_std(r.losses);
    std::string loss = fmt(st.mean, 4) + " ± " + fmt(st.std, 4);
    if (i == best) loss = "**" + loss + "**";
    out << "| " << r.method << " | " << loss << " | " << r.losses.size() << " | "
        << fmt(r.mtl_trainings, 1) << " | " << fmt_opt(r.mean_error_rate, 4) << " | "
        << fmt_opt(r.mean_auc, 4) << " |\n";
  }
  return out.str();
}

void emit_report(std::span<const ReportRow> rows, const std::filesystem::path& dir,
                 const ArtifactHeader& header) {
  const std::string line = "schema_version=" + std::to_string(header.schema_version) +
                           " config_hash=" + header.config_hash +
                           " seed=" + std::to_string(header.seed);
  write_file_atomic(dir / "report.csv", "# " + line + "\n" + report_csv(rows));
  write_file_atomic(dir / "report.md", "<!-- " + line + " -->\n\n" + report_markdown(rows));
}

std::vector<std::string> pipeline_order() {
  return {"ingest", "stl", "pairs", "sample", "predictor", "search", "baselines", "report"};
}

}  // namespace tgopt
