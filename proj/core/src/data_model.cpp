#include "tgopt/data_model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "tgopt/error.hpp"
#include "tgopt/rng.hpp"

namespace tgopt {

std::string_view to_string(TaskKind kind) noexcept {
  return kind == TaskKind::Regression ? "regression" : "classification";
}

TaskKind task_kind_from_string(std::string_view s) {
  if (s == "regression") return TaskKind::Regression;
  if (s == "classification") return TaskKind::Classification;
  throw Error(ErrorCode::InvalidSpec, "unknown task kind '" + std::string(s) + "'");
}

Task Task::select_rows(std::span<const std::size_t> rows) const {
  Task out;
  out.id = id;
  out.kind = kind;
  out.features.resize(static_cast<Eigen::Index>(rows.size()), features.cols());
  out.targets.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto src = static_cast<Eigen::Index>(rows[r]);
    out.features.row(static_cast<Eigen::Index>(r)) = features.row(src);
    out.targets(static_cast<Eigen::Index>(r)) = targets(src);
  }
  return out;
}

TaskSet::TaskSet(std::vector<Task> tasks, std::vector<std::string> feature_names)
    : tasks_(std::move(tasks)), feature_names_(std::move(feature_names)) {
  if (tasks_.size() < 2) {
    throw Error(ErrorCode::InvalidTaskSet, "a task set needs at least 2 tasks, got " +
                                               std::to_string(tasks_.size()));
  }
  if (feature_names_.empty()) throw Error(ErrorCode::InvalidTaskSet, "no feature columns");
  kind_ = tasks_.front().kind;
  std::unordered_map<std::string, int> ids;
  for (const auto& t : tasks_) {
    if (ids[t.id]++) throw Error(ErrorCode::InvalidTaskSet, "duplicate task id '" + t.id + "'");
    if (t.kind != kind_) throw Error(ErrorCode::InvalidTaskSet, "mixed task kinds");
    if (t.dim() != feature_names_.size() ||
        static_cast<std::size_t>(t.features.rows()) != t.n_samples()) {
      throw Error(ErrorCode::InconsistentDimensions, "task '" + t.id + "' has shape " +
                                                         std::to_string(t.features.rows()) + "x" +
                                                         std::to_string(t.features.cols()));
    }
    if (!t.features.allFinite() || !t.targets.allFinite()) {
      throw Error(ErrorCode::DomainError, "task '" + t.id + "' has non-finite values");
    }
    if (kind_ == TaskKind::Classification) {
      for (Eigen::Index r = 0; r < t.targets.size(); ++r) {
        if (t.targets(r) != 0.0 && t.targets(r) != 1.0) {
          throw Error(ErrorCode::DomainError,
                      "classification target outside {0,1} in task '" + t.id + "'");
        }
      }
    }
  }
}

std::optional<std::size_t> TaskSet::index_of(std::string_view id) const {
  for (std::size_t i = 0; i < tasks_.size(); ++i) {
    if (tasks_[i].id == id) return i;
  }
  return std::nullopt;
}

bool TaskSet::binary_features() const {
  for (const auto& t : tasks_) {
    const auto& f = t.features;
    for (Eigen::Index i = 0; i < f.size(); ++i) {
      const double v = f.data()[i];
      if (v != 0.0 && v != 1.0) return false;
    }
  }
  return true;
}

std::size_t TaskSet::max_samples() const {
  std::size_t m = 0;
  for (const auto& t : tasks_) m = std::max(m, t.n_samples());
  return m;
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

bool parse_double(std::string_view s, double& out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return false;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(out);
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

TaskSet parse_taskset_csv(std::string_view text, const CsvSchema& schema) {
  std::vector<std::string_view> lines;
  {
    std::size_t start = 0;
    while (start < text.size()) {
      auto nl = text.find('\n', start);
      if (nl == std::string_view::npos) nl = text.size();
      auto line = text.substr(start, nl - start);
      if (!trim(line).empty()) lines.push_back(line);
      start = nl + 1;
    }
  }
  if (lines.size() < 2) throw Error(ErrorCode::EmptyFile, "no header or no data rows");

  const auto header = split_fields(lines[0]);
  std::optional<std::size_t> id_col;
  std::optional<std::size_t> target_col;
  std::vector<std::size_t> feature_cols;
  std::vector<std::string> feature_names;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == schema.task_id_column) {
      id_col = c;
    } else if (header[c] == schema.target_column) {
      target_col = c;
    } else {
      feature_cols.push_back(c);
      feature_names.emplace_back(header[c]);
    }
  }
  if (!id_col) throw Error(ErrorCode::MissingColumn, schema.task_id_column);
  if (!target_col) throw Error(ErrorCode::MissingColumn, schema.target_column);
  if (feature_cols.empty()) throw Error(ErrorCode::MissingColumn, "no feature columns");

  struct Rows {
    std::vector<double> features;
    std::vector<double> targets;
  };
  std::vector<std::string> order;
  std::map<std::string, Rows, std::less<>> by_task;
  const std::size_t d = feature_cols.size();

  for (std::size_t r = 1; r < lines.size(); ++r) {
    const auto fields = split_fields(lines[r]);
    if (fields.size() != header.size()) {
      throw Error(ErrorCode::InconsistentDimensions,
                  "row " + std::to_string(r) + " has " + std::to_string(fields.size()) +
                      " fields, header has " + std::to_string(header.size()));
    }
    std::string id(fields[*id_col]);
    auto it = by_task.find(id);
    if (it == by_task.end()) {
      order.push_back(id);
      it = by_task.emplace(id, Rows{}).first;
    }
    double v = 0.0;
    if (!parse_double(fields[*target_col], v)) {
      throw Error(ErrorCode::NonNumericCell,
                  "row " + std::to_string(r) + ", column " + std::to_string(*target_col));
    }
    it->second.targets.push_back(v);
    for (auto c : feature_cols) {
      if (!parse_double(fields[c], v)) {
        throw Error(ErrorCode::NonNumericCell,
                    "row " + std::to_string(r) + ", column " + std::to_string(c));
      }
      it->second.features.push_back(v);
    }
  }

  bool binary_targets = true;
  for (const auto& [id, rows] : by_task) {
    for (double y : rows.targets) binary_targets &= (y == 0.0 || y == 1.0);
  }
  const TaskKind kind = schema.kind_override.value_or(
      binary_targets ? TaskKind::Classification : TaskKind::Regression);

  std::vector<Task> tasks;
  tasks.reserve(order.size());
  for (const auto& id : order) {
    const auto& rows = by_task.find(id)->second;
    const auto n = static_cast<Eigen::Index>(rows.targets.size());
    if (n < 2) throw Error(ErrorCode::TaskTooSmall, id);
    Task t;
    t.id = id;
    t.kind = kind;
    t.features = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                                Eigen::RowMajor>>(rows.features.data(), n,
                                                                  static_cast<Eigen::Index>(d));
    t.targets = Eigen::Map<const Eigen::VectorXd>(rows.targets.data(), n);
    tasks.push_back(std::move(t));
  }
  return TaskSet(std::move(tasks), std::move(feature_names));
}

TaskSet load_taskset(const std::filesystem::path& path, const CsvSchema& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_taskset_csv(ss.str(), schema);
}

std::string taskset_to_csv(const TaskSet& ts, const CsvSchema& schema) {
  std::string out = schema.task_id_column + ',' + schema.target_column;
  for (const auto& name : ts.feature_names()) out += ',' + name;
  out += '\n';
  for (const auto& t : ts.tasks()) {
    for (Eigen::Index r = 0; r < t.features.rows(); ++r) {
      out += t.id;
      out += ',';
      out += format_double(t.targets(r));
      for (Eigen::Index c = 0; c < t.features.cols(); ++c) {
        out += ',';
        out += format_double(t.features(r, c));
      }
      out += '\n';
    }
  }
  return out;
}

void save_taskset_csv(const TaskSet& ts, const std::filesystem::path& path,
                      const CsvSchema& schema) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << taskset_to_csv(ts, schema);
}

// ---------------------------------------------------------------------------
// Normalization, augmentation, splits

NormalizationStats NormalizationStats::compute(const Eigen::MatrixXd& data) {
  NormalizationStats s;
  const auto n = static_cast<double>(data.rows());
  s.mean = data.colwise().mean().transpose();
  s.std.resize(data.cols());
  s.constant.assign(static_cast<std::size_t>(data.cols()), false);
  for (Eigen::Index c = 0; c < data.cols(); ++c) {
    const double var = (data.col(c).array() - s.mean(c)).square().sum() / n;
    s.std(c) = std::sqrt(var);
    s.constant[static_cast<std::size_t>(c)] = !(s.std(c) > 0.0);
  }
  return s;
}

Eigen::MatrixXd NormalizationStats::apply(const Eigen::MatrixXd& data) const {
  Eigen::MatrixXd out(data.rows(), data.cols());
  for (Eigen::Index c = 0; c < data.cols(); ++c) {
    if (constant[static_cast<std::size_t>(c)]) {
      out.col(c).setZero();
    } else {
      out.col(c) = (data.col(c).array() - mean(c)) / std(c);
    }
  }
  return out;
}

std::pair<TaskSet, NormalizationStats> normalize_features(const TaskSet& ts) {
  Eigen::Index total = 0;
  for (const auto& t : ts.tasks()) total += t.features.rows();
  Eigen::MatrixXd pooled(total, static_cast<Eigen::Index>(ts.dim()));
  Eigen::Index row = 0;
  for (const auto& t : ts.tasks()) {
    pooled.middleRows(row, t.features.rows()) = t.features;
    row += t.features.rows();
  }
  auto stats = NormalizationStats::compute(pooled);
  std::vector<Task> tasks = ts.tasks();
  for (auto& t : tasks) t.features = stats.apply(t.features);
  return {TaskSet(std::move(tasks), ts.feature_names()), std::move(stats)};
}

Task repeat_rows(const Task& task, std::size_t target_rows) {
  const std::size_t n = task.n_samples();
  if (n == 0 || target_rows <= n) return task;
  std::vector<std::size_t> rows(target_rows);
  for (std::size_t i = 0; i < target_rows; ++i) rows[i] = i % n;
  return task.select_rows(rows);
}

TaskSet augment_to_max(const TaskSet& ts) {
  const std::size_t m = ts.max_samples();
  std::vector<Task> tasks;
  tasks.reserve(ts.size());
  for (const auto& t : ts.tasks()) tasks.push_back(repeat_rows(t, m));
  return TaskSet(std::move(tasks), ts.feature_names());
}

void SplitSpec::validate() const {
  if (!(train_frac > 0 && val_frac > 0 && test_frac > 0)) {
    throw Error(ErrorCode::InvalidSpec, "split fractions must be positive");
  }
  if (std::abs(train_frac + val_frac + test_frac - 1.0) > 1e-9) {
    throw Error(ErrorCode::InvalidSpec, "split fractions must sum to 1");
  }
}

TaskSplit split_task(const Task& task, const SplitSpec& spec) {
  spec.validate();
  const std::size_t n = task.n_samples();
  const double min_frac = std::min({spec.train_frac, spec.val_frac, spec.test_frac});
  if (static_cast<double>(n) * min_frac < 1.0 - 1e-9) {
    throw Error(ErrorCode::TooFewSamples,
                "task '" + task.id + "' has " + std::to_string(n) + " rows");
  }
  const auto floor_of = [n](double f) {
    return static_cast<std::size_t>(std::floor(static_cast<double>(n) * f + 1e-9));
  };
  const std::size_t n_val = floor_of(spec.val_frac);
  const std::size_t n_test = floor_of(spec.test_frac);
  const std::size_t n_train = n - n_val - n_test;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(derive_seed(spec.seed, task.id));
  rng.shuffle(std::span<std::size_t>(order));

  const auto take = [&](std::size_t from, std::size_t count) {
    std::vector<std::size_t> rows(order.begin() + static_cast<std::ptrdiff_t>(from),
                                  order.begin() + static_cast<std::ptrdiff_t>(from + count));
    // Keep file order inside each split.
    std::sort(rows.begin(), rows.end());
    return task.select_rows(rows);
  };
  return TaskSplit{take(0, n_train), take(n_train, n_val), take(n_train + n_val, n_test)};
}

std::vector<TaskSplit> split_taskset(const TaskSet& ts, const SplitSpec& spec) {
  std::vector<TaskSplit> out;
  out.reserve(ts.size());
  for (const auto& t : ts.tasks()) out.push_back(split_task(t, spec));
  return out;
}

// ---------------------------------------------------------------------------
// Synthetic generator

namespace {

constexpr int kTanhUnits = 2;

struct ClusterGenerator {
  Eigen::VectorXd linear;   // d
  Eigen::MatrixXd hidden;   // kTanhUnits x d
  Eigen::VectorXd outputs;  // kTanhUnits
};

ClusterGenerator make_generator(const SyntheticSpec& spec, std::size_t cluster) {
  Rng rng(derive_seed(spec.seed, "cluster:" + std::to_string(cluster)));
  const auto d = static_cast<Eigen::Index>(spec.dim);
  const double scale = 1.0 / std::sqrt(static_cast<double>(spec.dim));
  ClusterGenerator g;
  g.linear.resize(d);
  g.hidden.resize(kTanhUnits, d);
  g.outputs.resize(kTanhUnits);
  for (Eigen::Index i = 0; i < d; ++i) g.linear(i) = rng.normal() * scale;
  for (Eigen::Index k = 0; k < kTanhUnits; ++k) {
    for (Eigen::Index i = 0; i < d; ++i) g.hidden(k, i) = 2.0 * rng.normal() * scale;
    g.outputs(k) = rng.normal();
  }
  return g;
}

Eigen::VectorXd evaluate(const ClusterGenerator& g, const Eigen::MatrixXd& x) {
  Eigen::VectorXd y = x * g.linear;
  const Eigen::MatrixXd h = (x * g.hidden.transpose()).array().tanh().matrix();
  y += h * g.outputs;
  return y;
}

}  // namespace

Eigen::VectorXd synth_mean_function(const SyntheticSpec& spec, std::size_t task,
                                    const Eigen::MatrixXd& x) {
  return evaluate(make_generator(spec, task % spec.n_clusters), x);
}

SyntheticTaskSet synth_taskset(const SyntheticSpec& spec) {
  if (spec.n_tasks < 2 || spec.n_clusters < 1 || spec.n_clusters > spec.n_tasks ||
      spec.dim < 1 || spec.samples_per_task < 2 || !(spec.noise >= 0.0)) {
    throw Error(ErrorCode::InvalidSpec, "synthetic task set parameters out of range");
  }
  std::vector<ClusterGenerator> generators;
  for (std::size_t c = 0; c < spec.n_clusters; ++c) generators.push_back(make_generator(spec, c));

  std::vector<Task> tasks;
  std::vector<std::size_t> labels;
  const int width = spec.n_tasks > 100 ? 3 : 2;
  for (std::size_t i = 0; i < spec.n_tasks; ++i) {
    Rng rng(derive_seed(spec.seed, "task:" + std::to_string(i)));
    Task t;
    std::string num = std::to_string(i);
    t.id = "t" + std::string(static_cast<std::size_t>(std::max(0, width - static_cast<int>(num.size()))), '0') + num;
    t.kind = TaskKind::Regression;
    const auto n = static_cast<Eigen::Index>(spec.samples_per_task);
    t.features.resize(n, static_cast<Eigen::Index>(spec.dim));
    for (Eigen::Index r = 0; r < n; ++r) {
      for (Eigen::Index c = 0; c < t.features.cols(); ++c) t.features(r, c) = rng.normal();
    }
    t.targets = evaluate(generators[i % spec.n_clusters], t.features);
    for (Eigen::Index r = 0; r < n; ++r) t.targets(r) += spec.noise * rng.normal();
    tasks.push_back(std::move(t));
    labels.push_back(i % spec.n_clusters);
  }
  std::vector<std::string> names;
  for (std::size_t c = 0; c < spec.dim; ++c) names.push_back("x" + std::to_string(c));
  return {TaskSet(std::move(tasks), std::move(names)), Partition::from_labels(labels)};
}

}  // namespace tgopt
