#include "tgopt/features.hpp"

#include <cmath>
#include <limits>
#include <numeric>

#include "tgopt/error.hpp"
#include "tgopt/rng.hpp"

namespace tgopt {

std::string_view to_string(DistanceKind k) noexcept {
  switch (k) {
    case DistanceKind::Euclidean: return "euclidean";
    case DistanceKind::Manhattan: return "manhattan";
    case DistanceKind::Hamming: return "hamming";
  }
  return "euclidean";
}

double row_distance(DistanceKind kind, const Eigen::Ref<const Eigen::RowVectorXd>& a,
                    const Eigen::Ref<const Eigen::RowVectorXd>& b) {
  switch (kind) {
    case DistanceKind::Euclidean: return (a - b).norm();
    case DistanceKind::Manhattan: return (a - b).cwiseAbs().sum();
    case DistanceKind::Hamming:
      return static_cast<double>((a.array() != b.array()).count()) / static_cast<double>(a.size());
  }
  return 0.0;
}

namespace {

void require_binary(const Eigen::MatrixXd& m) {
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    const double v = m.data()[i];
    if (v != 0.0 && v != 1.0) {
      throw Error(ErrorCode::NonBinaryForHamming, "Hamming distance needs 0/1 features");
    }
  }
}

Eigen::MatrixXd capped(const Eigen::MatrixXd& rows, const DistanceOptions& opts) {
  const auto n = static_cast<std::size_t>(rows.rows());
  if (n <= opts.cap) return rows;
  Rng rng(derive_seed(opts.seed, static_cast<std::uint64_t>(n)));
  const auto keep = rng.sample_without_replacement(n, opts.cap);
  std::vector<Eigen::Index> idx(keep.begin(), keep.end());
  return rows(idx, Eigen::all);
}

double mean_pairwise(const Eigen::MatrixXd& m, DistanceKind kind) {
  const Eigen::Index n = m.rows();
  if (n < 2) throw Error(ErrorCode::TooFewSamples, "within-sample distance needs >= 2 rows");
  double sum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) sum += row_distance(kind, m.row(i), m.row(j));
  }
  return sum / (0.5 * static_cast<double>(n) * static_cast<double>(n - 1));
}

}  // namespace

double avg_within_distance(const Eigen::MatrixXd& rows, DistanceKind kind,
                           const DistanceOptions& opts) {
  if (kind == DistanceKind::Hamming) require_binary(rows);
  return mean_pairwise(capped(rows, opts), kind);
}

double avg_between_distance(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, DistanceKind kind,
                            const DistanceOptions& opts) {
  if (kind == DistanceKind::Hamming) {
    require_binary(a);
    require_binary(b);
  }
  if (a.rows() == 0 || b.rows() == 0) {
    throw Error(ErrorCode::TooFewSamples, "between-sample distance needs rows on both sides");
  }
  const Eigen::MatrixXd ca = capped(a, opts);
  const Eigen::MatrixXd cb = capped(b, opts);
  double sum = 0.0;
  for (Eigen::Index i = 0; i < ca.rows(); ++i) {
    for (Eigen::Index j = 0; j < cb.rows(); ++j) sum += row_distance(kind, ca.row(i), cb.row(j));
  }
  return sum / (static_cast<double>(ca.rows()) * static_cast<double>(cb.rows()));
}

double avg_combined_distance(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                             DistanceKind kind, const DistanceOptions& opts) {
  Eigen::MatrixXd u(a.rows() + b.rows(), a.cols());
  u << a, b;
  return avg_within_distance(u, kind, opts);
}

std::vector<DistanceVariant> distance_variants(bool binary_features) {
  if (binary_features) {
    return {{"dE", DistanceKind::Euclidean, false},
            {"dM", DistanceKind::Manhattan, false},
            {"dH", DistanceKind::Hamming, false}};
  }
  return {{"dE", DistanceKind::Euclidean, false},
          {"dM", DistanceKind::Manhattan, false},
          {"dE_scaled", DistanceKind::Euclidean, true},
          {"dM_scaled", DistanceKind::Manhattan, true}};
}

TaskProfile make_task_profile(const Task& raw_train, const Task& scaled_train, StlResult stl,
                              bool binary_features, const DistanceOptions& opts) {
  TaskProfile p;
  p.id = raw_train.id;
  p.sample_size = raw_train.n_samples();
  p.targets = raw_train.targets;
  p.raw_features = raw_train.features;
  p.scaled_features = scaled_train.features;
  p.stl = std::move(stl);
  for (const auto& v : distance_variants(binary_features)) {
    p.within.push_back(
        avg_within_distance(v.scaled ? p.scaled_features : p.raw_features, v.kind, opts));
  }
  return p;
}

// ---------------------------------------------------------------------------

void FeatureVector::add(std::string name, double value) {
  names_.push_back(std::move(name));
  values_.push_back(value);
}

std::optional<double> FeatureVector::get(std::string_view name) const {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == name) return values_[i];
  }
  return std::nullopt;
}

double FeatureVector::at(std::string_view name) const {
  if (auto v = get(name)) return *v;
  throw Error(ErrorCode::MissingFeature, std::string(name));
}

namespace {

constexpr double kCurveFractions[] = {0.1, 0.2, 0.3, 0.5, 0.7};
constexpr const char* kCurveSuffix[] = {"10", "20", "30", "50", "70"};

const std::vector<std::string>& single_bases() {
  static const std::vector<std::string> bases = [] {
    std::vector<std::string> b{"sample_size", "target_mean", "target_sigma", "target_var"};
    for (const char* s : kCurveSuffix) b.push_back(std::string("curve_grad_") + s);
    b.insert(b.end(), {"fit_a", "fit_b", "dE_within", "dM_within"});
    return b;
  }();
  return bases;
}

double curve_grad_at(const StlResult& stl, double fraction) {
  for (const auto& [f, g] : stl.curve_grads) {
    if (std::abs(f - fraction) < 1e-9) return g;
  }
  throw Error(ErrorCode::MissingCheckpoint,
              "task '" + stl.task_id + "' has no curve gradient at " + std::to_string(fraction));
}

std::vector<double> single_values(const TaskProfile& t) {
  std::vector<double> v{static_cast<double>(t.sample_size), t.stl.target_mean, t.stl.target_sigma,
                        t.stl.target_var};
  for (double f : kCurveFractions) v.push_back(curve_grad_at(t.stl, f));
  v.insert(v.end(), {t.stl.fit_a, t.stl.fit_b, t.within.at(0), t.within.at(1)});
  return v;
}

double norm_sum(double value, double a, double b) {
  return value / std::max(a + b, kFeatureEpsilon);
}
double norm_product(double value, double a, double b) {
  return value * value / std::max(a * b, kFeatureEpsilon);
}
double diff_norm_sum(double a, double b) { return std::abs(a - b) / std::max(a + b, kFeatureEpsilon); }
double signed_diff_norm(double a, double b) {
  return std::abs(a - b) / (std::abs(a) + std::abs(b) + kFeatureEpsilon);
}

double population_std(const Eigen::VectorXd& v) {
  const double m = v.mean();
  return std::sqrt((v.array() - m).square().mean());
}

}  // namespace

std::vector<std::string> pair_feature_names(bool binary_features) {
  std::vector<std::string> names;
  for (const auto& b : single_bases()) {
    names.push_back(b + "_i");
    names.push_back(b + "_j");
  }
  names.insert(names.end(),
               {"size_diff_nS", "target_sigma_mean", "target_sigma_diff_nS", "target_sigma_comb",
                "target_sigma_comb_nS", "target_sigma_comb_nP", "target_var_mean",
                "target_var_diff_nS", "target_var_comb", "target_var_comb_nS",
                "target_var_comb_nP"});
  for (const char* s : kCurveSuffix) names.push_back(std::string("curve_grad_diff_") + s);
  names.insert(names.end(), {"fit_a_diff_nS", "fit_b_diff_nS", "inter_task_affinity", "weight_dot"});
  for (const auto& v : distance_variants(binary_features)) {
    for (const char* suffix :
         {"_between", "_between_nS", "_between_nP", "_combined", "_combined_nS", "_combined_nP"}) {
      names.push_back(v.name + suffix);
    }
  }
  return names;
}

PairFeatures pair_features(const TaskProfile& ti, const TaskProfile& tj,
                           const SharedPairStats& shared, bool binary_features,
                           const DistanceOptions& opts) {
  PairFeatures f;
  const auto si = single_values(ti);
  const auto sj = single_values(tj);
  const auto& bases = single_bases();
  for (std::size_t k = 0; k < bases.size(); ++k) {
    f.add(bases[k] + "_i", si[k]);
    f.add(bases[k] + "_j", sj[k]);
  }

  // Canonical order for quantities computed on the union of both samples.
  const bool swap = tj.id < ti.id;
  const TaskProfile& a = swap ? tj : ti;
  const TaskProfile& b = swap ? ti : tj;

  const double di = static_cast<double>(ti.sample_size);
  const double dj = static_cast<double>(tj.sample_size);
  const double sig_i = ti.stl.target_sigma;
  const double sig_j = tj.stl.target_sigma;
  const double var_i = ti.stl.target_var;
  const double var_j = tj.stl.target_var;
  Eigen::VectorXd union_targets(a.targets.size() + b.targets.size());
  union_targets << a.targets, b.targets;
  const double sig_comb = population_std(union_targets);
  const double var_comb = sig_comb * sig_comb;

  f.add("size_diff_nS", std::abs(di - dj) / std::max(di + dj, kFeatureEpsilon));
  f.add("target_sigma_mean", 0.5 * (sig_i + sig_j));
  f.add("target_sigma_diff_nS", diff_norm_sum(sig_i, sig_j));
  f.add("target_sigma_comb", sig_comb);
  f.add("target_sigma_comb_nS", norm_sum(sig_comb, sig_i, sig_j));
  f.add("target_sigma_comb_nP", norm_product(sig_comb, sig_i, sig_j));
  f.add("target_var_mean", 0.5 * (var_i + var_j));
  f.add("target_var_diff_nS", diff_norm_sum(var_i, var_j));
  f.add("target_var_comb", var_comb);
  f.add("target_var_comb_nS", norm_sum(var_comb, var_i, var_j));
  f.add("target_var_comb_nP", norm_product(var_comb, var_i, var_j));
  for (std::size_t k = 0; k < std::size(kCurveFractions); ++k) {
    f.add(std::string("curve_grad_diff_") + kCurveSuffix[k],
          signed_diff_norm(curve_grad_at(ti.stl, kCurveFractions[k]),
                           curve_grad_at(tj.stl, kCurveFractions[k])));
  }
  f.add("fit_a_diff_nS", signed_diff_norm(ti.stl.fit_a, tj.stl.fit_a));
  f.add("fit_b_diff_nS", signed_diff_norm(ti.stl.fit_b, tj.stl.fit_b));
  f.add("inter_task_affinity", shared.inter_task_affinity);
  f.add("weight_dot", shared.weight_dot);

  const auto variants = distance_variants(binary_features);
  for (std::size_t v = 0; v < variants.size(); ++v) {
    const auto& var = variants[v];
    const auto& fa = var.scaled ? a.scaled_features : a.raw_features;
    const auto& fb = var.scaled ? b.scaled_features : b.raw_features;
    const double wi = ti.within.at(v);
    const double wj = tj.within.at(v);
    const double between = avg_between_distance(fa, fb, var.kind, opts);
    const double combined = avg_combined_distance(fa, fb, var.kind, opts);
    f.add(var.name + "_between", between);
    f.add(var.name + "_between_nS", norm_sum(between, wi, wj));
    f.add(var.name + "_between_nP", norm_product(between, wi, wj));
    f.add(var.name + "_combined", combined);
    f.add(var.name + "_combined_nS", norm_sum(combined, wi, wj));
    f.add(var.name + "_combined_nP", norm_product(combined, wi, wj));
  }
  return f;
}

// ---------------------------------------------------------------------------

PairwiseTables PairwiseTables::empty(std::size_t n_tasks) {
  const auto n = static_cast<Eigen::Index>(n_tasks);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  return {Eigen::MatrixXd::Constant(n, n, nan), Eigen::MatrixXd::Constant(n, n, nan),
          Eigen::MatrixXd::Constant(n, n, nan)};
}

const std::vector<std::string>& GroupFeatures::names() {
  static const std::vector<std::string> n{
      "n_tasks",         "mean_sample_size", "mean_target_var", "mean_target_sigma",
      "mean_group_distance", "pair_gain_mean", "pair_gain_var", "pair_gain_std",
      "pair_wdot_mean"};
  return n;
}

FeatureVector GroupFeatures::to_vector() const {
  FeatureVector f;
  const double vals[] = {n_tasks,        mean_sample_size, mean_target_var,
                         mean_target_sigma, mean_group_distance, pair_gain_mean,
                         pair_gain_var,  pair_gain_std,    pair_wdot_mean};
  const auto& n = names();
  for (std::size_t i = 0; i < n.size(); ++i) f.add(n[i], vals[i]);
  return f;
}

GroupFeatures group_features(const GroupKey& group, const PairwiseTables& tables,
                             std::span<const TaskProfile> profiles) {
  const std::size_t k = group.size();
  if (k < 3) throw Error(ErrorCode::GroupTooSmall, "group features need >= 3 tasks");
  GroupFeatures g;
  g.n_tasks = static_cast<double>(k);
  for (auto t : group) {
    const auto& p = profiles[t];
    g.mean_sample_size += static_cast<double>(p.sample_size);
    g.mean_target_var += p.stl.target_var;
    g.mean_target_sigma += p.stl.target_sigma;
  }
  g.mean_sample_size /= g.n_tasks;
  g.mean_target_var /= g.n_tasks;
  g.mean_target_sigma /= g.n_tasks;

  std::vector<double> gains;
  double dist = 0.0;
  double wdot = 0.0;
  const auto& m = group.members();
  for (std::size_t x = 0; x < k; ++x) {
    for (std::size_t y = x + 1; y < k; ++y) {
      const auto i = static_cast<Eigen::Index>(m[x]);
      const auto j = static_cast<Eigen::Index>(m[y]);
      const double gain = tables.gain(i, j);
      if (std::isnan(gain)) {
        throw Error(ErrorCode::MissingPairGain,
                    "no pair gain for (" + std::to_string(i) + "," + std::to_string(j) + ")");
      }
      gains.push_back(gain);
      dist += tables.distance(i, j);
      wdot += tables.weight_dot(i, j);
    }
  }
  const double n_pairs = static_cast<double>(gains.size());
  g.mean_group_distance = dist / n_pairs;
  g.pair_wdot_mean = wdot / n_pairs;
  g.pair_gain_mean = std::accumulate(gains.begin(), gains.end(), 0.0) / n_pairs;
  double ss = 0.0;
  for (double x : gains) ss += (x - g.pair_gain_mean) * (x - g.pair_gain_mean);
  g.pair_gain_var = ss / n_pairs;
  g.pair_gain_std = std::sqrt(g.pair_gain_var);
  return g;
}

double designated_pair_distance(const TaskProfile& ti, const TaskProfile& tj, bool binary_features,
                                const DistanceOptions& opts) {
  const bool swap = tj.id < ti.id;
  const TaskProfile& a = swap ? tj : ti;
  const TaskProfile& b = swap ? ti : tj;
  if (binary_features) {
    return avg_between_distance(a.raw_features, b.raw_features, DistanceKind::Hamming, opts);
  }
  return avg_between_distance(a.scaled_features, b.scaled_features, DistanceKind::Euclidean, opts);
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw Error(ErrorCode::ShapeMismatch, "pearson needs equal lengths >= 2");
  }
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx <= 0.0 || syy <= 0.0) throw Error(ErrorCode::ZeroVariance, "pearson input is constant");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

}  // namespace tgopt
