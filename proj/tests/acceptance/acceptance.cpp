// Acceptance gate: one PASS/FAIL line per criterion; exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

#include "tgopt/baselines.hpp"
#include "tgopt/data_model.hpp"
#include "tgopt/error.hpp"
#include "tgopt/experiment.hpp"
#include "tgopt/features.hpp"
#include "tgopt/io.hpp"
#include "tgopt/mtl.hpp"
#include "tgopt/neural.hpp"
#include "tgopt/partition.hpp"
#include "tgopt/predictor.hpp"
#include "tgopt/rng.hpp"
#include "tgopt/search.hpp"

using namespace tgopt;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int g_failures = 0;

void criterion(int id, const std::string& name, const std::function<Outcome()>& body) {
  const auto start = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!o.pass) ++g_failures;
  std::printf("[%s] %2d %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", id, name.c_str(),
              o.detail.c_str(), secs);
  std::fflush(stdout);
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// ---------------------------------------------------------------------------

Outcome combinatorics() {
  const auto b42 = bell_number(42);
  std::ostringstream s;
  s << b42;
  const bool ok = s.str() == "35742549198872617291353508656626642567" && bell_number(3) == 5 &&
                  bell_number(4) == 15;
  return {ok, "bell(42)=" + s.str()};
}

Outcome pair_planning() {
  const std::vector<std::pair<std::size_t, std::size_t>> cases{
      {139, 9591}, {35, 595}, {29, 406}, {42, 861}};
  std::string detail;
  bool ok = true;
  for (auto [n, want] : cases) {
    const auto got = plan_pairs(n).size();
    ok = ok && got == want;
    detail += std::to_string(n) + "->" + std::to_string(got) + " ";
  }
  return {ok, detail};
}

Outcome numerics() {
  Rng rng(11);
  double worst = 0.0;
  const Activation acts[] = {Activation::Tanh, Activation::Sigmoid, Activation::Linear};
  for (int net = 0; net < 20; ++net) {
    NetSpec spec;
    const int depth = 1 + static_cast<int>(rng.index(3));
    spec.layer_widths.push_back(1 + static_cast<int>(rng.index(16)));
    for (int l = 0; l < depth; ++l) spec.layer_widths.push_back(1 + static_cast<int>(rng.index(16)));
    spec.layer_widths.push_back(1);
    spec.hidden_activation = acts[rng.index(3)];
    spec.output_activation = net % 2 ? Activation::Sigmoid : Activation::Linear;
    const LossKind lk = net % 2 ? LossKind::BCE : LossKind::MSE;
    Params p = init_params(spec, derive_seed(7, static_cast<std::uint64_t>(net)));
    Eigen::MatrixXd x(6, spec.input_width());
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
    Eigen::VectorXd y(6);
    for (Eigen::Index i = 0; i < 6; ++i) y(i) = lk == LossKind::BCE ? double(rng.index(2)) : rng.normal();

    const Eigen::VectorXd g = grad(spec, p, x, y, lk).flatten();
    Eigen::VectorXd theta = p.flatten();
    for (Eigen::Index k = 0; k < theta.size(); ++k) {
      const double h = 1e-5;
      Params plus = p;
      Params minus = p;
      Eigen::VectorXd tp = theta;
      Eigen::VectorXd tm = theta;
      tp(k) += h;
      tm(k) -= h;
      plus.assign_flat(tp);
      minus.assign_flat(tm);
      const double fd = (loss(lk, forward(spec, plus, x).col(0), y) -
                         loss(lk, forward(spec, minus, x).col(0), y)) /
                        (2 * h);
      const double rel = std::abs(fd - g(k)) / std::max(1e-6, std::abs(fd) + std::abs(g(k)));
      worst = std::max(worst, rel);
    }
  }
  // Adam first step: m = (1-b1) g, v = (1-b2) g^2, bias-corrected update = lr * g / (|g| + eps').
  NetSpec one{{1, 1}, Activation::Linear, Activation::Linear, 0.1};
  Params p = init_params(one, 1);
  p.layers[0].weights(0, 0) = 0.5;
  p.layers[0].bias(0) = 0.0;
  Params g = p.zeros_like();
  g.layers[0].weights(0, 0) = 2.0;
  g.layers[0].bias(0) = -0.25;
  AdamState st = AdamState::for_params(p);
  adam_step(p, g, st, 0.1);
  const double m_hat = 2.0;
  const double v_hat = 4.0;
  const double want_w = 0.5 - 0.1 * m_hat / (std::sqrt(v_hat) + kAdamEpsilon);
  const double want_b = 0.0 - 0.1 * (-0.25) / (0.25 + kAdamEpsilon);
  const double adam_err =
      std::max(std::abs(p.layers[0].weights(0, 0) - want_w), std::abs(p.layers[0].bias(0) - want_b));
  return {worst <= 1e-4 && adam_err <= 1e-12,
          "max rel grad err " + fmt("%.2e", worst) + ", adam err " + fmt("%.1e", adam_err)};
}

Outcome mutation_soundness() {
  Rng rng(21);
  long bad = 0;
  for (int trial = 0; trial < 100000; ++trial) {
    const std::size_t n = 3 + rng.index(18);
    const Partition p = sample_uniform_partition(n, rng);
    const Partition q = mutate_groups(p, rng);
    if (!is_valid_partition(n, q.groups()) || !differs_by_single_move(p, q)) ++bad;
  }
  long wrong_size = 0;
  const Partition three = Partition::singletons(3);
  for (int trial = 0; trial < 1000; ++trial) {
    if (mutate_groups(three, rng).n_groups() != 2) ++wrong_size;
  }
  return {bad == 0 && wrong_size == 0,
          std::to_string(bad) + " unsound of 100000, " + std::to_string(wrong_size) +
              " wrong-size on singletons"};
}

Outcome uniform_sampler() {
  const auto all = enumerate_partitions(4);
  std::map<Partition, long> counts;
  for (const auto& p : all) counts[p] = 0;
  Rng rng(31);
  const long draws = 150000;
  for (long i = 0; i < draws; ++i) ++counts.at(sample_uniform_partition(4, rng));
  const double expected = static_cast<double>(draws) / static_cast<double>(all.size());
  double chi2 = 0.0;
  for (const auto& [p, c] : counts) chi2 += (c - expected) * (c - expected) / expected;
  boost::math::chi_squared dist(static_cast<double>(all.size() - 1));
  const double pval = boost::math::cdf(boost::math::complement(dist, chi2));
  return {all.size() == 15 && pval > 0.001,
          "15 partitions, chi2=" + fmt("%.2f", chi2) + " p=" + fmt("%.3f", pval)};
}

Outcome acceptance_rule() {
  Rng rng(41);
  bool ok = true;
  for (int i = 0; i < 10000; ++i) {
    const double l = rng.uniform(0.0, 100.0);
    const double k = rng.uniform(0.01, 10.0);
    ok = ok && accept_probability(l, l - rng.uniform(0.0, 10.0), k) == 1.0;
    ok = ok && accept_probability(l, l, k) == 1.0;
  }
  const double e = accept_probability(10.0, 11.0, 1.0);
  ok = ok && std::abs(e - std::exp(-1.0)) <= 1e-12;
  return {ok, "p(10 -> 11, K=1) = " + fmt("%.12f", e)};
}

// ---------------------------------------------------------------------------

// Shared setting for the search criteria: the 12-task, 3-cluster synthetic
// set with STL, all pairs, the partition sample and an initial predictor.
struct SearchBench {
  RunConfig config;
  PreparedData data;
  std::vector<StlResult> stl;
  std::vector<TaskProfile> profiles;
  std::unique_ptr<MtlGroupEvaluator> evaluator;
  EvalCache base;
  PairStage pairs;
  SampleStage sample;
  PredictorModel model;
  double true_loss = 0.0;
  double all_in_one = 0.0;
  double stl_total = 0.0;
  std::size_t n_records = 0;

  SearchBench() {
    config.seed = 1;
    data = prepare_data(config);
    stl = compute_stl(data, config);
    profiles = make_profiles(data, stl, config);
    evaluator = make_evaluator(data, config, false);
    base = EvalCache(stl_losses(stl));
    pairs = compute_pairs(data, profiles, config, base, *evaluator);
    sample = compute_sample(data.splits.size(), config, base, *evaluator);
    const auto records = records_from_cache(base, ctx());
    n_records = dedup_records(records).size();
    PredictorConfig pc;
    pc.seed = stage_seed(config, "predictor");
    model = train_predictor(records, config.model.predictor, pc);
    EvalCache oracle = base;
    true_loss = evaluate_partition(*data.true_partition, oracle, *evaluator).total_loss;
    all_in_one = *base.partition_loss(Partition::single_group(data.splits.size()));
    stl_total = base.stl_total();
  }

  PredictionContext ctx() const { return {&pairs.tables, profiles}; }

  SearchResult run(std::uint64_t seed, SearchConfig sc, EvalCache& cache) const {
    PredictorConfig pc;
    pc.seed = derive_seed(seed, "predictor_update");
    GainPredictorSurrogate surrogate(ctx(), config.model.predictor, pc, model);
    sc.seed = seed;
    return search_with_predictor(sample.partitions, cache, *evaluator, surrogate, sc);
  }
};

SearchConfig oracle_search_config() {
  SearchConfig sc;
  sc.gamma_max = 1500;
  sc.budget_mtl = 300;
  return sc;
}

struct OracleRuns {
  std::vector<double> ours;
  std::vector<long> trainings;
  std::vector<double> random;
};

OracleRuns oracle_runs(const SearchBench& b) {
  OracleRuns r;
  for (std::uint64_t s = 0; s < 10; ++s) {
    EvalCache cache = b.base;
    const auto res = b.run(100 + s, oracle_search_config(), cache);
    r.ours.push_back(res.best_loss);
    r.trainings.push_back(res.mtl_trainings);
    EvalCache rcache = b.base;
    const auto rnd = random_search_baseline(rcache, *b.evaluator, res.mtl_trainings, 200 + s);
    r.random.push_back(rnd.best_loss);
  }
  return r;
}

Outcome oracle_recovery(const SearchBench& b, const OracleRuns& r) {
  int near = 0;
  int beats = 0;
  std::string losses;
  for (std::size_t s = 0; s < r.ours.size(); ++s) {
    near += r.ours[s] <= 1.05 * b.true_loss ? 1 : 0;
    beats += r.ours[s] < b.stl_total && r.ours[s] < b.all_in_one ? 1 : 0;
    losses += fmt("%.3f", r.ours[s]) + "/" + std::to_string(r.trainings[s]) + " ";
  }
  return {near >= 8 && beats >= 8,
          "true " + fmt("%.3f", b.true_loss) + ", STL " + fmt("%.3f", b.stl_total) + ", all-in-one " +
              fmt("%.3f", b.all_in_one) + "; within 5%: " + std::to_string(near) +
              "/10, beats both: " + std::to_string(beats) + "/10; loss/trainings " + losses};
}

Outcome budget_parity(const OracleRuns& r) {
  int wins = 0;
  std::string detail;
  for (std::size_t s = 0; s < r.ours.size(); ++s) {
    wins += r.ours[s] <= r.random[s] ? 1 : 0;
    detail += fmt("%.3f", r.ours[s]) + "<=" + fmt("%.3f", r.random[s]) + " ";
  }
  return {wins >= 8, std::to_string(wins) + "/10 seeds; " + detail};
}

Outcome quick_reject(const SearchBench& b) {
  std::vector<double> gated;
  std::vector<double> always;
  for (std::uint64_t s = 0; s < 10; ++s) {
    SearchConfig sc;
    sc.gamma_max = 200;
    EvalCache c1 = b.base;
    gated.push_back(static_cast<double>(b.run(300 + s, sc, c1).mtl_trainings));
    sc.pi_t_start = sc.pi_t_end = 1.0;
    EvalCache c2 = b.base;
    always.push_back(static_cast<double>(b.run(300 + s, sc, c2).mtl_trainings));
  }
  const double mg = median(gated);
  const double ma = median(always);
  return {b.n_records >= 50 && mg <= 0.5 * ma,
          std::to_string(b.n_records) + " records; median trainings " + fmt("%.1f", mg) +
              " vs " + fmt("%.1f", ma) + " with pi=1"};
}

// Groupwise records whose gain depends on several features, only partly
// through the mean pairwise gain.
std::vector<TrainingRecord> planted_records(std::size_t n, Rng& rng) {
  std::vector<TrainingRecord> out;
  for (std::size_t i = 0; i < n; ++i) {
    GroupFeatures f;
    f.n_tasks = 3.0 + static_cast<double>(rng.index(6));
    f.mean_sample_size = rng.uniform(50.0, 150.0);
    f.mean_target_var = rng.uniform(0.2, 2.0);
    f.mean_target_sigma = std::sqrt(f.mean_target_var);
    f.mean_group_distance = rng.uniform(1.0, 4.0);
    f.pair_gain_mean = rng.uniform(-0.4, 0.4);
    f.pair_gain_var = rng.uniform(0.0, 0.04);
    f.pair_gain_std = std::sqrt(f.pair_gain_var);
    f.pair_wdot_mean = rng.normal();
    const double gain = 0.8 * f.pair_gain_mean - 0.15 * std::tanh(f.mean_group_distance - 2.5) -
                        2.0 * f.pair_gain_var - 0.02 * (f.n_tasks - 5.0) +
                        0.05 * f.pair_wdot_mean + 0.01 * rng.normal();
    out.push_back({GroupKey{i, i + 1, i + 2}, f, gain});
  }
  return out;
}

Outcome predictor_quality() {
  Rng rng(51);
  const auto train = planted_records(300, rng);
  const auto test = planted_records(200, rng);
  PredictorConfig pc;
  pc.seed = 5;
  const auto full = train_predictor(train, PredictorArch{}, pc);
  PredictorArch single;
  single.feature_names = {"pair_gain_mean"};
  const auto base = train_predictor(train, single, pc);
  std::vector<double> pf;
  std::vector<double> pb;
  std::vector<double> actual;
  for (const auto& r : test) {
    pf.push_back(predict_gain(full, r.features));
    pb.push_back(predict_gain(base, r.features));
    actual.push_back(r.observed_gain);
  }
  const double r2f = r_squared(pf, actual);
  const double r2b = r_squared(pb, actual);
  return {r2f >= r2b, "held-out R2 " + fmt("%.3f", r2f) + " vs mean-pair-gain-only " + fmt("%.3f", r2b)};
}

// ---------------------------------------------------------------------------
// Independent brute-force recomputation of the pair and group catalogs.

double bf_dist(DistanceKind k, const Eigen::RowVectorXd& a, const Eigen::RowVectorXd& b) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const double d = a(i) - b(i);
    if (k == DistanceKind::Euclidean) s += d * d;
    else if (k == DistanceKind::Manhattan) s += std::abs(d);
    else s += d != 0.0 ? 1.0 : 0.0;
  }
  if (k == DistanceKind::Euclidean) return std::sqrt(s);
  if (k == DistanceKind::Hamming) return s / static_cast<double>(a.size());
  return s;
}

double bf_within(const Eigen::MatrixXd& x, DistanceKind k) {
  double s = 0.0;
  double c = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.rows(); ++j) {
      if (i < j) {
        s += bf_dist(k, x.row(i), x.row(j));
        c += 1.0;
      }
    }
  }
  return s / c;
}

double bf_between(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, DistanceKind k) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < b.rows(); ++j) s += bf_dist(k, a.row(i), b.row(j));
  }
  return s / static_cast<double>(a.rows() * b.rows());
}

double bf_pop_sigma(const Eigen::VectorXd& y) {
  double m = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) m += y(i);
  m /= static_cast<double>(y.size());
  double ss = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) ss += (y(i) - m) * (y(i) - m);
  return std::sqrt(ss / static_cast<double>(y.size()));
}

std::map<std::string, double> bf_pair(const TaskProfile& a, const TaskProfile& b, double itaff,
                                      double wdot, bool binary) {
  const double eps = 1e-12;
  std::map<std::string, double> f;
  auto singles = [&](const TaskProfile& t, const std::string& sfx) {
    f["sample_size" + sfx] = static_cast<double>(t.targets.size());
    double m = 0.0;
    for (Eigen::Index i = 0; i < t.targets.size(); ++i) m += t.targets(i);
    f["target_mean" + sfx] = m / static_cast<double>(t.targets.size());
    const double sg = bf_pop_sigma(t.targets);
    f["target_sigma" + sfx] = sg;
    f["target_var" + sfx] = sg * sg;
    for (auto [frac, name] : {std::pair{0.1, "10"}, {0.2, "20"}, {0.3, "30"}, {0.5, "50"}, {0.7, "70"}}) {
      const double lx = *t.stl.curve.at(frac);
      const double l1 = std::max(*t.stl.curve.at(1.0), eps);
      f[std::string("curve_grad_") + name + sfx] = (lx - *t.stl.curve.at(1.0)) / l1;
    }
    f["fit_a" + sfx] = t.stl.fit_a;
    f["fit_b" + sfx] = t.stl.fit_b;
    f["dE_within" + sfx] = bf_within(t.raw_features, DistanceKind::Euclidean);
    f["dM_within" + sfx] = bf_within(t.raw_features, DistanceKind::Manhattan);
  };
  singles(a, "_i");
  singles(b, "_j");
  const double si = f["target_sigma_i"], sj = f["target_sigma_j"];
  const double vi = f["target_var_i"], vj = f["target_var_j"];
  const double ni = f["sample_size_i"], nj = f["sample_size_j"];
  Eigen::VectorXd u(a.targets.size() + b.targets.size());
  u << a.targets, b.targets;
  const double sc = bf_pop_sigma(u);
  const double vc = sc * sc;
  f["size_diff_nS"] = std::abs(ni - nj) / (ni + nj);
  f["target_sigma_mean"] = (si + sj) / 2;
  f["target_sigma_diff_nS"] = std::abs(si - sj) / std::max(si + sj, eps);
  f["target_sigma_comb"] = sc;
  f["target_sigma_comb_nS"] = sc / std::max(si + sj, eps);
  f["target_sigma_comb_nP"] = sc * sc / std::max(si * sj, eps);
  f["target_var_mean"] = (vi + vj) / 2;
  f["target_var_diff_nS"] = std::abs(vi - vj) / std::max(vi + vj, eps);
  f["target_var_comb"] = vc;
  f["target_var_comb_nS"] = vc / std::max(vi + vj, eps);
  f["target_var_comb_nP"] = vc * vc / std::max(vi * vj, eps);
  for (const char* name : {"10", "20", "30", "50", "70"}) {
    const double gi = f[std::string("curve_grad_") + name + "_i"];
    const double gj = f[std::string("curve_grad_") + name + "_j"];
    f[std::string("curve_grad_diff_") + name] = std::abs(gi - gj) / (std::abs(gi) + std::abs(gj) + eps);
  }
  f["fit_a_diff_nS"] = std::abs(a.stl.fit_a - b.stl.fit_a) / (std::abs(a.stl.fit_a) + std::abs(b.stl.fit_a) + eps);
  f["fit_b_diff_nS"] = std::abs(a.stl.fit_b - b.stl.fit_b) / (std::abs(a.stl.fit_b) + std::abs(b.stl.fit_b) + eps);
  f["inter_task_affinity"] = itaff;
  f["weight_dot"] = wdot;

  struct V {
    const char* name;
    DistanceKind k;
    bool scaled;
  };
  std::vector<V> variants{{"dE", DistanceKind::Euclidean, false}, {"dM", DistanceKind::Manhattan, false}};
  if (binary) variants.push_back({"dH", DistanceKind::Hamming, false});
  else {
    variants.push_back({"dE_scaled", DistanceKind::Euclidean, true});
    variants.push_back({"dM_scaled", DistanceKind::Manhattan, true});
  }
  for (const auto& v : variants) {
    const auto& xa = v.scaled ? a.scaled_features : a.raw_features;
    const auto& xb = v.scaled ? b.scaled_features : b.raw_features;
    const double wa = bf_within(xa, v.k);
    const double wb = bf_within(xb, v.k);
    Eigen::MatrixXd uni(xa.rows() + xb.rows(), xa.cols());
    uni << xa, xb;
    const double bt = bf_between(xa, xb, v.k);
    const double cb = bf_within(uni, v.k);
    const std::string n = v.name;
    f[n + "_between"] = bt;
    f[n + "_between_nS"] = bt / std::max(wa + wb, eps);
    f[n + "_between_nP"] = bt * bt / std::max(wa * wb, eps);
    f[n + "_combined"] = cb;
    f[n + "_combined_nS"] = cb / std::max(wa + wb, eps);
    f[n + "_combined_nP"] = cb * cb / std::max(wa * wb, eps);
  }
  return f;
}

Outcome feature_oracle() {
  Rng rng(61);
  double worst = 0.0;
  std::size_t checked = 0;
  for (int ds = 0; ds < 10; ++ds) {
    const bool binary = ds % 3 == 2;
    const std::size_t d = 2 + rng.index(4);
    std::vector<TaskProfile> profiles;
    for (std::size_t t = 0; t < 5; ++t) {
      Task raw;
      raw.id = "m" + std::to_string(t);
      const auto rows = static_cast<Eigen::Index>(4 + rng.index(9));
      raw.features.resize(rows, static_cast<Eigen::Index>(d));
      raw.targets.resize(rows);
      for (Eigen::Index i = 0; i < raw.features.size(); ++i) {
        raw.features.data()[i] = binary ? double(rng.index(2)) : rng.normal() * 2.0 + 1.0;
      }
      for (Eigen::Index i = 0; i < rows; ++i) raw.targets(i) = rng.normal();
      Task scaled = raw;
      scaled.features = (raw.features.array() - 0.5) / 1.7;
      StlResult stl;
      stl.task_id = raw.id;
      for (double f : default_curve_checkpoints()) stl.curve.points.push_back({f, rng.uniform(0.1, 2.0)});
      for (const auto& p : stl.curve.points) {
        if (p.fraction < 1.0) stl.curve_grads[p.fraction] = curve_gradient(stl.curve, p.fraction);
      }
      std::tie(stl.fit_a, stl.fit_b) = fit_log_curve(stl.curve);
      stl.sample_size = raw.n_samples();
      stl.target_mean = raw.targets.mean();
      stl.target_sigma = bf_pop_sigma(raw.targets);
      stl.target_var = stl.target_sigma * stl.target_sigma;
      profiles.push_back(make_task_profile(raw, scaled, stl, binary));
    }
    PairwiseTables tables = PairwiseTables::empty(5);
    for (std::size_t i = 0; i < 5; ++i) {
      for (std::size_t j = 0; j < 5; ++j) {
        if (i == j) continue;
        const double itaff = rng.normal();
        const double wdot = rng.normal();
        const auto got = pair_features(profiles[i], profiles[j], {itaff, wdot}, binary);
        const auto want = bf_pair(profiles[i], profiles[j], itaff, wdot, binary);
        if (got.size() != want.size() || got.size() != (binary ? 64u : 70u)) {
          return {false, "catalog size " + std::to_string(got.size())};
        }
        for (const auto& [name, v] : want) {
          const double g = got.at(name);
          worst = std::max(worst, std::abs(g - v) / std::max(1.0, std::abs(v)));
          ++checked;
        }
        if (i < j) {
          tables.gain(i, j) = tables.gain(j, i) = rng.uniform(-0.5, 0.5);
          tables.weight_dot(i, j) = tables.weight_dot(j, i) = wdot;
          tables.distance(i, j) = tables.distance(j, i) =
              binary ? bf_between(profiles[i].raw_features, profiles[j].raw_features, DistanceKind::Hamming)
                     : bf_between(profiles[i].scaled_features, profiles[j].scaled_features,
                                  DistanceKind::Euclidean);
        }
      }
    }
    // Group features over every subset of size >= 3.
    for (unsigned mask = 0; mask < 32; ++mask) {
      std::vector<std::size_t> members;
      for (std::size_t t = 0; t < 5; ++t) {
        if (mask & (1u << t)) members.push_back(t);
      }
      if (members.size() < 3) continue;
      for (std::size_t x = 0; x < members.size(); ++x) {
        for (std::size_t y = x + 1; y < members.size(); ++y) {
          const auto i = members[x], j = members[y];
          const double dd = designated_pair_distance(profiles[i], profiles[j], binary);
          worst = std::max(worst, std::abs(dd - tables.distance(i, j)));
        }
      }
      const auto gf = group_features(GroupKey(members), tables, profiles);
      double size = 0, var = 0, sig = 0, dist = 0, wd = 0, gm = 0, np = 0;
      std::vector<double> gains;
      for (auto t : members) {
        size += static_cast<double>(profiles[t].targets.size());
        const double s = bf_pop_sigma(profiles[t].targets);
        var += s * s;
        sig += s;
      }
      for (std::size_t x = 0; x < members.size(); ++x) {
        for (std::size_t y = x + 1; y < members.size(); ++y) {
          const auto i = members[x], j = members[y];
          gains.push_back(tables.gain(i, j));
          gm += tables.gain(i, j);
          dist += tables.distance(i, j);
          wd += tables.weight_dot(i, j);
          np += 1;
        }
      }
      const double k = static_cast<double>(members.size());
      gm /= np;
      double gv = 0.0;
      for (double g : gains) gv += (g - gm) * (g - gm);
      gv /= np;
      const double want[] = {k, size / k, var / k, sig / k, dist / np, gm, gv, std::sqrt(gv), wd / np};
      const auto got = gf.to_vector().values();
      for (std::size_t q = 0; q < got.size(); ++q) {
        worst = std::max(worst, std::abs(got[q] - want[q]) / std::max(1.0, std::abs(want[q])));
        ++checked;
      }
    }
  }
  return {worst <= 1e-9, std::to_string(checked) + " values, max rel err " + fmt("%.2e", worst)};
}

Outcome determinism() {
  namespace fs = std::filesystem;
  const fs::path root = fs::temp_directory_path() / "tgopt_acceptance_determinism";
  fs::remove_all(root);
  std::string texts[2];
  for (int run = 0; run < 2; ++run) {
    const fs::path dir = root / ("run" + std::to_string(run));
    RunConfig c;
    c.seed = 3;
    c.search.gamma_max = 60;
    c.report.repeats = 2;
    c.report.artifact_dir = dir;
    run_stage("all", c);
    texts[run] = read_file(dir / "result.json");
  }
  fs::remove_all(root);
  return {!texts[0].empty() && texts[0] == texts[1],
          "result.json " + std::to_string(texts[0].size()) + " bytes, identical: " +
              (texts[0] == texts[1] ? "yes" : "no")};
}

}  // namespace

int main() {
  criterion(1, "combinatorics exactness", combinatorics);
  criterion(2, "pair planning", pair_planning);
  criterion(3, "gradient and Adam numerics", numerics);
  criterion(4, "mutation soundness", mutation_soundness);
  criterion(5, "uniform partition sampler", uniform_sampler);
  criterion(6, "acceptance rule", acceptance_rule);

  std::unique_ptr<SearchBench> bench;
  std::optional<OracleRuns> runs;
  try {
    bench = std::make_unique<SearchBench>();
    runs = oracle_runs(*bench);
  } catch (const std::exception& e) {
    std::printf("search setup failed: %s\n", e.what());
  }
  criterion(7, "oracle recovery", [&]() -> Outcome {
    if (!runs) return {false, "setup failed"};
    return oracle_recovery(*bench, *runs);
  });
  criterion(8, "budget-parity dominance", [&]() -> Outcome {
    if (!runs) return {false, "setup failed"};
    return budget_parity(*runs);
  });
  criterion(9, "quick-reject efficiency", [&]() -> Outcome {
    if (!bench) return {false, "setup failed"};
    return quick_reject(*bench);
  });
  criterion(10, "predictor quality", predictor_quality);
  criterion(11, "feature oracle equivalence", feature_oracle);
  criterion(12, "determinism", determinism);

  std::printf("%d criteria failed\n", g_failures);
  return g_failures == 0 ? 0 : 1;
}
