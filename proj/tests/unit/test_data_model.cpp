#include <filesystem>

#include "check_code.hpp"
#include "tgopt/data_model.hpp"

using namespace tgopt;

namespace {

const char* kCsv =
    "task_id,x1,x2,target\n"
    "a,1,2,0.5\n"
    "b,0,1,1.5\n"
    "a,3,4,2.5\n"
    "b,2,2,-1\n"
    "a,5,6,1\n";

}  // namespace

TEST_CASE("csv parsing keeps first-occurrence task order and row order") {
  const auto ts = parse_taskset_csv(kCsv);
  REQUIRE(ts.size() == 2);
  CHECK(ts[0].id == "a");
  CHECK(ts[1].id == "b");
  CHECK(ts.feature_names() == std::vector<std::string>{"x1", "x2"});
  CHECK(ts.kind() == TaskKind::Regression);
  CHECK(ts[0].n_samples() == 3);
  CHECK(ts[0].features(1, 0) == 3.0);
  CHECK(ts[0].targets(2) == 1.0);
  CHECK(ts.index_of("b") == 1u);
  CHECK_FALSE(ts.index_of("zz").has_value());
}

TEST_CASE("binary targets infer classification") {
  const auto ts = parse_taskset_csv("task_id,x,target\na,1,0\na,2,1\nb,3,1\nb,4,0\n");
  CHECK(ts.kind() == TaskKind::Classification);
  CsvSchema s;
  s.kind_override = TaskKind::Regression;
  CHECK(parse_taskset_csv("task_id,x,target\na,1,0\na,2,1\nb,3,1\nb,4,0\n", s).kind() ==
        TaskKind::Regression);
}

TEST_CASE("csv errors") {
  CHECK_CODE(parse_taskset_csv("task_id,x,target\n"), ErrorCode::EmptyFile);
  CHECK_CODE(parse_taskset_csv("id,x,target\na,1,2\n"), ErrorCode::MissingColumn);
  CHECK_CODE(parse_taskset_csv("task_id,x,target\na,1,q\na,1,2\nb,1,1\nb,2,2\n"),
             ErrorCode::NonNumericCell);
  CHECK_CODE(parse_taskset_csv("task_id,x,target\na,1\n"), ErrorCode::InconsistentDimensions);
  CHECK_CODE(parse_taskset_csv("task_id,x,target\na,1,2\nb,1,1\nb,2,2\n"), ErrorCode::TaskTooSmall);
  CHECK_CODE(parse_taskset_csv("task_id,x,target\na,1,2\na,2,2\n"), ErrorCode::InvalidTaskSet);
}

TEST_CASE("csv round trip") {
  const auto ts = parse_taskset_csv(kCsv);
  const auto back = parse_taskset_csv(taskset_to_csv(ts));
  REQUIRE(back.size() == ts.size());
  for (std::size_t i = 0; i < ts.size(); ++i) {
    CHECK(back[i].id == ts[i].id);
    CHECK(back[i].features == ts[i].features);
    CHECK(back[i].targets == ts[i].targets);
  }
  const auto path = std::filesystem::temp_directory_path() / "tgopt_test_roundtrip.csv";
  save_taskset_csv(ts, path);
  CHECK(load_taskset(path)[1].targets == ts[1].targets);
  std::filesystem::remove(path);
}

TEST_CASE("pooled normalization maps constant columns to zero") {
  Eigen::MatrixXd x(4, 2);
  x << 1, 5, 2, 5, 3, 5, 4, 5;
  const auto st = NormalizationStats::compute(x);
  CHECK(st.mean(0) == doctest::Approx(2.5));
  CHECK(st.std(0) == doctest::Approx(std::sqrt(1.25)));
  CHECK(st.constant[1]);
  const auto z = st.apply(x);
  CHECK(z.col(1).isZero());
  CHECK(z.col(0).mean() == doctest::Approx(0.0));
}

TEST_CASE("repeat_rows cycles and truncates") {
  Task t;
  t.id = "t";
  t.features = Eigen::MatrixXd(3, 1);
  t.features << 1, 2, 3;
  t.targets = Eigen::VectorXd(3);
  t.targets << 10, 20, 30;
  const auto r = repeat_rows(t, 7);
  REQUIRE(r.n_samples() == 7);
  CHECK(r.targets(3) == 10);
  CHECK(r.targets(6) == 10);
  CHECK(r.features(5, 0) == 3);
}

TEST_CASE("split sizes follow floor rule and are seeded") {
  Task t;
  t.id = "t";
  t.features = Eigen::MatrixXd::Random(20, 2);
  t.targets = Eigen::VectorXd::LinSpaced(20, 0, 19);
  SplitSpec spec;
  spec.seed = 3;
  const auto s = split_task(t, spec);
  CHECK(s.val.n_samples() == 3);
  CHECK(s.test.n_samples() == 3);
  CHECK(s.train.n_samples() == 14);
  const auto s2 = split_task(t, spec);
  CHECK(s.test.targets == s2.test.targets);
  // Disjoint cover of the rows.
  std::vector<double> all;
  for (const Task* part : {&s.train, &s.val, &s.test}) {
    for (Eigen::Index i = 0; i < part->targets.size(); ++i) all.push_back(part->targets(i));
  }
  std::sort(all.begin(), all.end());
  for (std::size_t i = 0; i < all.size(); ++i) CHECK(all[i] == static_cast<double>(i));

  Task small = t.select_rows(std::vector<std::size_t>{0, 1, 2, 3, 4});
  CHECK_CODE(split_task(small, spec), ErrorCode::TooFewSamples);
  SplitSpec bad;
  bad.train_frac = 0.9;
  CHECK_CODE(split_task(t, bad), ErrorCode::InvalidSpec);
}

TEST_CASE("synthetic task set plants clusters") {
  SyntheticSpec spec;
  spec.n_tasks = 6;
  spec.n_clusters = 2;
  const auto s = synth_taskset(spec);
  CHECK(s.tasks.size() == 6);
  CHECK(s.tasks.dim() == spec.dim);
  CHECK(s.true_partition == Partition(6, {GroupKey{0, 2, 4}, GroupKey{1, 3, 5}}));
  const auto again = synth_taskset(spec);
  CHECK(again.tasks[3].targets == s.tasks[3].targets);
  // Tasks in one cluster share the mean function.
  const Eigen::MatrixXd x = Eigen::MatrixXd::Random(5, static_cast<Eigen::Index>(spec.dim));
  CHECK(synth_mean_function(spec, 0, x).isApprox(synth_mean_function(spec, 2, x)));
  CHECK_FALSE(synth_mean_function(spec, 0, x).isApprox(synth_mean_function(spec, 1, x)));
}
