#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tgopt/error.hpp"
#include "tgopt/experiment.hpp"

namespace {

enum Exit { kOk = 0, kFailure = 1, kConfig = 2, kPrerequisite = 3, kNumerical = 4 };

int exit_code(tgopt::ErrorCode code) {
  using tgopt::ErrorCode;
  switch (code) {
    case ErrorCode::ConfigInvalid:
    case ErrorCode::EmptyFile:
    case ErrorCode::MissingColumn:
    case ErrorCode::NonNumericCell:
    case ErrorCode::InconsistentDimensions:
    case ErrorCode::TaskTooSmall:
    case ErrorCode::InvalidTaskSet:
    case ErrorCode::TooFewSamples:
    case ErrorCode::InvalidSpec:
    case ErrorCode::NonBinaryForHamming:
      return kConfig;
    case ErrorCode::MissingPrerequisiteStage:
    case ErrorCode::MissingPrerequisite:
    case ErrorCode::TooFewRecords:
      return kPrerequisite;
    case ErrorCode::NumericalDivergence:
    case ErrorCode::DomainError:
    case ErrorCode::DegenerateFit:
    case ErrorCode::DegenerateLabels:
    case ErrorCode::ZeroVariance:
    case ErrorCode::ZeroStlSum:
      return kNumerical;
    default:
      return kFailure;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Task grouping for multi-task learning"};
  std::vector<std::string> stages = tgopt::pipeline_order();
  stages.push_back("all");

  std::string stage;
  std::string config_path;
  int jobs = 1;
  std::optional<std::uint64_t> seed;
  std::optional<long> budget;
  std::optional<int> start_rank;
  bool print_config = false;

  app.add_option("stage", stage, "Pipeline stage")->required()->check(CLI::IsMember(stages));
  app.add_option("--config", config_path, "Run configuration (JSON)")->required();
  app.add_option("--jobs", jobs, "Parallel trainings")->check(CLI::PositiveNumber);
  app.add_option("--seed", seed, "Override the global seed");
  app.add_option("--budget", budget, "Cap on MTL trainings during search")
      ->check(CLI::NonNegativeNumber);
  app.add_option("--start-rank", start_rank, "Start from the 1st, 2nd or 3rd best sample")
      ->check(CLI::IsMember({1, 2, 3}));
  app.add_flag("--print-config", print_config, "Print the resolved configuration and exit");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }

  try {
    tgopt::RunConfig config = tgopt::load_run_config(config_path);
    if (seed) config.seed = *seed;
    if (budget) config.search.budget_mtl = *budget;
    if (start_rank) config.search.start_rank = *start_rank;
    config.validate();
    if (print_config) {
      std::cout << tgopt::run_config_to_json(config);
      return kOk;
    }
    tgopt::run_stage(stage, config, jobs);
  } catch (const tgopt::Error& e) {
    std::cerr << "tgopt: " << e.what() << "\n";
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "tgopt: " << e.what() << "\n";
    return kFailure;
  }
  return kOk;
}
