#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tgopt/eval_cache.hpp"
#include "tgopt/neural.hpp"
#include "tgopt/partition.hpp"
#include "tgopt/predictor.hpp"
#include "tgopt/search.hpp"
#include "tgopt/stl.hpp"

namespace tgopt {

inline constexpr int kSchemaVersion = 1;

/// Carried by every artifact file.
struct ArtifactHeader {
  int schema_version = kSchemaVersion;
  std::string config_hash;
  std::uint64_t seed = 0;
};

/// Writes to a sibling temp file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);
/// Throws Error(Io) when the file cannot be read.
std::string read_file(const std::filesystem::path& path);

/// Header fields of any artifact document. Throws Error(Io) on malformed input.
ArtifactHeader read_header(std::string_view json_text);

std::string params_to_json(const Params& p);
Params params_from_json(std::string_view text);

std::string predictor_to_json(const PredictorModel& m, const ArtifactHeader& h);
PredictorModel predictor_from_json(std::string_view text);

std::string stl_results_to_json(std::span<const StlResult> results, const ArtifactHeader& h);
std::vector<StlResult> stl_results_from_json(std::string_view text);

/// Groups are written by task id so files stay readable.
std::string eval_cache_to_json(const EvalCache& cache, std::span<const std::string> task_ids,
                               const ArtifactHeader& h);
EvalCache eval_cache_from_json(std::string_view text, std::span<const std::string> task_ids);

/// Group-of-ids form, e.g. [["t00","t03"],["t01"]].
std::string partition_to_json(const Partition& p, std::span<const std::string> task_ids);
Partition partition_from_json(std::string_view text, std::span<const std::string> task_ids);

/// One JSON object per line, no trailing newline.
std::string trace_record_to_jsonl(const TraceRecord& r, std::span<const std::string> task_ids);

}  // namespace tgopt
