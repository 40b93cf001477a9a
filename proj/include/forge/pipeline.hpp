#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "forge/langid.hpp"
#include "forge/model.hpp"

namespace forge::pipeline {

namespace fs = std::filesystem;

// What one stage did, overall and per source dataset. Persisted as
// stage_report.json beside the stage's output shards.
struct StageOutput {
  StageReport report;
  std::map<std::string, std::uint64_t> per_source_in;
  std::map<std::string, std::uint64_t> per_source_out;
  std::string config_hash;
};

nlohmann::ordered_json to_json(const StageOutput& out);
StageOutput stage_output_from_json(const nlohmann::json& j);
StageOutput read_stage_output(const fs::path& dir);

inline constexpr const char* kStageReportName = "stage_report.json";

struct StageOptions {
  int jobs = 1;
  std::optional<fs::path> emit_signatures;
  std::optional<fs::path> emit_verdicts;
};

// Each runner streams `inputs` shard by shard into `output_dir` and writes
// the manifest and stage report there.
StageOutput run_langid_stage(const PipelineConfig& cfg, const std::vector<fs::path>& inputs, const fs::path& output_dir,
                             const langid::Scorer& scorer, const StageOptions& opts = {});
StageOutput run_dedup_stage(const PipelineConfig& cfg, const std::vector<fs::path>& inputs, const fs::path& output_dir,
                            const StageOptions& opts = {});
StageOutput run_quality_stage(const PipelineConfig& cfg, const std::vector<fs::path>& inputs, const fs::path& output_dir,
                              const StageOptions& opts = {});

struct SourceRetention {
  std::uint64_t original = 0;
  std::uint64_t final = 0;
  RetentionPct retention() const { return RetentionPct::from_counts(original, final); }
};

struct PipelineReport {
  std::vector<StageReport> stages;
  std::map<std::string, SourceRetention> per_source;
  std::string config_hash;
  std::map<std::string, double> wall_time_per_stage;
  bool incomplete = false;
  std::string error;
};

// Chains stage outputs: originals from the first stage's input, finals
// from the last stage's output.
PipelineReport combine_stage_outputs(const std::vector<StageOutput>& outputs);

enum class ReportFormat { json, markdown };

// Deterministic serialization; wall times are not part of it. Throws
// DataError for an incomplete report in markdown.
std::string emit_report(const PipelineReport& report, ReportFormat format);
PipelineReport report_from_json(const nlohmann::json& j);

struct RunOptions {
  std::vector<fs::path> profiles;
  std::optional<fs::path> scores;
  StageOptions stage;
};

// langid -> dedup -> quality into output_dir/{01-langid,02-dedup,03-quality},
// plus report.json, report.md and timings.json. On failure a report flagged
// incomplete is still written before the error propagates.
PipelineReport run_pipeline(const PipelineConfig& cfg, const std::vector<fs::path>& inputs, const fs::path& output_dir,
                            const RunOptions& opts);

std::unique_ptr<langid::Scorer> make_scorer(const std::vector<fs::path>& profiles, const std::optional<fs::path>& scores);

}  // namespace forge::pipeline
