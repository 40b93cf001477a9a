#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace forge {

struct Document {
  std::string id;
  std::string text;
  std::string source;
  std::optional<std::string> url;
  std::map<std::string, std::string> meta;

  friend bool operator==(const Document&, const Document&) = default;
};

// Token-budget shares of the three pre-training phases
// (pre-train, context extension, learning-rate decay).
struct PhaseRatios {
  std::array<double, 3> shares{195.0 / 230.0, 29.0 / 230.0, 6.0 / 230.0};

  // Realized token shares 195B : 29B : 6B.
  static PhaseRatios realized() { return {}; }
  // Rounded shares: 85% / 12.5% / 2.5%.
  static PhaseRatios rounded() { return {{0.85, 0.125, 0.025}}; }

  double operator[](std::size_t i) const { return shares[i]; }
  friend bool operator==(const PhaseRatios&, const PhaseRatios&) = default;
};

struct PipelineConfig {
  // langid
  std::string lang_label = "por";
  double lang_threshold = 0.799;

  // dedup
  int minhash_num_hashes = 112;
  int minhash_num_bands = 14;
  int shingle_size = 5;
  bool dedup_verify = false;
  double dedup_verify_threshold = 0.7;

  // quality: C4 line rules
  int min_words_per_line = 3;
  std::vector<std::string> banned_substrings{"javascript", "cookies", "lorem ipsum"};
  bool banned_case_insensitive = true;
  // quality: FineWeb document rules
  double punct_line_ratio_min = 0.12;
  double short_line_ratio_max = 0.67;
  int short_line_char_limit = 30;
  double dup_line_char_ratio_max = 0.10;
  std::string terminal_punctuation = ".?!\"'";

  // phase split
  PhaseRatios phase_ratios = PhaseRatios::realized();
  std::int64_t long_doc_token_threshold = 1024;

  // analytics
  int hdd_sample_size = 42;

  // io
  std::int64_t shard_size = 100000;

  std::uint64_t master_seed = 0;

  int rows_per_band() const { return minhash_num_hashes / minhash_num_bands; }

  friend bool operator==(const PipelineConfig&, const PipelineConfig&) = default;
};

// Returns `cfg` unchanged when every invariant holds; otherwise throws
// ConfigError naming the first violated invariant.
const PipelineConfig& validate_config(const PipelineConfig& cfg);

nlohmann::ordered_json config_to_json(const PipelineConfig& cfg);
// Absent fields take defaults; unknown fields are rejected.
PipelineConfig config_from_json(const nlohmann::json& j);
PipelineConfig load_config(const std::filesystem::path& path);
// Hex digest of the canonical JSON serialization.
std::string config_hash(const PipelineConfig& cfg);

enum class Stage { langid, dedup, quality, phase_split };

std::string_view to_string(Stage stage);
Stage stage_from_string(std::string_view name);

// Percentage held as an integer count of hundredths, rounded half-up.
class RetentionPct {
 public:
  RetentionPct() = default;
  static RetentionPct from_counts(std::uint64_t docs_in, std::uint64_t docs_out);

  std::int64_t hundredths() const { return hundredths_; }
  double value() const { return static_cast<double>(hundredths_) / 100.0; }
  // Fixed two-decimal rendering, e.g. "58.82".
  std::string str() const;

  friend bool operator==(const RetentionPct&, const RetentionPct&) = default;

 private:
  explicit RetentionPct(std::int64_t h) : hundredths_(h) {}
  std::int64_t hundredths_ = 0;
};

struct StageReport {
  Stage stage = Stage::langid;
  std::string source = "*";
  std::uint64_t docs_in = 0;
  std::uint64_t docs_out = 0;
  std::map<std::string, std::uint64_t> drop_reasons;

  RetentionPct retention_pct() const { return RetentionPct::from_counts(docs_in, docs_out); }
  void drop(const std::string& reason) { ++drop_reasons[reason]; }
  // Throws DataError when the counts are inconsistent.
  void check() const;

  friend bool operator==(const StageReport&, const StageReport&) = default;
};

nlohmann::ordered_json to_json(const StageReport& report);
StageReport stage_report_from_json(const nlohmann::json& j);

}  // namespace forge
