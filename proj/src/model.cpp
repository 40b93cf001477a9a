#include "forge/model.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "forge/error.hpp"
#include "forge/hash.hpp"

namespace forge {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError("invalid config: " + what);
}

bool is_fraction(double x) { return std::isfinite(x) && x >= 0.0 && x <= 1.0; }

}  // namespace

const PipelineConfig& validate_config(const PipelineConfig& cfg) {
  require(!cfg.lang_label.empty(), "lang_label must be non-empty");
  require(is_fraction(cfg.lang_threshold), "lang_threshold must be in [0,1]");
  require(cfg.minhash_num_hashes > 0, "minhash_num_hashes must be positive");
  require(cfg.minhash_num_bands > 0, "minhash_num_bands must be positive");
  require(cfg.minhash_num_hashes % cfg.minhash_num_bands == 0,
          "hashes not divisible by bands (" + std::to_string(cfg.minhash_num_hashes) + " % " +
              std::to_string(cfg.minhash_num_bands) + " != 0)");
  require(cfg.shingle_size > 0, "shingle_size must be positive");
  require(is_fraction(cfg.dedup_verify_threshold), "dedup_verify_threshold must be in [0,1]");
  require(cfg.min_words_per_line >= 0, "min_words_per_line must be non-negative");
  for (const auto& s : cfg.banned_substrings) require(!s.empty(), "banned_substrings must not contain empty strings");
  require(is_fraction(cfg.punct_line_ratio_min), "punct_line_ratio_min must be in [0,1]");
  require(is_fraction(cfg.short_line_ratio_max), "short_line_ratio_max must be in [0,1]");
  require(cfg.short_line_char_limit >= 0, "short_line_char_limit must be non-negative");
  require(is_fraction(cfg.dup_line_char_ratio_max), "dup_line_char_ratio_max must be in [0,1]");
  double sum = 0.0;
  for (double r : cfg.phase_ratios.shares) {
    require(is_fraction(r), "phase_ratios entries must be in [0,1]");
    sum += r;
  }
  require(std::fabs(sum - 1.0) <= 1e-9, "phase_ratios: ratios sum ≠ 1 (sum is " + std::to_string(sum) + ")");
  require(cfg.long_doc_token_threshold >= 0, "long_doc_token_threshold must be non-negative");
  require(cfg.hdd_sample_size >= 1, "hdd_sample_size must be >= 1");
  require(cfg.shard_size >= 1, "shard_size must be >= 1");
  return cfg;
}

nlohmann::ordered_json config_to_json(const PipelineConfig& cfg) {
  nlohmann::ordered_json j;
  j["lang_label"] = cfg.lang_label;
  j["lang_threshold"] = cfg.lang_threshold;
  j["minhash_num_hashes"] = cfg.minhash_num_hashes;
  j["minhash_num_bands"] = cfg.minhash_num_bands;
  j["shingle_size"] = cfg.shingle_size;
  j["dedup_verify"] = cfg.dedup_verify;
  j["dedup_verify_threshold"] = cfg.dedup_verify_threshold;
  j["min_words_per_line"] = cfg.min_words_per_line;
  j["banned_substrings"] = cfg.banned_substrings;
  j["banned_case_insensitive"] = cfg.banned_case_insensitive;
  j["punct_line_ratio_min"] = cfg.punct_line_ratio_min;
  j["short_line_ratio_max"] = cfg.short_line_ratio_max;
  j["short_line_char_limit"] = cfg.short_line_char_limit;
  j["dup_line_char_ratio_max"] = cfg.dup_line_char_ratio_max;
  j["terminal_punctuation"] = cfg.terminal_punctuation;
  j["phase_ratios"] = cfg.phase_ratios.shares;
  j["long_doc_token_threshold"] = cfg.long_doc_token_threshold;
  j["hdd_sample_size"] = cfg.hdd_sample_size;
  j["shard_size"] = cfg.shard_size;
  j["master_seed"] = cfg.master_seed;
  return j;
}

PipelineConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  static const std::set<std::string> known = [] {
    std::set<std::string> keys;
    const auto defaults = config_to_json(PipelineConfig{});
    for (const auto& [k, v] : defaults.items()) keys.insert(k);
    return keys;
  }();
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw ConfigError("unknown config field: " + key);
  }

  PipelineConfig cfg;
  auto get = [&](const char* key, auto& field) {
    auto it = j.find(key);
    if (it == j.end()) return;
    try {
      it->get_to(field);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("config field ") + key + ": " + e.what());
    }
  };
  get("lang_label", cfg.lang_label);
  get("lang_threshold", cfg.lang_threshold);
  get("minhash_num_hashes", cfg.minhash_num_hashes);
  get("minhash_num_bands", cfg.minhash_num_bands);
  get("shingle_size", cfg.shingle_size);
  get("dedup_verify", cfg.dedup_verify);
  get("dedup_verify_threshold", cfg.dedup_verify_threshold);
  get("min_words_per_line", cfg.min_words_per_line);
  get("banned_substrings", cfg.banned_substrings);
  get("banned_case_insensitive", cfg.banned_case_insensitive);
  get("punct_line_ratio_min", cfg.punct_line_ratio_min);
  get("short_line_ratio_max", cfg.short_line_ratio_max);
  get("short_line_char_limit", cfg.short_line_char_limit);
  get("dup_line_char_ratio_max", cfg.dup_line_char_ratio_max);
  get("terminal_punctuation", cfg.terminal_punctuation);
  if (auto it = j.find("phase_ratios"); it != j.end()) {
    if (it->is_string()) {
      const auto name = it->get<std::string>();
      if (name == "realized") {
        cfg.phase_ratios = PhaseRatios::realized();
      } else if (name == "rounded") {
        cfg.phase_ratios = PhaseRatios::rounded();
      } else {
        throw ConfigError("unknown phase_ratios preset: " + name);
      }
    } else {
      get("phase_ratios", cfg.phase_ratios.shares);
    }
  }
  get("long_doc_token_threshold", cfg.long_doc_token_threshold);
  get("hdd_sample_size", cfg.hdd_sample_size);
  get("shard_size", cfg.shard_size);
  get("master_seed", cfg.master_seed);
  return cfg;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string body = buf.str();
  // An empty file means "all defaults".
  if (body.find_first_not_of(" \t\r\n") == std::string::npos) return validate_config(PipelineConfig{});
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  return validate_config(config_from_json(j));
}

std::string config_hash(const PipelineConfig& cfg) {
  return hex64(hash64(config_to_json(cfg).dump(), 0x636f6e666967ULL));
}

std::string_view to_string(Stage stage) {
  switch (stage) {
    case Stage::langid: return "langid";
    case Stage::dedup: return "dedup";
    case Stage::quality: return "quality";
    case Stage::phase_split: return "phase_split";
  }
  return "unknown";
}

Stage stage_from_string(std::string_view name) {
  if (name == "langid") return Stage::langid;
  if (name == "dedup") return Stage::dedup;
  if (name == "quality") return Stage::quality;
  if (name == "phase_split") return Stage::phase_split;
  throw DataError("unknown stage: " + std::string(name));
}

RetentionPct RetentionPct::from_counts(std::uint64_t docs_in, std::uint64_t docs_out) {
  if (docs_in == 0) return RetentionPct(0);
  // round(100 * out / in, 2) half-up == floor((20000 * out + in) / (2 * in)) hundredths.
  const auto num = static_cast<unsigned __int128>(docs_out) * 20000u + docs_in;
  const auto den = static_cast<unsigned __int128>(docs_in) * 2u;
  return RetentionPct(static_cast<std::int64_t>(num / den));
}

std::string RetentionPct::str() const {
  const std::int64_t whole = hundredths_ / 100;
  const std::int64_t frac = hundredths_ % 100;
  return std::to_string(whole) + "." + (frac < 10 ? "0" : "") + std::to_string(frac);
}

void StageReport::check() const {
  if (docs_out > docs_in) throw DataError("stage report: docs_out exceeds docs_in");
  std::uint64_t dropped = 0;
  for (const auto& [reason, n] : drop_reasons) dropped += n;
  if (dropped != docs_in - docs_out) throw DataError("stage report: drop reasons do not sum to docs_in - docs_out");
}

nlohmann::ordered_json to_json(const StageReport& report) {
  nlohmann::ordered_json j;
  j["stage"] = to_string(report.stage);
  j["source"] = report.source;
  j["docs_in"] = report.docs_in;
  j["docs_out"] = report.docs_out;
  // Serialized from the exact hundredths so 1.15 never prints as 1.1499999.
  j["retention_pct"] = nlohmann::ordered_json::parse(report.retention_pct().str());
  nlohmann::ordered_json reasons = nlohmann::ordered_json::object();
  for (const auto& [reason, n] : report.drop_reasons) reasons[reason] = n;
  j["drop_reasons"] = std::move(reasons);
  return j;
}

StageReport stage_report_from_json(const nlohmann::json& j) {
  try {
    StageReport r;
    r.stage = stage_from_string(j.at("stage").get<std::string>());
    r.source = j.at("source").get<std::string>();
    r.docs_in = j.at("docs_in").get<std::uint64_t>();
    r.docs_out = j.at("docs_out").get<std::uint64_t>();
    r.drop_reasons = j.at("drop_reasons").get<std::map<std::string, std::uint64_t>>();
    r.check();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed stage report: ") + e.what());
  }
}

}  // namespace forge
