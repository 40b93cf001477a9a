#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <absl/container/flat_hash_map.h>

#include "forge/model.hpp"

namespace forge::langid {

struct LanguageScore {
  std::string label;
  double confidence = 0.0;

  friend bool operator==(const LanguageScore&, const LanguageScore&) = default;
};

struct NgramProfile {
  std::string label;
  std::map<std::string, std::uint64_t> counts;
  int n = 3;
  std::uint64_t total = 0;
};

// Counts every character n-gram of the normalized texts. Throws DataError
// when `texts` is empty.
NgramProfile train_profile(const std::string& label, const std::vector<std::string>& texts, int n = 3);

nlohmann::ordered_json to_json(const NgramProfile& profile);
NgramProfile profile_from_json(const nlohmann::json& j);
NgramProfile load_profile(const std::filesystem::path& path);
void save_profile(const NgramProfile& profile, const std::filesystem::path& path);

// Character n-grams of the normalized text; a text shorter than n yields
// itself as a single symbol.
std::vector<std::string> extract_ngrams(std::string_view text, int n);

// Scores a document. Implementations must be pure and thread-safe.
class Scorer {
 public:
  virtual ~Scorer() = default;
  virtual LanguageScore score(const Document& doc) const = 0;
  virtual bool has_label(const std::string& label) const = 0;
};

// Multinomial n-gram classifier with add-one smoothing. Confidence is the
// softmax over per-label mean log-likelihoods.
class ProfileIdentifier final : public Scorer {
 public:
  explicit ProfileIdentifier(std::vector<NgramProfile> profiles);

  LanguageScore score(std::string_view text) const;
  LanguageScore score(const Document& doc) const override { return score(doc.text); }
  bool has_label(const std::string& label) const override;

  const std::vector<std::string>& labels() const { return labels_; }
  int order() const { return n_; }

 private:
  std::vector<std::string> labels_;
  int n_ = 3;
  // n-gram hash -> per-label log-probabilities.
  absl::flat_hash_map<std::uint64_t, std::vector<double>> table_;
  std::vector<double> unseen_;
};

// Precomputed scores keyed by document id, e.g. from an external identifier.
class SidecarScores final : public Scorer {
 public:
  static SidecarScores load(const std::filesystem::path& path);
  explicit SidecarScores(std::unordered_map<std::string, LanguageScore> scores) : scores_(std::move(scores)) {}

  LanguageScore score(const Document& doc) const override;
  bool has_label(const std::string&) const override { return true; }
  std::size_t size() const { return scores_.size(); }

 private:
  std::unordered_map<std::string, LanguageScore> scores_;
};

enum class Verdict { keep, wrong_label, low_confidence };

std::string_view to_string(Verdict v);

Verdict judge(const LanguageScore& score, const PipelineConfig& cfg);

struct FilterResult {
  std::vector<Document> kept;
  StageReport report;
};

FilterResult filter_by_language(std::vector<Document> docs, const PipelineConfig& cfg, const Scorer& scorer);

}  // namespace forge::langid
