#include "forge/langid.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "forge/error.hpp"
#include "forge/hash.hpp"
#include "forge/ingest.hpp"
#include "forge/utf8.hpp"

namespace forge::langid {

namespace {

constexpr std::uint64_t kNgramSeed = 0x6c616e676964ULL;

// Calls fn(piece) for each n-gram of normalized text.
template <typename Fn>
void for_each_ngram(std::string_view normalized, int n, Fn&& fn) {
  std::vector<std::size_t> starts;
  starts.reserve(normalized.size() + 1);
  std::size_t pos = 0;
  while (pos < normalized.size()) {
    starts.push_back(pos);
    utf8::next(normalized, pos);
  }
  const std::size_t chars = starts.size();
  starts.push_back(normalized.size());
  const auto order = static_cast<std::size_t>(n);
  if (chars < order) {
    fn(normalized);
    return;
  }
  for (std::size_t i = 0; i + order <= chars; ++i) {
    fn(normalized.substr(starts[i], starts[i + order] - starts[i]));
  }
}

}  // namespace

std::vector<std::string> extract_ngrams(std::string_view text, int n) {
  if (n < 1) throw ConfigError("n-gram order must be >= 1");
  std::vector<std::string> out;
  const std::string normalized = utf8::normalize(text);
  for_each_ngram(normalized, n, [&](std::string_view g) { out.emplace_back(g); });
  return out;
}

NgramProfile train_profile(const std::string& label, const std::vector<std::string>& texts, int n) {
  if (texts.empty()) throw DataError("no training data for profile " + label);
  if (label.empty()) throw ConfigError("profile label must be non-empty");
  if (n < 1) throw ConfigError("n-gram order must be >= 1");
  NgramProfile p;
  p.label = label;
  p.n = n;
  for (const auto& text : texts) {
    const std::string normalized = utf8::normalize(text);
    if (normalized.empty()) continue;
    for_each_ngram(normalized, n, [&](std::string_view g) {
      ++p.counts[std::string(g)];
      ++p.total;
    });
  }
  if (p.total == 0) throw DataError("no training data for profile " + label);
  return p;
}

nlohmann::ordered_json to_json(const NgramProfile& profile) {
  nlohmann::ordered_json j;
  j["label"] = profile.label;
  j["n"] = profile.n;
  j["total"] = profile.total;
  j["counts"] = profile.counts;
  return j;
}

NgramProfile profile_from_json(const nlohmann::json& j) {
  try {
    NgramProfile p;
    p.label = j.at("label").get<std::string>();
    p.n = j.at("n").get<int>();
    p.counts = j.at("counts").get<std::map<std::string, std::uint64_t>>();
    for (const auto& [g, c] : p.counts) {
      if (c == 0) throw DataError("profile " + p.label + ": zero count for n-gram");
      p.total += c;
    }
    if (j.contains("total") && j.at("total").get<std::uint64_t>() != p.total) {
      throw DataError("profile " + p.label + ": total does not match counts");
    }
    if (p.label.empty() || p.n < 1) throw DataError("profile: invalid label or order");
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed profile: ") + e.what());
  }
}

NgramProfile load_profile(const std::filesystem::path& path) {
  try {
    return profile_from_json(nlohmann::json::parse(ingest::read_file(path)));
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError("malformed profile " + path.string() + ": " + e.what());
  }
}

void save_profile(const NgramProfile& profile, const std::filesystem::path& path) {
  ingest::write_file(path, to_json(profile).dump() + "\n");
}

ProfileIdentifier::ProfileIdentifier(std::vector<NgramProfile> profiles) {
  if (profiles.empty()) throw ConfigError("identifier needs at least one profile");
  std::sort(profiles.begin(), profiles.end(), [](const auto& a, const auto& b) { return a.label < b.label; });
  n_ = profiles.front().n;
  for (std::size_t i = 0; i < profiles.size(); ++i) {
    if (profiles[i].n != n_) throw ConfigError("profiles disagree on n-gram order");
    if (i > 0 && profiles[i].label == profiles[i - 1].label) throw ConfigError("duplicate profile " + profiles[i].label);
    labels_.push_back(profiles[i].label);
  }

  std::set<std::string_view> vocab;
  for (const auto& p : profiles) {
    for (const auto& [g, c] : p.counts) vocab.insert(g);
  }
  // One extra slot absorbs every n-gram no profile has seen.
  const double v = static_cast<double>(vocab.size() + 1);
  const std::size_t k = profiles.size();
  unseen_.resize(k);
  for (std::size_t i = 0; i < k; ++i) unseen_[i] = -std::log(static_cast<double>(profiles[i].total) + v);
  for (auto g : vocab) {
    std::vector<double> row(unseen_);
    for (std::size_t i = 0; i < k; ++i) {
      auto it = profiles[i].counts.find(std::string(g));
      const double c = it == profiles[i].counts.end() ? 0.0 : static_cast<double>(it->second);
      row[i] = std::log(c + 1.0) + unseen_[i];
    }
    table_.emplace(hash64(g, kNgramSeed), std::move(row));
  }
}

bool ProfileIdentifier::has_label(const std::string& label) const {
  return std::binary_search(labels_.begin(), labels_.end(), label);
}

LanguageScore ProfileIdentifier::score(std::string_view text) const {
  const std::size_t k = labels_.size();
  std::vector<double> sums(k, 0.0);
  std::size_t count = 0;
  const std::string normalized = utf8::normalize(text);
  for_each_ngram(normalized, n_, [&](std::string_view g) {
    auto it = table_.find(hash64(g, kNgramSeed));
    const std::vector<double>& row = it == table_.end() ? unseen_ : it->second;
    for (std::size_t i = 0; i < k; ++i) sums[i] += row[i];
    ++count;
  });
  std::size_t best = 0;
  for (std::size_t i = 0; i < k; ++i) {
    sums[i] /= static_cast<double>(count);
    if (sums[i] > sums[best]) best = i;
  }
  double z = 0.0;
  for (std::size_t i = 0; i < k; ++i) z += std::exp(sums[i] - sums[best]);
  return {labels_[best], 1.0 / z};
}

SidecarScores SidecarScores::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open scores " + path.string());
  std::unordered_map<std::string, LanguageScore> scores;
  std::string line;
  std::uint64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    try {
      const auto j = nlohmann::json::parse(line);
      LanguageScore s{j.at("label").get<std::string>(), j.at("confidence").get<double>()};
      if (s.label.empty() || !(s.confidence >= 0.0 && s.confidence <= 1.0)) {
        throw DataError("invalid score at " + where);
      }
      if (!scores.emplace(j.at(j.contains("doc_id") ? "doc_id" : "id").get<std::string>(), std::move(s)).second) {
        throw DataError("duplicate id in scores at " + where);
      }
    } catch (const nlohmann::json::exception& e) {
      throw DataError("malformed score record at " + where + ": " + e.what());
    }
  }
  return SidecarScores(std::move(scores));
}

LanguageScore SidecarScores::score(const Document& doc) const {
  auto it = scores_.find(doc.id);
  if (it == scores_.end()) throw DataError("no language score for document " + doc.id);
  return it->second;
}

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::keep: return "keep";
    case Verdict::wrong_label: return "wrong_label";
    case Verdict::low_confidence: return "low_confidence";
  }
  return "unknown";
}

Verdict judge(const LanguageScore& score, const PipelineConfig& cfg) {
  if (score.label != cfg.lang_label) return Verdict::wrong_label;
  if (score.confidence < cfg.lang_threshold) return Verdict::low_confidence;
  return Verdict::keep;
}

FilterResult filter_by_language(std::vector<Document> docs, const PipelineConfig& cfg, const Scorer& scorer) {
  if (!scorer.has_label(cfg.lang_label)) throw ConfigError("identifier has no profile for " + cfg.lang_label);
  FilterResult result;
  result.report.stage = Stage::langid;
  result.report.docs_in = docs.size();
  for (auto& doc : docs) {
    const Verdict v = judge(scorer.score(doc), cfg);
    if (v == Verdict::keep) {
      result.kept.push_back(std::move(doc));
    } else {
      result.report.drop(std::string(to_string(v)));
    }
  }
  result.report.docs_out = result.kept.size();
  return result;
}

}  // namespace forge::langid
