#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "forge/model.hpp"

namespace forge::analytics {

enum class WordClass { stopword, content, other };

std::string_view to_string(WordClass c);

struct WordToken {
  std::string text;
  WordClass cls = WordClass::other;

  friend bool operator==(const WordToken&, const WordToken&) = default;
};

struct LexicalResources {
  std::unordered_set<std::string> stopwords;
  // When present, alphabetic non-stopwords outside it count as `other`.
  std::optional<std::unordered_set<std::string>> content_lexicon;
  std::unordered_map<std::string, double> frequency_list;
  std::unordered_set<std::string> top_k_frequent;

  // Stopword file: one word per line. Frequency file: `word<TAB>count`, most
  // frequent first; the first `top_k` entries form top_k_frequent.
  static LexicalResources load(const std::filesystem::path& stopwords,
                               const std::optional<std::filesystem::path>& frequency_list = std::nullopt,
                               std::size_t top_k = 2000,
                               const std::optional<std::filesystem::path>& content_lexicon = std::nullopt);
};

// Lowercases, splits on whitespace and strips edge punctuation. A token that
// is punctuation only is kept verbatim and classed `other`.
std::vector<WordToken> word_tokens(std::string_view text, const LexicalResources& res);
std::vector<std::string> words(const std::vector<WordToken>& tokens);

double ttr(const std::vector<std::string>& tokens);

// HD-D: sum over types of P(type drawn in a sample of `sample_size`
// without replacement) / sample_size. Depends only on the frequency spectrum.
double hdd(const std::vector<std::string>& tokens, int sample_size);
// Same quantity from frequency counts.
double hdd_from_counts(const std::vector<std::uint64_t>& type_frequencies, int sample_size);

double lexical_sophistication(const std::vector<WordToken>& tokens, const LexicalResources& res);

struct AvgWordFrequency {
  double mean = 0.0;
  double coverage = 0.0;
};

AvgWordFrequency avg_word_frequency(const std::vector<std::string>& tokens, const LexicalResources& res);

// Integer counts of the three-way partition; the ratios derive from them so
// the shares sum to exactly one.
struct ClassCounts {
  std::uint64_t content = 0;
  std::uint64_t stopword = 0;
  std::uint64_t other = 0;

  std::uint64_t total() const { return content + stopword + other; }
  double lexical_density() const { return static_cast<double>(content) / static_cast<double>(total()); }
  double stopword_ratio() const { return static_cast<double>(stopword) / static_cast<double>(total()); }
  double other_ratio() const { return static_cast<double>(other) / static_cast<double>(total()); }
};

ClassCounts density_and_stopwords(const std::vector<WordToken>& tokens);

struct LogprobRecord {
  std::string doc_id;
  std::vector<double> token_logprobs;
};

// exp(-mean logprob) over every token of every record.
double perplexity_from_logprobs(const std::vector<LogprobRecord>& records);

// Streams `{id, logprobs:[...]}` lines.
class PerplexityAccumulator {
 public:
  void add(std::span<const double> logprobs, const std::string& doc_id = {});
  double perplexity() const;
  std::uint64_t tokens() const { return tokens_; }

 private:
  long double sum_ = 0.0L;
  std::uint64_t tokens_ = 0;
};

double perplexity_from_file(const std::filesystem::path& path, const std::unordered_set<std::string>* only_ids = nullptr);

// Keeps a document iff hash(id, seed) / 2^64 < fraction.
class Sampler {
 public:
  Sampler(double fraction, std::uint64_t seed);
  bool keep(std::string_view id) const;

 private:
  bool all_ = false;
  std::uint64_t threshold_ = 0;
  std::uint64_t seed_;
};

std::vector<Document> sample_fraction(const std::vector<Document>& docs, double fraction, std::uint64_t seed);

struct Quartiles {
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
};

// Linear interpolation at rank p * (n - 1).
double percentile(std::vector<double> values, double p);
Quartiles summarize(std::vector<double> values);

struct MetricSummary {
  std::string corpus;
  std::string metric;
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
  std::uint64_t n_docs = 0;
};

struct DocMetrics {
  std::string doc_id;
  std::uint64_t token_count = 0;
  std::optional<double> ttr;
  std::optional<double> hdd;
  std::optional<double> sophistication;
  std::optional<double> avg_word_freq;
  std::optional<double> avg_word_freq_coverage;
  ClassCounts classes;
};

// Metrics that are undefined for a document (too short, no content words,
// no frequency coverage) are left empty.
DocMetrics compute_doc_metrics(const Document& doc, const LexicalResources& res, int hdd_sample_size);

nlohmann::ordered_json to_json(const DocMetrics& m);
nlohmann::ordered_json to_json(const MetricSummary& s);

// Per-metric summaries over the defined values of each metric.
std::vector<MetricSummary> summarize_corpus(const std::string& corpus, const std::vector<DocMetrics>& metrics);

}  // namespace forge::analytics
