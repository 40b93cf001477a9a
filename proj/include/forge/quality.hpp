#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "forge/model.hpp"

namespace forge::quality {

enum class LineReason { too_few_words, curly_bracket, banned_substring };
enum class DocReason { empty_after_line_filters, low_punct_ratio, too_many_short_lines, duplicated_lines };

std::string_view to_string(LineReason r);
std::string_view to_string(DocReason r);

struct LineVerdict {
  std::string line;
  bool kept = true;
  std::optional<LineReason> reason;
};

struct DocVerdict {
  std::string doc_id;
  bool kept = false;
  double punct_line_ratio = 0.0;
  double short_line_ratio = 0.0;
  double dup_line_char_ratio = 0.0;
  std::optional<DocReason> reason;
};

struct LineFilterResult {
  std::string filtered_text;
  std::vector<LineVerdict> verdicts;
};

// C4-style line rules: drop lines with too few words, with curly brackets,
// or containing a banned substring. Survivors are rejoined with LF.
LineFilterResult apply_line_filters(std::string_view text, const PipelineConfig& cfg);

// FineWeb-style document rules over the already line-filtered text.
DocVerdict evaluate_document_rules(std::string_view filtered_text, const PipelineConfig& cfg);

struct QualityResult {
  std::vector<Document> kept;
  StageReport report;
  std::vector<DocVerdict> verdicts;
};

// Replaces each text by its line-filtered form and keeps documents whose
// verdict passes.
QualityResult filter_quality(std::vector<Document> docs, const PipelineConfig& cfg);

// Single-document step shared with the streaming pipeline.
class QualityFilter {
 public:
  explicit QualityFilter(const PipelineConfig& cfg);

  // Rewrites doc.text to its line-filtered form and returns the verdict.
  DocVerdict apply(Document& doc) const;

 private:
  PipelineConfig cfg_;
  std::vector<std::string> banned_;
};

std::string verdict_json(const DocVerdict& v);

}  // namespace forge::quality
