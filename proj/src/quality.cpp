#include "forge/quality.hpp"

#include <unordered_map>

#include "forge/utf8.hpp"

namespace forge::quality {

namespace {

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  if (text.empty()) return lines;
  std::size_t start = 0;
  for (;;) {
    const std::size_t nl = text.find('\n', start);
    if (nl == std::string_view::npos) {
      lines.push_back(text.substr(start));
      return lines;
    }
    lines.push_back(text.substr(start, nl - start));
    start = nl + 1;
  }
}

std::size_t count_words(std::string_view line) { return utf8::split_whitespace(line).size(); }

std::optional<LineReason> judge_line(std::string_view line, const PipelineConfig& cfg,
                                     const std::vector<std::string>& banned) {
  if (count_words(line) < static_cast<std::size_t>(cfg.min_words_per_line)) return LineReason::too_few_words;
  if (line.find_first_of("{}") != std::string_view::npos) return LineReason::curly_bracket;
  if (!banned.empty()) {
    const std::string haystack = cfg.banned_case_insensitive ? utf8::lower(line) : std::string(line);
    for (const auto& needle : banned) {
      if (haystack.find(needle) != std::string::npos) return LineReason::banned_substring;
    }
  }
  return std::nullopt;
}

std::vector<std::string> prepared_banned(const PipelineConfig& cfg) {
  std::vector<std::string> out;
  for (const auto& s : cfg.banned_substrings) out.push_back(cfg.banned_case_insensitive ? utf8::lower(s) : s);
  return out;
}

LineFilterResult line_filters(std::string_view text, const PipelineConfig& cfg, const std::vector<std::string>& banned,
                              bool keep_verdicts) {
  LineFilterResult out;
  out.filtered_text.reserve(text.size());
  bool first = true;
  for (auto line : split_lines(text)) {
    const auto reason = judge_line(line, cfg, banned);
    if (!reason) {
      if (!first) out.filtered_text.push_back('\n');
      out.filtered_text.append(line);
      first = false;
    }
    if (keep_verdicts) out.verdicts.push_back({std::string(line), !reason, reason});
  }
  return out;
}

}  // namespace

std::string_view to_string(LineReason r) {
  switch (r) {
    case LineReason::too_few_words: return "too_few_words";
    case LineReason::curly_bracket: return "curly_bracket";
    case LineReason::banned_substring: return "banned_substring";
  }
  return "unknown";
}

std::string_view to_string(DocReason r) {
  switch (r) {
    case DocReason::empty_after_line_filters: return "empty_after_line_filters";
    case DocReason::low_punct_ratio: return "low_punct_ratio";
    case DocReason::too_many_short_lines: return "too_many_short_lines";
    case DocReason::duplicated_lines: return "duplicated_lines";
  }
  return "unknown";
}

LineFilterResult apply_line_filters(std::string_view text, const PipelineConfig& cfg) {
  return line_filters(text, cfg, prepared_banned(cfg), true);
}

DocVerdict evaluate_document_rules(std::string_view filtered_text, const PipelineConfig& cfg) {
  DocVerdict v;
  const auto lines = split_lines(filtered_text);
  if (lines.empty()) {
    v.reason = DocReason::empty_after_line_filters;
    return v;
  }

  std::size_t punct = 0;
  std::size_t short_lines = 0;
  std::size_t total_chars = 0;
  std::unordered_map<std::string_view, std::size_t> occurrences;
  std::vector<std::size_t> chars(lines.size());
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto trimmed = utf8::rtrim(lines[i]);
    if (!trimmed.empty() && cfg.terminal_punctuation.find(trimmed.back()) != std::string::npos) ++punct;
    chars[i] = utf8::length(lines[i]);
    if (chars[i] < static_cast<std::size_t>(cfg.short_line_char_limit)) ++short_lines;
    total_chars += chars[i];
    ++occurrences[trimmed];
  }
  std::size_t dup_chars = 0;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (occurrences[utf8::rtrim(lines[i])] >= 2) dup_chars += chars[i];
  }

  const auto n = static_cast<double>(lines.size());
  v.punct_line_ratio = static_cast<double>(punct) / n;
  v.short_line_ratio = static_cast<double>(short_lines) / n;
  v.dup_line_char_ratio = total_chars == 0 ? 0.0 : static_cast<double>(dup_chars) / static_cast<double>(total_chars);

  // "fewer than" drops strictly below; "more than" / "over" strictly above.
  if (v.punct_line_ratio < cfg.punct_line_ratio_min) {
    v.reason = DocReason::low_punct_ratio;
  } else if (v.short_line_ratio > cfg.short_line_ratio_max) {
    v.reason = DocReason::too_many_short_lines;
  } else if (v.dup_line_char_ratio > cfg.dup_line_char_ratio_max) {
    v.reason = DocReason::duplicated_lines;
  }
  v.kept = !v.reason;
  return v;
}

QualityFilter::QualityFilter(const PipelineConfig& cfg) : cfg_(cfg), banned_(prepared_banned(cfg)) {}

DocVerdict QualityFilter::apply(Document& doc) const {
  auto filtered = line_filters(doc.text, cfg_, banned_, false);
  DocVerdict v = evaluate_document_rules(filtered.filtered_text, cfg_);
  v.doc_id = doc.id;
  doc.text = std::move(filtered.filtered_text);
  return v;
}

QualityResult filter_quality(std::vector<Document> docs, const PipelineConfig& cfg) {
  QualityResult result;
  result.report.stage = Stage::quality;
  result.report.docs_in = docs.size();
  const QualityFilter filter(cfg);
  for (auto& doc : docs) {
    DocVerdict v = filter.apply(doc);
    if (v.kept) {
      result.kept.push_back(std::move(doc));
    } else {
      result.report.drop(std::string(to_string(*v.reason)));
    }
    result.verdicts.push_back(std::move(v));
  }
  result.report.docs_out = result.kept.size();
  return result;
}

std::string verdict_json(const DocVerdict& v) {
  nlohmann::ordered_json j;
  j["doc_id"] = v.doc_id;
  j["kept"] = v.kept;
  j["punct_line_ratio"] = v.punct_line_ratio;
  j["short_line_ratio"] = v.short_line_ratio;
  j["dup_line_char_ratio"] = v.dup_line_char_ratio;
  j["reason"] = v.reason ? nlohmann::ordered_json(std::string(to_string(*v.reason))) : nlohmann::ordered_json(nullptr);
  return j.dump();
}

}  // namespace forge::quality
