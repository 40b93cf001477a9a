#include <doctest.h>

#include <set>

#include "forge/quality.hpp"

using namespace forge;
using namespace forge::quality;

namespace {

// A line with at least three words, exactly `chars` code points, ending in `end`.
std::string line_of(std::size_t chars, char end = '.', char fill = 'a') {
  std::string s = "um dois ";
  while (s.size() + 1 < chars) s.push_back(fill);
  s.push_back(end);
  return s.substr(0, chars);
}

// Distinct per index, `chars` code points, ending in ".".
std::string unique_line(std::size_t index, std::size_t chars) {
  std::string s = "linha " + std::to_string(index) + " ";
  while (s.size() + 1 < chars) s.push_back('z');
  return s + ".";
}

std::string join(const std::vector<std::string>& lines) {
  std::string out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (i) out.push_back('\n');
    out += lines[i];
  }
  return out;
}

Document doc(const std::string& id, const std::string& text) { return {id, text, "s", std::nullopt, {}}; }

const std::string kClean =
    "O conselho municipal aprovou o novo orçamento ontem.\n"
    "A prefeitura anunciou obras na estação central da cidade.\n"
    "Os moradores celebraram a decisão durante a reunião pública.";

}  // namespace

TEST_CASE("line rules") {
  PipelineConfig cfg;
  const auto r = apply_line_filters(
      "um dois\nconfig = {x} agora\nAceite os Cookies para continuar neste site\numa linha com palavras suficientes.",
      cfg);
  REQUIRE(r.verdicts.size() == 4);
  CHECK(r.verdicts[0].reason == LineReason::too_few_words);
  CHECK(r.verdicts[1].reason == LineReason::curly_bracket);
  CHECK(r.verdicts[2].reason == LineReason::banned_substring);
  CHECK(r.verdicts[3].kept);
  CHECK(r.filtered_text == "uma linha com palavras suficientes.");
}

TEST_CASE("line rule examples one by one") {
  PipelineConfig cfg;
  CHECK(apply_line_filters("um dois", cfg).verdicts[0].reason == LineReason::too_few_words);
  CHECK(apply_line_filters("um dois três", cfg).verdicts[0].kept);
  CHECK(apply_line_filters("config = {x}", cfg).verdicts[0].reason == LineReason::curly_bracket);
  CHECK(apply_line_filters("só um } aqui", cfg).verdicts[0].reason == LineReason::curly_bracket);
  CHECK(apply_line_filters("Aceite os Cookies para continuar neste site", cfg).verdicts[0].reason ==
        LineReason::banned_substring);
  CHECK(apply_line_filters("ative o JAVASCRIPT no navegador", cfg).verdicts[0].reason == LineReason::banned_substring);
  CHECK(apply_line_filters("texto de Lorem Ipsum aqui", cfg).verdicts[0].reason == LineReason::banned_substring);
  cfg.banned_case_insensitive = false;
  CHECK(apply_line_filters("Aceite os Cookies para continuar neste site", cfg).verdicts[0].kept);
}

TEST_CASE("punctuation ratio: fewer than 12% drops") {
  PipelineConfig cfg;
  std::vector<std::string> lines(10, line_of(40, 'a'));
  lines[0] = line_of(40, '.');
  auto v = evaluate_document_rules(join(lines), cfg);
  CHECK(v.punct_line_ratio == doctest::Approx(0.10));
  CHECK(v.reason == DocReason::low_punct_ratio);

  // 3 of 25 = 0.12 exactly: not fewer than 12%, kept.
  std::vector<std::string> boundary;
  for (int i = 0; i < 25; ++i) boundary.push_back(line_of(40 + static_cast<std::size_t>(i), i < 3 ? '!' : 'a'));
  v = evaluate_document_rules(join(boundary), cfg);
  CHECK(v.punct_line_ratio == doctest::Approx(0.12));
  CHECK(v.kept);
}

TEST_CASE("every terminal punctuation mark counts") {
  PipelineConfig cfg;
  for (char c : std::string(".?!\"'")) {
    CHECK(evaluate_document_rules(line_of(40, c), cfg).punct_line_ratio == 1.0);
  }
  CHECK(evaluate_document_rules(line_of(40, ';'), cfg).punct_line_ratio == 0.0);
  // Trailing whitespace does not hide the mark.
  CHECK(evaluate_document_rules(line_of(40, '.') + "   ", cfg).punct_line_ratio == 1.0);
}

TEST_CASE("short line ratio: more than 67% drops") {
  PipelineConfig cfg;
  std::vector<std::string> lines;
  for (std::size_t i = 0; i < 100; ++i) lines.push_back(unique_line(i, i < 67 ? 25 : 45));
  auto v = evaluate_document_rules(join(lines), cfg);
  CHECK(v.short_line_ratio == doctest::Approx(0.67));
  CHECK(v.dup_line_char_ratio == 0.0);
  CHECK(v.kept);

  lines[67] = unique_line(67, 25);
  v = evaluate_document_rules(join(lines), cfg);
  CHECK(v.short_line_ratio == doctest::Approx(0.68));
  CHECK(v.reason == DocReason::too_many_short_lines);
}

TEST_CASE("short lines are measured in code points") {
  PipelineConfig cfg;
  // 29 code points but more than 30 bytes.
  const std::string accented = "ação ação ação ação ação açã.";
  REQUIRE(accented.size() > 30);
  CHECK(evaluate_document_rules(accented, cfg).short_line_ratio == 1.0);
  CHECK(evaluate_document_rules(line_of(30), cfg).short_line_ratio == 0.0);
  CHECK(evaluate_document_rules(line_of(29), cfg).short_line_ratio == 1.0);
}

TEST_CASE("duplicated line characters: over 10% drops") {
  PipelineConfig cfg;
  cfg.short_line_ratio_max = 1.0;
  const std::string same = line_of(25, '.', 'x');
  auto v = evaluate_document_rules(join({same, line_of(25, '.', 'y'), same, line_of(25, '.', 'z')}), cfg);
  CHECK(v.dup_line_char_ratio == doctest::Approx(0.50));
  CHECK(v.reason == DocReason::duplicated_lines);

  // 2 duplicated lines of 10 chars in 200 chars = 0.10 exactly: kept.
  const std::string small = line_of(10, '.', 'q');
  v = evaluate_document_rules(join({small, small, line_of(90, '.', 'r'), line_of(90, '.', 's')}), cfg);
  CHECK(v.dup_line_char_ratio == doctest::Approx(0.10));
  CHECK(v.kept);
}

TEST_CASE("reasons follow rule order") {
  PipelineConfig cfg;
  // Fails all three rules; punctuation is reported first.
  const std::string s = line_of(10, 'a');
  CHECK(evaluate_document_rules(join({s, s, s}), cfg).reason == DocReason::low_punct_ratio);
  const std::string p = line_of(10, '.');
  CHECK(evaluate_document_rules(join({p, p, p}), cfg).reason == DocReason::too_many_short_lines);
  CHECK(evaluate_document_rules("", cfg).reason == DocReason::empty_after_line_filters);
}

TEST_CASE("ratios stay within [0, 1]") {
  PipelineConfig cfg;
  for (const auto& text : {kClean, std::string("a.\n\n\nb."), line_of(5)}) {
    const auto v = evaluate_document_rules(text, cfg);
    for (double r : {v.punct_line_ratio, v.short_line_ratio, v.dup_line_char_ratio}) {
      CHECK(r >= 0.0);
      CHECK(r <= 1.0);
    }
    CHECK(v.kept == !v.reason.has_value());
  }
}

TEST_CASE("filter_quality drops, rewrites and is idempotent") {
  PipelineConfig cfg;
  const std::vector<Document> docs{
      doc("clean", kClean),
      doc("empty", "um dois\n{x}\ncookies aqui agora"),
      doc("mixed", kClean + "\nfoo bar\nAceite os cookies do site agora"),
  };
  const auto r = filter_quality(docs, cfg);
  REQUIRE(r.kept.size() == 2);
  CHECK(r.kept[0].text == kClean);
  CHECK(r.kept[1].id == "mixed");
  CHECK(r.kept[1].text == kClean);
  CHECK(r.report.drop_reasons.at("empty_after_line_filters") == 1);
  CHECK(r.verdicts.size() == 3);

  const auto again = filter_quality(r.kept, cfg);
  CHECK(again.kept == r.kept);
  CHECK(again.report.docs_out == again.report.docs_in);
}

TEST_CASE("tightening thresholds never revives a dropped document") {
  std::vector<Document> docs;
  for (int i = 0; i < 40; ++i) {
    std::vector<std::string> lines;
    for (int j = 0; j < 6; ++j) {
      const auto len = static_cast<std::size_t>(12 + (i * 7 + j * 13) % 40);
      lines.push_back(line_of(len, (i + j) % 3 ? '.' : 'a', static_cast<char>('a' + (i + j) % 4)));
    }
    docs.push_back(doc("d" + std::to_string(i), join(lines)));
  }
  PipelineConfig loose;
  loose.punct_line_ratio_min = 0.3;
  loose.short_line_ratio_max = 0.8;
  loose.dup_line_char_ratio_max = 0.3;
  PipelineConfig tight = loose;
  tight.punct_line_ratio_min = 0.6;
  tight.short_line_ratio_max = 0.4;
  tight.dup_line_char_ratio_max = 0.05;
  const auto a = filter_quality(docs, loose), b = filter_quality(docs, tight);
  std::set<std::string> kept_loose;
  for (const auto& d : a.kept) kept_loose.insert(d.id);
  for (const auto& d : b.kept) CHECK(kept_loose.count(d.id) == 1);
  CHECK(b.kept.size() < a.kept.size());
}

TEST_CASE("verdict json carries the ratios") {
  PipelineConfig cfg;
  Document d = doc("x", kClean);
  const auto v = QualityFilter(cfg).apply(d);
  const auto j = nlohmann::json::parse(verdict_json(v));
  CHECK(j.at("doc_id") == "x");
  CHECK(j.at("kept") == true);
  CHECK(j.at("punct_line_ratio") == 1.0);
}
