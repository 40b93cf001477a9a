#include "forge/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include "forge/error.hpp"
#include "forge/hash.hpp"
#include "forge/utf8.hpp"

namespace forge::analytics {

namespace {

std::string_view strip_punct(std::string_view word) {
  std::size_t begin = 0;
  while (begin < word.size()) {
    std::size_t next = begin;
    if (!utf8::is_punct(utf8::next(word, next))) break;
    begin = next;
  }
  std::size_t end = word.size();
  while (end > begin) {
    std::size_t start = end - 1;
    while (start > begin && (static_cast<unsigned char>(word[start]) & 0xC0) == 0x80) --start;
    std::size_t pos = start;
    if (!utf8::is_punct(utf8::next(word, pos))) break;
    end = start;
  }
  return word.substr(begin, end - begin);
}

// Letters, with hyphens and apostrophes allowed inside ("guarda-chuva").
bool is_alphabetic_word(std::string_view word) {
  bool any_letter = false;
  std::size_t pos = 0;
  while (pos < word.size()) {
    const char32_t cp = utf8::next(word, pos);
    if (utf8::is_alpha(cp)) {
      any_letter = true;
    } else if (cp != U'-' && cp != U'\'' && cp != U'’') {
      return false;
    }
  }
  return any_letter;
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return lines;
}

}  // namespace

std::string_view to_string(WordClass c) {
  switch (c) {
    case WordClass::stopword: return "stopword";
    case WordClass::content: return "content";
    case WordClass::other: return "other";
  }
  return "unknown";
}

LexicalResources LexicalResources::load(const std::filesystem::path& stopwords,
                                        const std::optional<std::filesystem::path>& frequency_list, std::size_t top_k,
                                        const std::optional<std::filesystem::path>& content_lexicon) {
  LexicalResources res;
  for (const auto& line : read_lines(stopwords)) {
    const std::string w = utf8::lower(utf8::rtrim(line));
    if (!w.empty()) res.stopwords.insert(w);
  }
  if (frequency_list) {
    std::size_t rank = 0;
    std::size_t line_no = 0;
    for (const auto& line : read_lines(*frequency_list)) {
      ++line_no;
      if (line.empty()) continue;
      const auto tab = line.find('\t');
      if (tab == std::string::npos) {
        throw DataError("frequency list " + frequency_list->string() + ":" + std::to_string(line_no) + ": expected word<TAB>count");
      }
      const std::string w = utf8::lower(line.substr(0, tab));
      double count = 0.0;
      try {
        count = std::stod(line.substr(tab + 1));
      } catch (const std::exception&) {
        throw DataError("frequency list " + frequency_list->string() + ":" + std::to_string(line_no) + ": bad count");
      }
      if (!(count >= 0.0)) throw DataError("frequency list: negative count at line " + std::to_string(line_no));
      if (res.frequency_list.emplace(w, count).second && rank++ < top_k) res.top_k_frequent.insert(w);
    }
  }
  if (content_lexicon) {
    res.content_lexicon.emplace();
    for (const auto& line : read_lines(*content_lexicon)) {
      const std::string w = utf8::lower(utf8::rtrim(line));
      if (!w.empty()) res.content_lexicon->insert(w);
    }
  }
  return res;
}

std::vector<WordToken> word_tokens(std::string_view text, const LexicalResources& res) {
  std::vector<WordToken> out;
  const std::string lowered = utf8::lower(text);
  for (auto raw : utf8::split_whitespace(lowered)) {
    const auto stripped = strip_punct(raw);
    if (stripped.empty()) {
      out.push_back({std::string(raw), WordClass::other});
      continue;
    }
    WordToken tok{std::string(stripped), WordClass::other};
    if (res.stopwords.count(tok.text)) {
      tok.cls = WordClass::stopword;
    } else if (is_alphabetic_word(tok.text) && (!res.content_lexicon || res.content_lexicon->count(tok.text))) {
      tok.cls = WordClass::content;
    }
    out.push_back(std::move(tok));
  }
  return out;
}

std::vector<std::string> words(const std::vector<WordToken>& tokens) {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(t.text);
  return out;
}

double ttr(const std::vector<std::string>& tokens) {
  if (tokens.empty()) throw DataError("no tokens");
  const std::unordered_set<std::string_view> types(tokens.begin(), tokens.end());
  return static_cast<double>(types.size()) / static_cast<double>(tokens.size());
}

double hdd_from_counts(const std::vector<std::uint64_t>& type_frequencies, int sample_size) {
  if (sample_size < 1) throw ConfigError("HD-D sample size must be >= 1");
  std::uint64_t n = 0;
  std::map<std::uint64_t, std::uint64_t> spectrum;  // frequency -> number of types
  for (auto f : type_frequencies) {
    if (f == 0) continue;
    n += f;
    ++spectrum[f];
  }
  const auto s = static_cast<std::uint64_t>(sample_size);
  if (n < s) throw DataError("text shorter than HD-D sample");

  double total = 0.0;
  for (const auto& [f, types] : spectrum) {
    // P(type absent) = C(n - f, s) / C(n, s) = prod_i (n - f - i) / (n - i).
    double absent = 0.0;
    if (n - f >= s) {
      absent = 1.0;
      for (std::uint64_t i = 0; i < s; ++i) {
        absent *= static_cast<double>(n - f - i) / static_cast<double>(n - i);
      }
    }
    total += static_cast<double>(types) * (1.0 - absent) / static_cast<double>(s);
  }
  return total;
}

double hdd(const std::vector<std::string>& tokens, int sample_size) {
  std::unordered_map<std::string_view, std::uint64_t> counts;
  for (const auto& t : tokens) ++counts[t];
  std::vector<std::uint64_t> freqs;
  freqs.reserve(counts.size());
  for (const auto& [t, c] : counts) freqs.push_back(c);
  return hdd_from_counts(freqs, sample_size);
}

double lexical_sophistication(const std::vector<WordToken>& tokens, const LexicalResources& res) {
  std::uint64_t content = 0;
  std::uint64_t rare = 0;
  for (const auto& t : tokens) {
    if (t.cls != WordClass::content) continue;
    ++content;
    rare += !res.top_k_frequent.count(t.text);
  }
  if (content == 0) throw DataError("no content tokens");
  return static_cast<double>(rare) / static_cast<double>(content);
}

AvgWordFrequency avg_word_frequency(const std::vector<std::string>& tokens, const LexicalResources& res) {
  if (tokens.empty()) throw DataError("no tokens");
  double sum = 0.0;
  std::uint64_t found = 0;
  for (const auto& t : tokens) {
    auto it = res.frequency_list.find(t);
    if (it == res.frequency_list.end()) continue;
    sum += it->second;
    ++found;
  }
  if (found == 0) throw DataError("no coverage");
  return {sum / static_cast<double>(found), static_cast<double>(found) / static_cast<double>(tokens.size())};
}

ClassCounts density_and_stopwords(const std::vector<WordToken>& tokens) {
  if (tokens.empty()) throw DataError("no tokens");
  ClassCounts c;
  for (const auto& t : tokens) {
    switch (t.cls) {
      case WordClass::content: ++c.content; break;
      case WordClass::stopword: ++c.stopword; break;
      case WordClass::other: ++c.other; break;
    }
  }
  return c;
}

void PerplexityAccumulator::add(std::span<const double> logprobs, const std::string& doc_id) {
  for (double lp : logprobs) {
    if (!std::isfinite(lp) || lp > 0.0) {
      throw DataError("invalid log-probability " + std::to_string(lp) + (doc_id.empty() ? "" : " in " + doc_id));
    }
    sum_ += lp;
  }
  tokens_ += logprobs.size();
}

double PerplexityAccumulator::perplexity() const {
  if (tokens_ == 0) throw DataError("no tokens for perplexity");
  return static_cast<double>(std::exp(-sum_ / static_cast<long double>(tokens_)));
}

double perplexity_from_logprobs(const std::vector<LogprobRecord>& records) {
  PerplexityAccumulator acc;
  for (const auto& r : records) acc.add(r.token_logprobs, r.doc_id);
  return acc.perplexity();
}

double perplexity_from_file(const std::filesystem::path& path, const std::unordered_set<std::string>* only_ids) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  PerplexityAccumulator acc;
  std::string line;
  std::uint64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      const auto id = j.at(j.contains("doc_id") ? "doc_id" : "id").get<std::string>();
      if (only_ids && !only_ids->count(id)) continue;
      const auto lps = j.at("logprobs").get<std::vector<double>>();
      acc.add(lps, id);
    } catch (const nlohmann::json::exception& e) {
      throw DataError("malformed logprob record at " + path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return acc.perplexity();
}

Sampler::Sampler(double fraction, std::uint64_t seed) : seed_(seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw ConfigError("sample fraction must be in (0, 1]");
  if (fraction >= 1.0) {
    all_ = true;
  } else {
    threshold_ = static_cast<std::uint64_t>(std::ldexp(static_cast<long double>(fraction), 64));
  }
}

bool Sampler::keep(std::string_view id) const { return all_ || hash64(id, seed_) < threshold_; }

std::vector<Document> sample_fraction(const std::vector<Document>& docs, double fraction, std::uint64_t seed) {
  const Sampler sampler(fraction, seed);
  std::vector<Document> out;
  for (const auto& d : docs) {
    if (sampler.keep(d.id)) out.push_back(d);
  }
  return out;
}

double percentile(std::vector<double> values, double p) {
  if (values.empty()) throw DataError("no values to summarize");
  std::sort(values.begin(), values.end());
  const double rank = p * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(rank));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = rank - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

Quartiles summarize(std::vector<double> values) {
  if (values.empty()) throw DataError("no values to summarize");
  std::sort(values.begin(), values.end());
  return {percentile(values, 0.5), percentile(values, 0.25), percentile(values, 0.75)};
}

DocMetrics compute_doc_metrics(const Document& doc, const LexicalResources& res, int hdd_sample_size) {
  DocMetrics m;
  m.doc_id = doc.id;
  const auto tokens = word_tokens(doc.text, res);
  m.token_count = tokens.size();
  if (tokens.empty()) return m;
  const auto ws = words(tokens);
  m.ttr = ttr(ws);
  if (ws.size() >= static_cast<std::size_t>(hdd_sample_size)) m.hdd = hdd(ws, hdd_sample_size);
  m.classes = density_and_stopwords(tokens);
  if (m.classes.content > 0) m.sophistication = lexical_sophistication(tokens, res);
  if (!res.frequency_list.empty()) {
    const bool covered = std::any_of(ws.begin(), ws.end(), [&](const auto& w) { return res.frequency_list.count(w); });
    if (covered) {
      const auto f = avg_word_frequency(ws, res);
      m.avg_word_freq = f.mean;
      m.avg_word_freq_coverage = f.coverage;
    }
  }
  return m;
}

nlohmann::ordered_json to_json(const DocMetrics& m) {
  auto opt = [](const std::optional<double>& v) { return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr); };
  nlohmann::ordered_json j;
  j["doc_id"] = m.doc_id;
  j["token_count"] = m.token_count;
  j["ttr"] = opt(m.ttr);
  j["hdd"] = opt(m.hdd);
  j["sophistication"] = opt(m.sophistication);
  j["avg_word_freq"] = opt(m.avg_word_freq);
  j["avg_word_freq_coverage"] = opt(m.avg_word_freq_coverage);
  const bool any = m.classes.total() > 0;
  j["lexical_density"] = any ? nlohmann::ordered_json(m.classes.lexical_density()) : nlohmann::ordered_json(nullptr);
  j["stopword_ratio"] = any ? nlohmann::ordered_json(m.classes.stopword_ratio()) : nlohmann::ordered_json(nullptr);
  j["other_ratio"] = any ? nlohmann::ordered_json(m.classes.other_ratio()) : nlohmann::ordered_json(nullptr);
  j["class_counts"] = {{"content", m.classes.content}, {"stopword", m.classes.stopword}, {"other", m.classes.other}};
  return j;
}

nlohmann::ordered_json to_json(const MetricSummary& s) {
  nlohmann::ordered_json j;
  j["corpus"] = s.corpus;
  j["metric"] = s.metric;
  j["median"] = s.median;
  j["q1"] = s.q1;
  j["q3"] = s.q3;
  j["n_docs"] = s.n_docs;
  return j;
}

std::vector<MetricSummary> summarize_corpus(const std::string& corpus, const std::vector<DocMetrics>& metrics) {
  std::vector<std::pair<std::string, std::vector<double>>> columns{
      {"ttr", {}}, {"hdd", {}}, {"sophistication", {}}, {"avg_word_freq", {}},
      {"lexical_density", {}}, {"stopword_ratio", {}}, {"other_ratio", {}}, {"token_count", {}}};
  auto push = [](std::vector<double>& col, const std::optional<double>& v) {
    if (v) col.push_back(*v);
  };
  for (const auto& m : metrics) {
    push(columns[0].second, m.ttr);
    push(columns[1].second, m.hdd);
    push(columns[2].second, m.sophistication);
    push(columns[3].second, m.avg_word_freq);
    if (m.classes.total() > 0) {
      columns[4].second.push_back(m.classes.lexical_density());
      columns[5].second.push_back(m.classes.stopword_ratio());
      columns[6].second.push_back(m.classes.other_ratio());
    }
    columns[7].second.push_back(static_cast<double>(m.token_count));
  }
  std::vector<MetricSummary> out;
  for (auto& [name, values] : columns) {
    if (values.empty()) continue;
    const auto q = summarize(values);
    out.push_back({corpus, name, q.median, q.q1, q.q3, values.size()});
  }
  return out;
}

}  // namespace forge::analytics
