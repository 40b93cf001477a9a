#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "forge/analytics.hpp"
#include "forge/bpe.hpp"
#include "forge/error.hpp"
#include "forge/ingest.hpp"
#include "forge/langid.hpp"
#include "forge/model.hpp"
#include "forge/parallel.hpp"
#include "forge/phase_split.hpp"
#include "forge/pipeline.hpp"

namespace fs = std::filesystem;
using namespace forge;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitIo = 3;

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("forge");
  logger->set_pattern("[%l] %v");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);
  if (const char* env = std::getenv("FORGE_LOG")) {
    const std::string level(env);
    if (level == "0") {
      spdlog::set_level(spdlog::level::off);
    } else if (level == "1") {
      spdlog::set_level(spdlog::level::info);
    } else if (level == "2") {
      spdlog::set_level(spdlog::level::debug);
    } else {
      const auto parsed = spdlog::level::from_str(level);
      // from_str maps unknown names to off; only accept real names.
      if (parsed != spdlog::level::off || level == "off") spdlog::set_level(parsed);
    }
  }
}

struct Common {
  std::optional<fs::path> config;
  std::optional<std::uint64_t> seed;
  int jobs = 1;
  bool verify = false;

  PipelineConfig load() const {
    PipelineConfig cfg = config ? load_config(*config) : PipelineConfig{};
    if (seed) cfg.master_seed = *seed;
    if (verify) cfg.dedup_verify = true;
    validate_config(cfg);
    return cfg;
  }
};

bpe::Pretokenizer parse_pretokenizer(const std::string& name) {
  if (name == "whitespace") return bpe::Pretokenizer::whitespace;
  if (name == "gpt2") return bpe::Pretokenizer::gpt2;
  throw ConfigError("unknown pretokenizer " + name);
}

std::vector<std::string> read_lines(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

std::vector<std::string> read_texts(const std::vector<fs::path>& inputs, bool plain) {
  std::vector<std::string> texts;
  if (plain) {
    for (const auto& p : inputs) {
      auto lines = read_lines(p);
      texts.insert(texts.end(), std::make_move_iterator(lines.begin()), std::make_move_iterator(lines.end()));
    }
    return texts;
  }
  ingest::for_each_document(ingest::resolve_inputs(inputs), [&](Document&& d) { texts.push_back(std::move(d.text)); });
  return texts;
}

void cmd_run(const Common& common, const std::vector<fs::path>& inputs, const fs::path& out,
             const pipeline::RunOptions& opts) {
  const auto report = pipeline::run_pipeline(common.load(), inputs, out, opts);
  std::cout << pipeline::emit_report(report, pipeline::ReportFormat::markdown);
}

void print_stage(const pipeline::StageOutput& o) {
  const auto& r = o.report;
  std::cout << to_string(r.stage) << ": " << r.docs_in << " -> " << r.docs_out << " (" << r.retention_pct().str()
            << "%)\n";
}

void cmd_analyze(const Common& common, const std::vector<fs::path>& inputs, const fs::path& out,
                 const fs::path& stopwords, const std::optional<fs::path>& freq,
                 const std::optional<fs::path>& lexicon, std::size_t top_k, double fraction,
                 const std::optional<fs::path>& logprobs, std::string corpus) {
  const auto cfg = common.load();
  if (!(fraction > 0.0 && fraction <= 1.0)) throw ConfigError("--sample must be in (0, 1]");
  const auto res = analytics::LexicalResources::load(stopwords, freq, top_k, lexicon);
  const analytics::Sampler sampler(fraction, cfg.master_seed);
  if (corpus.empty()) corpus = inputs.front().filename().string();

  std::vector<analytics::DocMetrics> metrics;
  std::unordered_set<std::string> sampled_ids;
  std::uint64_t seen = 0;
  for (const auto& shard : ingest::resolve_inputs(inputs)) {
    std::vector<Document> batch;
    for (auto& d : ingest::read_shards({shard})) {
      ++seen;
      if (sampler.keep(d.id)) batch.push_back(std::move(d));
    }
    std::vector<analytics::DocMetrics> m(batch.size());
    parallel_for(batch.size(), common.jobs,
                 [&](std::size_t i) { m[i] = analytics::compute_doc_metrics(batch[i], res, cfg.hdd_sample_size); });
    for (std::size_t i = 0; i < batch.size(); ++i) {
      sampled_ids.insert(batch[i].id);
      metrics.push_back(std::move(m[i]));
    }
  }

  fs::create_directories(out);
  std::string lines;
  for (const auto& m : metrics) lines += analytics::to_json(m).dump() + "\n";
  ingest::write_file(out / "metrics.jsonl", lines);

  nlohmann::ordered_json summary;
  summary["corpus"] = corpus;
  summary["seed"] = cfg.master_seed;
  summary["sample_fraction"] = fraction;
  summary["docs_seen"] = seen;
  summary["docs_sampled"] = metrics.size();
  summary["metrics"] = nlohmann::ordered_json::array();
  for (const auto& s : analytics::summarize_corpus(corpus, metrics)) summary["metrics"].push_back(analytics::to_json(s));
  if (logprobs) summary["perplexity"] = analytics::perplexity_from_file(*logprobs, &sampled_ids);
  ingest::write_file(out / "summary.json", summary.dump(2) + "\n");
  std::cout << summary.dump(2) << "\n";
}

bpe::BpeModel load_tokenizer(const std::optional<fs::path>& dir, const std::optional<fs::path>& merges,
                             bpe::Pretokenizer mode) {
  if (dir) return bpe::load_model(*dir, mode);
  if (merges) return bpe::load_merges(*merges, mode);
  throw ConfigError("a tokenizer is required: --tokenizer <dir> or --merges <file>");
}

void cmd_split(const Common& common, const std::vector<fs::path>& inputs, const fs::path& out,
               const bpe::BpeModel& model) {
  const auto cfg = common.load();
  std::vector<phase::DocTokens> docs;
  for (const auto& shard : ingest::resolve_inputs(inputs)) {
    const auto batch = ingest::read_shards({shard});
    std::vector<phase::DocTokens> counted(batch.size());
    const auto workers = static_cast<std::size_t>(std::max(common.jobs, 1));
    const std::size_t chunk = (batch.size() + workers - 1) / workers;
    parallel_for(workers, common.jobs, [&](std::size_t w) {
      bpe::CachingEncoder enc(model);
      for (std::size_t i = w * chunk; i < std::min(batch.size(), (w + 1) * chunk); ++i) {
        counted[i] = {batch[i].id, enc.count_tokens(batch[i].text)};
      }
    });
    docs.insert(docs.end(), counted.begin(), counted.end());
  }
  const auto plan = phase::partition_phases(docs, cfg);
  for (const auto& w : plan.warnings) spdlog::warn("{}", w);
  fs::create_directories(out);
  phase::write_plan(plan, out);
  std::cout << phase::to_json(plan).dump(2) << "\n";
}

void cmd_report(const std::vector<fs::path>& inputs, const std::string& format, const std::optional<fs::path>& out) {
  pipeline::PipelineReport report;
  if (inputs.size() == 1 && fs::is_regular_file(inputs.front()) &&
      inputs.front().filename() != pipeline::kStageReportName) {
    try {
      report = pipeline::report_from_json(nlohmann::json::parse(ingest::read_file(inputs.front())));
    } catch (const nlohmann::json::parse_error& e) {
      throw DataError("malformed report " + inputs.front().string() + ": " + e.what());
    }
  } else {
    std::vector<pipeline::StageOutput> outputs;
    for (const auto& p : inputs) outputs.push_back(pipeline::read_stage_output(p));
    report = pipeline::combine_stage_outputs(outputs);
  }
  const auto fmt = format == "markdown" || format == "md" ? pipeline::ReportFormat::markdown
                                                          : pipeline::ReportFormat::json;
  const auto body = pipeline::emit_report(report, fmt);
  if (out) {
    ingest::write_file(*out, body);
  } else {
    std::cout << body;
  }
}

int run(int argc, char** argv) {
  CLI::App app{"forge: corpus curation pipeline"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", "forge 0.1.0");

  Common common;
  app.add_option("--config", common.config, "Pipeline config JSON")->check(CLI::ExistingFile);
  app.add_option("--seed", common.seed, "Master seed (overrides the config)");
  app.add_option("--jobs,-j", common.jobs, "Worker threads")->check(CLI::PositiveNumber);

  std::vector<fs::path> inputs;
  fs::path output;
  std::optional<fs::path> opt_output;
  std::vector<fs::path> profiles;
  std::optional<fs::path> scores, emit_signatures, emit_verdicts;

  auto add_io = [&](CLI::App* sub, bool need_output = true) {
    sub->add_option("inputs", inputs, "Shard files, directories or manifests")->required();
    if (need_output) sub->add_option("-o,--output", output, "Output directory")->required();
  };
  auto add_langid = [&](CLI::App* sub) {
    sub->add_option("--profile", profiles, "Language profile JSON (repeatable)");
    sub->add_option("--scores", scores, "Precomputed {id,label,confidence} scores");
  };

  auto* run_cmd = app.add_subcommand("run", "langid -> dedup -> quality with a retention report");
  add_io(run_cmd);
  add_langid(run_cmd);
  run_cmd->add_option("--emit-signatures", emit_signatures, "Write MinHash signatures");
  run_cmd->add_option("--emit-verdicts", emit_verdicts, "Write quality verdicts");
  run_cmd->add_flag("--verify", common.verify, "Confirm LSH candidates by exact Jaccard");

  auto* langid_cmd = app.add_subcommand("langid", "Language identification");
  langid_cmd->require_subcommand(1);
  langid_cmd->fallthrough();
  auto* langid_filter = langid_cmd->add_subcommand("filter", "Keep documents in the target language");
  add_io(langid_filter);
  add_langid(langid_filter);
  auto* langid_train = langid_cmd->add_subcommand("train", "Train a character n-gram profile");
  std::string label;
  int ngram = 3;
  bool plain = false;
  langid_train->add_option("inputs", inputs, "Shards, or text files with --plain")->required();
  langid_train->add_option("--label", label, "Language label")->required();
  langid_train->add_option("-n,--order", ngram, "n-gram order")->check(CLI::Range(1, 8));
  langid_train->add_flag("--plain", plain, "Inputs hold one text per line");
  langid_train->add_option("-o,--output", output, "Profile JSON path")->required();

  auto* dedup_cmd = app.add_subcommand("dedup", "MinHash LSH near-duplicate removal");
  add_io(dedup_cmd);
  dedup_cmd->add_option("--emit-signatures", emit_signatures, "Write MinHash signatures");
  dedup_cmd->add_flag("--verify", common.verify, "Confirm LSH candidates by exact Jaccard");

  auto* quality_cmd = app.add_subcommand("quality", "Line and document quality filters");
  add_io(quality_cmd);
  quality_cmd->add_option("--emit-verdicts", emit_verdicts, "Write quality verdicts");

  auto* analyze_cmd = app.add_subcommand("analyze", "Lexical metrics on a seeded sample");
  add_io(analyze_cmd);
  fs::path stopwords;
  std::optional<fs::path> freq, lexicon, logprobs;
  std::size_t top_k = 2000;
  double sample = 0.01;
  std::string corpus;
  analyze_cmd->add_option("--stopwords", stopwords, "Stopword list")->required()->check(CLI::ExistingFile);
  analyze_cmd->add_option("--freq", freq, "Frequency list (word<TAB>count)");
  analyze_cmd->add_option("--lexicon", lexicon, "Content-word lexicon");
  analyze_cmd->add_option("--top-k", top_k, "Frequent-word cutoff for sophistication");
  analyze_cmd->add_option("--sample", sample, "Sample fraction");
  analyze_cmd->add_option("--logprobs", logprobs, "Per-token log-probabilities {id,logprobs}");
  analyze_cmd->add_option("--corpus", corpus, "Corpus name in the summary");

  auto* split_cmd = app.add_subcommand("split-phases", "Partition documents into training phases");
  add_io(split_cmd);
  std::optional<fs::path> tokenizer_dir, merges;
  std::string pretok = "whitespace";
  split_cmd->add_option("--tokenizer", tokenizer_dir, "Tokenizer directory (vocab.json, merges.txt)");
  split_cmd->add_option("--merges", merges, "Pretrained merges file");
  split_cmd->add_option("--pretokenizer", pretok, "whitespace or gpt2");

  auto* tok_cmd = app.add_subcommand("tokenizer", "Byte-level BPE");
  tok_cmd->require_subcommand(1);
  tok_cmd->fallthrough();
  auto* tok_train = tok_cmd->add_subcommand("train", "Learn merges from a corpus");
  int vocab_size = bpe::kDefaultVocabSize;
  tok_train->add_option("inputs", inputs, "Shards, or text files with --plain")->required();
  tok_train->add_option("-o,--output", output, "Tokenizer directory")->required();
  tok_train->add_option("--vocab-size", vocab_size, "Target vocabulary size")->check(CLI::Range(257, 1 << 24));
  tok_train->add_option("--pretokenizer", pretok, "whitespace or gpt2");
  tok_train->add_flag("--plain", plain, "Inputs hold one text per line");
  auto* tok_encode = tok_cmd->add_subcommand("encode", "Encode documents to token ids");
  tok_encode->add_option("inputs", inputs, "Shards, directories or manifests")->required();
  tok_encode->add_option("--tokenizer", tokenizer_dir, "Tokenizer directory");
  tok_encode->add_option("--merges", merges, "Pretrained merges file");
  tok_encode->add_option("--pretokenizer", pretok, "whitespace or gpt2");
  tok_encode->add_option("-o,--output", opt_output, "Output jsonl (default stdout)");

  auto* report_cmd = app.add_subcommand("report", "Retention report from stage outputs or a report.json");
  std::string format = "markdown";
  report_cmd->add_option("inputs", inputs, "Stage directories in order, or one report.json")->required();
  report_cmd->add_option("--format", format, "json or markdown")->check(CLI::IsMember({"json", "markdown", "md"}));
  report_cmd->add_option("-o,--output", opt_output, "Output file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  setup_logging();
  pipeline::StageOptions stage_opts{common.jobs, emit_signatures, emit_verdicts};

  if (*run_cmd) {
    cmd_run(common, inputs, output, {profiles, scores, stage_opts});
  } else if (*langid_filter) {
    const auto scorer = pipeline::make_scorer(profiles, scores);
    print_stage(pipeline::run_langid_stage(common.load(), ingest::resolve_inputs(inputs), output, *scorer, stage_opts));
  } else if (*langid_train) {
    const auto profile = langid::train_profile(label, read_texts(inputs, plain), ngram);
    langid::save_profile(profile, output);
    std::cout << label << ": " << profile.counts.size() << " n-grams, " << profile.total << " total\n";
  } else if (*dedup_cmd) {
    print_stage(pipeline::run_dedup_stage(common.load(), ingest::resolve_inputs(inputs), output, stage_opts));
  } else if (*quality_cmd) {
    print_stage(pipeline::run_quality_stage(common.load(), ingest::resolve_inputs(inputs), output, stage_opts));
  } else if (*analyze_cmd) {
    cmd_analyze(common, inputs, output, stopwords, freq, lexicon, top_k, sample, logprobs, corpus);
  } else if (*split_cmd) {
    cmd_split(common, inputs, output, load_tokenizer(tokenizer_dir, merges, parse_pretokenizer(pretok)));
  } else if (*tok_train) {
    const auto cfg = common.load();
    const auto model = bpe::train_bpe(read_texts(inputs, plain), vocab_size, cfg.master_seed, parse_pretokenizer(pretok));
    bpe::save_model(model, output);
    std::cout << "vocab " << model.vocab_size() << ", merges " << model.merges().size() << "\n";
  } else if (*tok_encode) {
    const auto model = load_tokenizer(tokenizer_dir, merges, parse_pretokenizer(pretok));
    std::ofstream file;
    if (opt_output) {
      file.open(*opt_output, std::ios::binary | std::ios::trunc);
      if (!file) throw IoError("cannot open " + opt_output->string() + " for writing");
    }
    std::ostream& out = opt_output ? file : std::cout;
    ingest::for_each_document(ingest::resolve_inputs(inputs), [&](Document&& d) {
      nlohmann::ordered_json j;
      j["id"] = d.id;
      j["ids"] = model.encode(d.text);
      out << j.dump() << '\n';
    });
    if (!out) throw IoError("failed writing token ids");
  } else if (*report_cmd) {
    cmd_report(inputs, format, opt_output);
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const ConfigError& e) {
    std::cerr << "forge: " << e.what() << "\n";
    return kExitUsage;
  } catch (const IoError& e) {
    std::cerr << "forge: " << e.what() << "\n";
    return kExitIo;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "forge: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "forge: " << e.what() << "\n";
    return kExitData;
  }
}
