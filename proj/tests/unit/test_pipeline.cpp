#include <doctest.h>

#include <fstream>

#include "forge/error.hpp"
#include "forge/ingest.hpp"
#include "forge/langid.hpp"
#include "forge/pipeline.hpp"
#include "support.hpp"

using namespace forge;
using namespace forge::pipeline;
namespace fs = std::filesystem;

namespace {

std::vector<std::string> lines(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::string> out;
  for (std::string l; std::getline(in, l);) {
    if (!l.empty()) out.push_back(l);
  }
  return out;
}

// Trains fixture profiles into `dir` and returns their paths.
std::vector<fs::path> profiles(const fs::path& dir) {
  std::vector<fs::path> out;
  for (const char* label : {"por", "eng"}) {
    const auto texts = lines(test::fixtures() / "langid" / (std::string(label) + ".train.txt"));
    const auto path = dir / (std::string(label) + ".json");
    langid::save_profile(langid::train_profile(label, texts), path);
    out.push_back(path);
  }
  return out;
}

PipelineReport one_source(std::uint64_t original, std::uint64_t final) {
  PipelineReport r;
  r.per_source["src"] = {original, final};
  return r;
}

std::map<std::string, std::string> tree(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file() && e.path().filename() != "timings.json") {
      out[fs::relative(e.path(), root).string()] = ingest::read_file(e.path());
    }
  }
  return out;
}

}  // namespace

TEST_CASE("markdown rows mirror the retention table") {
  const auto md = emit_report(one_source(10, 5), ReportFormat::markdown);
  CHECK(md.find("| Dataset | # Original Documents | # Final Documents | Retention (%) |") == 0);
  CHECK(md.find("| src | 10 | 5 | 50.00 |") != std::string::npos);
  CHECK(emit_report(one_source(339889917, 3919914), ReportFormat::markdown).find("| 1.15 |") != std::string::npos);
  CHECK(emit_report(one_source(8033406, 4725016), ReportFormat::markdown).find("| 58.82 |") != std::string::npos);
}

TEST_CASE("reports serialize deterministically and round trip") {
  auto r = one_source(8033406, 4725016);
  StageReport s;
  s.stage = Stage::quality;
  s.docs_in = 9;
  s.docs_out = 4;
  s.drop_reasons = {{"low_punct_ratio", 5}};
  r.stages.push_back(s);
  r.config_hash = "abc";
  const auto a = emit_report(r, ReportFormat::json), b = emit_report(r, ReportFormat::json);
  CHECK(a == b);
  CHECK(a.find("58.82") != std::string::npos);
  const auto back = report_from_json(nlohmann::json::parse(a));
  CHECK(emit_report(back, ReportFormat::json) == a);
  CHECK(emit_report(r, ReportFormat::markdown) == emit_report(r, ReportFormat::markdown));
}

TEST_CASE("incomplete reports are json only") {
  auto r = one_source(1, 1);
  r.incomplete = true;
  r.error = "boom";
  CHECK_THROWS_AS(emit_report(r, ReportFormat::markdown), DataError);
  const auto j = nlohmann::json::parse(emit_report(r, ReportFormat::json));
  CHECK(j.at("incomplete") == true);
  CHECK(j.at("error") == "boom");
}

TEST_CASE("fixture corpus: planted drops of 10/10/10 leave 70") {
  test::TempDir dir("pipeline");
  RunOptions opts;
  opts.profiles = profiles(dir.path());
  opts.stage.emit_signatures = dir / "sigs.jsonl";
  opts.stage.emit_verdicts = dir / "verdicts.jsonl";
  const auto report = run_pipeline(PipelineConfig{}, {test::fixtures() / "mixed"}, dir / "out", opts);
  REQUIRE(report.stages.size() == 3);
  CHECK(report.stages[0].stage == Stage::langid);
  CHECK(report.stages[1].stage == Stage::dedup);
  CHECK(report.stages[2].stage == Stage::quality);
  CHECK(report.stages[0].docs_in == 100);
  CHECK(report.stages[0].docs_in - report.stages[0].docs_out == 10);
  CHECK(report.stages[1].docs_in - report.stages[1].docs_out == 10);
  CHECK(report.stages[2].docs_in - report.stages[2].docs_out == 10);
  CHECK(report.stages[2].docs_out == 70);
  CHECK(!report.incomplete);
  std::uint64_t original = 0, final = 0;
  for (const auto& [source, r] : report.per_source) {
    original += r.original;
    final += r.final;
  }
  CHECK(original == 100);
  CHECK(final == 70);

  for (const auto& d : ingest::read_shards(ingest::resolve_inputs({dir / "out" / "03-quality"}))) {
    CHECK(d.id.rfind("en-", 0) != 0);
    CHECK(d.id.rfind("lowq-", 0) != 0);
  }
  CHECK(lines(dir / "sigs.jsonl").size() == 90);
  CHECK(lines(dir / "verdicts.jsonl").size() == 80);
  CHECK(fs::exists(dir / "out" / "report.md"));
  CHECK(fs::exists(dir / "out" / "timings.json"));
  const auto j = nlohmann::json::parse(ingest::read_file(dir / "out" / "report.json"));
  CHECK(!j.contains("wall_time_per_stage"));
}

TEST_CASE("stages run one by one equal the full run") {
  test::TempDir dir("pipeline");
  const auto profs = profiles(dir.path());
  PipelineConfig cfg;
  cfg.shard_size = 7;
  cfg.master_seed = 3;
  RunOptions opts;
  opts.profiles = profs;
  opts.stage.jobs = 3;
  run_pipeline(cfg, {test::fixtures() / "mixed"}, dir / "full", opts);

  const auto scorer = make_scorer(profs, std::nullopt);
  std::vector<StageOutput> outs;
  outs.push_back(run_langid_stage(cfg, ingest::resolve_inputs({test::fixtures() / "mixed"}), dir / "step" / "01-langid", *scorer));
  outs.push_back(run_dedup_stage(cfg, ingest::resolve_inputs({dir / "step" / "01-langid"}), dir / "step" / "02-dedup"));
  outs.push_back(run_quality_stage(cfg, ingest::resolve_inputs({dir / "step" / "02-dedup"}), dir / "step" / "03-quality"));
  for (const char* stage : {"01-langid", "02-dedup", "03-quality"}) {
    CHECK(tree(dir / "full" / stage) == tree(dir / "step" / stage));
  }
  const auto combined = combine_stage_outputs(outs);
  CHECK(emit_report(combined, ReportFormat::markdown) ==
        ingest::read_file(dir / "full" / "report.md"));
  std::vector<StageOutput> reread;
  for (const char* stage : {"01-langid", "02-dedup", "03-quality"}) reread.push_back(read_stage_output(dir / "full" / stage));
  CHECK(emit_report(combine_stage_outputs(reread), ReportFormat::json) ==
        ingest::read_file(dir / "full" / "report.json"));
}

TEST_CASE("runs are byte-identical and independent of job count") {
  test::TempDir dir("pipeline");
  ::setenv("SOURCE_DATE_EPOCH", "1700000000", 1);
  RunOptions opts;
  opts.profiles = profiles(dir.path());
  run_pipeline(PipelineConfig{}, {test::fixtures() / "mixed"}, dir / "a", opts);
  opts.stage.jobs = 4;
  run_pipeline(PipelineConfig{}, {test::fixtures() / "mixed"}, dir / "b", opts);
  ::unsetenv("SOURCE_DATE_EPOCH");
  CHECK(tree(dir / "a") == tree(dir / "b"));
}

TEST_CASE("sidecar scores bypass the built-in identifier") {
  test::TempDir dir("pipeline");
  {
    std::ofstream out(dir / "scores.jsonl");
    for (const auto& d : ingest::read_shards(ingest::resolve_inputs({test::fixtures() / "mixed"}))) {
      out << R"({"id":")" << d.id << R"(","label":"por","confidence":)" << (d.id.rfind("en-", 0) == 0 ? "0.5" : "0.95")
          << "}\n";
    }
  }
  RunOptions opts;
  opts.scores = dir / "scores.jsonl";
  const auto r = run_pipeline(PipelineConfig{}, {test::fixtures() / "mixed"}, dir / "out", opts);
  CHECK(r.stages[0].drop_reasons.at("low_confidence") == 10);
}

TEST_CASE("a failing stage leaves an incomplete report") {
  test::TempDir dir("pipeline");
  {
    std::ofstream bad(dir / "bad.jsonl");
    bad << R"({"id":"a","text":"uma frase qualquer","source":"s"})" "\n" << "{broken\n";
  }
  RunOptions opts;
  opts.profiles = profiles(dir.path());
  CHECK_THROWS_AS(run_pipeline(PipelineConfig{}, {dir / "bad.jsonl"}, dir / "out", opts), DataError);
  const auto j = nlohmann::json::parse(ingest::read_file(dir / "out" / "report.json"));
  CHECK(j.at("incomplete") == true);
  CHECK(!fs::exists(dir / "out" / "report.md"));
}

TEST_CASE("a profile set without the target label is a config error") {
  test::TempDir dir("pipeline");
  const auto profs = profiles(dir.path());
  RunOptions opts;
  opts.profiles = {profs[1]};
  CHECK_THROWS_AS(run_pipeline(PipelineConfig{}, {test::fixtures() / "mixed"}, dir / "out", opts), ConfigError);
}
