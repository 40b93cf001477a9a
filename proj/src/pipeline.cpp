#include "forge/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>

#include <spdlog/spdlog.h>

#include "forge/dedup.hpp"
#include "forge/error.hpp"
#include "forge/hash.hpp"
#include "forge/ingest.hpp"
#include "forge/parallel.hpp"
#include "forge/quality.hpp"

namespace forge::pipeline {

namespace {

std::ofstream open_sidecar(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  return out;
}

void finish_stage(StageOutput& out, ingest::ShardWriter& writer, const fs::path& output_dir) {
  writer.finish();
  out.report.check();
  ingest::write_file(output_dir / kStageReportName, to_json(out).dump(2) + "\n");
  spdlog::info("{}: {} -> {} docs ({}%)", to_string(out.report.stage), out.report.docs_in, out.report.docs_out,
               out.report.retention_pct().str());
}

struct Decision {
  std::string reason;  // empty keeps the document
  std::string sidecar;
};

// Streams shards through a per-document decision computed in parallel;
// writes, counts and sidecar lines follow input order.
template <typename Decide>
StageOutput filter_stage(Stage stage, const PipelineConfig& cfg, std::vector<fs::path> inputs,
                         const fs::path& output_dir, int jobs, std::ostream* sidecar, Decide&& decide) {
  StageOutput out;
  out.report.stage = stage;
  out.config_hash = config_hash(cfg);
  ingest::ShardWriter writer(output_dir, cfg.shard_size, std::string(to_string(stage)), out.config_hash);
  std::sort(inputs.begin(), inputs.end());
  for (const auto& shard : inputs) {
    auto docs = ingest::read_shards({shard});
    std::vector<Decision> decisions(docs.size());
    parallel_for(docs.size(), jobs, [&](std::size_t i) { decisions[i] = decide(docs[i]); });
    for (std::size_t i = 0; i < docs.size(); ++i) {
      ++out.report.docs_in;
      ++out.per_source_in[docs[i].source];
      if (sidecar && !decisions[i].sidecar.empty()) *sidecar << decisions[i].sidecar << '\n';
      if (decisions[i].reason.empty()) {
        writer.add(docs[i]);
        ++out.report.docs_out;
        ++out.per_source_out[docs[i].source];
      } else {
        out.report.drop(decisions[i].reason);
      }
    }
  }
  if (sidecar && !*sidecar) throw IoError("failed writing sidecar output");
  finish_stage(out, writer, output_dir);
  return out;
}

}  // namespace

nlohmann::ordered_json to_json(const StageOutput& out) {
  nlohmann::ordered_json j;
  j["report"] = to_json(out.report);
  j["per_source_in"] = out.per_source_in;
  j["per_source_out"] = out.per_source_out;
  j["config_hash"] = out.config_hash;
  return j;
}

StageOutput stage_output_from_json(const nlohmann::json& j) {
  try {
    StageOutput out;
    out.report = stage_report_from_json(j.at("report"));
    out.per_source_in = j.at("per_source_in").get<std::map<std::string, std::uint64_t>>();
    out.per_source_out = j.at("per_source_out").get<std::map<std::string, std::uint64_t>>();
    out.config_hash = j.value("config_hash", "");
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed stage report: ") + e.what());
  }
}

StageOutput read_stage_output(const fs::path& dir) {
  const fs::path path = fs::is_directory(dir) ? dir / kStageReportName : dir;
  try {
    return stage_output_from_json(nlohmann::json::parse(ingest::read_file(path)));
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError("malformed " + path.string() + ": " + e.what());
  }
}

StageOutput run_langid_stage(const PipelineConfig& cfg, const std::vector<fs::path>& inputs, const fs::path& output_dir,
                             const langid::Scorer& scorer, const StageOptions& opts) {
  validate_config(cfg);
  if (!scorer.has_label(cfg.lang_label)) throw ConfigError("identifier has no profile for " + cfg.lang_label);
  return filter_stage(Stage::langid, cfg, inputs, output_dir, opts.jobs, nullptr, [&](const Document& doc) {
    const auto v = langid::judge(scorer.score(doc), cfg);
    return Decision{v == langid::Verdict::keep ? std::string() : std::string(langid::to_string(v)), {}};
  });
}

StageOutput run_quality_stage(const PipelineConfig& cfg, const std::vector<fs::path>& inputs, const fs::path& output_dir,
                              const StageOptions& opts) {
  validate_config(cfg);
  const quality::QualityFilter filter(cfg);
  std::optional<std::ofstream> verdicts;
  if (opts.emit_verdicts) verdicts = open_sidecar(*opts.emit_verdicts);
  return filter_stage(Stage::quality, cfg, inputs, output_dir, opts.jobs, verdicts ? &*verdicts : nullptr,
                      [&](Document& doc) {
                        const auto v = filter.apply(doc);
                        return Decision{v.kept ? std::string() : std::string(quality::to_string(*v.reason)),
                                        verdicts ? quality::verdict_json(v) : std::string()};
                      });
}

StageOutput run_dedup_stage(const PipelineConfig& cfg, const std::vector<fs::path>& inputs, const fs::path& output_dir,
                            const StageOptions& opts) {
  validate_config(cfg);
  const dedup::HashFamily family(cfg.master_seed, cfg.minhash_num_hashes);
  const std::uint64_t seed = dedup::shingle_seed(cfg.master_seed);
  std::optional<std::ofstream> sigs_out;
  if (opts.emit_signatures) sigs_out = open_sidecar(*opts.emit_signatures);

  std::vector<fs::path> sorted = inputs;
  std::sort(sorted.begin(), sorted.end());

  // Map: per-document band keys. Reduce: band index + union-find.
  dedup::BandIndex index(cfg.minhash_num_bands, cfg.dedup_verify, cfg.dedup_verify_threshold);
  for (const auto& shard : sorted) {
    const auto docs = ingest::read_shards({shard});
    std::vector<dedup::MinHashSignature> sigs(docs.size());
    std::vector<std::vector<std::uint64_t>> shingles(docs.size());
    parallel_for(docs.size(), opts.jobs, [&](std::size_t i) {
      shingles[i] = dedup::shingle_hashes(docs[i].text, cfg.shingle_size, seed);
      if (shingles[i].empty()) return;
      sigs[i] = dedup::minhash_signature(dedup::ShingleSet{docs[i].id, shingles[i]}, family, cfg.minhash_num_bands);
      if (!cfg.dedup_verify) shingles[i] = {};
    });
    for (std::size_t i = 0; i < docs.size(); ++i) {
      if (sigs[i].components.empty()) continue;
      if (sigs_out) *sigs_out << dedup::signature_json(sigs[i]) << '\n';
      index.add(docs[i].id, sigs[i].bands, std::move(shingles[i]));
    }
  }
  spdlog::debug("dedup: band index holds {} docs, ~{} bytes", index.size(), index.memory_bytes());
  const auto dropped = index.resolve().dropped();

  return filter_stage(Stage::dedup, cfg, sorted, output_dir, opts.jobs, nullptr, [&](const Document& doc) {
    return Decision{dropped.count(doc.id) ? "near_duplicate" : "", {}};
  });
}

PipelineReport combine_stage_outputs(const std::vector<StageOutput>& outputs) {
  PipelineReport report;
  if (outputs.empty()) return report;
  for (const auto& o : outputs) report.stages.push_back(o.report);
  report.config_hash = outputs.front().config_hash;
  for (const auto& [source, n] : outputs.front().per_source_in) report.per_source[source].original = n;
  for (const auto& [source, n] : outputs.back().per_source_out) report.per_source[source].final = n;
  return report;
}

std::string emit_report(const PipelineReport& report, ReportFormat format) {
  if (format == ReportFormat::markdown) {
    if (report.incomplete) throw DataError("cannot render an incomplete report as markdown");
    std::string md = "| Dataset | # Original Documents | # Final Documents | Retention (%) |\n";
    md += "|---|---|---|---|\n";
    for (const auto& [source, r] : report.per_source) {
      md += "| " + source + " | " + std::to_string(r.original) + " | " + std::to_string(r.final) + " | " +
            r.retention().str() + " |\n";
    }
    if (!report.stages.empty()) {
      md += "\n| Stage | Docs in | Docs out | Retention (%) | Drops |\n";
      md += "|---|---|---|---|---|\n";
      for (const auto& s : report.stages) {
        std::string drops;
        for (const auto& [reason, n] : s.drop_reasons) {
          if (!drops.empty()) drops += ", ";
          drops += reason + "=" + std::to_string(n);
        }
        md += "| " + std::string(to_string(s.stage)) + " | " + std::to_string(s.docs_in) + " | " +
              std::to_string(s.docs_out) + " | " + s.retention_pct().str() + " | " + drops + " |\n";
      }
    }
    return md;
  }

  nlohmann::ordered_json j;
  j["incomplete"] = report.incomplete;
  if (report.incomplete) j["error"] = report.error;
  j["config_hash"] = report.config_hash;
  j["stages"] = nlohmann::ordered_json::array();
  for (const auto& s : report.stages) j["stages"].push_back(to_json(s));
  j["per_source"] = nlohmann::ordered_json::array();
  for (const auto& [source, r] : report.per_source) {
    j["per_source"].push_back({{"source", source},
                               {"original", r.original},
                               {"final", r.final},
                               {"retention_pct", nlohmann::ordered_json::parse(r.retention().str())}});
  }
  return j.dump(2) + "\n";
}

PipelineReport report_from_json(const nlohmann::json& j) {
  try {
    PipelineReport report;
    report.incomplete = j.value("incomplete", false);
    report.error = j.value("error", "");
    report.config_hash = j.value("config_hash", "");
    if (j.contains("stages")) {
      for (const auto& s : j.at("stages")) report.stages.push_back(stage_report_from_json(s));
    }
    if (j.contains("per_source")) {
      for (const auto& row : j.at("per_source")) {
        auto& r = report.per_source[row.at("source").get<std::string>()];
        r.original = row.at("original").get<std::uint64_t>();
        r.final = row.at("final").get<std::uint64_t>();
        if (r.final > r.original) throw DataError("per_source final exceeds original");
      }
    }
    return report;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed report: ") + e.what());
  }
}

std::unique_ptr<langid::Scorer> make_scorer(const std::vector<fs::path>& profiles, const std::optional<fs::path>& scores) {
  if (scores) return std::make_unique<langid::SidecarScores>(langid::SidecarScores::load(*scores));
  if (profiles.empty()) throw ConfigError("language identification needs --profile or --scores");
  std::vector<langid::NgramProfile> loaded;
  for (const auto& p : profiles) loaded.push_back(langid::load_profile(p));
  return std::make_unique<langid::ProfileIdentifier>(std::move(loaded));
}

PipelineReport run_pipeline(const PipelineConfig& cfg, const std::vector<fs::path>& inputs, const fs::path& output_dir,
                            const RunOptions& opts) {
  validate_config(cfg);
  std::vector<StageOutput> outputs;
  std::map<std::string, double> timings;
  using clock = std::chrono::steady_clock;

  auto timed = [&](const char* name, auto&& fn) {
    const auto start = clock::now();
    outputs.push_back(fn());
    timings[name] = std::chrono::duration<double>(clock::now() - start).count();
  };

  auto write_outputs = [&](PipelineReport& report) {
    report.config_hash = config_hash(cfg);
    report.wall_time_per_stage = timings;
    ingest::write_file(output_dir / "report.json", emit_report(report, ReportFormat::json));
    if (!report.incomplete) ingest::write_file(output_dir / "report.md", emit_report(report, ReportFormat::markdown));
    nlohmann::ordered_json t(timings);
    ingest::write_file(output_dir / "timings.json", t.dump(2) + "\n");
  };

  try {
    const auto shards = ingest::resolve_inputs(inputs);
    const auto scorer = make_scorer(opts.profiles, opts.scores);
    const fs::path langid_dir = output_dir / "01-langid";
    const fs::path dedup_dir = output_dir / "02-dedup";
    const fs::path quality_dir = output_dir / "03-quality";
    timed("langid", [&] { return run_langid_stage(cfg, shards, langid_dir, *scorer, opts.stage); });
    timed("dedup", [&] { return run_dedup_stage(cfg, ingest::resolve_inputs({langid_dir}), dedup_dir, opts.stage); });
    timed("quality", [&] { return run_quality_stage(cfg, ingest::resolve_inputs({dedup_dir}), quality_dir, opts.stage); });
  } catch (const std::exception& e) {
    PipelineReport partial = combine_stage_outputs(outputs);
    partial.incomplete = true;
    partial.error = e.what();
    try {
      write_outputs(partial);
    } catch (const std::exception&) {
      // The original failure is the one worth reporting.
    }
    throw;
  }
  PipelineReport report = combine_stage_outputs(outputs);
  write_outputs(report);
  return report;
}

}  // namespace forge::pipeline
