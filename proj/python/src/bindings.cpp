#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "forge/analytics.hpp"
#include "forge/bpe.hpp"
#include "forge/dedup.hpp"
#include "forge/error.hpp"
#include "forge/langid.hpp"
#include "forge/model.hpp"
#include "forge/phase_split.hpp"
#include "forge/pipeline.hpp"
#include "forge/quality.hpp"

namespace py = pybind11;
using namespace forge;
using namespace forge::pipeline;

namespace {

// Configs cross the boundary as JSON text.
PipelineConfig parse_config(const std::string& json_text) {
  if (json_text.empty()) return {};
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  return validate_config(config_from_json(j));
}

}  // namespace

PYBIND11_MODULE(_forge, m) {
  m.doc() = "Native core of the forge corpus pipeline";

  auto base = py::register_exception<Error>(m, "Error");
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<DataError>(m, "DataError", base.ptr());
  py::register_exception<IoError>(m, "IoError", base.ptr());

  m.def("default_config", [] { return config_to_json(PipelineConfig{}).dump(); });
  m.def("validate_config", [](const std::string& cfg) { return config_to_json(parse_config(cfg)).dump(); });
  m.def("config_hash", [](const std::string& cfg) { return config_hash(parse_config(cfg)); });

  m.def("retention_pct", [](std::uint64_t docs_in, std::uint64_t docs_out) {
    return RetentionPct::from_counts(docs_in, docs_out).str();
  });

  m.def("shingle_hashes", [](const std::string& text, const std::string& cfg) {
    const auto c = parse_config(cfg);
    return dedup::shingle_hashes(text, c.shingle_size, dedup::shingle_seed(c.master_seed));
  }, py::arg("text"), py::arg("config") = "");
  m.def("minhash_signature", [](const std::string& text, const std::string& cfg) {
    const auto c = parse_config(cfg);
    const auto sig = dedup::minhash_signature(
        dedup::shingle({"doc", text, "", std::nullopt, {}}, c.shingle_size, dedup::shingle_seed(c.master_seed)), c);
    return py::make_tuple(sig.components, sig.bands);
  }, py::arg("text"), py::arg("config") = "");
  m.def("jaccard", &dedup::jaccard);

  m.def("quality_verdict", [](const std::string& text, const std::string& cfg) {
    const auto c = parse_config(cfg);
    Document doc{"doc", text, "", std::nullopt, {}};
    const auto v = quality::QualityFilter(c).apply(doc);
    py::dict out;
    out["kept"] = v.kept;
    out["reason"] = v.reason ? py::cast(std::string(quality::to_string(*v.reason))) : py::none();
    out["punct_line_ratio"] = v.punct_line_ratio;
    out["short_line_ratio"] = v.short_line_ratio;
    out["dup_line_char_ratio"] = v.dup_line_char_ratio;
    out["text"] = doc.text;
    return out;
  }, py::arg("text"), py::arg("config") = "");

  m.def("train_profile", [](const std::string& label, const std::vector<std::string>& texts,
                            const std::filesystem::path& output, int n) {
    langid::save_profile(langid::train_profile(label, texts, n), output);
  }, py::arg("label"), py::arg("texts"), py::arg("output"), py::arg("n") = 3);
  m.def("identify_language", [](const std::vector<std::filesystem::path>& profiles, const std::string& text) {
    std::vector<langid::NgramProfile> loaded;
    for (const auto& p : profiles) loaded.push_back(langid::load_profile(p));
    const auto s = langid::ProfileIdentifier(std::move(loaded)).score(text);
    return py::make_tuple(s.label, s.confidence);
  });

  m.def("ttr", &analytics::ttr);
  m.def("hdd", &analytics::hdd, py::arg("tokens"), py::arg("sample_size") = 42);
  m.def("perplexity", [](const std::vector<std::vector<double>>& logprobs) {
    analytics::PerplexityAccumulator acc;
    for (const auto& lp : logprobs) acc.add(lp);
    return acc.perplexity();
  });

  py::class_<bpe::BpeModel>(m, "BpeModel")
      .def_static("train", [](const std::vector<std::string>& texts, int vocab_size, const std::string& mode) {
        return bpe::train_bpe(texts, vocab_size, 0, mode == "gpt2" ? bpe::Pretokenizer::gpt2 : bpe::Pretokenizer::whitespace);
      }, py::arg("texts"), py::arg("vocab_size"), py::arg("pretokenizer") = "whitespace")
      .def_static("load", [](const std::filesystem::path& dir) { return bpe::load_model(dir); })
      .def("save", [](const bpe::BpeModel& model, const std::filesystem::path& dir) { bpe::save_model(model, dir); })
      .def("encode", &bpe::BpeModel::encode)
      .def("decode", [](const bpe::BpeModel& model, const std::vector<int>& ids) {
        return py::bytes(model.decode(ids));
      })
      .def("count_tokens", &bpe::BpeModel::count_tokens)
      .def_property_readonly("vocab_size", &bpe::BpeModel::vocab_size)
      .def_property_readonly("num_merges", [](const bpe::BpeModel& model) { return model.merges().size(); });

  m.def("partition_phases", [](const std::vector<std::pair<std::string, std::uint64_t>>& docs, const std::string& cfg) {
    std::vector<phase::DocTokens> in;
    in.reserve(docs.size());
    for (const auto& [id, tokens] : docs) in.push_back({id, tokens});
    return phase::to_json(phase::partition_phases(in, parse_config(cfg))).dump();
  }, py::arg("docs"), py::arg("config") = "");

  m.def("run_pipeline", [](const std::vector<std::filesystem::path>& inputs, const std::filesystem::path& output,
                           const std::vector<std::filesystem::path>& profiles, const std::string& cfg, int jobs) {
    RunOptions opts;
    opts.profiles = profiles;
    opts.stage.jobs = jobs;
    const auto c = parse_config(cfg);
    PipelineReport report;
    {
      py::gil_scoped_release release;
      report = run_pipeline(c, inputs, output, opts);
    }
    return emit_report(report, ReportFormat::json);
  }, py::arg("inputs"), py::arg("output"), py::arg("profiles"), py::arg("config") = "", py::arg("jobs") = 1);
}
