#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "forge/model.hpp"

namespace forge::phase {

struct DocTokens {
  std::string id;
  std::uint64_t tokens = 0;
};

struct Assignment {
  std::string id;
  int phase = 1;  // 1, 2 or 3
  std::uint64_t tokens = 0;
};

struct PhasePlan {
  PhaseRatios ratios;
  std::int64_t long_threshold = 1024;
  std::uint64_t seed = 0;
  std::vector<Assignment> assignments;  // input order
  std::array<double, 3> targets{};
  std::array<std::uint64_t, 3> phase_token_totals{};
  std::array<std::uint64_t, 3> phase_doc_counts{};
  std::uint64_t long_docs = 0;
  std::uint64_t long_tokens = 0;
  std::uint64_t max_doc_tokens = 0;
  // True when long documents alone exceed the phase 2 + 3 budget.
  bool scaled = false;
  std::vector<std::string> warnings;
};

// Long documents (tokens > threshold) go to phases 2/3 only; the rest are
// dealt to whichever phase has the largest remaining token deficit. Both
// passes walk a seeded shuffle, and deficit ties go to the lower phase.
PhasePlan partition_phases(const std::vector<DocTokens>& docs, const PipelineConfig& cfg);

nlohmann::ordered_json to_json(const PhasePlan& plan);

// phase1.ids, phase2.ids, phase3.ids and phase_plan.json.
void write_plan(const PhasePlan& plan, const std::filesystem::path& dir);

}  // namespace forge::phase
