#include "forge/phase_split.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_set>

#include "forge/error.hpp"
#include "forge/hash.hpp"
#include "forge/ingest.hpp"

namespace forge::phase {

namespace {

constexpr std::uint64_t kLongTag = 0x6c6f6e67ULL;
constexpr std::uint64_t kShortTag = 0x73686f7274ULL;

std::vector<std::size_t> seeded_shuffle(std::vector<std::size_t> items, std::uint64_t seed) {
  CounterRng rng(seed);
  for (std::size_t i = items.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.below(i));
    std::swap(items[i - 1], items[j]);
  }
  return items;
}

// Index into `phases` of the largest deficit; ties favour the earlier entry.
int largest_deficit(const std::array<double, 3>& targets, const std::array<std::uint64_t, 3>& totals,
                    std::initializer_list<int> phases) {
  int best = -1;
  double best_deficit = 0.0;
  for (int p : phases) {
    const double d = targets[static_cast<std::size_t>(p)] - static_cast<double>(totals[static_cast<std::size_t>(p)]);
    if (best < 0 || d > best_deficit) {
      best = p;
      best_deficit = d;
    }
  }
  return best;
}

}  // namespace

PhasePlan partition_phases(const std::vector<DocTokens>& docs, const PipelineConfig& cfg) {
  validate_config(cfg);
  if (docs.empty()) throw DataError("cannot split an empty corpus");

  PhasePlan plan;
  plan.ratios = cfg.phase_ratios;
  plan.long_threshold = cfg.long_doc_token_threshold;
  plan.seed = cfg.master_seed;

  std::unordered_set<std::string_view> seen;
  std::uint64_t total = 0;
  std::vector<std::size_t> long_idx, short_idx;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    if (!seen.insert(docs[i].id).second) throw DataError("duplicate id " + docs[i].id);
    total += docs[i].tokens;
    plan.max_doc_tokens = std::max(plan.max_doc_tokens, docs[i].tokens);
    if (docs[i].tokens > static_cast<std::uint64_t>(plan.long_threshold)) {
      long_idx.push_back(i);
      plan.long_tokens += docs[i].tokens;
    } else {
      short_idx.push_back(i);
    }
  }
  plan.long_docs = long_idx.size();
  for (std::size_t p = 0; p < 3; ++p) plan.targets[p] = plan.ratios[p] * static_cast<double>(total);

  const double late_budget = plan.targets[1] + plan.targets[2];
  plan.scaled = static_cast<double>(plan.long_tokens) > late_budget;

  // Long documents fill phases 2 and 3. When they overflow the budget, the
  // two phases keep their relative ratio over the long mass instead.
  std::array<double, 3> long_targets = plan.targets;
  if (plan.scaled) {
    const double late_share = plan.ratios[1] + plan.ratios[2];
    const auto mass = static_cast<double>(plan.long_tokens);
    long_targets[1] = late_share > 0.0 ? mass * plan.ratios[1] / late_share : mass;
    long_targets[2] = late_share > 0.0 ? mass * plan.ratios[2] / late_share : 0.0;
    plan.warnings.push_back("long documents (" + std::to_string(plan.long_tokens) +
                            " tokens) exceed the phase 2+3 budget; phases scaled to available data");
  }

  std::vector<int> phase_of(docs.size(), 0);
  std::array<std::uint64_t, 3> totals{};
  for (std::size_t i : seeded_shuffle(long_idx, derive_seed(plan.seed, kLongTag))) {
    int p;
    if (static_cast<double>(docs[i].tokens) > late_budget) {
      plan.warnings.push_back("document " + docs[i].id + " (" + std::to_string(docs[i].tokens) +
                              " tokens) alone exceeds the phase 2+3 budget; assigned to phase 2");
      p = 1;
    } else {
      p = largest_deficit(long_targets, totals, {1, 2});
    }
    phase_of[i] = p;
    totals[static_cast<std::size_t>(p)] += docs[i].tokens;
  }
  for (std::size_t i : seeded_shuffle(short_idx, derive_seed(plan.seed, kShortTag))) {
    const int p = plan.scaled ? 0 : largest_deficit(plan.targets, totals, {0, 1, 2});
    phase_of[i] = p;
    totals[static_cast<std::size_t>(p)] += docs[i].tokens;
  }

  plan.assignments.reserve(docs.size());
  for (std::size_t i = 0; i < docs.size(); ++i) {
    const auto p = static_cast<std::size_t>(phase_of[i]);
    plan.assignments.push_back({docs[i].id, phase_of[i] + 1, docs[i].tokens});
    ++plan.phase_doc_counts[p];
  }
  plan.phase_token_totals = totals;
  return plan;
}

nlohmann::ordered_json to_json(const PhasePlan& plan) {
  nlohmann::ordered_json j;
  j["ratios"] = plan.ratios.shares;
  j["long_threshold"] = plan.long_threshold;
  j["seed"] = plan.seed;
  j["targets"] = plan.targets;
  j["phase_token_totals"] = plan.phase_token_totals;
  j["phase_doc_counts"] = plan.phase_doc_counts;
  j["long_docs"] = plan.long_docs;
  j["long_tokens"] = plan.long_tokens;
  j["max_doc_tokens"] = plan.max_doc_tokens;
  j["scaled"] = plan.scaled;
  j["warnings"] = plan.warnings;
  return j;
}

void write_plan(const PhasePlan& plan, const std::filesystem::path& dir) {
  std::array<std::string, 3> ids;
  for (const auto& a : plan.assignments) {
    auto& out = ids[static_cast<std::size_t>(a.phase - 1)];
    out += a.id;
    out.push_back('\n');
  }
  for (std::size_t p = 0; p < 3; ++p) {
    ingest::write_file(dir / ("phase" + std::to_string(p + 1) + ".ids"), ids[p]);
  }
  ingest::write_file(dir / "phase_plan.json", to_json(plan).dump(2) + "\n");
}

}  // namespace forge::phase
