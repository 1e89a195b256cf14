#pragma once

/**
 * Scenario-driven simulation runner: loads declarative scenario files, runs
 * the speculative / reference / no-defense decoders under a virtual clock,
 * computes the average-token-generation-time ratio (ATGR), and emits CSV
 * summaries plus per-scenario trace files.
 *
 * Timing is purely virtual for determinism: every cost is a configured
 * number of abstract time units, never a wall-clock measurement.
 */

#include <filesystem>
#include <iosfwd>
#include <map>
#include <utility>

#include "ssd/engine.hpp"

namespace ssd {

/// Grouping metadata only; the engine never sees the label.
enum class ScenarioLabel { Benign, Harmful, Other };

const char* label_name(ScenarioLabel label);
ScenarioLabel label_from_name(std::string_view name);

/// Virtual costs, in abstract time units.
struct LatencyModel {
  double target_batch_cost = 1.0;  ///< one batched target evaluation
  double draft_cost = 0.05;        ///< one expert drafting step
  double overhead_cost = 0.0;      ///< fixed per-round cost

  friend bool operator==(const LatencyModel&, const LatencyModel&) = default;
};

/// One declarative simulated run, with both model sources already resolved.
struct ScenarioSpec {
  std::string name;
  ModelPtr target;
  ModelPtr expert;
  std::vector<TokenId> prompt;
  std::vector<TokenId> prefill;
  SSDConfig config;
  LatencyModel latency;
  ScenarioLabel label = ScenarioLabel::Other;
};

/**
 * Scenario JSON format:
 *   {"target": {model source}, "expert": {model source}, "prompt": [ids],
 *    "prefill": [ids], "config": {overrides}, "latency": {costs},
 *    "label": "benign"|"harmful"|"other"}
 * A model source is one of
 *   {"kind": "table", "path": "file.json"}            (path relative to the scenario)
 *   {"kind": "table", vocab_size, eos, default, max_suffix, contexts}
 *   {"kind": "ngram", vocab_size, eos, order, smoothing, corpus: [[ids], ...]}
 *   {"kind": "persona", base: {model source}, trigger: [ids], override: [ids]}
 * Schema violations throw ScenarioInvalid; model-level problems keep their
 * own error codes.
 */
ScenarioSpec scenario_from_json(const nlohmann::json& j,
                                const std::filesystem::path& base_dir,
                                std::string name);
ScenarioSpec load_scenario(const std::filesystem::path& path);

enum class RunMode { Ssd, Reference, Baseline };

RunMode run_mode_from_name(std::string_view name);
const char* run_mode_name(RunMode mode);

/// Per-run timing summary; the baseline leg is always computed for the ratio.
struct BenchReport {
  std::uint64_t tokens_emitted = 0;
  double virtual_time_with_defense = 0.0;
  double virtual_time_baseline = 0.0;
  std::uint64_t baseline_tokens = 0;
  double atgr = 0.0;
  std::vector<double> mean_beta_per_bin;
  std::vector<std::pair<DecodingScheme, std::uint32_t>> scheme_timeline;  ///< run-length encoded
  FinishReason finished_by = FinishReason::Budget;
};

struct ScenarioRun {
  GenerationTrace trace;
  BenchReport report;
};

/**
 * Runs the selected decoder and accumulates virtual time:
 *   ssd       — per round: lookahead * draft_cost + target_batch_cost + overhead_cost
 *   reference — per token: draft_cost + target_batch_cost
 *   baseline  — per token: target_batch_cost (plain greedy decoding of the target)
 * The baseline leg is decoded independently either way; in baseline mode the
 * defense is the baseline itself, so atgr is exactly 1.
 */
ScenarioRun run_scenario(const ScenarioSpec& spec, RunMode mode);

/**
 * Ratio of average per-token virtual times, defense over baseline.
 * Throws ZeroTokens when either run emitted nothing.
 */
double compute_atgr(double defense_time, std::uint64_t defense_tokens,
                    double baseline_time, std::uint64_t baseline_tokens);

/**
 * Runs every *.json scenario under `dir` (sorted by filename) in ssd +
 * baseline modes, writes one CSV summary row per scenario to `out_csv`
 * (columns scenario,label,tokens,atgr,beta_bin_1..k,final_scheme,finished_by)
 * and one `<scenario>__<label>.trace.json` per success next to it. Failures
 * are isolated per scenario and collected; when any occur they are also
 * written to `<out_csv>.errors.csv`. Throws NoScenarios when the directory
 * holds no scenario files at all.
 */
struct SuiteResult {
  std::size_t rows = 0;
  std::vector<std::pair<std::string, std::string>> failures;  ///< (scenario, error)
};
SuiteResult run_suite(const std::filesystem::path& dir,
                      const std::filesystem::path& out_csv);

/**
 * Per-label mean match ratio by bin index (columns label,bin,mean_beta,traces).
 * Every trace must have at least one completed bin; otherwise NoCompleteBins.
 * Traces shorter than a given bin index simply stop contributing to it.
 */
void emit_matchratio_profile(
    const std::map<std::string, std::vector<GenerationTrace>>& traces_by_label,
    std::ostream& out);

}  // namespace ssd
