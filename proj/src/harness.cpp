#include "ssd/harness.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

namespace ssd {

namespace fs = std::filesystem;

const char* label_name(ScenarioLabel label) {
  switch (label) {
    case ScenarioLabel::Benign: return "benign";
    case ScenarioLabel::Harmful: return "harmful";
    case ScenarioLabel::Other: return "other";
  }
  return "other";
}

ScenarioLabel label_from_name(std::string_view name) {
  if (name == "benign") return ScenarioLabel::Benign;
  if (name == "harmful") return ScenarioLabel::Harmful;
  if (name == "other") return ScenarioLabel::Other;
  throw SsdError(Errc::ScenarioInvalid, "unknown label: " + std::string(name));
}

RunMode run_mode_from_name(std::string_view name) {
  if (name == "ssd") return RunMode::Ssd;
  if (name == "reference") return RunMode::Reference;
  if (name == "baseline") return RunMode::Baseline;
  throw SsdError(Errc::InvalidArgument, "unknown mode: " + std::string(name));
}

const char* run_mode_name(RunMode mode) {
  switch (mode) {
    case RunMode::Ssd: return "ssd";
    case RunMode::Reference: return "reference";
    case RunMode::Baseline: return "baseline";
  }
  return "ssd";
}

// ============================================================================
// Scenario loading
// ============================================================================

namespace {

std::vector<TokenId> token_list(const nlohmann::json& j, const std::string& where) {
  if (!j.is_array()) {
    throw SsdError(Errc::ScenarioInvalid, where + " must be an array of token ids");
  }
  std::vector<TokenId> out;
  out.reserve(j.size());
  for (const auto& v : j) {
    if (!v.is_number_integer() || v.get<std::int64_t>() < 0) {
      throw SsdError(Errc::ScenarioInvalid, where + " must hold non-negative integers");
    }
    out.push_back(v.get<TokenId>());
  }
  return out;
}

ModelPtr model_from_json(const nlohmann::json& j, const fs::path& base_dir,
                         const std::string& where) {
  if (!j.is_object() || !j.contains("kind") || !j.at("kind").is_string()) {
    throw SsdError(Errc::ScenarioInvalid, where + " must be an object with a \"kind\"");
  }
  const std::string kind = j.at("kind").get<std::string>();

  if (kind == "table") {
    if (j.contains("path")) {
      fs::path p = j.at("path").get<std::string>();
      if (p.is_relative()) {
        p = base_dir / p;
      }
      return load_table_model(p);
    }
    nlohmann::json inline_table = j;
    inline_table.erase("kind");
    return table_model_from_json(inline_table);
  }

  if (kind == "ngram") {
    for (const auto& key : {"vocab_size", "eos", "order", "smoothing", "corpus"}) {
      if (!j.contains(key)) {
        throw SsdError(Errc::ScenarioInvalid,
                       where + " ngram source missing key: " + key);
      }
    }
    Vocabulary vocab(j.at("vocab_size").get<std::uint32_t>(), j.at("eos").get<TokenId>());
    std::vector<std::vector<TokenId>> corpus;
    for (const auto& seq : j.at("corpus")) {
      corpus.push_back(token_list(seq, where + " corpus sequence"));
    }
    return train_ngram(corpus, j.at("order").get<std::uint32_t>(),
                       j.at("smoothing").get<double>(), vocab);
  }

  if (kind == "persona") {
    for (const auto& key : {"base", "trigger", "override"}) {
      if (!j.contains(key)) {
        throw SsdError(Errc::ScenarioInvalid,
                       where + " persona source missing key: " + key);
      }
    }
    ModelPtr base = model_from_json(j.at("base"), base_dir, where + " base");
    return std::make_shared<PersonaModel>(base,
                                          token_list(j.at("trigger"), where + " trigger"),
                                          token_list(j.at("override"), where + " override"));
  }

  throw SsdError(Errc::ScenarioInvalid, where + " has unknown model kind: " + kind);
}

LatencyModel latency_from_json(const nlohmann::json& j) {
  LatencyModel latency;
  for (const auto& [key, value] : j.items()) {
    if (!value.is_number()) {
      throw SsdError(Errc::ScenarioInvalid, "latency field " + key + " must be a number");
    }
    double cost = value.get<double>();
    if (cost < 0.0) {
      throw SsdError(Errc::ScenarioInvalid, "latency costs must be >= 0");
    }
    if (key == "target_batch_cost") latency.target_batch_cost = cost;
    else if (key == "draft_cost") latency.draft_cost = cost;
    else if (key == "overhead_cost") latency.overhead_cost = cost;
    else throw SsdError(Errc::ScenarioInvalid, "unknown latency key: " + key);
  }
  return latency;
}

}  // namespace

ScenarioSpec scenario_from_json(const nlohmann::json& j, const fs::path& base_dir,
                                std::string name) {
  if (!j.is_object()) {
    throw SsdError(Errc::ScenarioInvalid, "scenario must be a JSON object");
  }
  for (const auto& key : {"target", "expert", "prompt", "label"}) {
    if (!j.contains(key)) {
      throw SsdError(Errc::ScenarioInvalid, std::string("scenario missing key: ") + key);
    }
  }
  for (const auto& [key, value] : j.items()) {
    static const char* known[] = {"target", "expert", "prompt", "prefill",
                                  "config",  "latency", "label"};
    if (std::find_if(std::begin(known), std::end(known),
                     [&key](const char* k) { return key == k; }) == std::end(known)) {
      throw SsdError(Errc::ScenarioInvalid, "unknown scenario key: " + key);
    }
  }

  ScenarioSpec spec;
  spec.name = std::move(name);
  spec.target = model_from_json(j.at("target"), base_dir, "target");
  spec.expert = model_from_json(j.at("expert"), base_dir, "expert");
  spec.prompt = token_list(j.at("prompt"), "prompt");
  if (j.contains("prefill")) {
    spec.prefill = token_list(j.at("prefill"), "prefill");
  }
  if (j.contains("config")) {
    spec.config = config_from_json(j.at("config"));
  }
  if (j.contains("latency")) {
    spec.latency = latency_from_json(j.at("latency"));
  }
  if (!j.at("label").is_string()) {
    throw SsdError(Errc::ScenarioInvalid, "label must be a string");
  }
  spec.label = label_from_name(j.at("label").get<std::string>());
  return spec;
}

ScenarioSpec load_scenario(const fs::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw SsdError(Errc::ScenarioInvalid, "cannot open scenario " + path.string());
  }
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw SsdError(Errc::ScenarioInvalid,
                   "invalid JSON in " + path.string() + ": " + e.what());
  }
  return scenario_from_json(j, path.parent_path(), path.stem().string());
}

// ============================================================================
// Running
// ============================================================================

namespace {

std::vector<std::pair<DecodingScheme, std::uint32_t>> rle_schemes(
    const std::vector<TokenRecord>& records) {
  std::vector<std::pair<DecodingScheme, std::uint32_t>> timeline;
  for (const TokenRecord& r : records) {
    if (!timeline.empty() && timeline.back().first == r.scheme) {
      ++timeline.back().second;
    } else {
      timeline.emplace_back(r.scheme, 1);
    }
  }
  return timeline;
}

GenerationTrace baseline_trace(const std::vector<TokenId>& tokens, TokenId eos) {
  GenerationTrace trace;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    TokenRecord r;
    r.position = static_cast<std::uint32_t>(i + 1);
    r.token = tokens[i];
    r.draft_token = tokens[i];  // no drafting happens in baseline mode
    r.indicator = true;
    r.scheme = DecodingScheme::Intersection;
    r.alpha_used = 0.0;
    r.space_size = 1;
    r.space_kind = SpaceKind::Intersection;
    trace.tokens.push_back(r);
  }
  trace.rounds = static_cast<std::uint32_t>(tokens.size());
  trace.draft_calls = 0;
  trace.target_batch_calls = tokens.size();
  trace.finished_by = (!tokens.empty() && tokens.back() == eos) ? FinishReason::Eos
                                                                : FinishReason::Budget;
  return trace;
}

}  // namespace

double compute_atgr(double defense_time, std::uint64_t defense_tokens,
                    double baseline_time, std::uint64_t baseline_tokens) {
  if (defense_tokens == 0 || baseline_tokens == 0) {
    throw SsdError(Errc::ZeroTokens, "ATGR requires at least one token per run");
  }
  const double defense_per_token = defense_time / static_cast<double>(defense_tokens);
  const double baseline_per_token = baseline_time / static_cast<double>(baseline_tokens);
  return defense_per_token / baseline_per_token;
}

ScenarioRun run_scenario(const ScenarioSpec& spec, RunMode mode) {
  Session session;
  try {
    session = make_session(spec.target, spec.expert, spec.config, spec.prompt,
                           spec.prefill);
  } catch (const SsdError& e) {
    throw SsdError(Errc::ScenarioInvalid,
                   "scenario " + spec.name + " does not validate: " + e.what());
  }

  std::vector<TokenId> baseline_context = spec.prompt;
  baseline_context.insert(baseline_context.end(), spec.prefill.begin(),
                          spec.prefill.end());
  const std::vector<TokenId> baseline_tokens = greedy_generate(
      *spec.target, baseline_context, spec.config.max_new_tokens);
  const double baseline_time =
      static_cast<double>(baseline_tokens.size()) * spec.latency.target_batch_cost;

  ScenarioRun run;
  double defense_time = 0.0;
  switch (mode) {
    case RunMode::Ssd: {
      run.trace = generate(session);
      defense_time = static_cast<double>(run.trace.draft_calls) * spec.latency.draft_cost +
                     static_cast<double>(run.trace.target_batch_calls) *
                         spec.latency.target_batch_cost +
                     static_cast<double>(run.trace.rounds) * spec.latency.overhead_cost;
      break;
    }
    case RunMode::Reference: {
      run.trace = reference_generate(session);
      defense_time = static_cast<double>(run.trace.tokens.size()) *
                     (spec.latency.draft_cost + spec.latency.target_batch_cost);
      break;
    }
    case RunMode::Baseline: {
      run.trace = baseline_trace(baseline_tokens, spec.target->vocab().eos());
      defense_time = baseline_time;
      break;
    }
  }

  BenchReport& report = run.report;
  report.tokens_emitted = run.trace.tokens.size();
  report.virtual_time_with_defense = defense_time;
  report.virtual_time_baseline = baseline_time;
  report.baseline_tokens = baseline_tokens.size();
  report.atgr = compute_atgr(defense_time, report.tokens_emitted, baseline_time,
                             report.baseline_tokens);
  for (const BinReport& bin : run.trace.bins) {
    report.mean_beta_per_bin.push_back(bin.beta);
  }
  report.scheme_timeline = rle_schemes(run.trace.tokens);
  report.finished_by = run.trace.finished_by;
  return run;
}

// ============================================================================
// Suite and profile reports
// ============================================================================

namespace {

std::string format_double(double value) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.10g", value);
  return buffer;
}

struct SummaryRow {
  std::string scenario;
  std::string label;
  std::uint64_t tokens;
  double atgr;
  std::vector<double> betas;
  std::string final_scheme;
  std::string finished_by;
};

}  // namespace

SuiteResult run_suite(const fs::path& dir, const fs::path& out_csv) {
  if (!fs::is_directory(dir)) {
    throw SsdError(Errc::NoScenarios, dir.string() + " is not a directory");
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") {
      files.push_back(entry.path());
    }
  }
  if (files.empty()) {
    throw SsdError(Errc::NoScenarios, "no scenario files in " + dir.string());
  }
  std::sort(files.begin(), files.end());

  const fs::path out_dir = out_csv.has_parent_path() ? out_csv.parent_path() : fs::path(".");
  std::vector<SummaryRow> rows;
  SuiteResult result;
  for (const fs::path& file : files) {
    try {
      ScenarioSpec spec = load_scenario(file);
      ScenarioRun run = run_scenario(spec, RunMode::Ssd);

      const std::string trace_name =
          file.stem().string() + "__" + label_name(spec.label) + ".trace.json";
      std::ofstream trace_out(out_dir / trace_name);
      trace_out << trace_to_json(run.trace).dump(2) << '\n';

      SummaryRow row;
      row.scenario = spec.name;
      row.label = label_name(spec.label);
      row.tokens = run.report.tokens_emitted;
      row.atgr = run.report.atgr;
      row.betas = run.report.mean_beta_per_bin;
      row.final_scheme = run.trace.tokens.empty()
                             ? scheme_name(DecodingScheme::Intersection)
                             : scheme_name(run.trace.tokens.back().scheme);
      row.finished_by = finish_reason_name(run.report.finished_by);
      rows.push_back(std::move(row));
    } catch (const std::exception& e) {
      result.failures.emplace_back(file.stem().string(), e.what());
    }
  }

  std::size_t max_bins = 0;
  for (const SummaryRow& row : rows) {
    max_bins = std::max(max_bins, row.betas.size());
  }

  std::ofstream out(out_csv);
  if (!out) {
    throw SsdError(Errc::InvalidArgument, "cannot write " + out_csv.string());
  }
  out << "scenario,label,tokens,atgr";
  for (std::size_t i = 1; i <= max_bins; ++i) {
    out << ",beta_bin_" << i;
  }
  out << ",final_scheme,finished_by\n";
  for (const SummaryRow& row : rows) {
    out << row.scenario << ',' << row.label << ',' << row.tokens << ','
        << format_double(row.atgr);
    for (std::size_t i = 0; i < max_bins; ++i) {
      out << ',';
      if (i < row.betas.size()) {
        out << format_double(row.betas[i]);
      }
    }
    out << ',' << row.final_scheme << ',' << row.finished_by << '\n';
  }

  if (!result.failures.empty()) {
    std::ofstream errors(out_csv.string() + ".errors.csv");
    errors << "scenario,error\n";
    for (const auto& [name, message] : result.failures) {
      std::string cleaned = message;
      std::replace(cleaned.begin(), cleaned.end(), ',', ';');
      std::replace(cleaned.begin(), cleaned.end(), '\n', ' ');
      errors << name << ',' << cleaned << '\n';
    }
  }

  result.rows = rows.size();
  return result;
}

void emit_matchratio_profile(
    const std::map<std::string, std::vector<GenerationTrace>>& traces_by_label,
    std::ostream& out) {
  bool any = false;
  for (const auto& [label, traces] : traces_by_label) {
    for (const GenerationTrace& trace : traces) {
      any = true;
      if (trace.bins.empty()) {
        throw SsdError(Errc::NoCompleteBins,
                       "a trace in group \"" + label + "\" has no completed bin");
      }
    }
  }
  if (!any) {
    throw SsdError(Errc::NoCompleteBins, "no traces supplied");
  }

  out << "label,bin,mean_beta,traces\n";
  for (const auto& [label, traces] : traces_by_label) {
    std::size_t max_bins = 0;
    for (const GenerationTrace& trace : traces) {
      max_bins = std::max(max_bins, trace.bins.size());
    }
    for (std::size_t bin = 0; bin < max_bins; ++bin) {
      double sum = 0.0;
      std::uint32_t count = 0;
      for (const GenerationTrace& trace : traces) {
        if (bin < trace.bins.size()) {
          sum += trace.bins[bin].beta;
          ++count;
        }
      }
      out << label << ',' << (bin + 1) << ',' << format_double(sum / count) << ','
          << count << '\n';
    }
  }
}

}  // namespace ssd
