/**
 * Command-line front end for the decoding simulator.
 *
 *   ssd generate --scenario s.json [--mode ssd|reference|baseline] [--trace out.json]
 *   ssd compare  --scenario s.json          exit 2 on any trace divergence
 *   ssd bench    --dir scenarios/ --out summary.csv
 *   ssd profile  --dir traces/ --out profile.csv
 *
 * Exit codes: 0 success, 2 divergence (compare), 3 input error.
 */

#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "ssd/harness.hpp"

namespace {

constexpr int kExitDivergence = 2;
constexpr int kExitInputError = 3;

void print_run_summary(const ssd::ScenarioRun& run, ssd::RunMode mode) {
  const ssd::BenchReport& report = run.report;
  std::cout << "mode:          " << ssd::run_mode_name(mode) << '\n';
  std::cout << "tokens:        " << report.tokens_emitted << " (finished by "
            << ssd::finish_reason_name(report.finished_by) << ")\n";
  std::cout << "rounds:        " << run.trace.rounds << '\n';
  std::cout << "virtual time:  " << report.virtual_time_with_defense
            << " (baseline " << report.virtual_time_baseline << " for "
            << report.baseline_tokens << " tokens)\n";
  std::cout << "atgr:          " << report.atgr << '\n';

  std::cout << "beta per bin: ";
  if (report.mean_beta_per_bin.empty()) {
    std::cout << " (no completed bin)";
  }
  for (double beta : report.mean_beta_per_bin) {
    std::cout << ' ' << beta;
  }
  std::cout << '\n';

  std::cout << "schemes:      ";
  for (const auto& [scheme, length] : report.scheme_timeline) {
    std::cout << ' ' << ssd::scheme_name(scheme) << 'x' << length;
  }
  std::cout << '\n';

  std::cout << "emitted:      ";
  for (ssd::TokenId id : run.trace.token_ids()) {
    std::cout << ' ' << id;
  }
  std::cout << '\n';
}

int cmd_generate(const std::string& scenario_path, const std::string& mode_name,
                 const std::string& trace_path) {
  ssd::ScenarioSpec spec = ssd::load_scenario(scenario_path);
  ssd::RunMode mode = ssd::run_mode_from_name(mode_name);
  ssd::ScenarioRun run = ssd::run_scenario(spec, mode);
  print_run_summary(run, mode);
  if (!trace_path.empty()) {
    std::ofstream out(trace_path);
    if (!out) {
      throw ssd::SsdError(ssd::Errc::InvalidArgument, "cannot write " + trace_path);
    }
    out << ssd::trace_to_json(run.trace).dump(2) << '\n';
    std::cout << "trace written to " << trace_path << '\n';
  }
  return 0;
}

int cmd_compare(const std::string& scenario_path) {
  ssd::ScenarioSpec spec = ssd::load_scenario(scenario_path);
  ssd::ScenarioRun speculative = ssd::run_scenario(spec, ssd::RunMode::Ssd);
  ssd::ScenarioRun reference = ssd::run_scenario(spec, ssd::RunMode::Reference);
  auto divergence = ssd::first_trace_divergence(speculative.trace, reference.trace);
  if (divergence) {
    std::cout << "DIVERGENCE at position " << *divergence << " (speculative emitted "
              << speculative.trace.tokens.size() << " tokens, reference "
              << reference.trace.tokens.size() << ")\n";
    return kExitDivergence;
  }
  std::cout << "traces identical over " << speculative.trace.tokens.size()
            << " tokens and " << speculative.trace.bins.size() << " bins\n";
  return 0;
}

int cmd_bench(const std::string& dir, const std::string& out_csv) {
  ssd::SuiteResult result = ssd::run_suite(dir, out_csv);
  std::cout << "wrote " << result.rows << " rows to " << out_csv << '\n';
  for (const auto& [name, error] : result.failures) {
    std::cerr << "scenario " << name << " failed: " << error << '\n';
  }
  return 0;
}

int cmd_profile(const std::string& dir, const std::string& out_csv) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) {
    throw ssd::SsdError(ssd::Errc::InvalidArgument, dir + " is not a directory");
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (entry.is_regular_file() && name.size() > 11 &&
        name.substr(name.size() - 11) == ".trace.json") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) {
    throw ssd::SsdError(ssd::Errc::NoCompleteBins, "no trace files in " + dir);
  }

  // Trace files are named <scenario>__<label>.trace.json by the bench suite;
  // files without the label marker fall into the "other" group.
  std::map<std::string, std::vector<ssd::GenerationTrace>> groups;
  for (const fs::path& file : files) {
    std::ifstream in(file);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw ssd::SsdError(ssd::Errc::ParseError,
                          "invalid trace JSON in " + file.string() + ": " + e.what());
    }
    std::string stem = file.filename().string();
    stem = stem.substr(0, stem.size() - 11);
    std::string label = "other";
    if (auto sep = stem.rfind("__"); sep != std::string::npos) {
      label = stem.substr(sep + 2);
    }
    groups[label].push_back(ssd::trace_from_json(j));
  }

  std::ofstream out(out_csv);
  if (!out) {
    throw ssd::SsdError(ssd::Errc::InvalidArgument, "cannot write " + out_csv);
  }
  ssd::emit_matchratio_profile(groups, out);
  std::cout << "wrote profile for " << groups.size() << " label group(s) to "
            << out_csv << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"speculative safety-aware decoding simulator"};
  app.require_subcommand(1);

  std::string scenario_path;
  std::string mode_name = "ssd";
  std::string trace_path;
  std::string dir;
  std::string out_csv;

  CLI::App* generate = app.add_subcommand("generate", "run one scenario");
  generate->add_option("--scenario", scenario_path, "scenario JSON file")->required();
  generate->add_option("--mode", mode_name, "ssd | reference | baseline")
      ->check(CLI::IsMember({"ssd", "reference", "baseline"}));
  generate->add_option("--trace", trace_path, "write the trace JSON here");

  CLI::App* compare = app.add_subcommand(
      "compare", "run ssd and reference decoders, fail on divergence");
  compare->add_option("--scenario", scenario_path, "scenario JSON file")->required();

  CLI::App* bench = app.add_subcommand("bench", "run a scenario directory");
  bench->add_option("--dir", dir, "directory of scenario files")->required();
  bench->add_option("--out", out_csv, "summary CSV path")->required();

  CLI::App* profile = app.add_subcommand("profile", "aggregate match ratios by label");
  profile->add_option("--dir", dir, "directory of trace files")->required();
  profile->add_option("--out", out_csv, "profile CSV path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : kExitInputError;
  }

  try {
    if (generate->parsed()) return cmd_generate(scenario_path, mode_name, trace_path);
    if (compare->parsed()) return cmd_compare(scenario_path);
    if (bench->parsed()) return cmd_bench(dir, out_csv);
    if (profile->parsed()) return cmd_profile(dir, out_csv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInputError;
  }
  return 0;
}
