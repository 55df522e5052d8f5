#include "bcom_cli/app.hpp"

#include <chrono>
#include <ctime>
#include <filesystem>
#include <iomanip>
#include <ostream>

#include "CLI11.hpp"
#include "bcom/checks.hpp"
#include "bcom/errors.hpp"
#include "bcom_cli/csv.hpp"

namespace bcom::cli {

using nlohmann::json;

namespace {

json bounds_json(const BoundReport& b) {
  return json{{"measured", b.measured},
              {"reduction_bound", b.reduction_bound},
              {"moving_cost_bound", b.moving_cost},
              {"full_bound", b.full_bound},
              {"within_bound", b.within_bound},
              {"updates", b.updates},
              {"steps", b.steps},
              {"update_frequency", b.frequency},
              {"expected_frequency", b.expected_frequency},
              {"frequency_sigma", b.frequency_sigma},
              {"frequency_within_3sigma", b.frequency_within_3sigma}};
}

json cert_json(const InstanceCertificate& c) {
  return json{{"alpha", c.alpha}, {"beta", c.beta}, {"kappa0", c.kappa0}, {"g_f", c.g_f},
              {"diameter", c.diameter}, {"r_h", c.r_h}};
}

json run_json(const ExperimentConfig& config, const ExperimentResult& r) {
  return json{{"config_hash", config.hash},
              {"seed", r.record.seed},
              {"first_t", r.record.first_t},
              {"steps", r.record.incurred.size()},
              {"final_regret", r.record.final_regret()},
              {"comparator", r.record.comparator_label},
              {"comparator_value", r.record.comparator_value},
              {"comparator_iterations", r.comparator.iterations},
              {"comparator_residual", r.comparator.residual},
              {"eta", r.eta},
              {"m", r.m},
              {"d", r.d},
              {"certificate", cert_json(r.record.cert)},
              {"bounds", bounds_json(r.bounds)}};
}

std::string pretty(const json& j) { return j.dump(2) + "\n"; }

}  // namespace

Artifacts bcom_artifacts(const ExperimentConfig& config, const std::optional<std::string>& timestamp) {
  Artifacts files;
  json runs = json::array();
  for (Arm arm : config.arms) {
    const ExperimentResult r = run_bcom_experiment(config.bcom, config.horizon, config.seed, arm);
    files["bcom_trace_" + to_string(arm) + ".csv"] = trace_csv(r.trace, timestamp);
    json j = run_json(config, r);
    j["arm"] = to_string(arm);
    runs.push_back(std::move(j));
  }
  files["bcom_summary.json"] = pretty(json{{"config_hash", config.hash}, {"horizon", config.horizon}, {"runs", runs}});
  return files;
}

Artifacts control_artifacts(const ExperimentConfig& config, const std::optional<std::string>& timestamp) {
  const ExperimentResult r = run_control_experiment(config.control, config.horizon, config.seed);
  const ControlRun& run = *r.control;
  Artifacts files;
  files["control_trace.csv"] = trace_csv(r.trace, timestamp);
  files["control_trajectory.csv"] = trajectory_csv(run, timestamp);
  json j = run_json(config, r);
  j["reduction"] = json{{"diameter", r.reduction.diameter},
                        {"g_f", r.reduction.g_f},
                        {"radius", r.reduction.radius},
                        {"radius_full", r.reduction.radius_full},
                        {"cumulative_slack", r.reduction.cumulative_slack},
                        {"cumulative_discrepancy", run.cumulative_discrepancy},
                        {"max_bias_proxy", run.max_bias_proxy},
                        {"max_yu_norm", run.max_yu_norm},
                        {"max_played_norm", run.max_played_norm},
                        {"truncation", run.truncation},
                        {"tail_bound", run.tail_bound},
                        {"kappa_checks_failed", run.kappa_checks_failed}};
  files["control_summary.json"] = pretty(j);
  return files;
}

SweepResult run_sweep(const ExperimentConfig& config) {
  SweepConfig sc;
  sc.horizons = config.horizons;
  sc.seeds = config.seeds;
  sc.base_seed = config.seed;
  sc.arms = config.arms;
  sc.jobs = config.jobs;
  CellRunner runner;
  if (config.family == Family::kBcom) {
    runner = [&config](std::int64_t t, std::uint64_t seed, Arm arm) {
      const ExperimentResult r = run_bcom_experiment(config.bcom, t, seed, arm);
      SweepCell cell;
      cell.final_regret = r.record.final_regret();
      cell.bounds = r.bounds;
      return cell;
    };
  } else {
    for (Arm arm : config.arms) {
      if (arm != Arm::kNewton) throw ConfigError("arms", "the control family only has the newton arm");
    }
    runner = [&config](std::int64_t t, std::uint64_t seed, Arm) {
      const ExperimentResult r = run_control_experiment(config.control, t, seed);
      SweepCell cell;
      cell.final_regret = r.record.final_regret();
      cell.bounds = r.bounds;
      cell.cumulative_discrepancy = r.control->cumulative_discrepancy;
      cell.discrepancy_slack = r.reduction.cumulative_slack;
      return cell;
    };
  }
  return scaling_sweep(sc, runner);
}

Artifacts sweep_artifacts(const ExperimentConfig& config, const std::optional<std::string>& timestamp,
                          SweepResult* result) {
  SweepResult r = run_sweep(config);
  Artifacts files;
  files["sweep.csv"] = sweep_csv(r.cells, timestamp);
  json arms = json::array();
  for (const ArmSummary& a : r.arms) {
    arms.push_back(json{{"arm", to_string(a.arm)},
                        {"horizons", a.horizons},
                        {"mean_final_regret", a.mean},
                        {"standard_error", a.standard_error},
                        {"slope", a.fit.slope},
                        {"intercept", a.fit.intercept},
                        {"slope_se", a.fit.slope_se},
                        {"slope_ci95", {a.fit.ci_low, a.fit.ci_high}},
                        {"residuals", a.fit.residuals}});
  }
  int within = 0;
  int frequency_ok = 0;
  int discrepancy_ok = 0;
  double worst_ratio = 0.0;
  for (const SweepCell& c : r.cells) {
    within += c.bounds.within_bound ? 1 : 0;
    frequency_ok += c.bounds.frequency_within_3sigma ? 1 : 0;
    discrepancy_ok += c.cumulative_discrepancy <= c.discrepancy_slack ? 1 : 0;
    if (c.bounds.reduction_bound > 0.0) worst_ratio = std::max(worst_ratio, c.bounds.measured / c.bounds.reduction_bound);
  }
  json summary{{"config_hash", config.hash},
               {"family", to_string(config.family)},
               {"seeds", config.seeds},
               {"cells", r.cells.size()},
               {"cells_within_bound", within},
               {"max_regret_to_bound_ratio", worst_ratio},
               {"cells_frequency_within_3sigma", frequency_ok},
               {"arms", arms}};
  if (config.family == Family::kControl) summary["cells_discrepancy_within_slack"] = discrepancy_ok;
  files["sweep_summary.json"] = pretty(summary);
  if (result != nullptr) *result = std::move(r);
  return files;
}

void write_artifacts(const std::string& directory, const Artifacts& files) {
  std::error_code ec;
  std::filesystem::create_directories(directory, ec);
  if (ec) throw OutputError("cannot create output directory '" + directory + "': " + ec.message());
  for (const auto& [name, body] : files) write_file((std::filesystem::path(directory) / name).string(), body);
}

namespace {

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct Options {
  std::string config_path;
  std::string out_dir = "out";
  int seeds = 0;
  int jobs = 0;
  bool timestamp = false;
};

void add_common(CLI::App* cmd, Options& o, bool config_required) {
  auto* opt = cmd->add_option("--config", o.config_path, "Experiment config (JSON)");
  if (config_required) opt->required();
  cmd->add_option("--out", o.out_dir, "Output directory")->capture_default_str();
  cmd->add_option("--seeds", o.seeds, "Override the number of seeds per horizon")->check(CLI::PositiveNumber);
  cmd->add_option("--jobs", o.jobs, "Worker threads for sweeps")->check(CLI::PositiveNumber);
  cmd->add_flag("--timestamp", o.timestamp, "Prefix CSV files with a '# generated' comment line");
}

ExperimentConfig resolve_config(const Options& o) {
  ExperimentConfig c = o.config_path.empty() ? parse_config(json{{"schema_version", kSchemaVersion}}) : load_config(o.config_path);
  if (o.seeds > 0) c.seeds = o.seeds;
  if (o.jobs > 0) c.jobs = o.jobs;
  rehash(c);
  return c;
}

int run_checks_command(const ExperimentConfig& config, std::ostream& out) {
  const std::vector<CheckResult> results = run_checks(config.seed);
  int failed = 0;
  out << std::left << std::setw(10) << "module" << std::setw(36) << "suite" << std::setw(6) << "result" << std::right
      << std::setw(9) << "seconds" << "  detail\n";
  for (const CheckResult& r : results) {
    out << std::left << std::setw(10) << r.module << std::setw(36) << r.name << std::setw(6)
        << (r.passed ? "PASS" : "FAIL") << std::right << std::setw(9) << std::fixed << std::setprecision(2) << r.seconds
        << std::defaultfloat << "  " << r.detail << "\n";
    if (!r.passed) ++failed;
  }
  out << results.size() - static_cast<std::size_t>(failed) << "/" << results.size() << " suites passed\n";
  return failed == 0 ? kExitOk : kExitCheckFailed;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Bandit convex optimization with memory and bandit control experiments", "bcom"};
  app.require_subcommand(1);
  Options o;
  CLI::App* bcom = app.add_subcommand("bcom", "Synthetic BCO-M experiments");
  bcom->require_subcommand(1);
  CLI::App* bcom_run = bcom->add_subcommand("run", "Run every configured arm once");
  add_common(bcom_run, o, true);
  CLI::App* control = app.add_subcommand("control", "Bandit control experiments");
  control->require_subcommand(1);
  CLI::App* control_run = control->add_subcommand("run", "Run the controller once");
  add_common(control_run, o, true);
  CLI::App* sweep = app.add_subcommand("sweep", "Scaling sweep over the horizon grid");
  add_common(sweep, o, true);
  CLI::App* check = app.add_subcommand("check", "Run every invariant suite");
  add_common(check, o, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return kExitConfigError;
  }

  try {
    const ExperimentConfig config = resolve_config(o);
    const std::optional<std::string> stamp = o.timestamp ? std::optional<std::string>(utc_timestamp()) : std::nullopt;
    if (check->parsed()) return run_checks_command(config, out);
    Artifacts files;
    if (bcom_run->parsed()) files = bcom_artifacts(config, stamp);
    if (control_run->parsed()) files = control_artifacts(config, stamp);
    if (sweep->parsed()) files = sweep_artifacts(config, stamp);
    write_artifacts(o.out_dir, files);
    for (const auto& [name, body] : files) out << "wrote " << (std::filesystem::path(o.out_dir) / name).string() << "\n";
    return kExitOk;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntimeError;
  }
}

}  // namespace bcom::cli
