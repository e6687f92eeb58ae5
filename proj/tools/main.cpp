// Command-line front end: closed-loop scenario simulation, offline fitting of
// sample logs, structural property verification, and the regressor cost
// benchmark. Exit codes: 0 ok, 1 property failure, 2 input error, 3 runtime
// error, 4 degenerate math.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "svadyn/svadyn.hpp"

namespace fs = std::filesystem;
using namespace svadyn;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitPropertyFail = 1;
constexpr int kExitInputError = 2;
constexpr int kExitRuntimeError = 3;
constexpr int kExitDegenerate = 4;

ChainModel load_model(const fs::path& path) {
  return parse_model(read_file(path));
}

int cmd_simulate(const fs::path& model_path, const fs::path& scenario_path,
                 const fs::path& out_dir) {
  const std::string model_text = read_file(model_path);
  const std::string scenario_text = read_file(scenario_path);
  const ChainModel plant = parse_model(model_text);
  const Scenario scn = parse_scenario(scenario_text, plant);

  fs::create_directories(out_dir);
  const std::uint64_t config_hash = fnv1a_hash(model_text + "\x1f" + scenario_text);
  write_file_atomic(out_dir / "manifest.txt",
                    write_manifest("simulate", config_hash, scn.sim.seed,
                                   {"samples.csv", "controller.csv", "metrics.txt"}));

  const ScenarioResult result = run_scenario(scn, scn.sim);
  const auto n = static_cast<Eigen::Index>(plant.dof());
  write_file_atomic(out_dir / "samples.csv", write_samples_csv(result.samples, n));
  write_file_atomic(out_dir / "controller.csv", write_controller_csv(result.controller_log, n));
  write_file_atomic(out_dir / "metrics.txt", write_metrics(scn.name, result.metrics));
  std::cout << write_metrics(scn.name, result.metrics);
  return kExitOk;
}

int cmd_fit(const fs::path& model_path, const fs::path& samples_path, const fs::path& out_file,
            std::optional<double> alpha, const std::string& theta0_spec) {
  const std::string model_text = read_file(model_path);
  const std::string samples_text = read_file(samples_path);
  const ChainModel model = parse_model(model_text);
  const auto n = static_cast<Eigen::Index>(model.dof());

  const std::vector<Sample> samples = read_samples_csv(samples_text, n);
  if (samples.empty()) throw ParseError("samples CSV contains no data rows", 1);

  ThetaVector theta0;
  if (!theta0_spec.empty()) {
    VecX v = theta0_spec == "model" ? theta_from_model(model).values
                                    : read_theta(read_file(theta0_spec));
    if (v.size() != n * kParamsPerLink)
      throw ParseError("theta0 has wrong length for this model", 0);
    theta0 = ThetaVector{std::move(v)};
  }

  const StackedSystem sys = stack(model, samples);
  const FitResult fr = alpha ? fit_with_prior(sys, theta0, *alpha) : fit(sys);
  const VecX per_joint = per_joint_r_squared(sys, fr.theta_hat);

  if (!out_file.parent_path().empty()) fs::create_directories(out_file.parent_path());
  const std::uint64_t config_hash = fnv1a_hash(model_text + "\x1f" + samples_text);
  write_file_atomic(out_file.string() + ".manifest",
                    write_manifest("fit", config_hash, 0, {out_file.filename().string()}));
  write_file_atomic(out_file, write_fit_result(fr, per_joint));
  std::cout << "r_squared " << format_double(fr.r_squared) << "\n";
  return kExitOk;
}

int cmd_verify(const fs::path& model_path, int trials, std::uint64_t seed, const fs::path& out_dir,
               const std::string& fault) {
  const std::string model_text = read_file(model_path);
  const ChainModel model = parse_model(model_text);
  VerifyOptions opt;
  opt.trials = trials;
  opt.seed = seed;
  if (fault == "tensor-assignment") opt.inject_tensor_fault = true;
  else if (!fault.empty()) throw ParseError("unknown fault '" + fault + "'", 0);

  fs::create_directories(out_dir);
  write_file_atomic(out_dir / "verify_manifest.txt",
                    write_manifest("verify", fnv1a_hash(model_text), seed, {"verify_report.txt"}));

  const auto reports = verify_model(model, opt);
  std::ostringstream os;
  os << "format_version " << kFormatVersion << "\n";
  bool all_ok = true;
  for (const auto& r : reports) {
    os << (r.passed() ? "PASS" : "FAIL") << ' ' << r.name << " trials " << r.trials
       << " max_error " << format_double(r.max_error) << " tolerance "
       << format_double(r.tolerance) << "\n";
    all_ok = all_ok && r.passed();
  }
  write_file_atomic(out_dir / "verify_report.txt", os.str());
  std::cout << os.str();
  return all_ok ? kExitOk : kExitPropertyFail;
}

int cmd_bench(int max_links, int repeats, std::uint64_t seed, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  write_file_atomic(out_dir / "bench_manifest.txt",
                    write_manifest("bench",
                                   fnv1a_hash(std::to_string(max_links) + "," +
                                              std::to_string(repeats)),
                                   seed, {"bench.csv"}));
  const BenchResult result = bench_regressor(max_links, repeats, seed);
  std::ostringstream os;
  os << "n,mean_us,std_us\n";
  for (const auto& row : result.rows)
    os << row.links << ',' << format_double(row.mean_us) << ',' << format_double(row.std_us)
       << "\n";
  write_file_atomic(out_dir / "bench.csv", os.str());
  std::cout << os.str();
  if (result.rows.size() >= 2)
    std::cout << "loglog_slope " << format_double(result.loglog_slope) << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Serial-chain dynamics, inertial parameter identification and computed-torque control"};
  app.require_subcommand(1);

  std::string model_path, scenario_path, samples_path;
  std::string out_dir = ".", out_file = "fit.txt";
  std::optional<double> alpha;
  std::string theta0_spec;
  int trials = 100;
  int max_links = 16;
  int repeats = 50;
  std::uint64_t seed = 1;
  std::string fault;

  auto* simulate = app.add_subcommand("simulate", "Run a scenario and write logs and metrics");
  simulate->add_option("model", model_path, "Model file")->required();
  simulate->add_option("scenario", scenario_path, "Scenario file")->required();
  simulate->add_option("-o,--out-dir", out_dir, "Output directory");

  auto* fit_cmd = app.add_subcommand("fit", "Offline least-squares fit of a sample CSV");
  fit_cmd->add_option("model", model_path, "Model file")->required();
  fit_cmd->add_option("samples", samples_path, "Samples CSV")->required();
  fit_cmd->add_option("-o,--out", out_file, "Fit result file");
  fit_cmd->add_option("--alpha", alpha, "Prior weight in (0,1); requires --theta0");
  fit_cmd->add_option("--theta0", theta0_spec,
                      "Nominal parameters: 'model' or a file with theta values");

  auto* verify = app.add_subcommand("verify", "Run the structural property suite on a model");
  verify->add_option("model", model_path, "Model file")->required();
  verify->add_option("--trials", trials, "Random trials per property");
  verify->add_option("--seed", seed, "RNG seed");
  verify->add_option("-o,--out-dir", out_dir, "Output directory");
  verify->add_option("--inject-fault", fault,
                     "Testing hook: corrupt a named stage (tensor-assignment)");

  auto* bench = app.add_subcommand("bench", "Time the regressor over chain sizes");
  bench->add_option("--max-links", max_links, "Largest chain size");
  bench->add_option("--repeats", repeats, "Timed repeats per size");
  bench->add_option("--seed", seed, "RNG seed");
  bench->add_option("-o,--out-dir", out_dir, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return kExitInputError;
  }

  try {
    if (simulate->parsed()) return cmd_simulate(model_path, scenario_path, out_dir);
    if (fit_cmd->parsed()) {
      if (alpha && theta0_spec.empty()) {
        std::cerr << "fit: --alpha requires --theta0\n";
        return kExitInputError;
      }
      if (alpha && !(*alpha > 0.0 && *alpha < 1.0)) {
        std::cerr << "fit: --alpha must lie in (0,1)\n";
        return kExitInputError;
      }
      return cmd_fit(model_path, samples_path, out_file, alpha, theta0_spec);
    }
    if (verify->parsed()) {
      if (trials <= 0) {
        std::cerr << "verify: --trials must be positive\n";
        return kExitInputError;
      }
      return cmd_verify(model_path, trials, seed, out_dir, fault);
    }
    if (bench->parsed()) {
      if (max_links < 2) {
        std::cerr << "bench: --max-links must be >= 2\n";
        return kExitInputError;
      }
      return cmd_bench(max_links, repeats, seed, out_dir);
    }
  } catch (const ParseError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const DegenerateSystemError& e) {
    std::cerr << "degenerate system: " << e.what() << "\n";
    return kExitDegenerate;
  } catch (const SimulationError& e) {
    std::cerr << "simulation failed: " << e.what() << "\n";
    return kExitRuntimeError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntimeError;
  }
  return kExitOk;
}
