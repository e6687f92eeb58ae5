// Acceptance suite: one check per release criterion, each printed as a
// single PASS/FAIL line with its measured margin. Exits with the number of
// failed criteria.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "oracle_planar.hpp"
#include "subprocess.hpp"
#include "svadyn/svadyn.hpp"

namespace fs = std::filesystem;
using namespace svadyn;

namespace {

const std::string cli = SVADYN_CLI_PATH;
const fs::path source_dir = SVADYN_SOURCE_DIR;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double rms(const std::vector<Sample>& samples, int group) {
  double acc = 0.0;
  std::size_t count = 0;
  for (const auto& s : samples) {
    const VecX& v = group == 0 ? s.state.q : group == 1 ? s.state.dq : s.u;
    acc += v.squaredNorm();
    count += static_cast<std::size_t>(v.size());
  }
  return std::sqrt(acc / static_cast<double>(count));
}

// --- criterion 1: regressor defining identity --------------------------------

Outcome criterion_regressor_identity() {
  std::mt19937_64 rng(101);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t links = 1 + trial % 6;
    const ChainModel m = random_chain(rng, links);
    const JointState s = random_state(rng, static_cast<Eigen::Index>(links));
    const ThetaVector theta = random_theta(rng, links);
    const VecX lhs = compute_regressor(m, s).matrix * theta.values;
    const VecX rhs = inverse_dynamics(model_with_theta(m, theta), s);
    worst = std::max(worst, (lhs - rhs).lpNorm<Eigen::Infinity>());
  }
  std::ostringstream os;
  os << "max |Y theta - K| = " << worst << " (limit 1e-9, 1000 random chains b in 1..6)";
  return {worst < 1e-9, os.str()};
}

// --- criterion 2: closed-form oracle equivalence ------------------------------

Outcome criterion_oracle_equivalence() {
  const ChainModel m = parse_model(read_file(source_dir / "models/pendulum2.model"));
  oracle::PlanarTwoLink p;
  p.l1 = 0.5;
  p.g = 9.81;
  p.m1 = 1.4;
  p.a1 = 0.21;
  p.b1 = 0.03;
  p.izz1 = 0.02;
  p.m2 = 0.9;
  p.a2 = 0.18;
  p.b2 = -0.02;
  p.izz2 = 0.011;
  // Guard against drift between the shipped file and the oracle constants.
  const LinkParams expect0 =
      params_from_physical(p.m1, Vec3(p.a1, p.b1, 0), Vec3(p.izz1, p.izz1, p.izz1).asDiagonal());
  if ((m.params[0].theta - expect0.theta).cwiseAbs().maxCoeff() > 1e-12)
    return {false, "shipped pendulum model departs from the oracle constants"};

  std::mt19937_64 rng(202);
  std::uniform_real_distribution<double> q_dist(-3, 3), dq_dist(-2, 2);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const Eigen::Vector2d q(q_dist(rng), q_dist(rng));
    const Eigen::Vector2d dq(dq_dist(rng), dq_dist(rng));
    worst = std::max(worst, (mass_matrix(m, q) - p.mass(q)).cwiseAbs().maxCoeff());
    worst = std::max(worst, ((coriolis_matrix(m, q, dq) * dq).eval() -
                             (p.coriolis(q, dq) * dq).eval())
                                .cwiseAbs()
                                .maxCoeff());
    worst = std::max(worst, (gravity_vector(m, q) - p.gravity(q)).cwiseAbs().maxCoeff());
  }
  std::ostringstream os;
  os << "max |D, C qdot, G deviation| = " << worst << " (limit 1e-6, 1000 states)";
  return {worst < 1e-6, os.str()};
}

// --- criteria 3, 4, 9 share the pendulum scenario -----------------------------

struct PendulumRuns {
  Scenario scenario;
  ScenarioResult noiseless;
  StackedSystem sys;
  FitResult fit_result;
};

PendulumRuns& pendulum_runs() {
  static PendulumRuns runs = [] {
    PendulumRuns r;
    const ChainModel plant = parse_model(read_file(source_dir / "models/pendulum2.model"));
    r.scenario = parse_scenario(
        read_file(source_dir / "scenarios/double_pendulum_offline.scn"), plant);
    r.noiseless = run_scenario(r.scenario, r.scenario.sim);
    r.sys = stack(plant, r.noiseless.samples);
    r.fit_result = fit(r.sys);
    return r;
  }();
  return runs;
}

Outcome criterion_offline_fit() {
  auto& runs = pendulum_runs();
  const VecX per_joint = per_joint_r_squared(runs.sys, runs.fit_result.theta_hat);
  const double uhat_err =
      (runs.sys.U - runs.sys.Y * runs.fit_result.theta_hat.values).lpNorm<Eigen::Infinity>();

  SimConfig noisy = runs.scenario.sim;
  noisy.noise_std_q = 0.01 * rms(runs.noiseless.samples, 0);
  noisy.noise_std_dq = 0.01 * rms(runs.noiseless.samples, 1);
  noisy.noise_std_u = 0.01 * rms(runs.noiseless.samples, 2);
  const ScenarioResult noisy_run = run_scenario(runs.scenario, noisy);
  const FitResult noisy_fit = fit(stack(runs.scenario.plant, noisy_run.samples));

  std::ostringstream os;
  os << "noiseless per-joint R^2 = [" << per_joint.transpose() << "], |Uhat-U|_inf = " << uhat_err
     << ", noisy R^2 = " << noisy_fit.r_squared;
  const bool pass = per_joint.minCoeff() >= 0.999 && uhat_err < 1e-6 &&
                    noisy_fit.r_squared >= 0.95;
  return {pass, os.str()};
}

Outcome criterion_commanded_acceleration() {
  auto& runs = pendulum_runs();
  std::mt19937_64 rng(404);
  std::uniform_int_distribution<std::size_t> pick(0, runs.noiseless.samples.size() - 1);
  std::uniform_real_distribution<double> cmd(-3, 3);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto& s = runs.noiseless.samples[pick(rng)];
    const VecX ddq_cmd = VecX::NullaryExpr(2, [&](Eigen::Index) { return cmd(rng); });
    const TorqueCommand u = computed_torque(runs.scenario.plant, runs.fit_result.theta_hat,
                                            s.state.q, s.state.dq, ddq_cmd);
    const VecX ddq = forward_dynamics(runs.scenario.plant, s.state.q, s.state.dq, u.u);
    worst = std::max(worst, (ddq - ddq_cmd).lpNorm<Eigen::Infinity>());
  }
  std::ostringstream os;
  os << "max |qddot - qddot_cmd| = " << worst << " (limit 1e-5, 100 commands)";
  return {worst < 1e-5, os.str()};
}

Outcome criterion_torque_equivalence() {
  auto& runs = pendulum_runs();
  std::mt19937_64 rng(909);
  std::uniform_real_distribution<double> prior_dist(-1.0, 1.0);
  const ThetaVector theta0{
      VecX::NullaryExpr(20, [&](Eigen::Index) { return prior_dist(rng); })};
  const FitResult prior_fit = fit_with_prior(runs.sys, theta0, 0.999);

  std::uniform_int_distribution<std::size_t> pick(0, runs.noiseless.samples.size() - 1);
  std::uniform_real_distribution<double> cmd(-3, 3);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto& s = runs.noiseless.samples[pick(rng)];
    const VecX ddq_cmd = VecX::NullaryExpr(2, [&](Eigen::Index) { return cmd(rng); });
    const VecX u1 = computed_torque(runs.scenario.plant, runs.fit_result.theta_hat, s.state.q,
                                    s.state.dq, ddq_cmd)
                        .u;
    const VecX u2 =
        computed_torque(runs.scenario.plant, prior_fit.theta_hat, s.state.q, s.state.dq, ddq_cmd)
            .u;
    worst = std::max(worst, (u1 - u2).lpNorm<Eigen::Infinity>());
  }
  std::ostringstream os;
  os << "max |U_minnorm - U_prior| = " << worst << " (limit 1e-6, alpha = 0.999)";
  return {worst < 1e-6, os.str()};
}

// --- criterion 5: planar identifiability --------------------------------------

Outcome criterion_planar_identifiability() {
  const ChainModel m = parse_model(read_file(source_dir / "models/pendulum2.model"));
  std::mt19937_64 rng(505);
  std::uniform_real_distribution<double> q_dist(-3, 3), dq_dist(-2, 2), ddq_dist(-3, 3);
  std::vector<JointState> states;
  states.reserve(10000);
  for (int i = 0; i < 10000; ++i) {
    JointState s;
    s.q = VecX::NullaryExpr(2, [&](Eigen::Index) { return q_dist(rng); });
    s.dq = VecX::NullaryExpr(2, [&](Eigen::Index) { return dq_dist(rng); });
    s.ddq = VecX::NullaryExpr(2, [&](Eigen::Index) { return ddq_dist(rng); });
    states.push_back(std::move(s));
  }
  const auto cols = identifiable_columns(m, states, 1e-8);
  std::array<int, 2> per_link{0, 0};
  for (const auto c : cols) per_link[static_cast<std::size_t>(c / kParamsPerLink)]++;
  std::ostringstream os;
  os << "identifiable columns per link = [" << per_link[0] << ", " << per_link[1] << "] (want 3/3)";
  return {per_link[0] == 3 && per_link[1] == 3, os.str()};
}

// --- criterion 6: gated online arm scenario -----------------------------------

Outcome criterion_arm_online() {
  const ChainModel plant = parse_model(read_file(source_dir / "models/arm4.model"));
  const Scenario scn =
      parse_scenario(read_file(source_dir / "scenarios/arm_online_gated.scn"), plant);
  const ScenarioResult result = run_scenario(scn, scn.sim);
  const auto& m = result.metrics;
  bool bias_ok = m.bias_before.size() == 4 && m.bias_after.size() == 4;
  for (Eigen::Index j = 0; bias_ok && j < 4; ++j)
    bias_ok = std::abs(m.bias_after[j]) < std::abs(m.bias_before[j]);
  const bool switch_ok = std::abs(m.switch_time - 50.0 / 3.0) <= 1.0;
  const bool r2_ok = m.r2_at_switch >= 0.95;
  std::ostringstream os;
  os << "switch at " << m.switch_time << " s (want 16.7 +- 1.0), R^2 at switch = "
     << m.r2_at_switch << ", |bias| before = [" << m.bias_before.cwiseAbs().transpose()
     << "], after = [" << m.bias_after.cwiseAbs().transpose() << "]";
  return {switch_ok && r2_ok && bias_ok, os.str()};
}

// --- criterion 7: quadratic regressor cost ------------------------------------

fs::path scratch_dir() {
  const fs::path dir =
      fs::temp_directory_path() / ("svadyn_acceptance_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  return dir;
}

Outcome criterion_complexity() {
  const auto r = testutil::run_command(cli + " bench --max-links 32 --repeats 30 --seed 7 -o " +
                                       scratch_dir().string());
  if (r.exit_code != 0) return {false, "bench command failed: " + r.output};
  const auto pos = r.output.find("loglog_slope ");
  if (pos == std::string::npos) return {false, "bench output lacks a slope line"};
  const double slope = std::stod(r.output.substr(pos + 13));
  std::ostringstream os;
  os << "log-log slope = " << slope << " for n = 2..32 (want within [1.6, 2.4])";
  return {slope >= 1.6 && slope <= 2.4, os.str()};
}

// --- criterion 8: structural invariants under the verify command --------------

Outcome criterion_structural_suite() {
  const auto model = (source_dir / "models/pendulum2.model").string();
  const auto r = testutil::run_command(cli + " verify " + model + " --trials 100 --seed 17 -o " +
                                       scratch_dir().string());
  std::ostringstream os;
  std::istringstream is(r.output);
  std::string line;
  std::string summary;
  while (std::getline(is, line))
    if (line.rfind("PASS", 0) == 0 || line.rfind("FAIL", 0) == 0) {
      summary += line.substr(0, line.find(" trials")) + "; ";
    }
  os << "verify --trials 100: exit " << r.exit_code << " [" << summary << "]";
  return {r.exit_code == 0, os.str()};
}

}  // namespace

int main() {
  struct Entry {
    int id;
    const char* name;
    Outcome (*run)();
  };
  const Entry entries[] = {
      {1, "regressor defining identity", criterion_regressor_identity},
      {2, "closed-form oracle equivalence", criterion_oracle_equivalence},
      {3, "offline pendulum fit replication", criterion_offline_fit},
      {4, "commanded acceleration realized", criterion_commanded_acceleration},
      {5, "planar identifiability (3 per link)", criterion_planar_identifiability},
      {6, "gated online arm scenario", criterion_arm_online},
      {7, "quadratic regressor cost", criterion_complexity},
      {8, "structural invariants suite", criterion_structural_suite},
      {9, "non-uniqueness torque safety", criterion_torque_equivalence},
  };
  const double runtime_limit[] = {0, 30.0, 10.0, 0, 0, 0, 0, 60.0, 0, 0};  // indexed by id

  int failures = 0;
  for (const auto& e : entries) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = e.run();
    } catch (const std::exception& ex) {
      outcome = {false, std::string("exception: ") + ex.what()};
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const double limit = runtime_limit[e.id];
    bool pass = outcome.pass;
    std::string note = outcome.detail;
    if (limit > 0.0) {
      if (seconds >= limit) pass = false;
      note += " [runtime " + std::to_string(seconds) + " s, limit " +
              std::to_string(limit) + " s]";
    }
    std::printf("[%s] criterion %d: %s — %s (%.1f s)\n", pass ? "PASS" : "FAIL", e.id, e.name,
                note.c_str(), seconds);
    std::fflush(stdout);
    if (!pass) ++failures;
  }
  fs::remove_all(fs::temp_directory_path() / ("svadyn_acceptance_" + std::to_string(::getpid())));
  if (failures == 0) std::printf("all %zu criteria passed\n", std::size(entries));
  else std::printf("%d criteria FAILED\n", failures);
  return failures;
}
