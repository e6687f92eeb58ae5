#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <random>

#include "svadyn/io.hpp"
#include "svadyn/random_models.hpp"

using namespace svadyn;
using Catch::Approx;

namespace {

std::mt19937_64 rng(60601);

}  // namespace

TEST_CASE("doubles are formatted with lossless round-trip precision") {
  std::uniform_real_distribution<double> d(-1e3, 1e3);
  for (int i = 0; i < 1000; ++i) {
    const double v = d(rng) * std::pow(10.0, i % 7 - 3);
    REQUIRE(std::stod(format_double(v)) == v);
  }
  REQUIRE(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
}

TEST_CASE("sample CSV round-trips losslessly") {
  const ChainModel m = random_chain(rng, 3);
  std::vector<Sample> samples;
  for (int i = 0; i < 25; ++i) {
    Sample s;
    s.t = 1e-3 * i;
    s.state = random_state(rng, 3);
    s.u = inverse_dynamics(m, s.state);
    samples.push_back(std::move(s));
  }
  const std::string csv = write_samples_csv(samples, 3);
  REQUIRE(csv.rfind("t,q1,q2,q3,dq1,dq2,dq3,ddq1,ddq2,ddq3,u1,u2,u3\n", 0) == 0);
  const auto back = read_samples_csv(csv, 3);
  REQUIRE(back.size() == samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    REQUIRE(back[i].t == samples[i].t);
    REQUIRE(back[i].state.q == samples[i].state.q);
    REQUIRE(back[i].state.dq == samples[i].state.dq);
    REQUIRE(back[i].state.ddq == samples[i].state.ddq);
    REQUIRE(back[i].u == samples[i].u);
  }
}

TEST_CASE("sample CSV schema errors carry line numbers") {
  REQUIRE_THROWS_AS(read_samples_csv("", 2), ParseError);
  REQUIRE_THROWS_AS(read_samples_csv("t,q1,dq1,ddq1,u1\n", 2), ParseError);
  const std::string good_header = "t,q1,q2,dq1,dq2,ddq1,ddq2,u1,u2\n";
  try {
    read_samples_csv(good_header + "0,1,2,3\n", 2);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    REQUIRE(e.line_number == 2);
  }
  REQUIRE_THROWS_AS(read_samples_csv(good_header + "0,1,2,3,4,5,6,7,oops\n", 2), ParseError);
}

TEST_CASE("controller CSV has the documented schema") {
  ControllerLogRow row;
  row.t = 0.25;
  row.model_used = ModelSource::identified;
  row.q_des = Eigen::Vector2d(0.1, 0.2);
  row.q = Eigen::Vector2d(0.15, 0.21);
  row.u_cmd = Eigen::Vector2d(1.5, -2.5);
  row.saturated = true;
  const std::string csv = write_controller_csv({row}, 2);
  REQUIRE(csv.rfind("t,model_used,q_des1,q_des2,q1,q2,u_cmd1,u_cmd2,saturated\n", 0) == 0);
  REQUIRE(csv.find("identified") != std::string::npos);
  REQUIRE(csv.back() == '\n');
  REQUIRE(csv.find(",1\n") != std::string::npos);
}

TEST_CASE("fit result files round-trip the theta line") {
  FitResult fr;
  std::uniform_real_distribution<double> d(-5, 5);
  fr.theta_hat = ThetaVector{VecX::NullaryExpr(20, [&](Eigen::Index) { return d(rng); })};
  fr.r_squared = 0.998;
  fr.residual_norm = 0.12;
  fr.singular_values = VecX::LinSpaced(5, 5.0, 1.0);
  const std::string text = write_fit_result(fr, Eigen::Vector2d(0.999, 0.997));
  const VecX theta = read_theta(text);
  REQUIRE(theta == fr.theta_hat.values);

  // Bare numeric files also parse.
  REQUIRE(read_theta("1 2 3 4.5").size() == 4);
  REQUIRE_THROWS_AS(read_theta("r_squared 1\n"), ParseError);
}

TEST_CASE("scenario parsing") {
  const ChainModel plant = parse_model(
      "format_version 1\ngravity 0 -9.81 0\nvertical 0 1 0\n"
      "link a axis 0 0 1 offset 0 0 0 theta 0 0 0 0 0 0 0 0 0.05 1\n"
      "link b axis 0 0 1 offset 0.4 0 0 theta 0 0 0 0 0 0 0 0 0.02 0.7\n");
  const std::string text = R"(format_version 1
name double_pendulum_offline
model ../models/pendulum2.model
duration 2.5
dt 0.001
integrator rk4
seed 42
noise_std_q 0.001
accel_source true
trajectory sinusoid
traj_amplitude 0.6 0.8
traj_frequency 0.4 0.7
traj_phase 0 0.9
traj_offset 0.2 -0.3
controller_kp 100 100
controller_kd 20 20
torque_limits 80 80
)";
  const Scenario scn = parse_scenario(text, plant);
  REQUIRE(scn.kind == ScenarioKind::double_pendulum_offline);
  REQUIRE(scn.sim.duration == Approx(2.5));
  REQUIRE(scn.sim.seed == 42);
  REQUIRE(scn.sim.noise_std_q == Approx(0.001));
  REQUIRE(scn.sinusoid.amplitude[1] == Approx(0.8));
  REQUIRE(scn.controller.torque_limits[0] == Approx(80.0));
  REQUIRE(scn.model_path == "../models/pendulum2.model");

  SECTION("unknown keys and bad names are rejected") {
    REQUIRE_THROWS_AS(parse_scenario("format_version 1\nname nope\n", plant), ParseError);
    REQUIRE_THROWS_AS(parse_scenario(text + "mystery 1\n", plant), ParseError);
  }
  SECTION("theta0 perturb populates a scaled nominal") {
    const Scenario p = parse_scenario(text + "theta0 perturb 1.5 1.0 1.0\n", plant);
    REQUIRE(p.theta_nominal.values[9] == Approx(1.5));
    REQUIRE(p.theta_nominal.values[19] == Approx(0.7 * 1.5));
  }
  SECTION("missing trajectory rows are caught") {
    REQUIRE_THROWS_AS(
        parse_scenario("format_version 1\nname double_pendulum_offline\n"
                       "controller_kp 1 1\ncontroller_kd 1 1\n",
                       plant),
        ParseError);
  }
}

TEST_CASE("metrics output is stable key-value text") {
  ScenarioMetrics m;
  m.n = 2;
  m.ticks = 100;
  m.r2_overall = 0.9991;
  m.r2_joint = Eigen::Vector2d(0.9995, 0.9987);
  m.switch_time = 16.6667;
  m.switch_count = 1;
  const std::string text = write_metrics("arm_online_gated", m);
  REQUIRE(text.find("format_version 1\n") == 0);
  REQUIRE(text.find("scenario arm_online_gated\n") != std::string::npos);
  REQUIRE(text.find("r2_joint_2 ") != std::string::npos);
  REQUIRE(text.find("switch_count 1\n") != std::string::npos);
}

TEST_CASE("manifest is written atomically with a stable hash") {
  const std::string manifest = write_manifest("simulate", fnv1a_hash("abc"), 7, {"a.csv"});
  REQUIRE(manifest.find("command simulate\n") != std::string::npos);
  REQUIRE(manifest.find("seed 7\n") != std::string::npos);
  REQUIRE(fnv1a_hash("abc") == fnv1a_hash("abc"));
  REQUIRE(fnv1a_hash("abc") != fnv1a_hash("abd"));

  const auto dir = std::filesystem::temp_directory_path() / "svadyn_io_test";
  std::filesystem::create_directories(dir);
  write_file_atomic(dir / "m.txt", manifest);
  REQUIRE(read_file(dir / "m.txt") == manifest);
  REQUIRE_FALSE(std::filesystem::exists(dir / "m.txt.tmp"));
  std::filesystem::remove_all(dir);
}
