#pragma once

// Deterministic fixed-step simulation of a ground-truth plant, analytic
// trajectory generators, seeded sensor noise, and the three scripted
// closed-loop experiment scenarios.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "svadyn/control.hpp"
#include "svadyn/dynamics.hpp"
#include "svadyn/identify.hpp"
#include "svadyn/model.hpp"

namespace svadyn {

enum class Integrator { rk4, semi_implicit_euler };

struct SimConfig {
  double dt = 1e-3;        // [s]
  double duration = 10.0;  // [s]
  Integrator integrator = Integrator::rk4;
  double noise_std_q = 0.0;
  double noise_std_dq = 0.0;
  double noise_std_u = 0.0;
  std::uint64_t seed = 0;
};

class SimulationError : public std::runtime_error {
 public:
  SimulationError(const std::string& what, std::size_t tick)
      : std::runtime_error(what + " (tick " + std::to_string(tick) + ")"), tick_index(tick) {}
  std::size_t tick_index;
};

/// One fixed-step integration step under zero-order-hold torque u.
inline std::pair<VecX, VecX> step(const ChainModel& model, const VecX& q, const VecX& dq,
                                  const VecX& u, double dt,
                                  Integrator integrator = Integrator::rk4,
                                  double h = kDefaultFdStep) {
  if (!(dt > 0.0)) throw std::invalid_argument("step: dt must be positive");
  if (integrator == Integrator::semi_implicit_euler) {
    const VecX ddq = forward_dynamics(model, q, dq, u, h);
    const VecX dq1 = dq + dt * ddq;
    return {q + dt * dq1, dq1};
  }
  const auto accel = [&](const VecX& qq, const VecX& vv) {
    return forward_dynamics(model, qq, vv, u, h);
  };
  const VecX k1q = dq, k1v = accel(q, dq);
  const VecX k2q = dq + 0.5 * dt * k1v, k2v = accel(q + 0.5 * dt * k1q, dq + 0.5 * dt * k1v);
  const VecX k3q = dq + 0.5 * dt * k2v, k3v = accel(q + 0.5 * dt * k2q, dq + 0.5 * dt * k2v);
  const VecX k4q = dq + dt * k3v, k4v = accel(q + dt * k3q, dq + dt * k3v);
  return {q + (dt / 6.0) * (k1q + 2.0 * k2q + 2.0 * k3q + k4q),
          dq + (dt / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)};
}

// ---------------------------------------------------------------------------
// Trajectory generators.

struct SinusoidSpec {
  VecX amplitude;
  VecX frequency;  // [Hz]
  VecX phase;      // [rad]
  VecX offset;     // [rad]
};

inline TrajectoryPoint sinusoid_trajectory(const SinusoidSpec& spec, double t) {
  const Eigen::Index n = spec.amplitude.size();
  if (spec.frequency.size() != n || spec.phase.size() != n || spec.offset.size() != n)
    throw std::invalid_argument("sinusoid_trajectory: inconsistent lengths");
  TrajectoryPoint p;
  p.q_des.resize(n);
  p.dq_des.resize(n);
  p.ddq_des.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double w = 2.0 * std::numbers::pi * spec.frequency[i];
    const double arg = w * t + spec.phase[i];
    p.q_des[i] = spec.offset[i] + spec.amplitude[i] * std::sin(arg);
    p.dq_des[i] = spec.amplitude[i] * w * std::cos(arg);
    p.ddq_des[i] = -spec.amplitude[i] * w * w * std::sin(arg);
  }
  return p;
}

struct TicktockSpec {
  VecX pose_a;
  VecX pose_b;
  double period = 4.0;  // [s]; one full there-and-back cycle
};

/// Minimum-jerk interpolation alternating pose_a -> pose_b -> pose_a, at rest
/// at each end so q, qdot, qddot are continuous across segment boundaries.
inline TrajectoryPoint ticktock_trajectory(const TicktockSpec& spec, double t) {
  if (!(spec.period > 0.0)) throw std::invalid_argument("ticktock_trajectory: period must be positive");
  if (spec.pose_a.size() != spec.pose_b.size())
    throw std::invalid_argument("ticktock_trajectory: pose length mismatch");
  const double half = 0.5 * spec.period;
  double local = std::fmod(t, spec.period);
  if (local < 0.0) local += spec.period;
  const bool forward = local < half;
  const double x = (forward ? local : local - half) / half;
  const double s = ((6.0 * x - 15.0) * x + 10.0) * x * x * x;
  const double ds = ((30.0 * x - 60.0) * x + 30.0) * x * x / half;
  const double dds = ((120.0 * x - 180.0) * x + 60.0) * x / (half * half);
  const VecX& from = forward ? spec.pose_a : spec.pose_b;
  const VecX& to = forward ? spec.pose_b : spec.pose_a;
  TrajectoryPoint p;
  p.q_des = from + s * (to - from);
  p.dq_des = ds * (to - from);
  p.ddq_des = dds * (to - from);
  return p;
}

// ---------------------------------------------------------------------------
// Seeded Gaussian noise (Box-Muller over mt19937_64 bits, so runs are
// bit-reproducible across standard library implementations).

class GaussianSampler {
 public:
  explicit GaussianSampler(std::uint64_t seed) : eng_(seed) {}

  double operator()() {
    if (have_) {
      have_ = false;
      return cached_;
    }
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    cached_ = r * std::sin(a);
    have_ = true;
    return r * std::cos(a);
  }

 private:
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }
  std::mt19937_64 eng_;
  bool have_ = false;
  double cached_ = 0.0;
};

// ---------------------------------------------------------------------------
// Scenarios.

enum class ScenarioKind { double_pendulum_offline, leg_offline_growing, arm_online_gated };
enum class AccelSource { ground_truth, filtered };
enum class TrajKind { sinusoid, ticktock };

/// Deliberately-off nominal parameters: masses scaled, centers of mass
/// scaled, rotational entries scaled. Used as the wrong initial guess in the
/// gated-control scenario.
inline ThetaVector perturbed_nominal(const ChainModel& model, double mass_scale, double com_scale,
                                     double inertia_scale) {
  ThetaVector theta = theta_from_model(model);
  for (std::size_t i = 0; i < model.dof(); ++i) {
    auto block = theta.values.segment<kParamsPerLink>(
        static_cast<Eigen::Index>(i) * kParamsPerLink);
    for (const int j : {0, 1, 2, 5, 6, 8}) block[j] *= inertia_scale;
    for (const int j : {3, 4, 7}) block[j] *= mass_scale * com_scale;
    block[9] *= mass_scale;
  }
  return theta;
}

struct Scenario {
  std::string name;
  ScenarioKind kind = ScenarioKind::double_pendulum_offline;
  ChainModel plant;  // carries the true parameters
  std::string model_path;  // as referenced by the scenario file, informational
  SimConfig sim;
  TrajKind traj_kind = TrajKind::sinusoid;
  SinusoidSpec sinusoid;
  TicktockSpec ticktock;
  ControllerConfig controller;
  OnlineEstimatorConfig estimator;
  ThetaVector theta_nominal;  // controller-side nominal / prior parameters
  AccelSource accel_source = AccelSource::ground_truth;
  double ema_lambda = 0.2;

  TrajectoryPoint reference(double t) const {
    return traj_kind == TrajKind::sinusoid ? sinusoid_trajectory(sinusoid, t)
                                           : ticktock_trajectory(ticktock, t);
  }
};

struct ControllerLogRow {
  double t = 0.0;
  ModelSource model_used = ModelSource::nominal;
  VecX q_des;
  VecX q;
  VecX u_cmd;
  bool saturated = false;
};

/// Windows excluded from the tracking-bias statistics: the initial PD
/// transient and the ticks right after a model switch.
inline constexpr double kBiasWarmup = 2.0;  // [s]
inline constexpr double kBiasSettle = 1.0;  // [s]

struct ScenarioMetrics {
  Eigen::Index n = 0;
  std::size_t ticks = 0;
  double r2_overall = std::numeric_limits<double>::quiet_NaN();
  VecX r2_joint;
  double uhat_minus_u_inf = std::numeric_limits<double>::quiet_NaN();
  double switch_time = -1.0;  // [s]; -1 when the identified model was never used
  double r2_at_switch = std::numeric_limits<double>::quiet_NaN();
  int switch_count = 0;
  VecX bias_before;  // mean (q_des - q) per joint before the switch
  VecX bias_after;
  std::uint64_t fits_performed = 0;
  bool final_model_valid = false;
};

struct ScenarioResult {
  std::vector<Sample> samples;
  std::vector<ControllerLogRow> controller_log;
  ScenarioMetrics metrics;
};

inline ScenarioResult run_scenario(const Scenario& scn, const SimConfig& cfg) {
  check_model(scn.plant);
  const auto n = static_cast<Eigen::Index>(scn.plant.dof());
  const auto ticks = static_cast<std::size_t>(std::llround(cfg.duration / cfg.dt));

  ScenarioResult out;
  out.metrics.n = n;
  out.metrics.ticks = ticks;
  out.samples.reserve(ticks);
  out.controller_log.reserve(ticks);

  const TrajectoryPoint start = scn.reference(0.0);
  VecX q = start.q_des;
  VecX dq = start.dq_des;

  GaussianSampler noise(cfg.seed);
  AccelFilter ema(scn.ema_lambda);
  const ThetaVector theta_true = theta_from_model(scn.plant);
  const bool online = scn.kind != ScenarioKind::double_pendulum_offline;
  std::optional<OnlineEstimator> estimator;
  if (online) estimator.emplace(scn.plant, scn.theta_nominal, scn.estimator);
  double next_est_t = scn.estimator.update_period;
  ModelSource prev_used = ModelSource::nominal;

  const auto add_noise = [&](const VecX& v, double std) {
    if (std == 0.0) return v;
    VecX out_v = v;
    for (Eigen::Index i = 0; i < out_v.size(); ++i) out_v[i] += std * noise();
    return out_v;
  };

  for (std::size_t tick = 0; tick < ticks; ++tick) {
    const double t = static_cast<double>(tick) * cfg.dt;
    const VecX q_m = add_noise(q, cfg.noise_std_q);
    const VecX dq_m = add_noise(dq, cfg.noise_std_dq);
    ema.step(dq_m, cfg.dt);

    const TrajectoryPoint ref = scn.reference(t);
    ControlStep ctrl;
    if (scn.kind == ScenarioKind::arm_online_gated) {
      ctrl = gated_controller_step(scn.plant, scn.controller, scn.theta_nominal,
                                   estimator->snapshot(), ref, q_m, dq_m);
    } else {
      // Offline data collection runs the plant's own parameters so the chain
      // tracks the excitation trajectory.
      ctrl.ddq_cmd = pd_acceleration(scn.controller, ref, q_m, dq_m);
      ctrl.cmd = computed_torque(scn.plant, theta_true, q_m, dq_m, ctrl.ddq_cmd,
                                 scn.controller.torque_limits);
      ctrl.model_used = ModelSource::nominal;
    }
    const VecX& u_apply = ctrl.cmd.u;

    VecX ddq_log;
    try {
      ddq_log = scn.accel_source == AccelSource::ground_truth
                    ? forward_dynamics(scn.plant, q, dq, u_apply)
                    : ema.value();
    } catch (const SingularDynamicsError& e) {
      throw SimulationError(e.what(), tick);
    }

    Sample sample;
    sample.t = t;
    sample.state = {q_m, dq_m, ddq_log};
    sample.u = add_noise(u_apply, cfg.noise_std_u);
    out.samples.push_back(sample);
    out.controller_log.push_back({t, ctrl.model_used, ref.q_des, q_m, ctrl.cmd.u,
                                  ctrl.cmd.saturated});

    if (ctrl.model_used != prev_used) {
      ++out.metrics.switch_count;
      if (ctrl.model_used == ModelSource::identified && out.metrics.switch_time < 0.0) {
        out.metrics.switch_time = t;
        if (online) out.metrics.r2_at_switch = estimator->snapshot()->r_squared;
      }
      prev_used = ctrl.model_used;
    }

    if (online && t >= next_est_t - 0.5 * cfg.dt) {
      // Saturated ticks break U = K and are kept out of the buffers.
      if (!ctrl.cmd.saturated) estimator->add_sample(sample);
      next_est_t += scn.estimator.update_period;
    }

    try {
      std::tie(q, dq) = step(scn.plant, q, dq, u_apply, cfg.dt, cfg.integrator);
    } catch (const SingularDynamicsError& e) {
      throw SimulationError(e.what(), tick);
    }
  }

  // Metrics.
  auto& m = out.metrics;
  if (!out.samples.empty()) {
    if (scn.kind == ScenarioKind::double_pendulum_offline) {
      const auto sys = stack(scn.plant, out.samples);
      const FitResult fr = fit(sys);
      m.r2_overall = fr.r_squared;
      m.r2_joint = per_joint_r_squared(sys, fr.theta_hat);
      m.uhat_minus_u_inf = (sys.U - sys.Y * fr.theta_hat.values).lpNorm<Eigen::Infinity>();
    } else {
      const auto snap = estimator->snapshot();
      m.fits_performed = estimator->fits_performed();
      m.final_model_valid = snap->model_valid;
      if (m.fits_performed > 0) {
        m.r2_overall = snap->r_squared;
        const auto sys = stack(scn.plant, out.samples);
        m.r2_joint = per_joint_r_squared(sys, snap->theta_hat);
      }
    }

    // Tracking bias before/after the first switch to the identified model.
    if (m.switch_time >= 0.0) {
      m.bias_before = VecX::Zero(n);
      m.bias_after = VecX::Zero(n);
      std::size_t count_before = 0, count_after = 0;
      for (const auto& row : out.controller_log) {
        if (row.t >= kBiasWarmup && row.t < m.switch_time) {
          m.bias_before += row.q_des - row.q;
          ++count_before;
        } else if (row.t >= m.switch_time + kBiasSettle) {
          m.bias_after += row.q_des - row.q;
          ++count_after;
        }
      }
      if (count_before > 0) m.bias_before /= static_cast<double>(count_before);
      if (count_after > 0) m.bias_after /= static_cast<double>(count_after);
    }
  }
  return out;
}

}  // namespace svadyn
