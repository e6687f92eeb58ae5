#pragma once

// Structural property suite run by the `verify` command: regressor defining
// identity, mass-matrix symmetry, skew-symmetry of dD/dt - 2C, energy
// conservation of the unforced plant, and power invariance of the spatial
// transforms.

#include <string>
#include <vector>

#include "svadyn/dynamics.hpp"
#include "svadyn/model.hpp"
#include "svadyn/random_models.hpp"
#include "svadyn/regressor.hpp"
#include "svadyn/sim.hpp"

namespace svadyn {

struct PropertyReport {
  std::string name;
  double max_error = 0.0;
  double tolerance = 0.0;
  int trials = 0;
  bool passed() const { return max_error <= tolerance; }
};

struct VerifyOptions {
  int trials = 100;
  std::uint64_t seed = 1;
  /// Test hook: corrupt the tensor assignment inside the regressor-identity
  /// property so the failure path of the suite can be exercised.
  bool inject_tensor_fault = false;
};

inline std::vector<PropertyReport> verify_model(const ChainModel& model,
                                                const VerifyOptions& opt) {
  if (opt.trials <= 0) throw std::invalid_argument("verify_model: trials must be positive");
  std::mt19937_64 rng(opt.seed);
  const auto n = static_cast<Eigen::Index>(model.dof());
  std::vector<PropertyReport> reports;

  {
    PropertyReport r{"regressor_identity", 0.0, 1e-9, opt.trials};
    for (int trial = 0; trial < opt.trials; ++trial) {
      const JointState state = random_state(rng, n);
      const ThetaVector theta = random_theta(rng, model.dof());
      MatX y = compute_regressor(model, state).matrix;
      if (opt.inject_tensor_fault) y.leftCols(kParamsPerLink) = -y.leftCols(kParamsPerLink);
      const VecX lhs = y * theta.values;
      const VecX rhs = inverse_dynamics(model_with_theta(model, theta), state);
      r.max_error = std::max(r.max_error, (lhs - rhs).lpNorm<Eigen::Infinity>());
    }
    reports.push_back(r);
  }

  {
    PropertyReport r{"mass_matrix_symmetry", 0.0, 1e-9, opt.trials};
    for (int trial = 0; trial < opt.trials; ++trial) {
      const JointState state = random_state(rng, n);
      const MatX d = mass_matrix(model, state.q);
      r.max_error = std::max(r.max_error, (d - d.transpose()).cwiseAbs().maxCoeff());
    }
    reports.push_back(r);
  }

  {
    // dD/dt - 2C skew-symmetric, with dD/dt by finite differences along the
    // motion direction.
    PropertyReport r{"skew_symmetry", 0.0, 1e-5, opt.trials};
    const double delta = 1e-6;
    for (int trial = 0; trial < opt.trials; ++trial) {
      const JointState state = random_state(rng, n);
      const MatX d_dot = (mass_matrix(model, state.q + delta * state.dq) -
                          mass_matrix(model, state.q - delta * state.dq)) /
                         (2.0 * delta);
      const MatX s = d_dot - 2.0 * coriolis_matrix(model, state.q, state.dq);
      r.max_error = std::max(r.max_error, (s + s.transpose()).cwiseAbs().maxCoeff());
    }
    reports.push_back(r);
  }

  {
    // Unforced, undamped 10 s simulation conserves total energy.
    PropertyReport r{"energy_conservation", 0.0, 1e-6, opt.trials};
    std::uniform_real_distribution<double> q_dist(-1.5, 1.5);
    std::uniform_real_distribution<double> dq_dist(-1.0, 1.0);
    const double dt = 1e-3;
    const auto steps = static_cast<std::size_t>(10.0 / dt);
    const VecX u = VecX::Zero(n);
    for (int trial = 0; trial < opt.trials; ++trial) {
      VecX q = VecX::NullaryExpr(n, [&](Eigen::Index) { return q_dist(rng); });
      VecX dq = VecX::NullaryExpr(n, [&](Eigen::Index) { return dq_dist(rng); });
      const double e0 = total_energy(model, q, dq);
      double max_drift = 0.0;
      // Drift is measured against the total energy scale, which for a chain
      // at rest near the datum can be arbitrarily close to zero; normalize by
      // the larger of |E0| and the initial kinetic+|potential| magnitude.
      double scale = std::abs(e0);
      {
        const auto kin = ChainKinematics::compute(model, q);
        const auto vel = kin.propagate(dq);
        double mag = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
          const auto& p = model.params[static_cast<std::size_t>(i)];
          mag += 0.5 * vel[static_cast<std::size_t>(i)].dot(
                           params_to_tensor(p).matrix * vel[static_cast<std::size_t>(i)]);
          mag += model.gravity_magnitude() * std::abs(p.mass()) *
                 std::abs(model.vertical_axis.dot(kin.world_p[static_cast<std::size_t>(i)]));
        }
        scale = std::max(scale, mag);
      }
      if (scale == 0.0) scale = 1.0;
      for (std::size_t k = 0; k < steps; ++k) {
        std::tie(q, dq) = step(model, q, dq, u, dt);
        if (k % 10 == 9 || k + 1 == steps)
          max_drift = std::max(max_drift, std::abs(total_energy(model, q, dq) - e0));
      }
      r.max_error = std::max(r.max_error, max_drift / scale);
    }
    reports.push_back(r);
  }

  {
    PropertyReport r{"power_invariance", 0.0, 1e-10, opt.trials};
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    std::uniform_real_distribution<double> angle(-3.0, 3.0);
    for (int trial = 0; trial < opt.trials; ++trial) {
      PluckerTransform x{Eigen::AngleAxisd(angle(rng), random_unit_vector(rng)).toRotationMatrix(),
                         Vec3(dist(rng), dist(rng), dist(rng))};
      const SpatialMotion v{Vec3(dist(rng), dist(rng), dist(rng)),
                            Vec3(dist(rng), dist(rng), dist(rng))};
      const SpatialForce f{Vec3(dist(rng), dist(rng), dist(rng)),
                           Vec3(dist(rng), dist(rng), dist(rng))};
      const double before = f.vec().dot(v.vec());
      const double after = force_transform(x, f).vec().dot(motion_transform(x, v).vec());
      r.max_error = std::max(r.max_error, std::abs(before - after));
    }
    reports.push_back(r);
  }

  return reports;
}

}  // namespace svadyn
