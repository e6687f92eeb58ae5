#pragma once

// Least-squares estimation of the stacked parameter vector from sampled
// (q, qdot, qddot, u) data: offline pseudoinverse fits, prior-regularized
// fits, and a decimated online estimator with an atomic result snapshot.

#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <utility>
#include <vector>

#include "svadyn/model.hpp"
#include "svadyn/regressor.hpp"

namespace svadyn {

struct Sample {
  double t = 0.0;  // [s]
  JointState state;
  VecX u;  // [N*m]
};

struct StackedSystem {
  MatX Y;           // (s*n) x (10 b)
  VecX U;           // (s*n)
  Eigen::Index n;   // joints per sample

  Eigen::Index sample_count() const { return n > 0 ? U.size() / n : 0; }
};

struct FitResult {
  ThetaVector theta_hat;
  double r_squared = 0.0;
  double residual_norm = 0.0;
  VecX singular_values;  // of the raw stacked regressor
};

class DegenerateSystemError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline StackedSystem stack(const ChainModel& model, const std::vector<Sample>& samples,
                           double h = kDefaultFdStep) {
  if (samples.empty()) throw std::invalid_argument("stack: empty sample list");
  const auto n = static_cast<Eigen::Index>(model.dof());
  StackedSystem sys;
  sys.n = n;
  sys.Y.resize(static_cast<Eigen::Index>(samples.size()) * n, n * kParamsPerLink);
  sys.U.resize(static_cast<Eigen::Index>(samples.size()) * n);
  for (std::size_t s = 0; s < samples.size(); ++s) {
    if (samples[s].u.size() != n) throw std::invalid_argument("stack: torque length mismatch");
    sys.Y.middleRows(static_cast<Eigen::Index>(s) * n, n) =
        compute_regressor(model, samples[s].state, h).matrix;
    sys.U.segment(static_cast<Eigen::Index>(s) * n, n) = samples[s].u;
  }
  return sys;
}

inline constexpr double kSingularValueCutoff = 1e-10;  // relative to sigma_max

namespace detail {

/// Minimum-norm least-squares solve via SVD with a relative cutoff.
inline VecX pinv_solve(const MatX& a, const VecX& b, double rel_cutoff) {
  Eigen::BDCSVD<MatX> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const VecX& sigma = svd.singularValues();
  if (sigma.size() == 0 || sigma(0) <= 0.0)
    throw DegenerateSystemError("fit: stacked regressor is identically zero");
  VecX c = svd.matrixU().transpose() * b;
  for (Eigen::Index i = 0; i < sigma.size(); ++i)
    c[i] = (sigma[i] > rel_cutoff * sigma[0]) ? c[i] / sigma[i] : 0.0;
  return svd.matrixV() * c;
}

inline FitResult finish_fit(const StackedSystem& sys, VecX theta) {
  FitResult r;
  r.theta_hat = ThetaVector{std::move(theta)};
  const VecX e = sys.U - sys.Y * r.theta_hat.values;
  r.residual_norm = e.norm();
  const double utu = sys.U.squaredNorm();
  r.r_squared = (utu > 0.0) ? 1.0 - e.squaredNorm() / utu : 1.0;
  r.singular_values = Eigen::BDCSVD<MatX>(sys.Y).singularValues();
  return r;
}

}  // namespace detail

/// theta_hat = pinv(Y_C) U_C: the minimum-norm minimizer of |U_C - Y_C theta|.
inline FitResult fit(const StackedSystem& sys, double rel_cutoff = kSingularValueCutoff) {
  if (sys.U.size() == 0) throw std::invalid_argument("fit: empty system");
  return detail::finish_fit(sys, detail::pinv_solve(sys.Y, sys.U, rel_cutoff));
}

/// Augmented least squares with rows [alpha Y; (1-alpha) I] and right side
/// [alpha U; (1-alpha) theta_0]. alpha -> 1 recovers fit(); alpha -> 0
/// returns theta_0.
inline FitResult fit_with_prior(const StackedSystem& sys, const ThetaVector& theta_0, double alpha,
                                double rel_cutoff = kSingularValueCutoff) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("fit_with_prior: alpha must lie in (0, 1)");
  const Eigen::Index p = sys.Y.cols();
  if (theta_0.size() != p) throw std::invalid_argument("fit_with_prior: theta_0 length mismatch");
  MatX a(sys.Y.rows() + p, p);
  a.topRows(sys.Y.rows()) = alpha * sys.Y;
  a.bottomRows(p) = (1.0 - alpha) * MatX::Identity(p, p);
  VecX b(sys.U.size() + p);
  b.head(sys.U.size()) = alpha * sys.U;
  b.tail(p) = (1.0 - alpha) * theta_0.values;
  return detail::finish_fit(sys, detail::pinv_solve(a, b, rel_cutoff));
}

/// U_hat = Y_C theta_hat for the given samples.
inline VecX predict_torque(const ChainModel& model, const ThetaVector& theta_hat,
                           const std::vector<Sample>& samples, double h = kDefaultFdStep) {
  const auto sys = stack(model, samples, h);
  return sys.Y * theta_hat.values;
}

/// Per-joint coefficient of determination over the stacked rows of one joint.
inline VecX per_joint_r_squared(const StackedSystem& sys, const ThetaVector& theta) {
  const VecX e = sys.U - sys.Y * theta.values;
  VecX r2(sys.n);
  for (Eigen::Index j = 0; j < sys.n; ++j) {
    double se = 0.0, su = 0.0;
    for (Eigen::Index row = j; row < e.size(); row += sys.n) {
      se += e[row] * e[row];
      su += sys.U[row] * sys.U[row];
    }
    r2[j] = (su > 0.0) ? 1.0 - se / su : 1.0;
  }
  return r2;
}

// ---------------------------------------------------------------------------
// Exponential-moving-average acceleration estimate from finite-differenced
// velocity measurements.

class AccelFilter {
 public:
  explicit AccelFilter(double lambda = 0.2) : lambda_(lambda) {
    if (!(lambda > 0.0 && lambda <= 1.0))
      throw std::invalid_argument("AccelFilter: lambda must lie in (0, 1]");
  }

  /// Feeds one velocity measurement; returns the current estimate. The first
  /// call only primes the differentiator and returns zeros.
  VecX step(const VecX& dq, double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("AccelFilter: dt must be positive");
    if (!primed_) {
      acc_ = VecX::Zero(dq.size());
      prev_dq_ = dq;
      primed_ = true;
      return acc_;
    }
    const VecX raw = (dq - prev_dq_) / dt;
    acc_ = lambda_ * raw + (1.0 - lambda_) * acc_;
    prev_dq_ = dq;
    return acc_;
  }

  const VecX& value() const { return acc_; }
  double lambda() const { return lambda_; }

 private:
  double lambda_;
  VecX prev_dq_;
  VecX acc_;
  bool primed_ = false;
};

// ---------------------------------------------------------------------------
// Online estimator: ring (or growing) sample buffer, decimated refits with a
// prior, and an immutable published snapshot.

struct FitSnapshot {
  ThetaVector theta_hat;
  double r_squared = -std::numeric_limits<double>::infinity();
  double residual_norm = 0.0;
  bool model_valid = false;
  double t = 0.0;         // timestamp of the sample that triggered the fit
  std::uint64_t seq = 0;  // monotone publication counter
};

struct OnlineEstimatorConfig {
  std::size_t buffer_capacity = 50;
  bool unbounded = false;  // growing-buffer mode; capacity acts as the minimum fill
  double alpha = 0.99;
  double update_period = 1.0 / 3.0;  // [s]
  double r2_threshold = 0.95;
  bool gating = false;  // admit only informative samples
  double gate_error_threshold = 1e-3;
  double fd_step = kDefaultFdStep;
};

class OnlineEstimator {
 public:
  OnlineEstimator(ChainModel model, ThetaVector theta_0, OnlineEstimatorConfig cfg = {})
      : model_(std::move(model)), theta_0_(std::move(theta_0)), cfg_(cfg) {
    if (theta_0_.size() != static_cast<Eigen::Index>(model_.dof()) * kParamsPerLink)
      throw std::invalid_argument("OnlineEstimator: theta_0 length mismatch");
    auto snap = std::make_shared<FitSnapshot>();
    snap->theta_hat = theta_0_;
    publish(std::move(snap));
  }

  /// Single-writer ingestion. Appends (ring mode evicts the oldest) and, once
  /// the decimation period has elapsed with a full buffer, refits and
  /// publishes a fresh snapshot.
  void add_sample(const Sample& sample) {
    if (!admit(sample)) return;
    buffer_.push_back(sample);
    if (!cfg_.unbounded && buffer_.size() > cfg_.buffer_capacity) buffer_.pop_front();

    if (!buffer_full()) return;
    if (!std::isnan(last_fit_t_) && sample.t - last_fit_t_ < cfg_.update_period) return;
    last_fit_t_ = sample.t;
    ++fits_;

    const std::vector<Sample> batch(buffer_.begin(), buffer_.end());
    const auto sys = stack(model_, batch, cfg_.fd_step);
    const FitResult fr = fit_with_prior(sys, theta_0_, cfg_.alpha);
    auto snap = std::make_shared<FitSnapshot>();
    snap->theta_hat = fr.theta_hat;
    snap->r_squared = fr.r_squared;
    snap->residual_norm = fr.residual_norm;
    snap->model_valid = fr.r_squared >= cfg_.r2_threshold;
    snap->t = sample.t;
    publish(std::move(snap));
  }

  std::shared_ptr<const FitSnapshot> snapshot() const {
    std::lock_guard lock(mutex_);
    return snap_;
  }

  bool buffer_full() const { return buffer_.size() >= cfg_.buffer_capacity; }
  std::size_t buffer_size() const { return buffer_.size(); }
  std::uint64_t fits_performed() const { return fits_; }
  const OnlineEstimatorConfig& config() const { return cfg_; }

 private:
  bool admit(const Sample& sample) {
    if (!cfg_.gating || !buffer_full()) return true;
    const auto snap = snapshot();
    const VecX yhat =
        compute_regressor(model_, sample.state, cfg_.fd_step).matrix * snap->theta_hat.values;
    if ((sample.u - yhat).lpNorm<Eigen::Infinity>() > cfg_.gate_error_threshold) return true;
    // Otherwise admit only if swapping it for the oldest sample raises the
    // smallest retained singular value of the stacked regressor.
    const auto smallest_retained = [](const VecX& sv) {
      const double cut = kSingularValueCutoff * sv(0);
      double smallest = sv(0);
      for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv[i] > cut) smallest = sv[i];
      return smallest;
    };
    std::vector<Sample> current(buffer_.begin(), buffer_.end());
    std::vector<Sample> candidate(buffer_.begin() + 1, buffer_.end());
    candidate.push_back(sample);
    const VecX s_cur = stack(model_, current, cfg_.fd_step).Y.jacobiSvd().singularValues();
    const VecX s_new = stack(model_, candidate, cfg_.fd_step).Y.jacobiSvd().singularValues();
    return smallest_retained(s_new) > smallest_retained(s_cur);
  }

  void publish(std::shared_ptr<FitSnapshot> snap) {
    std::lock_guard lock(mutex_);
    snap->seq = ++seq_;
    snap_ = std::move(snap);
  }

  ChainModel model_;
  ThetaVector theta_0_;
  OnlineEstimatorConfig cfg_;
  std::deque<Sample> buffer_;
  double last_fit_t_ = std::numeric_limits<double>::quiet_NaN();
  std::uint64_t seq_ = 0;
  std::uint64_t fits_ = 0;
  mutable std::mutex mutex_;
  std::shared_ptr<const FitSnapshot> snap_;
};

}  // namespace svadyn
