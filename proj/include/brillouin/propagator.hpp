#ifndef BRILLOUIN_PROPAGATOR_HPP
#define BRILLOUIN_PROPAGATOR_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "brillouin/gaussian.hpp"
#include "brillouin/model.hpp"

namespace brillouin {

struct StepSizeUnderflow : std::runtime_error {
  StepSizeUnderflow()
      : std::runtime_error("lyapunov_propagate: step controller cannot meet tolerance") {}
};

struct IntegratorOptions {
  double rtol = 1e-10;
  double atol = 1e-12;
};

namespace detail {

inline Eigen::MatrixXd lyapunov_rhs(const Eigen::MatrixXd& a, const Eigen::MatrixXd& d,
                                    const Eigen::MatrixXd& v) {
  return a * v + v * a.transpose() + d;
}

// Dormand-Prince 5(4) pair.
struct Dopri5 {
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                          a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33,
                          a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                          a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                          b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  static constexpr double e1 = 35.0 / 384 - 5179.0 / 57600,
                          e3 = 500.0 / 1113 - 7571.0 / 16695,
                          e4 = 125.0 / 192 - 393.0 / 640,
                          e5 = -2187.0 / 6784 + 92097.0 / 339200,
                          e6 = 11.0 / 84 - 187.0 / 2100, e7 = -1.0 / 40;
};

}  // namespace detail

/// Integrate dV/dt = A V + V A^T + D from V0 over [t0, t1], returning the
/// covariance at each requested sample time (sorted, within [t0, t1]).
/// Adaptive embedded Runge-Kutta 5(4); each accepted state is symmetrized.
inline std::vector<CovMat> lyapunov_propagate(const DriftDiffusion& dd, const CovMat& v0,
                                              double t0, double t1,
                                              std::span<const double> sample_times,
                                              IntegratorOptions opts = {}) {
  using K = detail::Dopri5;
  for (std::size_t i = 0; i < sample_times.size(); ++i) {
    if (sample_times[i] < t0 || sample_times[i] > t1 ||
        (i > 0 && sample_times[i] < sample_times[i - 1])) {
      throw std::invalid_argument("lyapunov_propagate: sample times must be sorted within t_span");
    }
  }
  // Work in normalized time to keep steps well scaled for SI-magnitude rates.
  const double rate = std::max(dd.drift.cwiseAbs().maxCoeff(), 1e-300);
  const Eigen::MatrixXd a = dd.drift / rate;
  const Eigen::MatrixXd d = dd.diffusion / rate;

  std::vector<CovMat> out;
  out.reserve(sample_times.size());
  Eigen::MatrixXd v = v0.matrix();
  double t = t0 * rate;
  const double t_end = t1 * rate;
  std::size_t next_sample = 0;
  auto emit_if_sampled = [&](double tau) {
    while (next_sample < sample_times.size() &&
           sample_times[next_sample] * rate <= tau + 1e-12 * std::max(1.0, std::abs(tau))) {
      out.emplace_back(v);
      ++next_sample;
    }
  };
  emit_if_sampled(t);

  double h = std::min(1e-2, t_end - t);
  Eigen::MatrixXd k1 = detail::lyapunov_rhs(a, d, v);
  while (t < t_end && next_sample < sample_times.size()) {
    // Land exactly on the next sample time; the landing clip must not feed
    // back into the error-controlled step size h.
    const double target = std::min(t_end, sample_times[next_sample] * rate);
    if (target - t <= 1e-14 * std::max(1.0, std::abs(t_end))) {
      // Degenerate gap between samples; emit current state.
      t = target;
      k1 = detail::lyapunov_rhs(a, d, v);
      emit_if_sampled(t);
      continue;
    }
    const double hs = std::min(h, target - t);
    const Eigen::MatrixXd k2 = detail::lyapunov_rhs(a, d, v + hs * (K::a21 * k1));
    const Eigen::MatrixXd k3 = detail::lyapunov_rhs(a, d, v + hs * (K::a31 * k1 + K::a32 * k2));
    const Eigen::MatrixXd k4 =
        detail::lyapunov_rhs(a, d, v + hs * (K::a41 * k1 + K::a42 * k2 + K::a43 * k3));
    const Eigen::MatrixXd k5 = detail::lyapunov_rhs(
        a, d, v + hs * (K::a51 * k1 + K::a52 * k2 + K::a53 * k3 + K::a54 * k4));
    const Eigen::MatrixXd k6 = detail::lyapunov_rhs(
        a, d,
        v + hs * (K::a61 * k1 + K::a62 * k2 + K::a63 * k3 + K::a64 * k4 + K::a65 * k5));
    const Eigen::MatrixXd vnew =
        v + hs * (K::b1 * k1 + K::b3 * k3 + K::b4 * k4 + K::b5 * k5 + K::b6 * k6);
    const Eigen::MatrixXd k7 = detail::lyapunov_rhs(a, d, vnew);
    const Eigen::MatrixXd err = hs * (K::e1 * k1 + K::e3 * k3 + K::e4 * k4 + K::e5 * k5 +
                                      K::e6 * k6 + K::e7 * k7);
    // Error scale carries a matrix-norm floor: elements far below the
    // dominant scale are roundoff-limited and cannot be controlled relative
    // to themselves once the state spans many orders of magnitude.
    const double vscale =
        1e-3 * std::max(v.cwiseAbs().maxCoeff(), vnew.cwiseAbs().maxCoeff());
    double err_norm = 0.0;
    for (Eigen::Index r = 0; r < v.rows(); ++r) {
      for (Eigen::Index c = 0; c < v.cols(); ++c) {
        const double ref =
            std::max({std::abs(v(r, c)), std::abs(vnew(r, c)), vscale});
        err_norm = std::max(err_norm,
                            std::abs(err(r, c)) / (opts.atol + opts.rtol * ref));
      }
    }
    const double factor =
        std::clamp(0.9 * std::pow(std::max(err_norm, 1e-10), -0.2), 0.2, 5.0);
    if (err_norm <= 1.0) {
      t += hs;
      v = 0.5 * (vnew + vnew.transpose()).eval();
      // No FSAL reuse: k1 must be consistent with the symmetrized state, or
      // the error estimate acquires a step-independent floor in elements that
      // are structurally zero.
      k1 = detail::lyapunov_rhs(a, d, v);
      emit_if_sampled(t);
      if (hs >= h) h *= factor;  // clipped landing steps leave h untouched
    } else {
      h = hs * factor;
      if (h < 1e-14 * std::max(1.0, std::abs(t_end - t0 * rate))) throw StepSizeUnderflow();
    }
  }
  // Trailing samples equal to t_end.
  while (next_sample < sample_times.size()) {
    out.emplace_back(v);
    ++next_sample;
  }
  return out;
}

enum class Phase { write, delay, readout };

/// Sampled covariance history of the three-phase protocol with derived
/// entanglement and occupancy series.
struct Trajectory {
  std::vector<double> times;
  std::vector<CovMat> covariances;
  std::vector<Phase> phases;
  std::vector<double> en_ab;        // E_N of the (Stokes, acoustic) pair
  std::vector<double> en_a_atilde;  // E_N of the (Stokes, anti-Stokes) pair
  std::vector<double> n_as;         // anti-Stokes occupancy
  std::vector<double> n_b;          // acoustic occupancy
};

struct SamplingSpec {
  int samples_per_phase = 200;
};

namespace detail {

inline std::vector<double> phase_grid(double t0, double t1, int samples) {
  std::vector<double> times;
  if (t1 <= t0) return times;
  const int n = std::max(samples, 2);
  times.reserve(n);
  for (int i = 1; i <= n; ++i) {
    times.push_back(t0 + (t1 - t0) * static_cast<double>(i) / n);
  }
  times.back() = t1;  // exact boundary
  return times;
}

inline void append_sample(Trajectory& traj, double t, Phase phase, const CovMat& v) {
  traj.times.push_back(t);
  traj.phases.push_back(phase);
  traj.covariances.push_back(v);
  traj.en_ab.push_back(log_negativity(extract_pair(v, 0, 1)));
  traj.n_b.push_back(0.5 * (v(2, 2) + v(3, 3) - 1.0));
  if (v.modes() == 3) {
    traj.en_a_atilde.push_back(log_negativity(extract_pair(v, 0, 2)));
    traj.n_as.push_back(0.5 * (v(4, 4) + v(5, 5) - 1.0));
  } else {
    traj.en_a_atilde.push_back(0.0);
    traj.n_as.push_back(0.0);
  }
}

}  // namespace detail

/// Run write / delay / readout. Phase 3 embeds the two-mode state into the
/// three-mode layout (a, b, a_tilde) with the anti-Stokes mode in vacuum.
inline Trajectory run_protocol(const SystemParams& p, const ProtocolTimeline& timeline,
                               const SamplingSpec& sampling = {},
                               IntegratorOptions opts = {}) {
  if (timeline.tau1 < 0.0 || timeline.tau_d < 0.0 || timeline.tau2 < 0.0) {
    throw std::invalid_argument("run_protocol: negative phase duration");
  }
  const double n_th = thermal_occupancy(p);
  Trajectory traj;
  CovMat state = CovMat::thermal({0.0, n_th});
  detail::append_sample(traj, 0.0, Phase::write, state);

  auto run_phase = [&](const DriftDiffusion& dd, double t0, double t1, Phase phase) {
    const auto grid = detail::phase_grid(t0, t1, sampling.samples_per_phase);
    if (grid.empty()) return;
    auto states = lyapunov_propagate(dd, state, t0, t1, grid, opts);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      detail::append_sample(traj, grid[i], phase, states[i]);
    }
    state = states.back();
  };

  run_phase(stokes_drift_diffusion(p), 0.0, timeline.tau1, Phase::write);
  run_phase(delay_drift_diffusion(p), timeline.tau1, timeline.tau1 + timeline.tau_d,
            Phase::delay);

  // Embed (a, b) -> (a, b, a_tilde) with a vacuum anti-Stokes mode.
  Eigen::MatrixXd embedded = Eigen::MatrixXd::Zero(6, 6);
  embedded.topLeftCorner<4, 4>() = state.matrix();
  embedded(4, 4) = kVacuumVariance;
  embedded(5, 5) = kVacuumVariance;
  state = CovMat(embedded);

  const double t_readout = timeline.tau1 + timeline.tau_d;
  run_phase(antistokes_drift_diffusion(p, 3), t_readout, t_readout + timeline.tau2,
            Phase::readout);
  return traj;
}

/// Monte-Carlo covariance estimate with per-element standard errors.
struct McEstimate {
  Eigen::MatrixXd mean;
  Eigen::MatrixXd std_error;
  int n_traj;
  double step;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

}  // namespace detail

/// Euler-Maruyama estimate of V(t) from n_traj sampled trajectories of the
/// linear SDE dx = A x dt + sqrt(D) dW, x(0) ~ N(0, V0). Deterministic for a
/// given seed and independent of any worker decomposition: trajectory i uses
/// a SplitMix64-derived substream of (seed, i) feeding mt19937_64.
inline McEstimate mc_oracle(const DriftDiffusion& dd, const CovMat& v0, double t,
                            int n_traj, std::uint64_t seed) {
  if (n_traj < 100) throw std::invalid_argument("mc_oracle: n_traj must be >= 100");
  const int dim = v0.dim();
  const double rate = std::max(dd.drift.cwiseAbs().maxCoeff(), 1e-300);
  const double h = 1e-3 / rate;
  const int n_steps = std::max(1, static_cast<int>(std::ceil(t / h)));
  const double h_eff = t > 0.0 ? t / n_steps : 0.0;

  // Square roots for initial sampling and for the noise increments.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es0(v0.matrix());
  const Eigen::MatrixXd sqrt_v0 =
      es0.eigenvectors() *
      es0.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
      es0.eigenvectors().transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> esd(dd.diffusion);
  const Eigen::MatrixXd sqrt_d =
      esd.eigenvectors() *
      esd.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
      esd.eigenvectors().transpose();
  const Eigen::MatrixXd step_map = Eigen::MatrixXd::Identity(dim, dim) + h_eff * dd.drift;
  const Eigen::MatrixXd noise_map = std::sqrt(h_eff) * sqrt_d;

  std::vector<Eigen::VectorXd> finals;
  finals.reserve(n_traj);
  Eigen::VectorXd x(dim), xi(dim);
  for (int traj = 0; traj < n_traj; ++traj) {
    std::mt19937_64 rng(detail::splitmix64(seed ^ detail::splitmix64(
                                                      static_cast<std::uint64_t>(traj))));
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int i = 0; i < dim; ++i) xi[i] = normal(rng);
    x = sqrt_v0 * xi;
    for (int s = 0; s < n_steps && t > 0.0; ++s) {
      for (int i = 0; i < dim; ++i) xi[i] = normal(rng);
      x = step_map * x + noise_map * xi;
    }
    finals.push_back(x);
  }

  Eigen::VectorXd mean_x = Eigen::VectorXd::Zero(dim);
  for (const auto& f : finals) mean_x += f;
  mean_x /= n_traj;

  McEstimate est;
  est.mean = Eigen::MatrixXd::Zero(dim, dim);
  est.std_error = Eigen::MatrixXd::Zero(dim, dim);
  est.n_traj = n_traj;
  est.step = h_eff;
  Eigen::MatrixXd second = Eigen::MatrixXd::Zero(dim, dim);
  for (const auto& f : finals) {
    const Eigen::VectorXd c = f - mean_x;
    second += c * c.transpose();
  }
  est.mean = second / (n_traj - 1);
  // Standard error of each covariance element from the per-trajectory spread
  // of the products c_i c_j.
  Eigen::MatrixXd var_prod = Eigen::MatrixXd::Zero(dim, dim);
  for (const auto& f : finals) {
    const Eigen::VectorXd c = f - mean_x;
    const Eigen::MatrixXd prod = c * c.transpose();
    var_prod += (prod - est.mean).cwiseAbs2();
  }
  var_prod /= (n_traj - 1);
  est.std_error = (var_prod / n_traj).cwiseSqrt();
  return est;
}

}  // namespace brillouin

#endif  // BRILLOUIN_PROPAGATOR_HPP
