#ifndef BRILLOUIN_MODEL_HPP
#define BRILLOUIN_MODEL_HPP

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>

namespace brillouin {

/// Exact SI values.
inline constexpr double kHBar = 1.054571817e-34;       // J s
inline constexpr double kBoltzmann = 1.380649e-23;     // J/K
inline constexpr double kSpeedOfLight = 2.99792458e8;  // m/s

/// Physical rates and frequencies for one run. All angular (rad/s).
struct SystemParams {
  double gamma = 0.0;        // optical loss rate
  double Gamma = 0.0;        // acoustic loss rate
  double omega_ac = 0.0;     // acoustic angular frequency
  double g = 0.0;            // write (two-mode-squeezing) coupling
  double g_tilde = 0.0;      // readout (beam-splitter) coupling
  double gamma_tilde = 0.0;  // fiber loss rate of the delayed Stokes mode
  double v_opt = 0.0;        // optical group velocity, m/s
  double v_ac = 0.0;         // acoustic group velocity, m/s
  double T_m = 0.0;          // bath temperature, K
  double k = 0.0;            // wavenumber, 1/m
  // The readout detuning is taken equal to the write-side Delta_a by default;
  // a sign flip for the backward-propagating pump can be selected here.
  double delta_a_tilde_sign = 1.0;
};

/// Protocol phase durations: write pulse, fiber delay, readout pulse.
struct ProtocolTimeline {
  double tau1 = 0.0;
  double tau_d = 0.0;
  double tau2 = 0.0;
};

/// Bose occupancy n_th = 1/(exp(hbar Omega / kB T) - 1); exactly 0 at T = 0.
inline double thermal_occupancy(double omega_ac, double T_m) {
  if (omega_ac <= 0.0) throw std::invalid_argument("thermal_occupancy: omega_ac must be positive");
  if (T_m < 0.0) throw std::invalid_argument("thermal_occupancy: negative temperature");
  if (T_m == 0.0) return 0.0;
  const double x = kHBar * omega_ac / (kBoltzmann * T_m);
  return 1.0 / std::expm1(x);
}

struct Detunings {
  double delta_a;  // k * v_opt
  double delta_b;  // k * v_ac
};

inline Detunings detunings(const SystemParams& p) {
  return Detunings{p.k * p.v_opt, p.k * p.v_ac};
}

inline double thermal_occupancy(const SystemParams& p) {
  return thermal_occupancy(p.omega_ac, p.T_m);
}

/// Drift A and diffusion D of the moment equation dV/dt = A V + V A^T + D.
struct DriftDiffusion {
  Eigen::MatrixXd drift;
  Eigen::MatrixXd diffusion;
  int modes;
};

// Quadrature convention x = (a + a^dag)/sqrt(2), p = i(a^dag - a)/sqrt(2).
// A damped mode with detuning delta contributes the 2x2 block
// [-r/2, delta; -delta, -r/2]. The -i g b^dag coupling of the write phase
// maps to the off-diagonal blocks [0, -g; -g, 0] (two-mode squeezing); the
// -i gt b coupling of the readout maps to [0, +gt; -gt, 0] (beam splitter).

namespace detail {

inline void set_local_block(Eigen::MatrixXd& a, int mode, double rate, double delta) {
  a(2 * mode, 2 * mode) = -0.5 * rate;
  a(2 * mode + 1, 2 * mode + 1) = -0.5 * rate;
  a(2 * mode, 2 * mode + 1) = delta;
  a(2 * mode + 1, 2 * mode) = -delta;
}

inline void set_mode_diffusion(Eigen::MatrixXd& d, int mode, double rate, double occupancy) {
  const double v = 0.5 * rate * (2.0 * occupancy + 1.0);
  d(2 * mode, 2 * mode) = v;
  d(2 * mode + 1, 2 * mode + 1) = v;
}

inline void set_squeezing_coupling(Eigen::MatrixXd& a, int i, int j, double g) {
  a(2 * i, 2 * j + 1) = -g;
  a(2 * i + 1, 2 * j) = -g;
  a(2 * j, 2 * i + 1) = -g;
  a(2 * j + 1, 2 * i) = -g;
}

inline void set_beamsplitter_coupling(Eigen::MatrixXd& a, int i, int j, double g) {
  a(2 * i, 2 * j + 1) = g;
  a(2 * i + 1, 2 * j) = -g;
  a(2 * j, 2 * i + 1) = g;
  a(2 * j + 1, 2 * i) = -g;
}

}  // namespace detail

/// Write phase, modes (a, b): Stokes mode against a vacuum bath, acoustic
/// mode against a thermal bath, coupled by the squeezing interaction.
inline DriftDiffusion stokes_drift_diffusion(const SystemParams& p) {
  const auto [delta_a, delta_b] = detunings(p);
  const double n_th = thermal_occupancy(p);
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(4, 4);
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(4, 4);
  detail::set_local_block(a, 0, p.gamma, delta_a);
  detail::set_local_block(a, 1, p.Gamma, delta_b);
  detail::set_squeezing_coupling(a, 0, 1, p.g);
  detail::set_mode_diffusion(d, 0, p.gamma, 0.0);
  detail::set_mode_diffusion(d, 1, p.Gamma, n_th);
  return DriftDiffusion{std::move(a), std::move(d), 2};
}

/// Delay phase, modes (a, b): the Stokes mode decays in the fiber with
/// gamma_tilde, the acoustic mode relaxes toward the thermal bath. Uncoupled.
inline DriftDiffusion delay_drift_diffusion(const SystemParams& p) {
  const auto [delta_a, delta_b] = detunings(p);
  const double n_th = thermal_occupancy(p);
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(4, 4);
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(4, 4);
  detail::set_local_block(a, 0, p.gamma_tilde, delta_a);
  detail::set_local_block(a, 1, p.Gamma, delta_b);
  detail::set_mode_diffusion(d, 0, p.gamma_tilde, 0.0);
  detail::set_mode_diffusion(d, 1, p.Gamma, n_th);
  return DriftDiffusion{std::move(a), std::move(d), 2};
}

/// Readout phase. n_modes = 2 gives the bare anti-Stokes dynamics with modes
/// (a_tilde, b). n_modes = 3 embeds the full protocol state with modes
/// (a, b, a_tilde), where the delayed Stokes mode a decays uncoupled with
/// gamma_tilde.
inline DriftDiffusion antistokes_drift_diffusion(const SystemParams& p, int n_modes) {
  const auto [delta_a, delta_b] = detunings(p);
  const double delta_at = p.delta_a_tilde_sign * delta_a;
  const double n_th = thermal_occupancy(p);
  if (n_modes == 2) {
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(4, 4);
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(4, 4);
    detail::set_local_block(a, 0, p.gamma, delta_at);
    detail::set_local_block(a, 1, p.Gamma, delta_b);
    detail::set_beamsplitter_coupling(a, 0, 1, p.g_tilde);
    detail::set_mode_diffusion(d, 0, p.gamma, 0.0);
    detail::set_mode_diffusion(d, 1, p.Gamma, n_th);
    return DriftDiffusion{std::move(a), std::move(d), 2};
  }
  if (n_modes == 3) {
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(6, 6);
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(6, 6);
    detail::set_local_block(a, 0, p.gamma_tilde, delta_a);
    detail::set_local_block(a, 1, p.Gamma, delta_b);
    detail::set_local_block(a, 2, p.gamma, delta_at);
    detail::set_beamsplitter_coupling(a, 2, 1, p.g_tilde);
    detail::set_mode_diffusion(d, 0, p.gamma_tilde, 0.0);
    detail::set_mode_diffusion(d, 1, p.Gamma, n_th);
    detail::set_mode_diffusion(d, 2, p.gamma, 0.0);
    return DriftDiffusion{std::move(a), std::move(d), 3};
  }
  throw std::invalid_argument("antistokes_drift_diffusion: n_modes must be 2 or 3");
}

}  // namespace brillouin

#endif  // BRILLOUIN_MODEL_HPP
