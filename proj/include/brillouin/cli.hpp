#ifndef BRILLOUIN_CLI_HPP
#define BRILLOUIN_CLI_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "brillouin/analytic.hpp"
#include "brillouin/gaussian.hpp"
#include "brillouin/model.hpp"
#include "brillouin/propagator.hpp"

namespace brillouin::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitNumericalError = 3;
inline constexpr int kExitValidationError = 4;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Flat key=value run configuration. Frequencies are ordinary (Hz) here and
/// converted to angular rates at the SystemParams boundary.
struct RunConfig {
  double gamma_hz = 0.1e6;
  double Gamma_hz = 2e6;
  double omega_ac_hz = 7.7e9;
  double g_over_Gamma = 30.0;
  double g_tilde_over_Gamma = 40.0;
  std::optional<double> gamma_tilde_hz;  // defaults to gamma_hz
  double n_opt = 2.4;
  double v_ac_mps = 6000.0;
  double T_m_K = 30.0;
  std::optional<double> k_per_m;
  std::optional<double> delta_a_over_Gamma;  // alternative entry point for k
  double tau1_s = 11e-9;
  double tau_d_s = 0.1e-9;
  double tau2_s = 3e-9;
  std::uint64_t seed = 20260824;
  double rtol = 1e-10;
  double atol = 1e-12;
  int samples = 200;
  // Sweep axis.
  std::string sweep_var;
  double sweep_min = 0.0;
  double sweep_max = 0.0;
  int sweep_count = 1;
  std::string sweep_spacing = "linear";
  bool reproducible = false;
};

inline RunConfig parse_config(std::istream& in) {
  RunConfig cfg;
  std::string line;
  int line_no = 0;
  auto fail = [&](const std::string& what) {
    throw ConfigError("config line " + std::to_string(line_no) + ": " + what);
  };
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail("expected key=value");
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) fail("empty key or value");
    auto num = [&]() {
      std::size_t pos = 0;
      double v = 0.0;
      try {
        v = std::stod(value, &pos);
      } catch (const std::exception&) {
        fail("key '" + key + "': not a number: '" + value + "'");
      }
      if (pos != value.size()) fail("key '" + key + "': trailing characters in '" + value + "'");
      return v;
    };
    if (key == "gamma_hz") cfg.gamma_hz = num();
    else if (key == "Gamma_hz") cfg.Gamma_hz = num();
    else if (key == "omega_ac_hz") cfg.omega_ac_hz = num();
    else if (key == "g_over_Gamma") cfg.g_over_Gamma = num();
    else if (key == "g_tilde_over_Gamma") cfg.g_tilde_over_Gamma = num();
    else if (key == "gamma_tilde_hz") cfg.gamma_tilde_hz = num();
    else if (key == "n_opt") cfg.n_opt = num();
    else if (key == "v_ac_mps") cfg.v_ac_mps = num();
    else if (key == "T_m_K") cfg.T_m_K = num();
    else if (key == "k_per_m") cfg.k_per_m = num();
    else if (key == "delta_a_over_Gamma") cfg.delta_a_over_Gamma = num();
    else if (key == "tau1_s") cfg.tau1_s = num();
    else if (key == "tau_d_s") cfg.tau_d_s = num();
    else if (key == "tau2_s") cfg.tau2_s = num();
    else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(num());
    else if (key == "rtol") cfg.rtol = num();
    else if (key == "atol") cfg.atol = num();
    else if (key == "samples") cfg.samples = static_cast<int>(num());
    else if (key == "sweep_var") cfg.sweep_var = value;
    else if (key == "sweep_min") cfg.sweep_min = num();
    else if (key == "sweep_max") cfg.sweep_max = num();
    else if (key == "sweep_count") cfg.sweep_count = static_cast<int>(num());
    else if (key == "sweep_spacing") cfg.sweep_spacing = value;
    else fail("unknown key '" + key + "'");
  }
  if (cfg.k_per_m && cfg.delta_a_over_Gamma) {
    throw ConfigError("config: k_per_m and delta_a_over_Gamma are mutually exclusive");
  }
  if (cfg.sweep_count < 1) throw ConfigError("config: sweep_count must be >= 1");
  if (!cfg.sweep_var.empty() && cfg.sweep_min > cfg.sweep_max) {
    throw ConfigError("config: sweep_min must be <= sweep_max");
  }
  if (cfg.sweep_spacing != "linear" && cfg.sweep_spacing != "log") {
    throw ConfigError("config: sweep_spacing must be linear or log");
  }
  return cfg;
}

inline RunConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  return parse_config(in);
}

inline SystemParams to_params(const RunConfig& cfg) {
  constexpr double two_pi = 6.283185307179586476925286766559;
  SystemParams p;
  p.gamma = two_pi * cfg.gamma_hz;
  p.Gamma = two_pi * cfg.Gamma_hz;
  p.omega_ac = two_pi * cfg.omega_ac_hz;
  p.g = cfg.g_over_Gamma * p.Gamma;
  p.g_tilde = cfg.g_tilde_over_Gamma * p.Gamma;
  p.gamma_tilde = cfg.gamma_tilde_hz ? two_pi * *cfg.gamma_tilde_hz : p.gamma;
  p.v_opt = kSpeedOfLight / cfg.n_opt;
  p.v_ac = cfg.v_ac_mps;
  p.T_m = cfg.T_m_K;
  if (cfg.k_per_m) {
    p.k = *cfg.k_per_m;
  } else {
    // Paper operating point Delta_a = 0.2 Gamma when nothing is specified.
    const double ratio = cfg.delta_a_over_Gamma.value_or(0.2);
    p.k = ratio * p.Gamma / p.v_opt;
  }
  return p;
}

inline ProtocolTimeline to_timeline(const RunConfig& cfg) {
  return ProtocolTimeline{cfg.tau1_s, cfg.tau_d_s, cfg.tau2_s};
}

inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

/// Sweep axis values, linear or log spaced, endpoints inclusive.
inline std::vector<double> sweep_values(const RunConfig& cfg) {
  std::vector<double> values;
  if (cfg.sweep_count == 1) return {cfg.sweep_min};
  values.reserve(cfg.sweep_count);
  if (cfg.sweep_spacing == "log") {
    if (cfg.sweep_min <= 0.0) throw ConfigError("config: log spacing needs sweep_min > 0");
    const double lo = std::log(cfg.sweep_min), hi = std::log(cfg.sweep_max);
    for (int i = 0; i < cfg.sweep_count; ++i) {
      values.push_back(std::exp(lo + (hi - lo) * i / (cfg.sweep_count - 1)));
    }
  } else {
    for (int i = 0; i < cfg.sweep_count; ++i) {
      values.push_back(cfg.sweep_min +
                       (cfg.sweep_max - cfg.sweep_min) * i / (cfg.sweep_count - 1));
    }
  }
  return values;
}

/// Emit the '#'-prefixed metadata header: the full resolved configuration
/// (after unit conversion) so a figure can be regenerated from its data file.
inline void write_header(std::ostream& os, const RunConfig& cfg, const SystemParams& p) {
  if (!cfg.reproducible) {
    std::time_t now = std::time(nullptr);
    char buf[64];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    os << "# generated " << buf << "\n";
  }
  const auto [da, db] = detunings(p);
  os << "# gamma_hz=" << fmt(cfg.gamma_hz) << " Gamma_hz=" << fmt(cfg.Gamma_hz)
     << " omega_ac_hz=" << fmt(cfg.omega_ac_hz) << "\n"
     << "# g_over_Gamma=" << fmt(cfg.g_over_Gamma)
     << " g_tilde_over_Gamma=" << fmt(cfg.g_tilde_over_Gamma)
     << " gamma_tilde_rad_s=" << fmt(p.gamma_tilde) << "\n"
     << "# n_opt=" << fmt(cfg.n_opt) << " v_ac_mps=" << fmt(cfg.v_ac_mps)
     << " T_m_K=" << fmt(cfg.T_m_K) << " k_per_m=" << fmt(p.k) << "\n"
     << "# gamma_rad_s=" << fmt(p.gamma) << " Gamma_rad_s=" << fmt(p.Gamma)
     << " g_rad_s=" << fmt(p.g) << " g_tilde_rad_s=" << fmt(p.g_tilde) << "\n"
     << "# delta_a_rad_s=" << fmt(da) << " delta_b_rad_s=" << fmt(db)
     << " n_th=" << fmt(thermal_occupancy(p)) << "\n"
     << "# tau1_s=" << fmt(cfg.tau1_s) << " tau_d_s=" << fmt(cfg.tau_d_s)
     << " tau2_s=" << fmt(cfg.tau2_s) << " seed=" << cfg.seed
     << " rtol=" << fmt(cfg.rtol) << " atol=" << fmt(cfg.atol)
     << " samples=" << cfg.samples << "\n";
}

inline double en_write_exact(const SystemParams& p, double t) {
  const auto v = covariance_entangle(p, t, thermal_occupancy(p));
  return log_negativity(extract_pair(v, 0, 1));
}

struct Peak {
  double value;
  double time;
};

/// Peak of f over [0, t_max]: dense grid scan followed by golden-section
/// refinement around the best grid point.
template <typename F>
Peak find_peak(F&& f, double t_max, int grid = 600) {
  double best_v = f(0.0), best_t = 0.0;
  for (int i = 1; i <= grid; ++i) {
    const double t = t_max * i / grid;
    const double v = f(t);
    if (v > best_v) {
      best_v = v;
      best_t = t;
    }
  }
  double lo = std::max(0.0, best_t - t_max / grid);
  double hi = std::min(t_max, best_t + t_max / grid);
  constexpr double kInvPhi = 0.6180339887498949;
  double x1 = hi - kInvPhi * (hi - lo), x2 = lo + kInvPhi * (hi - lo);
  double f1 = f(x1), f2 = f(x2);
  for (int i = 0; i < 80 && hi - lo > 1e-15 * t_max; ++i) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + kInvPhi * (hi - lo);
      f2 = f(x2);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - kInvPhi * (hi - lo);
      f1 = f(x1);
    }
  }
  const double t = 0.5 * (lo + hi);
  const double v = f(t);
  if (v >= best_v) return Peak{v, t};
  return Peak{best_v, best_t};
}

inline std::string suffixed_path(const std::string& path, const std::string& suffix) {
  const auto dot = path.rfind('.');
  if (dot == std::string::npos || path.find('/', dot) != std::string::npos) {
    return path + suffix;
  }
  return path.substr(0, dot) + suffix + path.substr(dot);
}

/// entangle: write-phase E_N time series, one file per swept g value.
inline int cmd_entangle(const RunConfig& cfg, const std::string& out_path) {
  std::vector<double> g_values;
  if (cfg.sweep_var == "g_over_Gamma") {
    g_values = sweep_values(cfg);
  } else if (cfg.sweep_var.empty()) {
    g_values = {cfg.g_over_Gamma};
  } else {
    throw ConfigError("entangle: sweep axis must be g_over_Gamma (or none)");
  }
  for (const double g_ratio : g_values) {
    RunConfig local = cfg;
    local.g_over_Gamma = g_ratio;
    const SystemParams p = to_params(local);
    const double n_th = thermal_occupancy(p);
    std::string path = out_path;
    if (g_values.size() > 1) path = suffixed_path(out_path, "_g" + fmt(g_ratio));
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open output file: " + path);
    write_header(os, local, p);
    os << "t_s,E_N_exact,E_N_cubic,E_N_rational,lambda_minus,V11,V33,V14,V13,n_b\n";
    const int n = std::max(cfg.samples, 2);
    for (int i = 0; i <= n; ++i) {
      const double t = cfg.tau1_s * i / n;
      const auto v = covariance_entangle(p, t, n_th);
      const auto blocks = extract_pair(v, 0, 1);
      const double lm = lambda_minus(blocks);
      const double en_cubic = p.g > 0.0
          ? std::max(0.0, -std::log(2.0 * lambda_minus_cubic(p.g, p.Gamma, n_th, t)))
          : 0.0;
      const double en_rational = p.g > 0.0
          ? std::max(0.0, -std::log(2.0 * lambda_minus_rational(p.g, p.Gamma, n_th, t)))
          : 0.0;
      os << fmt(t) << ',' << fmt(std::max(0.0, -std::log(2.0 * lm))) << ','
         << fmt(en_cubic) << ',' << fmt(en_rational) << ',' << fmt(lm) << ','
         << fmt(v(0, 0)) << ',' << fmt(v(2, 2)) << ',' << fmt(v(0, 3)) << ','
         << fmt(v(0, 2)) << ',' << fmt(0.5 * (v(2, 2) + v(3, 3) - 1.0)) << "\n";
    }
    const auto peak = find_peak([&](double t) { return en_write_exact(p, t); }, cfg.tau1_s);
    double predicted = std::numeric_limits<double>::quiet_NaN();
    try {
      predicted = p.g > 0.0 ? en_max(p.g, p.Gamma, n_th) : 0.0;
    } catch (const HeatingDominates&) {
    }
    os << "# summary peak_E_N=" << fmt(peak.value) << " peak_time_s=" << fmt(peak.time)
       << " en_max=" << fmt(predicted) << "\n";
  }
  return kExitOk;
}

/// sweep-temp: peak write-phase entanglement versus bath temperature.
inline int cmd_sweep_temp(const RunConfig& cfg, const std::string& out_path) {
  if (cfg.sweep_var != "T_m_K") throw ConfigError("sweep-temp: sweep_var must be T_m_K");
  std::ofstream os(out_path);
  if (!os) throw std::runtime_error("cannot open output file: " + out_path);
  write_header(os, cfg, to_params(cfg));
  os << "T_m_K,n_th,peak_E_N,peak_time_s\n";
  for (const double temp : sweep_values(cfg)) {
    RunConfig local = cfg;
    local.T_m_K = temp;
    const SystemParams p = to_params(local);
    const auto peak = find_peak([&](double t) { return en_write_exact(p, t); }, cfg.tau1_s);
    os << fmt(temp) << ',' << fmt(thermal_occupancy(p)) << ',' << fmt(peak.value) << ','
       << fmt(peak.time) << "\n";
  }
  return kExitOk;
}

/// sweep-k: peak write-phase entanglement versus wavenumber.
inline int cmd_sweep_k(const RunConfig& cfg, const std::string& out_path) {
  if (cfg.sweep_var != "k_per_m") throw ConfigError("sweep-k: sweep_var must be k_per_m");
  std::ofstream os(out_path);
  if (!os) throw std::runtime_error("cannot open output file: " + out_path);
  write_header(os, cfg, to_params(cfg));
  os << "k_per_m,delta_a_rad_s,delta_b_rad_s,peak_E_N\n";
  for (const double k : sweep_values(cfg)) {
    RunConfig local = cfg;
    local.k_per_m = k;
    local.delta_a_over_Gamma.reset();
    const SystemParams p = to_params(local);
    const auto [da, db] = detunings(p);
    const auto peak = find_peak([&](double t) { return en_write_exact(p, t); }, cfg.tau1_s);
    os << fmt(k) << ',' << fmt(da) << ',' << fmt(db) << ',' << fmt(peak.value) << "\n";
  }
  return kExitOk;
}

/// readout: full three-phase protocol time series.
inline int cmd_readout(const RunConfig& cfg, const std::string& out_path) {
  const SystemParams p = to_params(cfg);
  const ProtocolTimeline timeline = to_timeline(cfg);
  const double n_th = thermal_occupancy(p);
  const auto corr = readout_correlations(p, timeline.tau1, timeline.tau_d);
  Trajectory traj =
      run_protocol(p, timeline, SamplingSpec{std::max(cfg.samples, 2)},
                   IntegratorOptions{cfg.rtol, cfg.atol});
  std::ofstream os(out_path);
  if (!os) throw std::runtime_error("cannot open output file: " + out_path);
  write_header(os, cfg, p);
  os << "t_s,phase,E_N_ab,E_N_a_atilde,E_N_tilde_cubic,E_N_tilde_poly,N_as,n_b\n";
  const double t_readout = timeline.tau1 + timeline.tau_d;
  double peak_en = 0.0, peak_time = 0.0;
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    const char* phase = traj.phases[i] == Phase::write
                            ? "write"
                            : traj.phases[i] == Phase::delay ? "delay" : "readout";
    double en_cubic = 0.0, en_poly = 0.0;
    if (traj.phases[i] == Phase::readout && p.g_tilde > 0.0) {
      const double s = traj.times[i] - t_readout;
      en_cubic = std::max(
          0.0, -std::log(2.0 * lambda_tilde_minus_cubic(p.g_tilde, p.Gamma, n_th, corr, s)));
      en_poly = std::max(
          0.0, -std::log(2.0 * lambda_tilde_minus_poly(p.g_tilde, p.Gamma, n_th, corr, s)));
    }
    if (traj.en_a_atilde[i] > peak_en) {
      peak_en = traj.en_a_atilde[i];
      peak_time = traj.times[i];
    }
    os << fmt(traj.times[i]) << ',' << phase << ',' << fmt(traj.en_ab[i]) << ','
       << fmt(traj.en_a_atilde[i]) << ',' << fmt(en_cubic) << ',' << fmt(en_poly) << ','
       << fmt(traj.n_as[i]) << ',' << fmt(traj.n_b[i]) << "\n";
  }
  os << "# summary peak_E_N_tilde=" << fmt(peak_en) << " peak_time_s=" << fmt(peak_time)
     << "\n";
  return kExitOk;
}

struct ValidationCheck {
  std::string name;
  double measured;
  double bound;
  bool pass;
};

/// validate: cross-path and oracle checks with measured deviations.
inline std::vector<ValidationCheck> run_validation(const RunConfig& cfg) {
  std::vector<ValidationCheck> checks;
  const SystemParams p = to_params(cfg);
  const double n_th = thermal_occupancy(p);
  auto add = [&](const std::string& name, double measured, double bound) {
    checks.push_back({name, measured, bound, measured <= bound});
  };

  // Mode-coefficient identities.
  {
    const auto c = mode_coefficients(p, Variant::write);
    add("mu2_minus_mu3_identity", std::abs(c.mu2 - c.mu3 - 1.0), 1e-12);
    const Complex sum_expect(-0.5 * (p.gamma + p.Gamma),
                             -(detunings(p).delta_a - detunings(p).delta_b));
    add("omega_sum_identity",
        std::abs(c.omega_plus + c.omega_minus - sum_expect) / std::abs(sum_expect), 1e-12);
  }

  // Analytic covariance versus Lyapunov propagation over the write phase.
  {
    const auto dd = stokes_drift_diffusion(p);
    const CovMat v0 = CovMat::thermal({0.0, n_th});
    std::vector<double> times;
    const double t_max = 2.0 / p.Gamma;
    for (int i = 1; i <= 20; ++i) times.push_back(t_max * i / 20);
    const auto states =
        lyapunov_propagate(dd, v0, 0.0, t_max, times, IntegratorOptions{cfg.rtol, cfg.atol});
    double worst = 0.0;
    for (std::size_t i = 0; i < times.size(); ++i) {
      const auto exact = covariance_entangle(p, times[i], n_th);
      const double scale = exact.matrix().cwiseAbs().maxCoeff();
      const Eigen::MatrixXd diff = states[i].matrix() - exact.matrix();
      for (int r = 0; r < 4; ++r) {
        for (int c2 = 0; c2 < 4; ++c2) {
          const double denom = std::max(std::abs(exact(r, c2)), 1e-3 * scale);
          worst = std::max(worst, std::abs(diff(r, c2)) / denom);
        }
      }
    }
    add("analytic_vs_lyapunov_write", worst, 1e-6);
  }

  // Lossless swap completeness.
  {
    SystemParams lossless = p;
    lossless.gamma = lossless.Gamma = lossless.gamma_tilde = 0.0;
    lossless.T_m = 0.0;
    lossless.k = 0.0;
    const double n_b0 = 5.0;
    const auto dd = antistokes_drift_diffusion(lossless, 2);
    const CovMat v0 = CovMat::thermal({0.0, n_b0});
    const double t_swap = 0.5 * M_PI / lossless.g_tilde;
    const double swap_times[] = {t_swap};
    const auto states = lyapunov_propagate(dd, v0, 0.0, t_swap, swap_times);
    const double n_as = 0.5 * (states[0](0, 0) + states[0](1, 1) - 1.0);
    add("lossless_swap_occupancy", std::abs(n_as - n_b0) / n_b0, 1e-6);
  }

  // Monte-Carlo oracle concordance at the write point.
  {
    const auto dd = stokes_drift_diffusion(p);
    const CovMat v0 = CovMat::thermal({0.0, n_th});
    const double t = 0.2 / p.Gamma;
    const auto est = mc_oracle(dd, v0, t, 4000, cfg.seed);
    const double t_arr[] = {t};
    const auto lyap = lyapunov_propagate(dd, v0, 0.0, t, t_arr);
    double worst_sigma = 0.0;
    for (int r = 0; r < 4; ++r) {
      for (int c2 = r; c2 < 4; ++c2) {
        const double se = std::max(est.std_error(r, c2), 1e-300);
        worst_sigma = std::max(worst_sigma, std::abs(est.mean(r, c2) - lyap[0](r, c2)) / se);
      }
    }
    add("mc_oracle_sigma_deviation", worst_sigma, 5.0);
  }
  return checks;
}

inline int cmd_validate(const RunConfig& cfg, std::ostream& os) {
  const auto checks = run_validation(cfg);
  bool all_pass = true;
  os << "{\n  \"checks\": [\n";
  for (std::size_t i = 0; i < checks.size(); ++i) {
    const auto& c = checks[i];
    all_pass = all_pass && c.pass;
    os << "    {\"name\": \"" << c.name << "\", \"measured\": " << fmt(c.measured)
       << ", \"bound\": " << fmt(c.bound) << ", \"pass\": " << (c.pass ? "true" : "false")
       << "}" << (i + 1 < checks.size() ? "," : "") << "\n";
  }
  os << "  ],\n  \"all_pass\": " << (all_pass ? "true" : "false") << "\n}\n";
  return all_pass ? kExitOk : kExitValidationError;
}

}  // namespace brillouin::cli

#endif  // BRILLOUIN_CLI_HPP
