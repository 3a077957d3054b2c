#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "brillouin/analytic.hpp"
#include "brillouin/propagator.hpp"

using namespace brillouin;

namespace {

SystemParams base_params(double g_over = 30.0, double T = 30.0, double da_over = 0.2,
                         double gamma_over = 0.05) {
  SystemParams p;
  p.Gamma = 2.0 * M_PI * 2e6;
  p.gamma = gamma_over * p.Gamma;
  p.omega_ac = 2.0 * M_PI * 7.7e9;
  p.g = g_over * p.Gamma;
  p.g_tilde = 40.0 * p.Gamma;
  p.gamma_tilde = p.gamma;
  p.v_opt = kSpeedOfLight / 2.4;
  p.v_ac = 6000.0;
  p.T_m = T;
  p.k = da_over * p.Gamma / p.v_opt;
  return p;
}

double en_of(double lm) { return std::max(0.0, -std::log(2.0 * lm)); }

double en_exact(const SystemParams& p, double t) {
  return log_negativity(extract_pair(covariance_entangle(p, t, thermal_occupancy(p)), 0, 1));
}

}  // namespace

TEST_CASE("mode coefficient identities") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    SystemParams p = base_params(1.0 + 49.0 * u(rng), u(rng) < 0.5 ? 30.0 : 300.0,
                                 0.5 * u(rng), 0.01 + 0.09 * u(rng));
    for (Variant variant : {Variant::write, Variant::readout}) {
      const auto c = mode_coefficients(p, variant);
      CHECK(std::abs(c.mu2 - c.mu3 - 1.0) < 1e-12);
      CHECK(std::abs(c.mu1 * (c.tau_plus - c.tau_minus) - 1.0) < 1e-12);
      const auto [da, db] = detunings(p);
      const Complex expected =
          variant == Variant::write
              ? Complex(-0.5 * (p.gamma + p.Gamma), -(da - db))
              : Complex(-0.5 * (p.gamma + p.Gamma), -(db + p.delta_a_tilde_sign * da));
      CHECK(std::abs(c.omega_plus + c.omega_minus - expected) / std::abs(expected) <
            1e-12);
    }
  }
}

TEST_CASE("mode coefficients collapse in the symmetric resonant case") {
  SystemParams p = base_params(30.0, 30.0, 0.0);
  p.gamma = p.Gamma;
  const auto c = mode_coefficients(p, Variant::write);
  CHECK(std::abs(c.omega_plus - Complex(-0.5 * p.Gamma - p.g, 0.0)) < 1e-6 * p.g);
  CHECK(std::abs(c.omega_minus - Complex(-0.5 * p.Gamma + p.g, 0.0)) < 1e-6 * p.g);
}

TEST_CASE("degenerate inputs throw") {
  SystemParams p = base_params();
  p.g = 0.0;
  CHECK_THROWS_AS(mode_coefficients(p, Variant::write), DegenerateRoots);
  p = base_params();
  p.g_tilde = 0.0;
  CHECK_THROWS_AS(mode_coefficients(p, Variant::readout), DegenerateRoots);
}

TEST_CASE("covariance_entangle initial condition and g=0 relaxation") {
  const SystemParams p = base_params();
  const CovMat v0 = covariance_entangle(p, 0.0, 5.0);
  CHECK(v0(0, 0) == Catch::Approx(0.5).epsilon(1e-12));
  CHECK(v0(2, 2) == Catch::Approx(5.5).epsilon(1e-12));
  CHECK(v0.matrix().cwiseAbs().sum() == Catch::Approx(12.0).epsilon(1e-12));

  SystemParams q = p;
  q.g = 0.0;
  const double n_th = thermal_occupancy(q);
  const double t = 0.7 / q.Gamma;
  const CovMat v = covariance_entangle(q, t, 5.0);
  const double expect = 0.5 * (2.0 * (n_th + (5.0 - n_th) * std::exp(-q.Gamma * t)) + 1.0);
  CHECK(v(2, 2) == Catch::Approx(expect).epsilon(1e-12));
  CHECK(v(0, 0) == Catch::Approx(0.5).epsilon(1e-12));
  CHECK(v(0, 2) == 0.0);
  CHECK(log_negativity(extract_pair(v, 0, 1)) == 0.0);
}

TEST_CASE("no entanglement at t=0") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 20; ++i) {
    SystemParams p = base_params(1.0 + 49.0 * u(rng), 30.0, 0.5 * u(rng));
    CHECK(en_exact(p, 0.0) == 0.0);
  }
}

TEST_CASE("analytic covariance equals Lyapunov propagation for random parameters") {
  std::mt19937_64 rng(777);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int set = 0; set < 50; ++set) {
    const SystemParams p = base_params(1.0 + 49.0 * u(rng), u(rng) < 0.5 ? 30.0 : 300.0,
                                       0.5 * u(rng), 0.01 + 0.09 * u(rng));
    const double n_th = thermal_occupancy(p);
    const auto dd = stokes_drift_diffusion(p);
    const CovMat v0 = CovMat::thermal({0.0, n_th});
    std::vector<double> times;
    for (int i = 1; i <= 8; ++i) times.push_back(2.0 / p.Gamma * i / 8);
    const auto states = lyapunov_propagate(dd, v0, 0.0, times.back(), times,
                                           IntegratorOptions{1e-11, 1e-13});
    for (std::size_t i = 0; i < times.size(); ++i) {
      const CovMat exact = covariance_entangle(p, times[i], n_th);
      const double scale = exact.matrix().cwiseAbs().maxCoeff();
      for (int r = 0; r < 4; ++r) {
        for (int c = 0; c < 4; ++c) {
          const double denom = std::max(std::abs(exact(r, c)), 1e-3 * scale);
          CHECK(std::abs(states[i](r, c) - exact(r, c)) / denom < 1e-6);
        }
      }
    }
  }
}

TEST_CASE("cubic approximant basics and minimizer") {
  const SystemParams p = base_params();
  const double n_th = thermal_occupancy(p);
  CHECK(lambda_minus_cubic(p.g, p.Gamma, n_th, 0.0) == 0.5);
  CHECK(lambda_minus_cubic(0.0, p.Gamma, n_th, 1e-8) == 0.5);

  // Numerical minimizer as oracle for t* = 2/(Gamma n_th).
  double best_t = 0.0, best = 1.0;
  const double t_star = 2.0 / (p.Gamma * n_th);
  for (int i = 0; i <= 4000; ++i) {
    const double t = 3.0 * t_star * i / 4000;
    const double v = lambda_minus_cubic(p.g, p.Gamma, n_th, t);
    if (v < best) {
      best = v;
      best_t = t;
    }
  }
  CHECK(best_t == Catch::Approx(t_star).epsilon(1e-3));
}

TEST_CASE("en_max formula against the cubic minimum") {
  const SystemParams p = base_params();
  const double Gamma = p.Gamma;
  // Scan couplings with g/(Gamma n_th) <= 0.4.
  for (double x = 0.1; x <= 0.4; x += 0.1) {
    const double n_th = 80.0;
    const double g = x * Gamma * n_th;
    const double t_star = 2.0 / (Gamma * n_th);
    const double en_at_min = en_of(lambda_minus_cubic(g, Gamma, n_th, t_star));
    CHECK(std::abs(en_max(g, Gamma, n_th) - en_at_min) / en_at_min < 0.45);
  }
  CHECK(en_max(0.0, Gamma, 80.0) == 0.0);
  CHECK_THROWS_AS(en_max(Gamma * 80.0, Gamma, 80.0), HeatingDominates);
}

TEST_CASE("rational approximant reduces to the cubic at small t in the strong limit") {
  const double Gamma = 2.0 * M_PI * 2e6;
  const double n_th = 80.68;
  const double g = 1000.0 * Gamma;
  CHECK(lambda_minus_rational(g, Gamma, n_th, 0.0) == 0.5);
  for (double t : {1e-4 / g, 5e-4 / g, 1e-3 / g}) {
    const double lr = lambda_minus_rational(g, Gamma, n_th, t);
    const double lc = lambda_minus_cubic(g, Gamma, n_th, t);
    CHECK(std::abs(lr - lc) / lc < 1e-6);
  }
  CHECK_THROWS_AS(lambda_minus_rational(0.0, Gamma, n_th, 1e-9), std::invalid_argument);
}

TEST_CASE("cubic, rational and exact agree pairwise at small times, strong coupling") {
  // The printed rational form carries a spurious O(Gamma t) linear term that
  // only drops below 1e-3 absolute for g of a few tens of Gamma.
  for (double g_over : {30.0, 40.0, 50.0}) {
    SystemParams p = base_params(g_over, 30.0, 0.0, 0.0);
    const double n_th = thermal_occupancy(p);
    for (int i = 1; i <= 25; ++i) {
      const double t = 0.05 / p.g * i / 25;
      const double le = lambda_minus(extract_pair(covariance_entangle(p, t, n_th), 0, 1));
      const double lc = lambda_minus_cubic(p.g, p.Gamma, n_th, t);
      const double lr = lambda_minus_rational(p.g, p.Gamma, n_th, t);
      CHECK(std::abs(le - lc) < 1e-3);
      CHECK(std::abs(le - lr) < 1e-3);
      CHECK(std::abs(lr - lc) < 1e-3);
    }
  }
}

TEST_CASE("rational approximant tracks the exact entanglement window") {
  for (double g_over : {10.0, 20.0, 30.0}) {
    SystemParams p = base_params(g_over, 30.0, 0.0, 0.0);
    const double n_th = thermal_occupancy(p);
    double worst = 0.0;
    for (int i = 1; i <= 300; ++i) {
      const double t = 4e-9 * i / 300;
      const double en = en_exact(p, t);
      if (en <= 0.0) continue;
      worst = std::max(worst,
                       std::abs(en - en_of(lambda_minus_rational(p.g, p.Gamma, n_th, t))));
    }
    CHECK(worst < 0.05);
  }
}

TEST_CASE("strong-coupling covariance elements") {
  SystemParams p = base_params(30.0, 30.0, 0.1);
  const double n_th = thermal_occupancy(p);
  // t = 0 limits.
  const auto e0 = covariance_elements_strongcoupling(p, 0.0);
  CHECK(std::abs(e0.v11 - 0.5) / 0.5 < 0.02);
  CHECK(std::abs(e0.v33 - 0.5 * (2.0 * n_th + 1.0)) / (n_th + 0.5) < 0.02);
  CHECK(std::abs(e0.v14) / n_th < 0.02);
  // Mid-evolution elements against the exact covariance.
  const double t = 0.2 / (p.Gamma * n_th);
  const auto e = covariance_elements_strongcoupling(p, t);
  const CovMat v = covariance_entangle(p, t, n_th);
  CHECK(std::abs(e.v11 - v(0, 0)) / v(0, 0) < 0.05);
  CHECK(std::abs(e.v33 - v(2, 2)) / v(2, 2) < 0.05);
  CHECK(std::abs(e.v14 - v(0, 3)) / std::abs(v(0, 3)) < 0.05);
  // gamma -> Gamma degenerate input stays finite.
  SystemParams q = p;
  q.gamma = q.Gamma;
  const auto eq = covariance_elements_strongcoupling(q, t);
  CHECK(std::isfinite(eq.v11));
  CHECK(std::isfinite(eq.v14));
  CHECK(std::isfinite(eq.v33));
}

TEST_CASE("room-temperature approximant at the 300 K figure parameters") {
  for (double g_over : {3.0, 5.0, 10.0}) {
    SystemParams p = base_params(g_over, 300.0, 0.4, 0.02);
    double worst = 0.0;
    for (int i = 1; i <= 200; ++i) {
      const double t = 0.2 / p.Gamma * i / 200;
      const double en = en_exact(p, t);
      if (en <= 0.0) continue;
      worst = std::max(worst, std::abs(en - en_of(lambda_minus_room(p, t))));
    }
    CHECK(worst < 0.05);
    CHECK(lambda_minus_room(p, 0.0) == 0.5);
  }
}

TEST_CASE("transferred occupancy closed form") {
  CHECK(nas_transferred(1e8, 0.0, 0.0, 25.0, 0.0) == 0.0);
  const double gt = 1e8;
  CHECK(nas_transferred(gt, 0.0, 0.0, 25.0, 0.5 * M_PI / gt) ==
        Catch::Approx(25.0).epsilon(1e-12));
  // Lossy first peak.
  const double Gamma = 2.0 * M_PI * 2e6;
  const double gamma = 0.05 * Gamma;
  const double t = 0.5 * M_PI / (40.0 * Gamma);
  CHECK(nas_transferred(40.0 * Gamma, gamma, Gamma, 25.0, t) ==
        Catch::Approx(std::exp(-0.5 * (gamma + Gamma) * t) * 25.0).epsilon(1e-12));
}

TEST_CASE("readout correlations limits and cross-path equivalence") {
  const SystemParams p = base_params();
  const double n_th = thermal_occupancy(p);
  {
    const auto corr = readout_correlations(p, 0.0, 0.3e-9);
    CHECK(corr.n_s == 0.0);
    CHECK(corr.n_b == Catch::Approx(n_th).epsilon(1e-12));
    CHECK(corr.c_ns == 0.0);
  }
  {
    SystemParams q = p;
    q.g = 0.0;
    const auto corr = readout_correlations(q, 2e-9, 0.1e-9);
    CHECK(corr.n_s == 0.0);
    CHECK(corr.c_ns == 0.0);
  }
  // Against the protocol propagation at t = tau1 + tau_d.
  const ProtocolTimeline timeline{2e-9, 0.1e-9, 0.0};
  const auto corr = readout_correlations(p, timeline.tau1, timeline.tau_d);
  const Trajectory traj = run_protocol(p, timeline, SamplingSpec{64},
                                       IntegratorOptions{1e-11, 1e-13});
  const CovMat& v = traj.covariances.back();
  const double n_s_l = 0.5 * (v(0, 0) + v(1, 1) - 1.0);
  const double n_b_l = 0.5 * (v(2, 2) + v(3, 3) - 1.0);
  const double re_l = 0.5 * (v(0, 2) - v(1, 3));
  const double im_l = 0.5 * (v(0, 3) + v(1, 2));
  CHECK(std::abs(n_s_l - corr.n_s) / corr.n_s < 1e-6);
  CHECK(std::abs(n_b_l - corr.n_b) / corr.n_b < 1e-6);
  CHECK(std::abs(re_l - corr.m_ab.real()) / std::abs(corr.m_ab) < 1e-6);
  CHECK(std::abs(im_l - corr.m_ab.imag()) / std::abs(corr.m_ab) < 1e-6);
}

TEST_CASE("readout cubic sign property") {
  const SystemParams p = base_params();
  const double n_th = thermal_occupancy(p);
  ReadoutCorrelations corr;
  corr.n_s = 40.0;
  corr.n_b = 60.0;
  corr.c_ns = 0.0;
  corr.m_ab = Complex(0.0, 0.0);
  CHECK(lambda_tilde_minus_cubic(p.g_tilde, p.Gamma, n_th, corr, 0.0) == 0.5);
  for (int i = 1; i <= 50; ++i) {
    const double t = 3e-9 * i / 50;
    CHECK(lambda_tilde_minus_cubic(p.g_tilde, p.Gamma, n_th, corr, t) >= 0.5);
  }
  // Strictly below threshold: still no readout.
  corr.c_ns = 2.0 * std::sqrt(corr.n_b * corr.n_s) * 0.999;
  corr.m_ab = Complex(0.0, 0.5 * corr.c_ns);
  CHECK(readout_eta_squared(p.g_tilde, corr) < 0.0);
}

TEST_CASE("readout poly approximant series matches the cubic") {
  const SystemParams p = base_params();
  const double n_th = thermal_occupancy(p);
  const auto corr = readout_correlations(p, 1.5e-9, 0.1e-9);
  CHECK(lambda_tilde_minus_poly(p.g_tilde, p.Gamma, n_th, corr, 0.0) ==
        Catch::Approx(0.5).epsilon(1e-12));
  for (double x : {0.01, 0.02, 0.05}) {
    const double t = x / p.g_tilde;
    const double lp = lambda_tilde_minus_poly(p.g_tilde, p.Gamma, n_th, corr, t);
    const double lc = lambda_tilde_minus_cubic(p.g_tilde, p.Gamma, n_th, corr, t);
    CHECK(std::abs(lp - lc) / lc < 1e-3);
  }
}

TEST_CASE("readout approximants track the exact curve near the peak") {
  // tau1 = 1.5 ns leaves a nonempty readout entanglement window.
  for (double gt_over : {30.0, 40.0, 50.0}) {
    SystemParams p = base_params();
    p.g_tilde = gt_over * p.Gamma;
    const double n_th = thermal_occupancy(p);
    const ProtocolTimeline timeline{1.5e-9, 0.1e-9, 3e-9};
    const auto corr = readout_correlations(p, timeline.tau1, timeline.tau_d);
    double worst_c = 0.0, worst_p = 0.0, peak = 0.0;
    for (int i = 1; i <= 200; ++i) {
      const double s = 2e-9 * i / 200;
      const auto blocks =
          analytic_readout_covariance(p, corr, timeline, timeline.tau1 + timeline.tau_d + s);
      const double en = en_of(lambda_minus(blocks));
      peak = std::max(peak, en);
      if (en <= 0.0) continue;
      worst_c = std::max(
          worst_c,
          std::abs(en - en_of(lambda_tilde_minus_cubic(p.g_tilde, p.Gamma, n_th, corr, s))));
      worst_p = std::max(
          worst_p,
          std::abs(en - en_of(lambda_tilde_minus_poly(p.g_tilde, p.Gamma, n_th, corr, s))));
    }
    CHECK(peak > 0.0);
    CHECK(worst_c < 0.05);
    CHECK(worst_p < 0.05);
  }
}

TEST_CASE("analytic readout covariance against three-mode Lyapunov propagation") {
  std::mt19937_64 rng(4242);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int set = 0; set < 20; ++set) {
    SystemParams p = base_params(20.0 + 20.0 * u(rng), 30.0, 0.3 * u(rng),
                                 0.01 + 0.04 * u(rng));
    p.g_tilde = (20.0 + 30.0 * u(rng)) * p.Gamma;
    const ProtocolTimeline timeline{(1.0 + u(rng)) * 1e-9, 0.1e-9, 3e-9};
    const auto corr = readout_correlations(p, timeline.tau1, timeline.tau_d);
    const Trajectory traj =
        run_protocol(p, timeline, SamplingSpec{20}, IntegratorOptions{1e-11, 1e-13});
    int compared = 0;
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
      if (traj.phases[i] != Phase::readout) continue;
      const auto exact = analytic_readout_covariance(p, corr, timeline, traj.times[i]);
      const auto lyap = extract_pair(traj.covariances[i], 0, 2);
      const Eigen::Matrix4d em = exact.assemble(), lm = lyap.assemble();
      const double scale = em.cwiseAbs().maxCoeff();
      for (int r = 0; r < 4; ++r) {
        for (int c = 0; c < 4; ++c) {
          const double denom = std::max(std::abs(em(r, c)), 1e-3 * scale);
          CHECK(std::abs(em(r, c) - lm(r, c)) / denom < 1e-5);
        }
      }
      ++compared;
    }
    CHECK(compared == 20);
  }
}

TEST_CASE("readout covariance boundary cases") {
  const SystemParams p = base_params();
  const ProtocolTimeline timeline{1.5e-9, 0.1e-9, 3e-9};
  const auto corr = readout_correlations(p, timeline.tau1, timeline.tau_d);
  const auto b0 = analytic_readout_covariance(p, corr, timeline, timeline.tau1 + timeline.tau_d);
  CHECK(b0.B(0, 0) == Catch::Approx(0.5).epsilon(1e-12));
  CHECK(b0.B(1, 1) == Catch::Approx(0.5).epsilon(1e-12));
  CHECK(b0.C.cwiseAbs().maxCoeff() == Catch::Approx(0.0).margin(1e-15));
  CHECK_THROWS_AS(analytic_readout_covariance(p, corr, timeline, 0.5 * timeline.tau1),
                  std::invalid_argument);
  SystemParams q = p;
  q.g_tilde = 0.0;
  const auto bq =
      analytic_readout_covariance(q, corr, timeline, timeline.tau1 + timeline.tau_d + 1e-9);
  CHECK(bq.B(0, 0) == 0.5);
  CHECK(log_negativity(bq) == 0.0);
}
