#ifndef BRILLOUIN_ANALYTIC_HPP
#define BRILLOUIN_ANALYTIC_HPP

#include <cmath>
#include <complex>
#include <stdexcept>

#include "brillouin/gaussian.hpp"
#include "brillouin/model.hpp"

namespace brillouin {

using Complex = std::complex<double>;

struct DegenerateRoots : std::runtime_error {
  DegenerateRoots()
      : std::runtime_error("mode coefficients are undefined: tau_+ and tau_- coincide") {}
};

struct HeatingDominates : std::runtime_error {
  HeatingDominates()
      : std::runtime_error("2 (g / Gamma n_th)^2 >= 1: peak formula outside its validity domain") {}
};

enum class Variant { write, readout };

/// Closed-form rates and weights of the two-mode operator solution.
/// The write variant solves the squeezing dynamics, the readout variant the
/// beam-splitter dynamics; omega_plus carries the minus sign of the root.
struct ModeCoefficients {
  Complex omega_plus;
  Complex omega_minus;
  Complex tau_plus;
  Complex tau_minus;
  Complex mu1;
  Complex mu2;
  Complex mu3;
  Variant variant;
};

// Both variants reduce to d/dt (u1, u2) = (wbar I + N) (u1, u2) with
// N = [delta, -i g; -+ i g, -delta]; N^2 = (delta^2 +- g^2) I, so
// exp(N t) = cosh(r t) + sinh(r t) N / r with r = sqrt(delta^2 +- g^2).
// The write variant couples (a, b^dag) (upper signs, squeezing), the readout
// variant couples (a_tilde, b) (lower signs, beam splitter).
inline ModeCoefficients mode_coefficients(const SystemParams& p, Variant variant) {
  const auto [delta_a, delta_b] = detunings(p);
  ModeCoefficients c;
  c.variant = variant;
  Complex wbar, delta, r2;
  if (variant == Variant::write) {
    if (p.g == 0.0) throw DegenerateRoots();
    wbar = Complex(-0.25 * (p.gamma + p.Gamma), -0.5 * (delta_a - delta_b));
    delta = Complex(0.25 * (p.Gamma - p.gamma), -0.5 * (delta_a + delta_b));
    r2 = delta * delta + p.g * p.g;
  } else {
    if (p.g_tilde == 0.0) throw DegenerateRoots();
    const double delta_at = p.delta_a_tilde_sign * delta_a;
    wbar = Complex(-0.25 * (p.gamma + p.Gamma), -0.5 * (delta_at + delta_b));
    delta = Complex(0.25 * (p.Gamma - p.gamma), -0.5 * (delta_at - delta_b));
    r2 = delta * delta - p.g_tilde * p.g_tilde;
  }
  const Complex r = std::sqrt(r2);
  const double g = variant == Variant::write ? p.g : p.g_tilde;
  if (std::abs(r) < 1e-14 * g) throw DegenerateRoots();
  c.omega_plus = wbar - r;
  c.omega_minus = wbar + r;
  c.mu1 = Complex(0.0, -0.5) * g / r;
  c.mu2 = 0.5 * (1.0 - delta / r);
  c.mu3 = -0.5 * (1.0 + delta / r);
  c.tau_plus = c.mu2 / c.mu1;
  c.tau_minus = c.mu3 / c.mu1;
  return c;
}

namespace detail {

/// (exp(alpha t) - 1)/alpha, series-evaluated near alpha t = 0 to avoid
/// catastrophic cancellation.
inline Complex growth_integral(Complex alpha, double t) {
  const Complex z = alpha * t;
  if (std::abs(z) < 1e-4) {
    return t * (1.0 + z * (0.5 + z * (1.0 / 6.0 + z * (1.0 / 24.0 + z / 120.0))));
  }
  return (std::exp(z) - 1.0) / alpha;
}

/// Transition amplitudes of the homogeneous two-mode solution and the noise
/// integrals entering the second moments, evaluated at time t.
struct SolutionKernels {
  Complex f_a;   // coefficient of a(0) in a(t)
  Complex g_a;   // coefficient of b^dag(0) in a(t)
  Complex f_b;   // coefficient of a^dag(0) in b(t)
  Complex g_b;   // coefficient of b(0) in b(t)
  Complex e1, e2, e3, e4;  // (exp(alpha_i t)-1)/alpha_i
  Complex i_h;   // int |e^{w+ s} - e^{w- s}|^2 ds
  Complex i_f;   // int |mu2 e^{w+ s} - mu3 e^{w- s}|^2 ds
  Complex i_m;   // int |mu3 e^{w+ s} - mu2 e^{w- s}|^2 ds (conjugate weights)
  Complex j1;    // int f_a(s) (e^{w+ s}-e^{w- s})^* ds
  Complex j2;    // int h(s) (-mu3 e^{w+ s}+mu2 e^{w- s})^* ds
};

inline SolutionKernels solution_kernels(const ModeCoefficients& c, double t) {
  SolutionKernels k;
  const Complex ep = std::exp(c.omega_plus * t);
  const Complex em = std::exp(c.omega_minus * t);
  k.f_a = c.mu2 * ep - c.mu3 * em;
  k.g_a = c.mu1 * (-ep + em);
  k.f_b = std::conj(c.mu1) * (std::conj(ep) - std::conj(em));
  k.g_b = -std::conj(c.mu3) * std::conj(ep) + std::conj(c.mu2) * std::conj(em);
  const Complex a1 = c.omega_plus + std::conj(c.omega_plus);
  const Complex a2 = c.omega_plus + std::conj(c.omega_minus);
  const Complex a3 = c.omega_minus + std::conj(c.omega_plus);
  const Complex a4 = c.omega_minus + std::conj(c.omega_minus);
  k.e1 = growth_integral(a1, t);
  k.e2 = growth_integral(a2, t);
  k.e3 = growth_integral(a3, t);
  k.e4 = growth_integral(a4, t);
  const Complex m2 = c.mu2, m3 = c.mu3;
  k.i_h = k.e1 - k.e2 - k.e3 + k.e4;
  k.i_f = std::norm(m2) * k.e1 - m2 * std::conj(m3) * k.e2 -
          m3 * std::conj(m2) * k.e3 + std::norm(m3) * k.e4;
  k.i_m = std::norm(m3) * k.e1 - m3 * std::conj(m2) * k.e2 -
          m2 * std::conj(m3) * k.e3 + std::norm(m2) * k.e4;
  k.j1 = m2 * k.e1 - m2 * k.e2 - m3 * k.e3 + m3 * k.e4;
  k.j2 = std::conj(m3) * k.e1 - std::conj(m2) * k.e2 - std::conj(m3) * k.e3 +
         std::conj(m2) * k.e4;
  return k;
}

}  // namespace detail

/// Second moments of the write-phase state started from vacuum (x) thermal(n0):
/// photon number, phonon number, and the only nonzero cross-correlator <a b>.
struct WriteMoments {
  double n_a;
  double n_b;
  Complex m_ab;
};

inline WriteMoments write_moments(const SystemParams& p, double t, double n0) {
  const double n_th = thermal_occupancy(p);
  if (p.g == 0.0) {
    // Decoupled Ornstein-Uhlenbeck relaxation.
    return WriteMoments{0.0, n_th + (n0 - n_th) * std::exp(-p.Gamma * t), Complex(0.0)};
  }
  const auto c = mode_coefficients(p, Variant::write);
  const auto k = detail::solution_kernels(c, t);
  const double mu1sq = std::norm(c.mu1);
  WriteMoments m;
  m.n_a = std::norm(k.g_a) * (n0 + 1.0) +
          p.Gamma * (1.0 + n_th) * mu1sq * std::real(k.i_h);
  m.n_b = std::norm(k.f_b) + std::norm(k.g_b) * n0 +
          p.gamma * mu1sq * std::real(k.i_h) + p.Gamma * n_th * std::real(k.i_m);
  m.m_ab = k.f_a * k.f_b + k.g_a * k.g_b * n0 + p.gamma * std::conj(c.mu1) * k.j1 +
           p.Gamma * n_th * c.mu1 * k.j2;
  return m;
}

/// Exact write-phase covariance of (Stokes, acoustic) at time t, initial state
/// vacuum (x) thermal(n0).
inline CovMat covariance_entangle(const SystemParams& p, double t, double n0) {
  const auto m = write_moments(p, t, n0);
  const double va = kVacuumVariance + m.n_a;
  const double vb = kVacuumVariance + m.n_b;
  const double re = m.m_ab.real();
  const double im = m.m_ab.imag();
  Eigen::Matrix4d v;
  v << va, 0.0, re, im,
       0.0, va, im, -re,
       re, im, vb, 0.0,
       im, -re, 0.0, vb;
  return CovMat(v);
}

/// Small-time cubic approximant lambda_- = (1/2)[1 - 2 g^2 t^2 + (2/3) g^2 (Gamma n_th) t^3].
inline double lambda_minus_cubic(double g, double Gamma, double n_th, double t) {
  const double g2 = g * g;
  return 0.5 * (1.0 - 2.0 * g2 * t * t + (2.0 / 3.0) * g2 * (Gamma * n_th) * t * t * t);
}

/// Peak entanglement estimate E_N^max = -ln[1 - 2 (g / Gamma n_th)^2].
inline double en_max(double g, double Gamma, double n_th) {
  const double x = g / (Gamma * n_th);
  const double arg = 1.0 - 2.0 * x * x;
  if (arg <= 0.0) throw HeatingDominates();
  return -std::log(arg);
}

/// Rational approximant lambda_- = (1/2) X/Y for the phase-matched strong
/// coupling regime; X degree 11, Y degree 8 in t.
inline double lambda_minus_rational(double g, double Gamma, double n_th, double t) {
  if (g <= 0.0) throw std::invalid_argument("lambda_minus_rational: g must be positive");
  const double A = Gamma * n_th;
  const double g2 = g * g, g3 = g2 * g, g4 = g2 * g2;
  const double g6 = g4 * g2, g8 = g4 * g4, g10 = g8 * g2;
  const double t2 = t * t, t3 = t2 * t, t4 = t2 * t2, t5 = t4 * t;
  const double t6 = t4 * t2, t7 = t6 * t, t8 = t4 * t4, t9 = t8 * t, t11 = t8 * t3;
  const double x = 1.0 + Gamma * (A - g) / (2.0 * g) * t + (g2 - Gamma * A) * t2 +
                   g * (2.0 * g + 3.0 * Gamma) / 3.0 * A * t3 +
                   g2 * (g2 - 4.0 * Gamma * A) / 3.0 * t4 +
                   4.0 * g4 * (6.0 * g + 5.0 * Gamma) / (15.0 * (2.0 * g - Gamma)) * A * t5 +
                   2.0 * g4 * (g2 - 24.0 * Gamma * A) / 45.0 * t6 + g6 / 3.0 * A * t7 +
                   g8 / 315.0 * t8 + 4.0 * g8 / 45.0 * A * t9 + g10 / 50.0 * A * t11;
  const double y = 1.0 + 1.5 * g * (2.0 * g + Gamma) * t2 +
                   (2.0 * g + Gamma) * g3 * t4 *
                       (4.0 / 3.0 + 11.0 / 15.0 * g2 * t2 + 0.2 * g4 * t4 +
                        g6 * t6 / 26.0);
  return 0.5 * x / y;
}

/// Strong-coupling approximations of the three covariance elements that
/// dominate lambda_-.
struct StrongCouplingElements {
  double v11;
  double v14;
  double v33;
};

inline StrongCouplingElements covariance_elements_strongcoupling(const SystemParams& p,
                                                                 double t) {
  const auto [da, db] = detunings(p);
  const double g = p.g, gam = p.gamma, G = p.Gamma;
  const double n = thermal_occupancy(p);
  const double D = g * g + (G - gam) * (G - gam) / 16.0 - (da + db) * (da + db) / 4.0;
  const double A = std::sqrt(D * D + (G - gam) * (G - gam) * (da + db) * (da + db) / 16.0);
  const double sD = std::sqrt(D);
  const double rate = 2.0 * std::sqrt(0.5 * (A + D));
  const double a1 = -0.5 * (gam + G) - rate;
  const double a4 = -0.5 * (gam + G) + rate;
  const double op = 1.0 + 2.0 * n;

  const double e11 = g * g * (1.0 + n) / (4.0 * D) *
                     (1.0 + (G - gam) / (2.0 * g) -
                      (2.0 * G + G * (G - gam) / g) / (4.0 * sD + (gam + G)));
  const double q = (std::pow(g - 0.25 * (G - gam), 2) + std::pow(0.25 * (G - gam), 2)) /
                   (g * g);
  const double e12 = g * g / (8.0 * D) *
                     (1.0 + q * op + 2.0 * q * G * op / (4.0 * sD - (gam + G)));
  const double e13 = -(G + (G - gam) * n) / (2.0 * D * (gam + G)) * g * g;
  const double e14 = op * G * g * g * (16.0 * D + (G + gam) * (G - 3.0 * gam)) /
                     (32.0 * D * D * (G + gam));

  const double e21 = g / (8.0 * D) *
                     (0.5 * (G - gam) * n + 2.0 * sD * (n + 1.0) -
                      0.5 * G * op * (4.0 * sD + (G - gam)) / (4.0 * sD + (G + gam)));
  const double e22 = -g / (8.0 * D) *
                     (-0.5 * (G - gam) * n + 2.0 * sD * (n + 1.0) +
                      0.5 * G * op * (4.0 * sD - (G - gam)) / (4.0 * sD - (G + gam)));
  const double e23 = g / (8.0 * D) *
                     (-(G - gam) * n +
                      (G * G - gam * gam) * G * op / std::pow(G + gam, 2));
  const double e24 = gam * G * g * op / (4.0 * D * (G + gam));

  const double e31 = g * g / (8.0 * D) *
                     (2.0 * (n + 1.0) - (G - gam) / (2.0 * g) -
                      2.0 * (gam + G * op) / (4.0 * sD + (G + gam)));
  const double e32 = g * g / (8.0 * D) *
                     (2.0 * (n + 1.0) + (G - gam) / (2.0 * g) +
                      2.0 * (gam + G * op) / (4.0 * sD + (G + gam)));
  const double e33 = g * g * (G - gam) * (1.0 + n) / (2.0 * D * (G + gam));
  const double e34 = -g * g * (G * op - gam) * (16.0 * D + std::pow(G + gam, 2)) /
                     (32.0 * D * D * (G + gam));

  const double x1 = std::exp(a1 * t);
  const double x4 = std::exp(a4 * t);
  const double xm = std::exp(-0.5 * (gam + G) * t);
  return StrongCouplingElements{
      e31 * x1 + e32 * x4 + e33 * xm + e34,
      e21 * x1 + e22 * x4 + e23 * xm + e24,
      e11 * x1 + e12 * x4 + e13 * xm + e14};
}

/// lambda_- from the strong-coupling element quotient
/// |V14^2 V33 - V11 V33^2| / (V33^2 + V14^2).
inline double lambda_minus_strongcoupling(const StrongCouplingElements& e) {
  return std::abs(e.v14 * e.v14 * e.v33 - e.v11 * e.v33 * e.v33) /
         (e.v33 * e.v33 + e.v14 * e.v14);
}

/// Room-temperature short-time approximant of lambda_-.
inline double lambda_minus_room(const SystemParams& p, double t) {
  const double g = p.g, gam = p.gamma, G = p.Gamma;
  const double n = thermal_occupancy(p);
  const double g2 = g * g, t2 = t * t;
  const double num = 1.0 + (g2 - 0.25 * (G * G - gam * gam)) * t2 +
                     (3.0 * G * G + 16.0 * g2) / 24.0 * (G * n) * t2 * t;
  const double den = 1.0 + 3.0 * g2 * t2;
  return 0.5 * std::abs(num / den);
}

/// Transferred anti-Stokes occupancy, strong-coupling closed form
/// N_as(t) = (1/2) e^{-(gamma+Gamma)t/2} [1 - cos(2 g~ t)] n_b,
/// with t measured from the start of the readout pulse.
inline double nas_transferred(double g_tilde, double gamma, double Gamma, double n_b,
                              double t) {
  return 0.5 * std::exp(-0.5 * (gamma + Gamma) * t) *
         (1.0 - std::cos(2.0 * g_tilde * t)) * n_b;
}

/// Occupancies and photon-phonon cross-correlation at the end of the delay,
/// t = tau1 + tau_d, the initial data of the readout phase. m_ab is the full
/// complex <a b> correlator; c_ns = 2 Im(m_ab).
struct ReadoutCorrelations {
  double n_s;
  double n_b;
  double c_ns;
  Complex m_ab;
};

inline ReadoutCorrelations readout_correlations(const SystemParams& p, double tau1,
                                                double tau_d) {
  const double n_th = thermal_occupancy(p);
  const auto [delta_a, delta_b] = detunings(p);
  const auto w = write_moments(p, tau1, n_th);
  const double fiber = std::exp(-p.gamma_tilde * tau_d);
  const double acoustic = std::exp(-p.Gamma * tau_d);
  const Complex phase =
      std::exp(Complex(-0.5 * (p.gamma_tilde + p.Gamma),
                       -(delta_a + delta_b)) * tau_d);
  ReadoutCorrelations corr;
  corr.n_s = fiber * w.n_a;
  corr.n_b = acoustic * w.n_b + n_th * (1.0 - acoustic);
  corr.m_ab = phase * w.m_ab;
  corr.c_ns = 2.0 * corr.m_ab.imag();
  return corr;
}

/// Readout entanglement rate eta^2 = g~^2 (C_ns^2 - 4 n_b n_s) / (1 + 2 n_s).
inline double readout_eta_squared(double g_tilde, const ReadoutCorrelations& corr) {
  return g_tilde * g_tilde *
         (corr.c_ns * corr.c_ns - 4.0 * corr.n_b * corr.n_s) /
         (1.0 + 2.0 * corr.n_s);
}

/// Cubic readout approximant, t measured from the start of the readout pulse.
inline double lambda_tilde_minus_cubic(double g_tilde, double Gamma, double n_th,
                                       const ReadoutCorrelations& corr, double t) {
  const double eta2 = readout_eta_squared(g_tilde, corr);
  return 0.5 * (1.0 - eta2 * t * t +
                (2.0 / 3.0) * g_tilde * g_tilde * (Gamma * n_th) * t * t * t);
}

/// Degree-12/14 rational readout approximant, t from the readout start.
inline double lambda_tilde_minus_poly(double g_tilde, double Gamma, double n_th,
                                      const ReadoutCorrelations& corr, double t) {
  const double gt2 = g_tilde * g_tilde;
  const double gt4 = gt2 * gt2, gt6 = gt4 * gt2, gt8 = gt4 * gt4;
  const double gt10 = gt8 * gt2, gt12 = gt8 * gt4, gt14 = gt12 * gt2;
  const double ns = corr.n_s, nb = corr.n_b, nth = n_th;
  const double c2 = corr.c_ns * corr.c_ns;
  const double ns2 = ns * ns, nb2 = nb * nb;
  const double p1 = 1.0 + 3.0 * ns + 2.0 * ns2;   // (1+ns)(1+2ns)
  const double p2 = 3.0 + 8.0 * ns + 4.0 * ns2;   // (1+2ns)(3+2ns)

  double num[13];
  num[0] = p1 / 4.0;
  num[1] = -Gamma / 16.0 * p2;
  num[2] = gt2 * (nb * p2 - (1.0 + ns) * c2) / 4.0;
  num[3] = Gamma * gt2 *
           ((3.0 + 2.0 * ns) * (2.0 + 4.0 * ns + 3.0 * c2) + 4.0 * nth * p2 -
            6.0 * nb * (5.0 + 12.0 * ns + 4.0 * ns2)) /
           48.0;
  num[4] = gt4 * (6.0 * nb2 * (1.0 + 2.0 * ns) - nb * p2 + (1.0 + ns - 3.0 * nb) * c2) /
           12.0;
  num[5] = -Gamma * gt4 * (1.0 + 2.0 * ns) *
               (3.0 + 2.0 * ns + 5.0 * nb * (12.0 * nb - 2.0 * ns - 9.0) +
                nth * (6.0 - 40.0 * nb + 4.0 * ns)) /
               120.0 -
           Gamma * gt4 * (5.0 + 4.0 * nth - 12.0 * nb + 2.0 * ns) * c2 / 48.0;
  num[6] = gt6 *
           (nb * p2 - 30.0 * nb2 * (1.0 + 2.0 * ns) - (1.0 + ns - 15.0 * nb) * c2) /
           90.0;
  num[7] = Gamma * gt6 * (1.0 + 2.0 * ns) *
               (3.0 + 420.0 * nb2 + 2.0 * ns - 7.0 * nb * (21.0 + 2.0 * ns) +
                2.0 * nth * (3.0 - 112.0 * nb + 2.0 * ns)) /
               1260.0 +
           Gamma * gt6 * (11.0 + 16.0 * nth - 60.0 * nb + 2.0 * ns) * c2 / 360.0;
  num[8] = gt8 *
           (126.0 * nb2 * (1.0 + 2.0 * ns) - nb * p2 + (1.0 + ns - 63.0 * nb) * c2) /
           120.0;
  num[9] = -Gamma * gt8 * (1.0 + 2.0 * ns) *
               (3.0 + 2.0 * ns + 3.0 * nb * (756.0 * nb - 6.0 * ns - 179.0) +
                2.0 * nth * (3.0 - 492.0 * nb + 2.0 * ns)) /
               22680.0 -
           Gamma * gt8 * (91.0 + 164.0 * nth - 756.0 * nb + 6.0 * ns) * c2 / 15120.0;
  num[10] = gt10 *
            (nb * p2 - 510.0 * nb2 * (1.0 + 2.0 * ns) -
             (1.0 + ns - 256.0 * nb) * c2) /
            28350.0;
  num[11] = Gamma * gt10 *
            (nb * (1.0 + 2.0 * ns) * (-3.0 + 4.0 * nth + 1020.0 * nb - 2.0 * ns) +
             (1.0 - nth - 510.0 * nb + ns) * c2) /
            56700.0;
  num[12] = gt12 * (nb * (1.0 + 2.0 * ns) * (2.0 * nth + 1023.0 * nb)) / 467775.0 -
            gt12 * ((nth + 1023.0 * nb) * c2) / 935550.0;

  double den[15];
  den[0] = p1 / 2.0;
  den[1] = -Gamma * (3.0 + 2.0 * ns) / 8.0;
  den[2] = gt2 * (2.0 * nb * (3.0 + 2.0 * ns) + c2) / 4.0;
  den[3] = Gamma * gt2 *
           (6.0 + 4.0 * ns + 4.0 * nth * (3.0 + 2.0 * ns) -
            6.0 * nb * (5.0 + 2.0 * ns) - 3.0 * c2) /
           24.0;
  den[4] = gt4 * (12.0 * nb2 - 2.0 * nb * (3.0 + 2.0 * ns) - c2) / 12.0;
  den[5] = Gamma * gt4 *
           (-3.0 - 2.0 * ns - 5.0 * nb * (12.0 * nb - 9.0 - 2.0 * ns) +
            nth * (-6.0 + 40.0 * nb - 4.0 * ns)) /
           60.0;
  den[6] = gt6 * (-60.0 * nb2 + 2.0 * nb * (3.0 + 2.0 * ns) + c2) / 90.0;
  den[7] = Gamma * gt6 *
           (6.0 + 4.0 * ns + 14.0 * nb * (60.0 * nb - 21.0 - 2.0 * ns) +
            4.0 * nth * (3.0 - 112.0 * nb + 2.0 * ns) - 7.0 * c2) /
           1260.0;
  den[8] = gt8 * (252.0 * nb2 - 2.0 * nb * (3.0 + 2.0 * ns) - c2) / 1260.0;
  den[9] = Gamma * gt8 *
           (-6.0 - 4.0 * ns - 6.0 * nb * (756.0 * nb - 6.0 * ns - 179.0) +
            4.0 * nth * (-3.0 + 492.0 * nb - 2.0 * ns) + 9.0 * c2) /
           22680.0;
  den[10] = gt10 * (2.0 * nb * (3.0 + 2.0 * ns) - 1020.0 * nb2 + c2) / 28350.0;
  den[11] = -Gamma * gt10 *
            (2.0 * nb * (3.0 - 4.0 * nth + 2.0 * ns) - 2040.0 * nb2 + c2) / 56700.0;
  den[12] = gt12 * (nb * (2.0 * nth + 1023.0 * nb)) / 233888.0;
  den[13] = -Gamma * gt12 * (nb * (2.0 * nth + 1023.0 * nb)) / 233888.0;
  den[14] = -gt14 * nb2 / 2598.0;

  double x = 0.0, y = 0.0;
  for (int i = 12; i >= 0; --i) x = x * t + num[i];
  for (int i = 14; i >= 0; --i) y = y * t + den[i];
  return std::abs(x / y);
}

/// Exact (Stokes, anti-Stokes) covariance during readout, t >= tau1 + tau_d.
inline BlockDecomposition analytic_readout_covariance(const SystemParams& p,
                                                      const ReadoutCorrelations& corr,
                                                      const ProtocolTimeline& timeline,
                                                      double t) {
  const double s = t - (timeline.tau1 + timeline.tau_d);
  if (s < 0.0) {
    throw std::invalid_argument("analytic_readout_covariance: t precedes the readout start");
  }
  const auto [delta_a, delta_b] = detunings(p);
  const double n_th = thermal_occupancy(p);
  BlockDecomposition blocks;
  const double v11 = kVacuumVariance + std::exp(-p.gamma_tilde * s) * corr.n_s;
  blocks.A = v11 * Eigen::Matrix2d::Identity();
  if (p.g_tilde == 0.0) {
    // Uncoupled anti-Stokes mode stays in vacuum; no cross-correlations build up.
    blocks.B = kVacuumVariance * Eigen::Matrix2d::Identity();
    blocks.C = Eigen::Matrix2d::Zero();
    return blocks;
  }
  const auto c = mode_coefficients(p, Variant::readout);
  const auto k = detail::solution_kernels(c, s);
  const Complex swap = c.mu1 * (std::exp(c.omega_minus * s) - std::exp(c.omega_plus * s));
  const double n_as = std::norm(swap) * corr.n_b +
                      p.Gamma * n_th * std::norm(c.mu1) * std::real(k.i_h);
  blocks.B = (kVacuumVariance + n_as) * Eigen::Matrix2d::Identity();
  const Complex stokes_decay =
      std::exp(Complex(-0.5 * p.gamma_tilde, -delta_a) * s);
  const Complex m = stokes_decay * swap * corr.m_ab;
  blocks.C << m.real(), m.imag(), m.imag(), -m.real();
  return blocks;
}

}  // namespace brillouin

#endif  // BRILLOUIN_ANALYTIC_HPP
