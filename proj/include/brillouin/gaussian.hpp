#ifndef BRILLOUIN_GAUSSIAN_HPP
#define BRILLOUIN_GAUSSIAN_HPP

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace brillouin {

/// Vacuum variance of a quadrature, convention x = (a + a^dag)/sqrt(2).
inline constexpr double kVacuumVariance = 0.5;

/// Relative tolerance below 1/2 still accepted as a physical symplectic
/// eigenvalue.
inline constexpr double kPhysicalTol = 1e-9;

/// Absolute tolerance for clamping a slightly negative discriminant in the
/// symplectic eigenvalue formula.
inline constexpr double kSqrtTol = 1e-12;

struct DiscriminantNegative : std::runtime_error {
  explicit DiscriminantNegative(double value)
      : std::runtime_error("sigma^2 - 4 det V is negative beyond tolerance: " +
                           std::to_string(value)) {}
};

/// Real symmetric covariance matrix of a small number of bosonic modes in
/// quadrature ordering (x1, p1, x2, p2, ...). Symmetrized on construction.
class CovMat {
 public:
  explicit CovMat(Eigen::MatrixXd entries) {
    if (entries.rows() != entries.cols() || entries.rows() % 2 != 0 ||
        entries.rows() == 0) {
      throw std::invalid_argument("covariance matrix must be square with even dimension");
    }
    mat_ = 0.5 * (entries + entries.transpose()).eval();
  }

  static CovMat vacuum(int modes) {
    return CovMat(kVacuumVariance *
                  Eigen::MatrixXd::Identity(2 * modes, 2 * modes));
  }

  /// Product of single-mode thermal states with the given occupancies.
  static CovMat thermal(const std::vector<double>& occupancies) {
    const int n = static_cast<int>(occupancies.size());
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(2 * n, 2 * n);
    for (int i = 0; i < n; ++i) {
      const double v = (2.0 * occupancies[i] + 1.0) * kVacuumVariance;
      m(2 * i, 2 * i) = v;
      m(2 * i + 1, 2 * i + 1) = v;
    }
    return CovMat(m);
  }

  int modes() const { return static_cast<int>(mat_.rows()) / 2; }
  int dim() const { return static_cast<int>(mat_.rows()); }
  const Eigen::MatrixXd& matrix() const { return mat_; }

  /// 2x2 block coupling mode i quadratures to mode j quadratures.
  Eigen::Matrix2d block(int i, int j) const {
    return mat_.block<2, 2>(2 * i, 2 * j);
  }

  double operator()(int r, int c) const { return mat_(r, c); }

 private:
  Eigen::MatrixXd mat_;
};

/// Two-mode reduction of a covariance matrix in the block form
/// [A C; C^T B].
struct BlockDecomposition {
  Eigen::Matrix2d A;
  Eigen::Matrix2d B;
  Eigen::Matrix2d C;

  Eigen::Matrix4d assemble() const {
    Eigen::Matrix4d v;
    v.block<2, 2>(0, 0) = A;
    v.block<2, 2>(0, 2) = C;
    v.block<2, 2>(2, 0) = C.transpose();
    v.block<2, 2>(2, 2) = B;
    return v;
  }
};

/// Reduced state of modes (i, j), i < j, of a larger Gaussian state.
inline BlockDecomposition extract_pair(const CovMat& v, int i, int j) {
  if (i < 0 || j <= i || j >= v.modes()) {
    throw std::out_of_range("extract_pair: mode indices must satisfy 0 <= i < j < modes");
  }
  return BlockDecomposition{v.block(i, i), v.block(j, j), v.block(i, j)};
}

struct SigmaDelta {
  double sigma;   // det A + det B - 2 det C
  double det_v;   // det of the full 4x4 covariance
};

/// The partial-transpose invariant Sigma = det A + det B - 2 det C and the
/// full determinant. The sign flip on det C is the partial transposition.
inline SigmaDelta sigma_delta(const BlockDecomposition& blocks) {
  return SigmaDelta{
      blocks.A.determinant() + blocks.B.determinant() -
          2.0 * blocks.C.determinant(),
      blocks.assemble().determinant()};
}

/// Minimal symplectic eigenvalue after partial transposition,
/// lambda_- = 2^{-1/2} sqrt(Sigma - sqrt(Sigma^2 - 4 det V)).
inline double lambda_minus(const BlockDecomposition& blocks) {
  const auto [sigma, det_v] = sigma_delta(blocks);
  double disc = sigma * sigma - 4.0 * det_v;
  if (disc < 0.0) {
    if (disc < -kSqrtTol) throw DiscriminantNegative(disc);
    disc = 0.0;
  }
  double inner = sigma - std::sqrt(disc);
  if (inner < 0.0) inner = 0.0;  // floating point noise near pure states
  return std::sqrt(0.5 * inner);
}

/// Logarithmic negativity E_N = max[0, -ln(2 lambda_-)].
inline double log_negativity(const BlockDecomposition& blocks) {
  return std::max(0.0, -std::log(2.0 * lambda_minus(blocks)));
}

namespace detail {

inline Eigen::MatrixXd symplectic_form(int modes) {
  Eigen::MatrixXd omega = Eigen::MatrixXd::Zero(2 * modes, 2 * modes);
  for (int i = 0; i < modes; ++i) {
    omega(2 * i, 2 * i + 1) = 1.0;
    omega(2 * i + 1, 2 * i) = -1.0;
  }
  return omega;
}

}  // namespace detail

/// Symplectic eigenvalues of a covariance matrix, ascending. The state is a
/// bona-fide quantum state iff all entries are >= 1/2 (up to tolerance).
inline std::vector<double> symplectic_spectrum(const CovMat& v) {
  const int n = v.modes();
  const Eigen::MatrixXd m = detail::symplectic_form(n) * v.matrix();
  Eigen::EigenSolver<Eigen::MatrixXd> solver(m, /*computeEigenvectors=*/false);
  std::vector<double> absvals(2 * n);
  for (int i = 0; i < 2 * n; ++i) absvals[i] = std::abs(solver.eigenvalues()[i]);
  std::sort(absvals.begin(), absvals.end());
  // Eigenvalues of Omega V come in +-(i nu) pairs; keep one of each.
  std::vector<double> spectrum(n);
  for (int i = 0; i < n; ++i) spectrum[i] = 0.5 * (absvals[2 * i] + absvals[2 * i + 1]);
  return spectrum;
}

/// True when all symplectic eigenvalues are >= 1/2 within relative tolerance.
inline bool is_physical(const CovMat& v, double tol = kPhysicalTol) {
  const auto spectrum = symplectic_spectrum(v);
  return spectrum.front() >= kVacuumVariance * (1.0 - tol);
}

}  // namespace brillouin

#endif  // BRILLOUIN_GAUSSIAN_HPP
