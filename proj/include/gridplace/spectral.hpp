#pragma once

#include <Eigen/Dense>

#include <iosfwd>

namespace gridplace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

enum class Weighting { Unweighted, Inertia };

/// Eigenpairs of a (possibly inertia-weighted) graph Laplacian.
///
/// Eigenvalues are nondecreasing with the first one snapped to exactly
/// zero. Row `alpha` of `eigenvectors` holds the unit eigenvector u_alpha,
/// with the sign fixed so that its first nonzero component is positive.
struct Spectrum {
  VectorXd eigenvalues;
  MatrixXd eigenvectors;
  Weighting weighting = Weighting::Unweighted;
  VectorXd inertia;  // empty unless weighting == Inertia
  bool degenerate = false;
  double min_gap = 0.0;  // smallest gap between consecutive nonzero eigenvalues

  Index size() const { return eigenvalues.size(); }
  double lambda(Index alpha) const { return eigenvalues(alpha); }
  double u(Index alpha, Index i) const { return eigenvectors(alpha, i); }
};

inline constexpr double kSymmetryTolerance = 1e-10;
inline constexpr double kZeroModeTolerance = 1e-9;   // relative to lambda_max
inline constexpr double kDegeneracyTolerance = 1e-8;  // relative to lambda_max

// M^{-1/2} L M^{-1/2}. Throws ZeroInertia.
MatrixXd weighted_laplacian(const MatrixXd& laplacian, const VectorXd& inertia);

// Throws NotSymmetric, MissingZeroMode, MultipleZeroModes.
Spectrum eigendecompose(const MatrixXd& matrix);

Spectrum laplacian_spectrum(const MatrixXd& laplacian);
Spectrum weighted_spectrum(const MatrixXd& laplacian, const VectorXd& inertia);

// Throws DegenerateSpectrum when the spectrum is flagged.
void require_nondegenerate(const Spectrum& spec);

double resistance_distance(const Spectrum& spec, Index i, Index j);
MatrixXd resistance_matrix(const Spectrum& spec);

// Moore-Penrose pseudo-inverse of a connected Laplacian through
// (L + 11^T/N)^{-1} - 11^T/N; does not use any eigendecomposition.
MatrixXd laplacian_pseudo_inverse(const MatrixXd& laplacian);

double centrality(const Spectrum& spec, Index j);
double kirchhoff_index(const Spectrum& spec, int p);

// sum_{alpha>1} u_{alpha b}^2 / lambda_alpha
double slow_mode_weight(const Spectrum& spec, Index b);

// One row per mode: lambda then the eigenvector components.
void write_spectrum_csv(std::ostream& out, const Spectrum& spec);

}  // namespace gridplace
