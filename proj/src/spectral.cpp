#include "gridplace/spectral.hpp"

#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

#include "gridplace/errors.hpp"

namespace gridplace {

MatrixXd weighted_laplacian(const MatrixXd& laplacian, const VectorXd& inertia) {
  if (inertia.size() != laplacian.rows() || laplacian.rows() != laplacian.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "inertia vector does not match Laplacian");
  }
  for (Index i = 0; i < inertia.size(); ++i) {
    if (!(inertia(i) > 0.0)) {
      std::ostringstream msg;
      msg << "bus position " << i << " has inertia " << inertia(i);
      throw Error(ErrorCode::ZeroInertia, msg.str());
    }
  }
  const VectorXd scale = inertia.cwiseSqrt().cwiseInverse();
  return scale.asDiagonal() * laplacian * scale.asDiagonal();
}

Spectrum eigendecompose(const MatrixXd& matrix) {
  const Index n = matrix.rows();
  if (n == 0 || matrix.cols() != n) throw Error(ErrorCode::DimensionMismatch, "matrix must be square and nonempty");
  const double norm = std::max(matrix.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
  if ((matrix - matrix.transpose()).cwiseAbs().maxCoeff() > kSymmetryTolerance * norm) {
    throw Error(ErrorCode::NotSymmetric, "input matrix is not symmetric");
  }

  Eigen::SelfAdjointEigenSolver<MatrixXd> solver(0.5 * (matrix + matrix.transpose()));
  if (solver.info() != Eigen::Success) throw Error(ErrorCode::NotSymmetric, "eigensolver failed");

  Spectrum spec;
  spec.eigenvalues = solver.eigenvalues();
  spec.eigenvectors = solver.eigenvectors().transpose();

  const double lambda_max = std::max(std::fabs(spec.eigenvalues(n - 1)), std::numeric_limits<double>::min());
  if (std::fabs(spec.eigenvalues(0)) > kZeroModeTolerance * lambda_max) {
    std::ostringstream msg;
    msg << "smallest eigenvalue " << spec.eigenvalues(0) << " is not a zero mode";
    throw Error(ErrorCode::MissingZeroMode, msg.str());
  }
  spec.eigenvalues(0) = 0.0;
  if (n > 1 && spec.eigenvalues(1) <= kZeroModeTolerance * lambda_max) {
    throw Error(ErrorCode::MultipleZeroModes, "more than one zero eigenvalue (disconnected network?)");
  }

  for (Index alpha = 0; alpha < n; ++alpha) {
    for (Index i = 0; i < n; ++i) {
      const double c = spec.eigenvectors(alpha, i);
      if (std::fabs(c) > 1e-12) {
        if (c < 0.0) spec.eigenvectors.row(alpha) *= -1.0;
        break;
      }
    }
  }

  spec.min_gap = std::numeric_limits<double>::infinity();
  for (Index alpha = 2; alpha < n; ++alpha) {
    spec.min_gap = std::min(spec.min_gap, spec.eigenvalues(alpha) - spec.eigenvalues(alpha - 1));
  }
  spec.degenerate = n > 2 && spec.min_gap < kDegeneracyTolerance * lambda_max;
  return spec;
}

Spectrum laplacian_spectrum(const MatrixXd& laplacian) { return eigendecompose(laplacian); }

Spectrum weighted_spectrum(const MatrixXd& laplacian, const VectorXd& inertia) {
  Spectrum spec = eigendecompose(weighted_laplacian(laplacian, inertia));
  spec.weighting = Weighting::Inertia;
  spec.inertia = inertia;
  return spec;
}

void require_nondegenerate(const Spectrum& spec) {
  if (spec.degenerate) {
    std::ostringstream msg;
    msg << "minimum eigenvalue gap " << spec.min_gap << " is below " << kDegeneracyTolerance
        << " * lambda_max; first-order perturbation theory does not apply";
    throw Error(ErrorCode::DegenerateSpectrum, msg.str());
  }
}

double resistance_distance(const Spectrum& spec, Index i, Index j) {
  if (i == j) return 0.0;
  double sum = 0.0;
  for (Index alpha = 1; alpha < spec.size(); ++alpha) {
    const double diff = spec.u(alpha, i) - spec.u(alpha, j);
    sum += diff * diff / spec.lambda(alpha);
  }
  return sum;
}

MatrixXd resistance_matrix(const Spectrum& spec) {
  const Index n = spec.size();
  MatrixXd omega = MatrixXd::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      omega(i, j) = omega(j, i) = resistance_distance(spec, i, j);
    }
  }
  return omega;
}

MatrixXd laplacian_pseudo_inverse(const MatrixXd& laplacian) {
  const Index n = laplacian.rows();
  const MatrixXd ones = MatrixXd::Constant(n, n, 1.0 / static_cast<double>(n));
  const MatrixXd shifted = laplacian + ones;
  return shifted.ldlt().solve(MatrixXd::Identity(n, n)) - ones;
}

double centrality(const Spectrum& spec, Index j) {
  double sum = 0.0;
  for (Index i = 0; i < spec.size(); ++i) sum += resistance_distance(spec, i, j);
  return static_cast<double>(spec.size()) / sum;
}

double kirchhoff_index(const Spectrum& spec, int p) {
  if (p < 1) throw Error(ErrorCode::InvalidParameters, "Kirchhoff index order must be a positive integer");
  double sum = 0.0;
  for (Index alpha = 1; alpha < spec.size(); ++alpha) sum += std::pow(spec.lambda(alpha), -p);
  return static_cast<double>(spec.size()) * sum;
}

double slow_mode_weight(const Spectrum& spec, Index b) {
  double sum = 0.0;
  for (Index alpha = 1; alpha < spec.size(); ++alpha) sum += spec.u(alpha, b) * spec.u(alpha, b) / spec.lambda(alpha);
  return sum;
}

void write_spectrum_csv(std::ostream& out, const Spectrum& spec) {
  const auto old_precision = out.precision(17);
  out << "lambda";
  for (Index i = 0; i < spec.size(); ++i) out << ",u" << i;
  out << '\n';
  for (Index alpha = 0; alpha < spec.size(); ++alpha) {
    out << spec.lambda(alpha);
    for (Index i = 0; i < spec.size(); ++i) out << ',' << spec.u(alpha, i);
    out << '\n';
  }
  out.precision(old_precision);
}

}  // namespace gridplace
