#include "gridplace/sensitivity.hpp"

#include <cmath>

#include "gridplace/errors.hpp"

namespace gridplace {

namespace {

// Eigenvalues of L (unweighted) at the homogeneous baseline.
VectorXd laplacian_eigenvalues(const Spectrum& spec, double m) {
  return spec.weighting == Weighting::Inertia ? VectorXd(spec.eigenvalues * m) : spec.eigenvalues;
}

// Eigenvalues of L_M = L / m at the homogeneous baseline.
VectorXd weighted_eigenvalues(const Spectrum& spec, double m) {
  return spec.weighting == Weighting::Inertia ? spec.eigenvalues : VectorXd(spec.eigenvalues / m);
}

void check_fault(const Spectrum& spec, const FaultSpec& fault) {
  if (fault.bus < 0 || fault.bus >= spec.size()) throw Error(ErrorCode::UnknownBus, "fault bus index out of range");
}

VectorXd shape_or_zero(const VectorXd& shape, Index n) {
  if (shape.size() == 0) return VectorXd::Zero(n);
  if (shape.size() != n) throw Error(ErrorCode::DimensionMismatch, "shape vector does not match system size");
  return shape;
}

}  // namespace

void PerturbationParams::validate(Index n) const {
  if (!(m > 0.0)) throw Error(ErrorCode::InvalidParameters, "mean inertia must be positive");
  if (!(gamma > 0.0)) throw Error(ErrorCode::InvalidParameters, "mean damping ratio must be positive");
  validate_shape(shape_or_zero(r, n), mu, "r");
  validate_shape(shape_or_zero(a, n), g, "a");
}

VectorXd PerturbationParams::inertia(Index n) const {
  return (m * (VectorXd::Ones(n) + mu * shape_or_zero(r, n))).eval();
}

VectorXd PerturbationParams::damping_ratio(Index n) const {
  return (gamma * (VectorXd::Ones(n) + g * shape_or_zero(a, n))).eval();
}

VectorXd inertia_susceptibility(const Spectrum& spec, const PerturbationParams& params, const FaultSpec& fault) {
  check_fault(spec, fault);
  require_nondegenerate(spec);
  const Index n = spec.size();
  const VectorXd lambda = laplacian_eigenvalues(spec, params.m);
  VectorXd weighted = VectorXd::Zero(n);
  for (Index alpha = 1; alpha < n; ++alpha) weighted(alpha) = spec.u(alpha, fault.bus) / lambda(alpha);
  const double scale = -params.mu * fault.delta_p * fault.delta_p / (params.gamma * static_cast<double>(n));
  return scale * (spec.eigenvectors.transpose() * weighted);
}

VectorXd inertia_susceptibility_antisymmetric(const Spectrum& spec, const PerturbationParams& params,
                                              const FaultSpec& fault) {
  check_fault(spec, fault);
  require_nondegenerate(spec);
  const Index n = spec.size();
  const Index b = fault.bus;
  const VectorXd lambda = laplacian_eigenvalues(spec, params.m);
  VectorXd rho = VectorXd::Zero(n);
  for (Index i = 0; i < n; ++i) {
    double sum = 0.0;
    for (Index alpha = 1; alpha < n; ++alpha) {
      for (Index beta = 0; beta < n; ++beta) {
        if (beta == alpha) continue;
        sum += spec.u(alpha, b) * spec.u(beta, b) * spec.u(alpha, i) * spec.u(beta, i) / (lambda(alpha) - lambda(beta));
      }
    }
    rho(i) = -params.mu * fault.delta_p * fault.delta_p / params.gamma * sum;
  }
  return rho;
}

VectorXd inertia_susceptibility_expanded(const Spectrum& spec, const PerturbationParams& params,
                                         const FaultSpec& fault) {
  check_fault(spec, fault);
  require_nondegenerate(spec);
  const Index n = spec.size();
  const Index b = fault.bus;
  const VectorXd lambda = laplacian_eigenvalues(spec, params.m);
  double self = 0.0;
  for (Index alpha = 1; alpha < n; ++alpha) self += spec.u(alpha, b) * spec.u(alpha, b) / lambda(alpha);

  VectorXd rho = VectorXd::Zero(n);
  for (Index i = 0; i < n; ++i) {
    double cross = 0.0;
    double diagonal = 0.0;
    for (Index alpha = 1; alpha < n; ++alpha) {
      const double uab = spec.u(alpha, b);
      const double uai = spec.u(alpha, i);
      diagonal += uab * uab * uai * uai / lambda(alpha);
      for (Index beta = 0; beta < n; ++beta) {
        if (beta == alpha) continue;
        const double weight = 1.0 / lambda(alpha) - 2.0 / (lambda(alpha) - lambda(beta));
        cross += uab * spec.u(beta, b) * uai * spec.u(beta, i) * weight;
      }
    }
    const double kronecker = i == b ? self : 0.0;
    rho(i) = params.mu * fault.delta_p * fault.delta_p / (2.0 * params.gamma) * (cross - kronecker + diagonal);
  }
  return rho;
}

DampingSusceptibility damping_susceptibility(const Spectrum& spec, const PerturbationParams& params,
                                             const FaultSpec& fault, bool include_zero_mode) {
  check_fault(spec, fault);
  require_nondegenerate(spec);
  const Index n = spec.size();
  const Index b = fault.bus;
  const double gamma = params.gamma;
  const VectorXd lambda = weighted_eigenvalues(spec, params.m);
  for (Index alpha = 1; alpha < n; ++alpha) {
    if (4.0 * lambda(alpha) <= gamma * gamma) {
      throw Error(ErrorCode::OverdampedMode, "mode " + std::to_string(alpha + 1) + " is overdamped");
    }
  }
  const double m_b = spec.weighting == Weighting::Inertia ? spec.inertia(b) : params.m;

  // w(alpha, i) = u_{alpha i} u_{alpha b}
  const MatrixXd w = spec.eigenvectors.array().colwise() * spec.eigenvectors.col(b).array();

  VectorXd inv_lambda = VectorXd::Zero(n);
  for (Index alpha = 1; alpha < n; ++alpha) inv_lambda(alpha) = 1.0 / lambda(alpha);

  MatrixXd kernel = MatrixXd::Zero(n, n);
  const Index first_beta = include_zero_mode ? 0 : 1;
  for (Index alpha = 1; alpha < n; ++alpha) {
    for (Index beta = first_beta; beta < n; ++beta) {
      if (beta == alpha) continue;
      const double gap = lambda(alpha) - lambda(beta);
      kernel(alpha, beta) = 1.0 / (gap * gap + 2.0 * gamma * gamma * (lambda(alpha) + lambda(beta)));
    }
  }

  const double scale = -params.g * fault.delta_p * fault.delta_p / (2.0 * gamma * m_b);
  DampingSusceptibility out;
  out.term1 = scale * (w.array().square().colwise() * inv_lambda.array()).colwise().sum().transpose();
  out.term2 = scale * 4.0 * gamma * gamma * ((kernel * w).array() * w.array()).colwise().sum().transpose();
  out.total = out.term1 + out.term2;
  return out;
}

SusceptibilityReport susceptibilities(const Spectrum& spec, const PerturbationParams& params, const FaultSpec& fault,
                                      bool include_zero_mode) {
  params.validate(spec.size());
  return SusceptibilityReport{inertia_susceptibility(spec, params, fault),
                              damping_susceptibility(spec, params, fault, include_zero_mode), fault, params};
}

double vulnerability(const VectorXd& measures, const VectorXd& eta) {
  if (measures.size() != eta.size()) throw Error(ErrorCode::DimensionMismatch, "weights do not match measures");
  if ((eta.array() < 0.0).any()) throw Error(ErrorCode::InvalidParameters, "vulnerability weights must be >= 0");
  return eta.dot(measures);
}

FaultSet uniform_faults(std::vector<Index> buses, double delta_p) {
  FaultSet set;
  const Index k = static_cast<Index>(buses.size());
  set.buses = std::move(buses);
  set.delta_p = VectorXd::Constant(k, delta_p);
  set.eta = VectorXd::Ones(k);
  return set;
}

namespace {

void check_fault_set(const FaultSet& faults) {
  const Index k = static_cast<Index>(faults.buses.size());
  if (faults.delta_p.size() != k || faults.eta.size() != k) {
    throw Error(ErrorCode::DimensionMismatch, "fault set vectors have inconsistent sizes");
  }
}

}  // namespace

VectorXd homogeneous_measures(const Spectrum& spec, const PerturbationParams& params, const FaultSet& faults) {
  check_fault_set(faults);
  const VectorXd lambda = laplacian_eigenvalues(spec, params.m);
  VectorXd out(static_cast<Index>(faults.buses.size()));
  for (std::size_t k = 0; k < faults.buses.size(); ++k) {
    const Index b = faults.buses[k];
    double sum = 0.0;
    for (Index alpha = 1; alpha < spec.size(); ++alpha) sum += spec.u(alpha, b) * spec.u(alpha, b) / lambda(alpha);
    const double dp = faults.delta_p(static_cast<Index>(k));
    out(static_cast<Index>(k)) = dp * dp / (2.0 * params.gamma) * sum;
  }
  return out;
}

Aggregated aggregate_susceptibilities(const Spectrum& spec, const PerturbationParams& params, const FaultSet& faults,
                                      bool include_zero_mode) {
  check_fault_set(faults);
  const Index n = spec.size();
  Aggregated agg{VectorXd::Zero(n), VectorXd::Zero(n), VectorXd::Zero(n), VectorXd::Zero(n)};
  for (std::size_t k = 0; k < faults.buses.size(); ++k) {
    const double eta = faults.eta(static_cast<Index>(k));
    if (eta == 0.0) continue;
    const FaultSpec fault{faults.buses[k], faults.delta_p(static_cast<Index>(k))};
    agg.rho += eta * inertia_susceptibility(spec, params, fault);
    const DampingSusceptibility alpha = damping_susceptibility(spec, params, fault, include_zero_mode);
    agg.alpha += eta * alpha.total;
    agg.alpha_term1 += eta * alpha.term1;
    agg.alpha_term2 += eta * alpha.term2;
  }
  return agg;
}

VulnerabilityGradients vulnerability_gradients(const Spectrum& spec, const PerturbationParams& params,
                                               const FaultSet& faults, bool include_zero_mode) {
  check_fault_set(faults);
  const Index n = spec.size();
  const bool every_bus = static_cast<Index>(faults.buses.size()) == n;
  const bool uniform_eta = faults.eta.size() > 0 && (faults.eta.array() == 1.0).all();
  const bool uniform_dp = faults.delta_p.size() > 0 && (faults.delta_p.array() == faults.delta_p(0)).all();

  VulnerabilityGradients out;
  if (every_bus && uniform_eta && uniform_dp) {
    // Basis independent within degenerate eigenspaces, so no degeneracy guard.
    const double dp = faults.delta_p(0);
    const VectorXd lambda = laplacian_eigenvalues(spec, params.m);
    VectorXd inv = VectorXd::Zero(n);
    for (Index alpha = 1; alpha < n; ++alpha) inv(alpha) = 1.0 / lambda(alpha);
    out.d_r = VectorXd::Zero(n);
    out.d_a = -params.g * dp * dp / (2.0 * params.gamma) *
              (spec.eigenvectors.array().square().colwise() * inv.array()).colwise().sum().transpose();
    out.closed_form = true;
    return out;
  }
  const Aggregated agg = aggregate_susceptibilities(spec, params, faults, include_zero_mode);
  out.d_r = agg.rho;
  out.d_a = agg.alpha;
  return out;
}

}  // namespace gridplace
