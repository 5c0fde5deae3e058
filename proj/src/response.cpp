#include "gridplace/response.hpp"

#include <cmath>
#include <sstream>

#include "gridplace/errors.hpp"

namespace gridplace {

VectorXd fault_forcing(const FaultSpec& fault, Index n) {
  if (fault.bus < 0 || fault.bus >= n) throw Error(ErrorCode::UnknownBus, "fault bus index out of range");
  VectorXd forcing = VectorXd::Zero(n);
  forcing(fault.bus) = -fault.delta_p;
  return forcing;
}

ModalDrive modal_drive(const Spectrum& spec, const VectorXd& inertia, double gamma, const FaultSpec& fault) {
  const Index n = spec.size();
  if (inertia.size() != n) throw Error(ErrorCode::DimensionMismatch, "inertia vector does not match spectrum");
  const VectorXd forcing = fault_forcing(fault, n);

  ModalDrive drive;
  drive.p = spec.eigenvectors * forcing.cwiseQuotient(inertia.cwiseSqrt());
  drive.f = VectorXd::Zero(n);
  std::ostringstream overdamped;
  for (Index alpha = 1; alpha < n; ++alpha) {
    const double disc = 4.0 * spec.lambda(alpha) - gamma * gamma;
    if (disc <= 0.0) {
      overdamped << ' ' << alpha + 1;
      continue;
    }
    drive.f(alpha) = std::sqrt(disc);
  }
  if (!overdamped.str().empty()) {
    throw Error(ErrorCode::OverdampedMode, "modes with 4 lambda <= gamma^2:" + overdamped.str());
  }
  return drive;
}

VectorXd homogeneous_modal_velocity(const ModalDrive& drive, double gamma, double t) {
  const Index n = drive.p.size();
  VectorXd v(n);
  v(0) = drive.p(0) * -std::expm1(-gamma * t) / gamma;
  const double envelope = std::exp(-0.5 * gamma * t);
  for (Index alpha = 1; alpha < n; ++alpha) {
    const double f = drive.f(alpha);
    v(alpha) = 2.0 * drive.p(alpha) / f * envelope * std::sin(0.5 * f * t);
  }
  return v;
}

double measure_closed_form(const Spectrum& weighted, double inertia_b, double gamma, const FaultSpec& fault) {
  if (fault.bus < 0 || fault.bus >= weighted.size()) throw Error(ErrorCode::UnknownBus, "fault bus index out of range");
  return fault.delta_p * fault.delta_p / (2.0 * gamma * inertia_b) * slow_mode_weight(weighted, fault.bus);
}

double measure_homogeneous(const Spectrum& unweighted, double gamma, const FaultSpec& fault) {
  if (fault.bus < 0 || fault.bus >= unweighted.size()) {
    throw Error(ErrorCode::UnknownBus, "fault bus index out of range");
  }
  return fault.delta_p * fault.delta_p / (2.0 * gamma) * slow_mode_weight(unweighted, fault.bus);
}

double measure_graph_form(const Spectrum& unweighted, double gamma, const FaultSpec& fault) {
  const double n = static_cast<double>(unweighted.size());
  const double weight = 1.0 / centrality(unweighted, fault.bus) - kirchhoff_index(unweighted, 1) / (n * n);
  return fault.delta_p * fault.delta_p / (2.0 * gamma) * weight;
}

void validate_shape(const VectorXd& shape, double amplitude, const char* name) {
  if (!(std::fabs(amplitude) < 1.0)) {
    throw Error(ErrorCode::InvalidParameters, std::string("amplitude for ") + name + " must satisfy |.| < 1");
  }
  if (shape.size() == 0) return;
  if (shape.cwiseAbs().maxCoeff() > 1.0 + 1e-12) {
    throw Error(ErrorCode::InvalidParameters, std::string("shape ") + name + " must satisfy |x_i| <= 1");
  }
  if (std::fabs(shape.sum()) > 1e-9 * static_cast<double>(shape.size())) {
    throw Error(ErrorCode::InvalidParameters, std::string("shape ") + name + " must sum to zero");
  }
}

PerturbedResponse::PerturbedResponse(const Spectrum& spec, double gamma, double g, const VectorXd& a,
                                     const ModalDrive& drive, PerturbationOptions options)
    : lambda_(spec.eigenvalues), gamma_(gamma), g_(g), drive_(drive), options_(options) {
  if (a.size() != spec.size() || drive.p.size() != spec.size()) {
    throw Error(ErrorCode::DimensionMismatch, "shape or drive does not match spectrum");
  }
  validate_shape(a, g, "a");
  require_nondegenerate(spec);
  coupling_ = spec.eigenvectors * a.asDiagonal() * spec.eigenvectors.transpose();
}

VectorXd PerturbedResponse::velocity(double t) const {
  const Index n = lambda_.size();
  const double envelope = std::exp(-0.5 * gamma_ * t);
  VectorXd s(n), c(n), kick(n);
  // kick(beta) = e^{-gamma t/2} (gamma s_beta / f_beta - c_beta); for the zero
  // mode the analytic continuation f -> i gamma gives -e^{-gamma t}.
  kick(0) = -std::exp(-gamma_ * t);
  s(0) = c(0) = 0.0;
  for (Index beta = 1; beta < n; ++beta) {
    const double f = drive_.f(beta);
    s(beta) = std::sin(0.5 * f * t);
    c(beta) = std::cos(0.5 * f * t);
    kick(beta) = envelope * (gamma_ * s(beta) / f - c(beta));
  }

  VectorXd v = VectorXd::Zero(n);
  const Index first_beta = options_.include_zero_mode ? 0 : 1;
  for (Index alpha = 1; alpha < n; ++alpha) {
    const double f = drive_.f(alpha);
    const double vaa = coupling_(alpha, alpha);
    const double ratio = gamma_ / f;
    double value = drive_.p(alpha) / f * envelope *
                   (2.0 * s(alpha) * (1.0 + g_ * ratio * ratio * vaa) -
                    g_ * gamma_ * t * vaa * (s(alpha) + ratio * c(alpha)));
    double cross = 0.0;
    for (Index beta = first_beta; beta < n; ++beta) {
      if (beta == alpha) continue;
      cross += coupling_(alpha, beta) * drive_.p(beta) / (lambda_(alpha) - lambda_(beta)) * (kick(beta) - kick(alpha));
    }
    v(alpha) = value + g_ * gamma_ * cross;
  }
  return v;
}

VectorXd PerturbedResponse::energy() const {
  const Index n = lambda_.size();
  VectorXd e = VectorXd::Zero(n);
  const Index first_beta = options_.include_zero_mode ? 0 : 1;
  for (Index alpha = 1; alpha < n; ++alpha) {
    const double pa = drive_.p(alpha);
    double cross = 0.0;
    for (Index beta = first_beta; beta < n; ++beta) {
      if (beta == alpha) continue;
      const double gap = lambda_(alpha) - lambda_(beta);
      const double denom = gap * gap + 2.0 * gamma_ * gamma_ * (lambda_(alpha) + lambda_(beta));
      cross += coupling_(alpha, beta) * pa * drive_.p(beta) / denom;
    }
    e(alpha) = pa * pa * (1.0 - g_ * coupling_(alpha, alpha)) / (2.0 * gamma_ * lambda_(alpha)) -
               2.0 * g_ * gamma_ * cross;
  }
  return e;
}

VectorXd perturbed_modal_velocity(const Spectrum& spec, double gamma, double g, const VectorXd& a,
                                  const ModalDrive& drive, double t, PerturbationOptions options) {
  return PerturbedResponse(spec, gamma, g, a, drive, options).velocity(t);
}

VectorXd modal_energy_integral(const Spectrum& spec, double gamma, double g, const VectorXd& a,
                               const ModalDrive& drive, PerturbationOptions options) {
  return PerturbedResponse(spec, gamma, g, a, drive, options).energy();
}

}  // namespace gridplace
