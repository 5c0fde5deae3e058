#pragma once

#include <Eigen/Dense>

#include "gridplace/spectral.hpp"

namespace gridplace {

/// Step loss of `delta_p` (per-unit, positive for a loss) at bus position
/// `bus`. The swing equations see the forcing -delta_p on that bus for t >= 0.
struct FaultSpec {
  Index bus = 0;
  double delta_p = 1.0;
};

// Forcing vector seen by the swing equations.
VectorXd fault_forcing(const FaultSpec& fault, Index n);

/// Modal projection of the fault forcing and the damped mode frequencies.
/// p(alpha) = sum_i u_{alpha i} F_i / sqrt(m_i) with F the fault forcing,
/// f(alpha) = sqrt(4 lambda_alpha - gamma^2) for alpha > 0 and f(0) = 0.
struct ModalDrive {
  VectorXd p;
  VectorXd f;
};

// Throws OverdampedMode when some nonzero mode has 4 lambda <= gamma^2.
ModalDrive modal_drive(const Spectrum& spec, const VectorXd& inertia, double gamma, const FaultSpec& fault);

// Homogeneous-damping modal velocities at time t. Entry 0 carries the
// zero-mode drift p_0 (1 - e^{-gamma t}) / gamma.
VectorXd homogeneous_modal_velocity(const ModalDrive& drive, double gamma, double t);

// Closed-form measure from the spectrum of the inertia-weighted Laplacian.
double measure_closed_form(const Spectrum& weighted, double inertia_b, double gamma, const FaultSpec& fault);

// Closed-form measure for homogeneous inertia from the spectrum of L itself.
double measure_homogeneous(const Spectrum& unweighted, double gamma, const FaultSpec& fault);

// Same quantity through resistance centrality and the Kirchhoff index.
double measure_graph_form(const Spectrum& unweighted, double gamma, const FaultSpec& fault);

struct PerturbationOptions {
  // Keep the zero mode in the beta != alpha coupling sums.
  bool include_zero_mode = true;
};

/// First-order response to inhomogeneous damping ratios
/// gamma_i = gamma (1 + g a_i) around a homogeneous baseline.
///
/// Couplings V_{alpha beta} = sum_i a_i u_{alpha i} u_{beta i} are built
/// once; velocities can then be sampled at any number of times.
class PerturbedResponse {
 public:
  PerturbedResponse(const Spectrum& spec, double gamma, double g, const VectorXd& a, const ModalDrive& drive,
                    PerturbationOptions options = {});

  // Modal velocities for alpha > 0 at time t (entry 0 is left at zero).
  VectorXd velocity(double t) const;

  // Per-mode integrals of the squared velocity (entry 0 is zero).
  VectorXd energy() const;

  const MatrixXd& coupling() const { return coupling_; }

 private:
  VectorXd lambda_;
  double gamma_;
  double g_;
  ModalDrive drive_;
  MatrixXd coupling_;
  PerturbationOptions options_;
};

VectorXd perturbed_modal_velocity(const Spectrum& spec, double gamma, double g, const VectorXd& a,
                                  const ModalDrive& drive, double t, PerturbationOptions options = {});

VectorXd modal_energy_integral(const Spectrum& spec, double gamma, double g, const VectorXd& a,
                               const ModalDrive& drive, PerturbationOptions options = {});

// Checks |g| < 1, |a_i| <= 1 and sum a = 0.
void validate_shape(const VectorXd& shape, double amplitude, const char* name);

}  // namespace gridplace
