#pragma once

#include <Eigen/Dense>

#include <vector>

#include "gridplace/response.hpp"
#include "gridplace/spectral.hpp"

namespace gridplace {

/// Weak inhomogeneity around a homogeneous baseline:
///   m_i     = m (1 + mu r_i)
///   gamma_i = gamma (1 + g a_i)
/// Empty `r` or `a` stands for the zero shape.
struct PerturbationParams {
  double m = 1.0;
  double gamma = 1.0;
  double mu = 0.0;
  double g = 0.0;
  VectorXd r;
  VectorXd a;

  void validate(Index n) const;
  VectorXd inertia(Index n) const;
  VectorXd damping_ratio(Index n) const;
  VectorXd damping(Index n) const { return inertia(n).cwiseProduct(damping_ratio(n)); }
};

struct DampingSusceptibility {
  VectorXd term1;
  VectorXd term2;
  VectorXd total;
};

struct SusceptibilityReport {
  VectorXd rho;
  DampingSusceptibility alpha;
  FaultSpec fault;
  PerturbationParams params;
};

// Sensitivity functions work at the homogeneous baseline and accept either
// the spectrum of L or of L_M = L/m; eigenvalues are rescaled with params.m
// as needed.

// rho_i = -(mu dP^2 / gamma N) sum_{alpha>1} u_{alpha b} u_{alpha i} / lambda_alpha(L)
VectorXd inertia_susceptibility(const Spectrum& spec, const PerturbationParams& params, const FaultSpec& fault);

// Same derivative from the unsimplified first-order expansion (the
// double-sum form before and after the antisymmetry cancellation).
// Used to cross-check the closed form.
VectorXd inertia_susceptibility_expanded(const Spectrum& spec, const PerturbationParams& params,
                                         const FaultSpec& fault);
VectorXd inertia_susceptibility_antisymmetric(const Spectrum& spec, const PerturbationParams& params,
                                              const FaultSpec& fault);

/// alpha_i = -(g dP^2 / 2 gamma m_b) [ sum_{alpha>1} u_ai^2 u_ab^2 / lambda_a
///            + 4 gamma^2 sum_{alpha>1, beta != alpha} u_ai u_ab u_bi u_bb / D_ab ]
/// with D_ab = (lambda_a - lambda_b)^2 + 2 gamma^2 (lambda_a + lambda_b) over
/// eigenvalues of L_M.
DampingSusceptibility damping_susceptibility(const Spectrum& spec, const PerturbationParams& params,
                                             const FaultSpec& fault, bool include_zero_mode = true);

SusceptibilityReport susceptibilities(const Spectrum& spec, const PerturbationParams& params, const FaultSpec& fault,
                                      bool include_zero_mode = true);

// V = sum_b eta_b M_b.
double vulnerability(const VectorXd& measures, const VectorXd& eta);

struct FaultSet {
  std::vector<Index> buses;  // generator positions
  VectorXd delta_p;          // one entry per generator
  VectorXd eta;              // one entry per generator
};

FaultSet uniform_faults(std::vector<Index> buses, double delta_p = 1.0);

// M_b^(0) over the fault set, homogeneous baseline.
VectorXd homogeneous_measures(const Spectrum& spec, const PerturbationParams& params, const FaultSet& faults);

struct Aggregated {
  VectorXd rho;
  VectorXd alpha;
  VectorXd alpha_term1;
  VectorXd alpha_term2;
};

// sum_b eta_b rho(b), sum_b eta_b alpha(b) over the fault set.
Aggregated aggregate_susceptibilities(const Spectrum& spec, const PerturbationParams& params, const FaultSet& faults,
                                      bool include_zero_mode = true);

struct VulnerabilityGradients {
  VectorXd d_r;
  VectorXd d_a;
  bool closed_form = false;
};

/// Closed forms dV/dr = 0 and dV/da_i = -g dP^2 sum u_ai^2 / (2 gamma lambda_a(L))
/// when eta is uniform, every bus is a fault location and dP is uniform;
/// otherwise the per-fault sum.
VulnerabilityGradients vulnerability_gradients(const Spectrum& spec, const PerturbationParams& params,
                                               const FaultSet& faults, bool include_zero_mode = true);

}  // namespace gridplace
