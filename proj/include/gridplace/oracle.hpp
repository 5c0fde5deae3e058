#pragma once

#include <Eigen/Dense>

#include <vector>

#include "gridplace/response.hpp"
#include "gridplace/sensitivity.hpp"

namespace gridplace {

// Direct time integration of the linearized swing equations
//   M dw/dt + D w = F - L dtheta,   dtheta/dt = w
// in (dtheta, w) coordinates with classical RK4 and a constant step. It
// shares nothing with the modal closed forms it is used to check.

struct IntegratorSettings {
  double dt = 1e-3;
  double horizon = 20.0;
  bool auto_extend = true;
  double max_horizon = 1280.0;
  double tail_tolerance = 1e-12;  // integrand at the horizon relative to its peak
};

// Largest admissible step 0.1 / sqrt(lambda_max(L) / m_min).
double max_time_step(const MatrixXd& laplacian, const VectorXd& inertia);

// dt = min(1e-3, 0.05 * 2 pi / f_max, max_time_step), horizon = 20 / gamma_min.
IntegratorSettings default_settings(const MatrixXd& laplacian, const VectorXd& inertia, const VectorXd& damping);

struct Trajectory {
  VectorXd times;
  MatrixXd omega;      // one row per time sample
  MatrixXd theta_dev;  // one row per time sample
  IntegratorSettings meta;
};

// Throws StepTooLarge.
Trajectory integrate_swing(const MatrixXd& laplacian, const VectorXd& inertia, const VectorXd& damping,
                           const FaultSpec& fault, double dt, double horizon);

struct MeasureEstimate {
  double value = 0.0;
  double tail_bound = 0.0;  // estimate of the integral beyond the horizon
  double horizon = 0.0;
  double peak = 0.0;             // peak of the integrand
  double final_integrand = 0.0;  // max of the integrand over the last 5% of the horizon
  long steps = 0;
};

// Trapezoidal quadrature of sum_i m_i (w_i - w_sys)^2 with the
// inertia-weighted average w_sys. Throws HorizonTooShort if the integrand has
// not decayed below the tail tolerance by the end of the trajectory.
MeasureEstimate measure_numeric(const Trajectory& trajectory, const VectorXd& inertia,
                                double tail_tolerance = 1e-12);

// Integrates and accumulates the measure without storing trajectories,
// doubling the horizon until the tail criterion holds. Faults are
// integrated together; GRIDPLACE_THREADS caps the worker count.
std::vector<MeasureEstimate> oracle_measures(const MatrixXd& laplacian, const VectorXd& inertia,
                                             const VectorXd& damping, const std::vector<FaultSpec>& faults,
                                             const IntegratorSettings& settings);

MeasureEstimate oracle_measure(const MatrixXd& laplacian, const VectorXd& inertia, const VectorXd& damping,
                               const FaultSpec& fault, const IntegratorSettings& settings);

// Modal coordinates of the simulated frequencies: rows are xi_dot(t) = U M^{1/2} w(t).
MatrixXd project_modal(const Trajectory& trajectory, const MatrixXd& eigenvectors, const VectorXd& inertia);

enum class ProbeKind { Inertia, DampingRatio };
enum class Compensation { Uniform, None };

struct FiniteDifferenceOptions {
  double epsilon = 1e-3;  // step in the shape parameter
  Compensation compensation = Compensation::Uniform;
  bool use_defaults = true;  // derive integrator settings from the probe system
  IntegratorSettings settings;
};

struct FiniteDifferenceResult {
  double derivative = 0.0;  // (M(+eps) - M(-eps)) / (2 eps)
  VectorXd direction;       // shape direction that was probed
  double plus = 0.0;
  double minus = 0.0;
};

/// Central difference of the oracle measure along a shape direction of the
/// weak-inhomogeneity parametrization. Probing bus i moves its shape by eps
/// and, with uniform compensation, every other bus by -eps/(N-1). Inertia
/// probes keep the damping ratio fixed (d_i = gamma_i m_i).
FiniteDifferenceResult finite_difference(const MatrixXd& laplacian, const PerturbationParams& params,
                                         const FaultSpec& fault, ProbeKind kind, Index bus,
                                         const FiniteDifferenceOptions& options = {});

// Worker count from GRIDPLACE_THREADS (defaults to the hardware concurrency).
unsigned worker_count();

}  // namespace gridplace
