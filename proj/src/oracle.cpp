#include "gridplace/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <sstream>
#include <thread>

#include "gridplace/errors.hpp"

namespace gridplace {

namespace {

double largest_eigenvalue(const MatrixXd& symmetric) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> solver(symmetric, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().maxCoeff();
}

void check_system(const MatrixXd& laplacian, const VectorXd& inertia, const VectorXd& damping) {
  const Index n = laplacian.rows();
  if (laplacian.cols() != n || inertia.size() != n || damping.size() != n) {
    throw Error(ErrorCode::DimensionMismatch, "Laplacian, inertia and damping sizes differ");
  }
  if ((inertia.array() <= 0.0).any()) throw Error(ErrorCode::ZeroInertia, "oracle needs positive inertia on every bus");
}

// Batched swing system; column k of every state matrix is one fault.
class SwingStepper {
 public:
  SwingStepper(const MatrixXd& laplacian, const VectorXd& inertia, const VectorXd& damping, MatrixXd forcing)
      : laplacian_(laplacian),
        inv_inertia_(inertia.cwiseInverse()),
        damping_(damping),
        forcing_(std::move(forcing)),
        theta_(MatrixXd::Zero(forcing_.rows(), forcing_.cols())),
        omega_(MatrixXd::Zero(forcing_.rows(), forcing_.cols())) {}

  void step(double h) {
    derivative(theta_, omega_, k1_theta_, k1_omega_);
    stage_theta_ = theta_ + 0.5 * h * k1_theta_;
    stage_omega_ = omega_ + 0.5 * h * k1_omega_;
    derivative(stage_theta_, stage_omega_, k2_theta_, k2_omega_);
    stage_theta_ = theta_ + 0.5 * h * k2_theta_;
    stage_omega_ = omega_ + 0.5 * h * k2_omega_;
    derivative(stage_theta_, stage_omega_, k3_theta_, k3_omega_);
    stage_theta_ = theta_ + h * k3_theta_;
    stage_omega_ = omega_ + h * k3_omega_;
    derivative(stage_theta_, stage_omega_, k4_theta_, k4_omega_);
    theta_ += (h / 6.0) * (k1_theta_ + 2.0 * k2_theta_ + 2.0 * k3_theta_ + k4_theta_);
    omega_ += (h / 6.0) * (k1_omega_ + 2.0 * k2_omega_ + 2.0 * k3_omega_ + k4_omega_);
  }

  const MatrixXd& theta() const { return theta_; }
  const MatrixXd& omega() const { return omega_; }

 private:
  void derivative(const MatrixXd& theta, const MatrixXd& omega, MatrixXd& d_theta, MatrixXd& d_omega) const {
    d_theta = omega;
    d_omega.noalias() = -laplacian_ * theta;
    d_omega += forcing_;
    d_omega -= damping_.asDiagonal() * omega;
    d_omega = inv_inertia_.asDiagonal() * d_omega;
  }

  const MatrixXd& laplacian_;
  VectorXd inv_inertia_;
  VectorXd damping_;
  MatrixXd forcing_;
  MatrixXd theta_, omega_;
  MatrixXd stage_theta_, stage_omega_;
  MatrixXd k1_theta_, k1_omega_, k2_theta_, k2_omega_, k3_theta_, k3_omega_, k4_theta_, k4_omega_;
};

// sum_i m_i (w_i - w_sys)^2 for every column of `omega`.
Eigen::RowVectorXd measure_integrand(const MatrixXd& omega, const VectorXd& inertia, double total_inertia) {
  const Eigen::RowVectorXd average = (inertia.transpose() * omega) / total_inertia;
  const MatrixXd deviation = omega.rowwise() - average;
  return inertia.transpose() * deviation.array().square().matrix();
}

MatrixXd forcing_matrix(const std::vector<FaultSpec>& faults, Index n) {
  MatrixXd forcing(n, static_cast<Index>(faults.size()));
  for (std::size_t k = 0; k < faults.size(); ++k) forcing.col(static_cast<Index>(k)) = fault_forcing(faults[k], n);
  return forcing;
}

std::vector<MeasureEstimate> integrate_measures(const MatrixXd& laplacian, const VectorXd& inertia,
                                                const VectorXd& damping, const std::vector<FaultSpec>& faults,
                                                const IntegratorSettings& settings) {
  const Index n = laplacian.rows();
  const Index count = static_cast<Index>(faults.size());
  const double dt = settings.dt;
  const double total_inertia = inertia.sum();
  const double gamma_min = damping.cwiseQuotient(inertia).minCoeff();

  SwingStepper stepper(laplacian, inertia, damping, forcing_matrix(faults, n));
  Eigen::RowVectorXd previous = Eigen::RowVectorXd::Zero(count);
  Eigen::RowVectorXd integral = Eigen::RowVectorXd::Zero(count);
  Eigen::RowVectorXd peak = Eigen::RowVectorXd::Zero(count);
  Eigen::RowVectorXd window = Eigen::RowVectorXd::Zero(count);

  double horizon = settings.horizon;
  long step = 0;
  while (true) {
    const long last_step = static_cast<long>(std::ceil(horizon / dt - 1e-9));
    const long window_start = static_cast<long>(std::floor(0.95 * static_cast<double>(last_step)));
    window.setZero();
    for (; step < last_step;) {
      stepper.step(dt);
      ++step;
      const Eigen::RowVectorXd current = measure_integrand(stepper.omega(), inertia, total_inertia);
      integral += 0.5 * dt * (previous + current);
      peak = peak.cwiseMax(current);
      if (step >= window_start) window = window.cwiseMax(current);
      previous = current;
    }
    const bool decayed = (window.array() <= settings.tail_tolerance * peak.array()).all();
    if (decayed) break;
    if (!settings.auto_extend || 2.0 * horizon > settings.max_horizon * (1.0 + 1e-12)) {
      std::ostringstream msg;
      msg << "integrand still at " << (window.array() / peak.array().max(1e-300)).maxCoeff()
          << " of its peak after " << horizon << " s";
      throw Error(ErrorCode::HorizonTooShort, msg.str());
    }
    horizon *= 2.0;
  }

  std::vector<MeasureEstimate> out(static_cast<std::size_t>(count));
  for (Index k = 0; k < count; ++k) {
    MeasureEstimate& est = out[static_cast<std::size_t>(k)];
    est.value = integral(k);
    est.peak = peak(k);
    est.final_integrand = window(k);
    est.tail_bound = window(k) / gamma_min;
    est.horizon = static_cast<double>(step) * dt;
    est.steps = step;
  }
  return out;
}

}  // namespace

unsigned worker_count() {
  unsigned count = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("GRIDPLACE_THREADS")) {
    const long requested = std::strtol(env, nullptr, 10);
    if (requested > 0) count = std::min(count, static_cast<unsigned>(requested));
  }
  return count;
}

double max_time_step(const MatrixXd& laplacian, const VectorXd& inertia) {
  return 0.1 / std::sqrt(largest_eigenvalue(laplacian) / inertia.minCoeff());
}

IntegratorSettings default_settings(const MatrixXd& laplacian, const VectorXd& inertia, const VectorXd& damping) {
  check_system(laplacian, inertia, damping);
  const VectorXd scale = inertia.cwiseSqrt().cwiseInverse();
  const double lambda_max = largest_eigenvalue(scale.asDiagonal() * laplacian * scale.asDiagonal());
  const double f_max = 2.0 * std::sqrt(std::max(lambda_max, 1e-300));
  IntegratorSettings s;
  s.dt = std::min({1e-3, 0.05 * 2.0 * std::numbers::pi / f_max, max_time_step(laplacian, inertia)});
  s.horizon = 20.0 / damping.cwiseQuotient(inertia).minCoeff();
  s.max_horizon = 64.0 * s.horizon;
  return s;
}

Trajectory integrate_swing(const MatrixXd& laplacian, const VectorXd& inertia, const VectorXd& damping,
                           const FaultSpec& fault, double dt, double horizon) {
  check_system(laplacian, inertia, damping);
  if (!(dt > 0.0) || !(horizon > 0.0)) throw Error(ErrorCode::InvalidParameters, "dt and horizon must be positive");
  const double limit = max_time_step(laplacian, inertia);
  if (dt > limit) {
    std::ostringstream msg;
    msg << "dt = " << dt << " exceeds " << limit;
    throw Error(ErrorCode::StepTooLarge, msg.str());
  }
  const Index n = laplacian.rows();
  const long steps = static_cast<long>(std::ceil(horizon / dt - 1e-9));

  Trajectory traj;
  traj.meta.dt = dt;
  traj.meta.horizon = static_cast<double>(steps) * dt;
  traj.meta.auto_extend = false;
  traj.meta.max_horizon = traj.meta.horizon;
  traj.times.resize(steps + 1);
  traj.omega.resize(steps + 1, n);
  traj.theta_dev.resize(steps + 1, n);
  traj.times(0) = 0.0;
  traj.omega.row(0).setZero();
  traj.theta_dev.row(0).setZero();

  SwingStepper stepper(laplacian, inertia, damping, fault_forcing(fault, n));
  for (long k = 1; k <= steps; ++k) {
    stepper.step(dt);
    traj.times(k) = static_cast<double>(k) * dt;
    traj.omega.row(k) = stepper.omega().col(0).transpose();
    traj.theta_dev.row(k) = stepper.theta().col(0).transpose();
  }
  return traj;
}

MeasureEstimate measure_numeric(const Trajectory& trajectory, const VectorXd& inertia, double tail_tolerance) {
  const Index samples = trajectory.times.size();
  if (trajectory.omega.cols() != inertia.size()) {
    throw Error(ErrorCode::DimensionMismatch, "trajectory width does not match inertia");
  }
  MeasureEstimate est;
  if (samples < 2) return est;
  const Eigen::RowVectorXd integrand =
      measure_integrand(trajectory.omega.transpose(), inertia, inertia.sum());
  const Index window_start = static_cast<Index>(std::floor(0.95 * static_cast<double>(samples - 1)));
  for (Index k = 1; k < samples; ++k) {
    est.value += 0.5 * (trajectory.times(k) - trajectory.times(k - 1)) * (integrand(k) + integrand(k - 1));
  }
  est.peak = integrand.maxCoeff();
  est.final_integrand = integrand.tail(samples - window_start).maxCoeff();
  est.horizon = trajectory.times(samples - 1);
  est.steps = samples - 1;
  if (est.peak > 0.0 && est.final_integrand > tail_tolerance * est.peak) {
    std::ostringstream msg;
    msg << "integrand at the horizon is " << est.final_integrand / est.peak << " of its peak";
    throw Error(ErrorCode::HorizonTooShort, msg.str());
  }
  // Decay rate of the integrand is at least the slowest modal envelope;
  // without damping data the tail is bounded by one more window.
  est.tail_bound = est.final_integrand * (est.horizon - trajectory.times(window_start));
  return est;
}

std::vector<MeasureEstimate> oracle_measures(const MatrixXd& laplacian, const VectorXd& inertia,
                                             const VectorXd& damping, const std::vector<FaultSpec>& faults,
                                             const IntegratorSettings& settings) {
  check_system(laplacian, inertia, damping);
  if (!(settings.dt > 0.0) || !(settings.horizon > 0.0)) {
    throw Error(ErrorCode::InvalidParameters, "dt and horizon must be positive");
  }
  if (settings.dt > max_time_step(laplacian, inertia)) {
    throw Error(ErrorCode::StepTooLarge, "time step does not resolve the fastest mode");
  }
  if (faults.empty()) return {};

  const unsigned workers = std::min<unsigned>(worker_count(), static_cast<unsigned>(faults.size()));
  if (workers <= 1) return integrate_measures(laplacian, inertia, damping, faults, settings);

  std::vector<std::vector<FaultSpec>> chunks(workers);
  for (std::size_t k = 0; k < faults.size(); ++k) chunks[k % workers].push_back(faults[k]);
  std::vector<std::vector<MeasureEstimate>> results(workers);
  std::vector<std::exception_ptr> errors(workers);
  {
    std::vector<std::jthread> threads;
    for (unsigned w = 0; w < workers; ++w) {
      threads.emplace_back([&, w] {
        try {
          results[w] = integrate_measures(laplacian, inertia, damping, chunks[w], settings);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::vector<MeasureEstimate> out(faults.size());
  for (std::size_t k = 0; k < faults.size(); ++k) out[k] = results[k % workers][k / workers];
  return out;
}

MeasureEstimate oracle_measure(const MatrixXd& laplacian, const VectorXd& inertia, const VectorXd& damping,
                               const FaultSpec& fault, const IntegratorSettings& settings) {
  return oracle_measures(laplacian, inertia, damping, {fault}, settings).front();
}

MatrixXd project_modal(const Trajectory& trajectory, const MatrixXd& eigenvectors, const VectorXd& inertia) {
  return trajectory.omega * inertia.cwiseSqrt().asDiagonal() * eigenvectors.transpose();
}

FiniteDifferenceResult finite_difference(const MatrixXd& laplacian, const PerturbationParams& params,
                                         const FaultSpec& fault, ProbeKind kind, Index bus,
                                         const FiniteDifferenceOptions& options) {
  const Index n = laplacian.rows();
  if (bus < 0 || bus >= n) throw Error(ErrorCode::UnknownBus, "probe bus index out of range");
  if (!(options.epsilon > 0.0)) throw Error(ErrorCode::InvalidParameters, "finite-difference step must be positive");

  VectorXd direction = VectorXd::Zero(n);
  if (options.compensation == Compensation::Uniform && n > 1) {
    direction.setConstant(-1.0 / static_cast<double>(n - 1));
  }
  direction(bus) = 1.0;

  auto evaluate = [&](double sign) {
    PerturbationParams probe = params;
    VectorXd& shape = kind == ProbeKind::Inertia ? probe.r : probe.a;
    if (shape.size() == 0) shape = VectorXd::Zero(n);
    shape += sign * options.epsilon * direction;
    const VectorXd inertia = probe.inertia(n);
    const VectorXd damping = probe.damping(n);
    if ((inertia.array() <= 0.0).any() || (damping.array() <= 0.0).any()) {
      throw Error(ErrorCode::InvalidParameters, "probe drives inertia or damping nonpositive");
    }
    const IntegratorSettings settings =
        options.use_defaults ? default_settings(laplacian, inertia, damping) : options.settings;
    return oracle_measure(laplacian, inertia, damping, fault, settings).value;
  };

  FiniteDifferenceResult out;
  out.direction = direction;
  out.plus = evaluate(+1.0);
  out.minus = evaluate(-1.0);
  out.derivative = (out.plus - out.minus) / (2.0 * options.epsilon);
  return out;
}

}  // namespace gridplace
