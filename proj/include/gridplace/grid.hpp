#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace gridplace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

struct Bus {
  std::string id;
  double power = 0.0;    // per-unit active injection
  double inertia = 0.0;  // MW s^2
  double damping = 0.0;  // MW s
  bool is_generator = false;
};

struct Line {
  std::string from;
  std::string to;
  double susceptance = 0.0;  // per-unit
};

/// Lossless transmission grid. The constructor enforces every model
/// invariant: unique ids, nonnegative inertia and damping, positive
/// susceptances, no self loops, a connected graph and balanced injections.
/// Parallel lines are merged by summing their susceptances.
class GridModel {
 public:
  static constexpr double kBalanceTolerance = 1e-8;
  static constexpr double kRebalanceLimit = 1e-6;

  GridModel(double base_mva, std::vector<Bus> buses, std::vector<Line> lines);

  Index size() const { return static_cast<Index>(buses_.size()); }
  double base_mva() const { return base_mva_; }
  const std::vector<Bus>& buses() const { return buses_; }
  const std::vector<Line>& lines() const { return lines_; }
  const Bus& bus(Index i) const { return buses_.at(static_cast<std::size_t>(i)); }

  std::optional<Index> index_of(std::string_view id) const;
  // Throws UnknownBus.
  Index require_index(std::string_view id) const;

  VectorXd power() const;
  VectorXd inertia() const;
  VectorXd damping() const;
  std::vector<std::string> ids() const;

 private:
  double base_mva_;
  std::vector<Bus> buses_;
  std::vector<Line> lines_;
  std::unordered_map<std::string, Index> index_;
};

GridModel load_grid(std::string_view json_text);
GridModel load_grid_file(const std::filesystem::path& path);
std::string grid_to_json(const GridModel& grid);

struct AnglesSolution {
  VectorXd theta;  // radians, zero mean
  double residual_norm = 0.0;
  int iterations = 0;
};

struct PowerFlowOptions {
  double tol = 1e-10;
  int max_iter = 50;
};

AnglesSolution solve_power_flow(const GridModel& grid, const PowerFlowOptions& options = {});

// Operating-point Laplacian L_ij = -B_ij cos(theta_i - theta_j).
MatrixXd build_laplacian(const GridModel& grid, const AnglesSolution& angles);

struct KronReduction {
  std::vector<Index> retained;  // positions in the original grid
  MatrixXd laplacian;
  VectorXd injections;
};

KronReduction kron_reduce(const GridModel& grid, const AnglesSolution& angles,
                          const std::vector<std::string>& retained_ids);

// Schur complement of a Laplacian-like matrix onto `retained`.
KronReduction kron_reduce(const MatrixXd& laplacian, const VectorXd& injections,
                          const std::vector<Index>& retained);

GridModel homogenize(const GridModel& grid);

// Linearized swing model at an operating point: what every downstream
// module consumes.
struct SwingSystem {
  std::vector<std::string> ids;
  MatrixXd laplacian;
  VectorXd inertia;
  VectorXd damping;
  std::vector<bool> is_generator;

  Index size() const { return laplacian.rows(); }
  VectorXd damping_ratio() const { return damping.cwiseQuotient(inertia); }
  std::vector<Index> generator_buses() const;
  std::optional<Index> index_of(std::string_view id) const;
};

SwingSystem linearize(const GridModel& grid, const AnglesSolution& angles);

// Kron-reduces every bus with zero inertia out of the linearized model.
SwingSystem eliminate_inertialess(const GridModel& grid, const AnglesSolution& angles);

// Mean inertia and mean damping on every bus; totals are kept.
SwingSystem homogenize(const SwingSystem& system);

}  // namespace gridplace
