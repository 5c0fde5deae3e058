#pragma once

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace gridplace {

using Eigen::Index;
using Eigen::VectorXd;

struct ConstraintResiduals {
  double sum_r = 0.0;
  double sum_a = 0.0;
  double sum_ra = 0.0;
};

struct PlacementResult {
  VectorXd r;
  VectorXd a;
  double objective_linear = 0.0;  // rho . r + alpha . a
  ConstraintResiduals residuals;
  std::string algorithm;  // "inertia", "damping" or "combined"
  std::string weighting;  // "uniform", "squared", "threshold" or "none"
  int iterations = 0;     // pair-zeroing iterations of the combined algorithm
  std::vector<std::string> ids;
};

/// Minimizes c . x subject to |x_i| <= 1 and sum x = 0. Sorting c
/// ascending with ties broken by index, the first floor(N/2) entries get +1,
/// the last floor(N/2) get -1 and the median (odd N) gets 0.
VectorXd optimize_balanced(const VectorXd& coefficients);

inline VectorXd optimize_inertia(const VectorXd& rho) { return optimize_balanced(rho); }
inline VectorXd optimize_damping(const VectorXd& alpha) { return optimize_balanced(alpha); }

/// Combined placement keeping sum r = sum a = sum r a = 0.
///
/// Starts from the two independent optima, aligns their zero entries when N
/// is odd, then repeatedly zeroes the opposite-signed pair (of a or of r)
/// among buses whose product r_i a_i has the sign of sum r a, picking the
/// pair that raises the linear objective least. Ties prefer a-pairs, then
/// the lexicographically smallest pair. Throws NoFeasiblePair when no such
/// pair exists.
PlacementResult optimize_combined(const VectorXd& rho, const VectorXd& alpha);

// Wraps a single-target placement into a result with residuals filled.
PlacementResult make_placement(const VectorXd& rho, const VectorXd& alpha, VectorXd r, VectorXd a,
                               std::string algorithm);

ConstraintResiduals residuals_of(const VectorXd& r, const VectorXd& a);

enum class WeightKind { Uniform, Squared, Threshold };

std::optional<WeightKind> parse_weight_kind(std::string_view name);
const char* to_string(WeightKind kind);

// eta over the fault set from the homogeneous measures m0. Throws
// MissingThreshold when the threshold kind has no threshold.
VectorXd weight_scheme(WeightKind kind, const VectorXd& m0, std::optional<double> m_thres = std::nullopt);

std::string placement_to_json(const PlacementResult& result);
PlacementResult placement_from_json(std::string_view text);

}  // namespace gridplace
