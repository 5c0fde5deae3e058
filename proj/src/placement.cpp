#include "gridplace/placement.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "gridplace/errors.hpp"

namespace gridplace {

namespace {

int sign(double x) { return (x > 0.0) - (x < 0.0); }

Index zero_position(const VectorXd& x) {
  for (Index i = 0; i < x.size(); ++i) {
    if (x(i) == 0.0) return i;
  }
  return -1;
}

struct PairChoice {
  double cost = std::numeric_limits<double>::infinity();
  bool on_a = true;
  Index first = -1;
  Index second = -1;
};

// Cheapest opposite-signed pair of `x` inside `candidates`.
void scan_pairs(const std::vector<Index>& candidates, const VectorXd& x, const VectorXd& c, bool on_a,
                PairChoice& best) {
  for (std::size_t p = 0; p < candidates.size(); ++p) {
    for (std::size_t q = p + 1; q < candidates.size(); ++q) {
      const Index i1 = candidates[p];
      const Index i2 = candidates[q];
      if (x(i1) == 0.0 || x(i1) != -x(i2)) continue;
      const double cost = -(c(i1) * x(i1) + c(i2) * x(i2));
      // Strict improvement only: a-pairs are scanned first and win ties.
      if (cost < best.cost) best = PairChoice{cost, on_a, i1, i2};
    }
  }
}

}  // namespace

VectorXd optimize_balanced(const VectorXd& coefficients) {
  const Index n = coefficients.size();
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Index lhs, Index rhs) { return coefficients(lhs) < coefficients(rhs); });
  VectorXd x = VectorXd::Zero(n);
  const Index half = n / 2;
  for (Index k = 0; k < half; ++k) {
    x(order[static_cast<std::size_t>(k)]) = 1.0;
    x(order[static_cast<std::size_t>(n - 1 - k)]) = -1.0;
  }
  return x;
}

ConstraintResiduals residuals_of(const VectorXd& r, const VectorXd& a) {
  return ConstraintResiduals{r.sum(), a.sum(), r.dot(a)};
}

PlacementResult make_placement(const VectorXd& rho, const VectorXd& alpha, VectorXd r, VectorXd a,
                               std::string algorithm) {
  PlacementResult out;
  out.objective_linear = rho.dot(r) + alpha.dot(a);
  out.residuals = residuals_of(r, a);
  out.r = std::move(r);
  out.a = std::move(a);
  out.algorithm = std::move(algorithm);
  out.weighting = "none";
  return out;
}

PlacementResult optimize_combined(const VectorXd& rho, const VectorXd& alpha) {
  const Index n = rho.size();
  if (alpha.size() != n) throw Error(ErrorCode::DimensionMismatch, "rho and alpha sizes differ");
  if (n < 2) throw Error(ErrorCode::InvalidParameters, "combined placement needs at least two buses");

  VectorXd r = optimize_inertia(rho);
  VectorXd a = optimize_damping(alpha);

  if (n % 2 == 1) {
    const Index ir0 = zero_position(r);
    const Index ia0 = zero_position(a);
    Index align = 0;
    double best = std::numeric_limits<double>::infinity();
    for (Index i = 0; i < n; ++i) {
      const double cost = r(i) * rho(ir0) + a(i) * alpha(ia0) - r(i) * rho(i) - a(i) * alpha(i);
      if (cost < best) {
        best = cost;
        align = i;
      }
    }
    std::swap(r(ir0), r(align));
    std::swap(a(ia0), a(align));
  }

  int iterations = 0;
  while (true) {
    const double overlap = r.dot(a);
    const int target = sign(overlap);
    if (target == 0) break;
    std::vector<Index> candidates;
    for (Index i = 0; i < n; ++i) {
      if (sign(r(i) * a(i)) == target) candidates.push_back(i);
    }
    PairChoice best;
    scan_pairs(candidates, a, alpha, true, best);
    scan_pairs(candidates, r, rho, false, best);
    if (best.first < 0) {
      throw Error(ErrorCode::NoFeasiblePair,
                  "no opposite-signed pair left with sum r a = " + std::to_string(overlap));
    }
    VectorXd& x = best.on_a ? a : r;
    x(best.first) = 0.0;
    x(best.second) = 0.0;
    ++iterations;
  }

  PlacementResult out = make_placement(rho, alpha, std::move(r), std::move(a), "combined");
  out.iterations = iterations;
  return out;
}

std::optional<WeightKind> parse_weight_kind(std::string_view name) {
  if (name == "uniform") return WeightKind::Uniform;
  if (name == "squared") return WeightKind::Squared;
  if (name == "threshold") return WeightKind::Threshold;
  return std::nullopt;
}

const char* to_string(WeightKind kind) {
  switch (kind) {
    case WeightKind::Uniform: return "uniform";
    case WeightKind::Squared: return "squared";
    case WeightKind::Threshold: return "threshold";
  }
  return "uniform";
}

VectorXd weight_scheme(WeightKind kind, const VectorXd& m0, std::optional<double> m_thres) {
  switch (kind) {
    case WeightKind::Uniform:
      return VectorXd::Ones(m0.size());
    case WeightKind::Squared:
      return m0.array().square();
    case WeightKind::Threshold: {
      if (!m_thres) throw Error(ErrorCode::MissingThreshold, "threshold weighting needs a threshold value");
      return (m0.array() > *m_thres).cast<double>();
    }
  }
  return VectorXd::Ones(m0.size());
}

std::string placement_to_json(const PlacementResult& result) {
  using json = nlohmann::json;
  json doc;
  doc["format_version"] = "1";
  doc["algorithm"] = result.algorithm;
  doc["weighting"] = result.weighting;
  doc["ids"] = result.ids;
  doc["r"] = std::vector<double>(result.r.data(), result.r.data() + result.r.size());
  doc["a"] = std::vector<double>(result.a.data(), result.a.data() + result.a.size());
  doc["objective_linear"] = result.objective_linear;
  doc["residuals"] = {{"sum_r", result.residuals.sum_r},
                      {"sum_a", result.residuals.sum_a},
                      {"sum_ra", result.residuals.sum_ra}};
  doc["iterations"] = result.iterations;
  return doc.dump(2);
}

PlacementResult placement_from_json(std::string_view text) {
  using json = nlohmann::json;
  PlacementResult out;
  try {
    const json doc = json::parse(text);
    const auto r = doc.at("r").get<std::vector<double>>();
    const auto a = doc.at("a").get<std::vector<double>>();
    if (r.size() != a.size()) throw Error(ErrorCode::DimensionMismatch, "placement r and a differ in length");
    out.r = Eigen::Map<const VectorXd>(r.data(), static_cast<Index>(r.size()));
    out.a = Eigen::Map<const VectorXd>(a.data(), static_cast<Index>(a.size()));
    out.algorithm = doc.value("algorithm", std::string("unknown"));
    out.weighting = doc.value("weighting", std::string("none"));
    out.objective_linear = doc.value("objective_linear", 0.0);
    out.iterations = doc.value("iterations", 0);
    if (doc.contains("ids")) out.ids = doc.at("ids").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Parse, std::string("placement file: ") + e.what());
  }
  if (out.r.size() > 0 && (out.r.cwiseAbs().maxCoeff() > 1.0 || out.a.cwiseAbs().maxCoeff() > 1.0)) {
    throw Error(ErrorCode::InvalidParameters, "placement entries must lie in [-1, 1]");
  }
  out.residuals = residuals_of(out.r, out.a);
  return out;
}

}  // namespace gridplace
