#include "gridplace/grid.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <numeric>
#include <set>
#include <sstream>

#include "gridplace/errors.hpp"

namespace gridplace {

namespace {

using json = nlohmann::json;

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }

  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  void unite(std::size_t a, std::size_t b) { parent_[find(a)] = find(b); }

 private:
  std::vector<std::size_t> parent_;
};

void reject_unknown_keys(const json& object, std::initializer_list<std::string_view> allowed,
                         std::string_view where) {
  for (const auto& [key, value] : object.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw Error(ErrorCode::Parse, "unknown field '" + key + "' in " + std::string(where));
    }
  }
}

double number_field(const json& object, const char* key, std::optional<double> fallback,
                    std::string_view where) {
  auto it = object.find(key);
  if (it == object.end()) {
    if (fallback) return *fallback;
    throw Error(ErrorCode::Parse, std::string("missing field '") + key + "' in " + std::string(where));
  }
  if (!it->is_number()) {
    throw Error(ErrorCode::Parse, std::string("field '") + key + "' must be a number in " + std::string(where));
  }
  return it->get<double>();
}

std::string string_field(const json& object, const char* key, std::string_view where) {
  auto it = object.find(key);
  if (it == object.end() || !it->is_string()) {
    throw Error(ErrorCode::Parse, std::string("field '") + key + "' must be a string in " + std::string(where));
  }
  return it->get<std::string>();
}

// Active power flowing out of every bus for angles theta.
VectorXd power_outflow(const GridModel& grid, const VectorXd& theta) {
  VectorXd out = VectorXd::Zero(grid.size());
  for (const auto& line : grid.lines()) {
    const Index i = *grid.index_of(line.from);
    const Index j = *grid.index_of(line.to);
    const double flow = line.susceptance * std::sin(theta(i) - theta(j));
    out(i) += flow;
    out(j) -= flow;
  }
  return out;
}

MatrixXd cosine_laplacian(const GridModel& grid, const VectorXd& theta) {
  const Index n = grid.size();
  MatrixXd lap = MatrixXd::Zero(n, n);
  for (const auto& line : grid.lines()) {
    const Index i = *grid.index_of(line.from);
    const Index j = *grid.index_of(line.to);
    const double w = line.susceptance * std::cos(theta(i) - theta(j));
    lap(i, j) -= w;
    lap(j, i) -= w;
    lap(i, i) += w;
    lap(j, j) += w;
  }
  return lap;
}

}  // namespace

GridModel::GridModel(double base_mva, std::vector<Bus> buses, std::vector<Line> lines)
    : base_mva_(base_mva), buses_(std::move(buses)) {
  if (buses_.empty()) throw Error(ErrorCode::InvalidBus, "grid has no buses");
  for (std::size_t k = 0; k < buses_.size(); ++k) {
    const Bus& b = buses_[k];
    if (b.id.empty()) throw Error(ErrorCode::InvalidBus, "empty bus id");
    if (!std::isfinite(b.power) || !std::isfinite(b.inertia) || !std::isfinite(b.damping)) {
      throw Error(ErrorCode::InvalidBus, "non-finite parameter on bus '" + b.id + "'");
    }
    if (b.inertia < 0.0 || b.damping < 0.0) {
      throw Error(ErrorCode::InvalidBus, "negative inertia or damping on bus '" + b.id + "'");
    }
    if (!index_.emplace(b.id, static_cast<Index>(k)).second) {
      throw Error(ErrorCode::DuplicateBus, "bus id '" + b.id + "' appears twice");
    }
  }

  // Merge parallel lines keyed on the unordered pair of positions.
  std::map<std::pair<Index, Index>, std::size_t> merged;
  for (const auto& line : lines) {
    auto from = index_of(line.from);
    auto to = index_of(line.to);
    if (!from || !to) {
      throw Error(ErrorCode::UnknownBus,
                  "line references unknown bus '" + (from ? line.to : line.from) + "'");
    }
    if (*from == *to) throw Error(ErrorCode::InvalidLine, "self loop at bus '" + line.from + "'");
    if (!(line.susceptance > 0.0) || !std::isfinite(line.susceptance)) {
      throw Error(ErrorCode::InvalidLine,
                  "susceptance must be positive on line " + line.from + "-" + line.to);
    }
    const auto key = std::minmax(*from, *to);
    auto [it, inserted] = merged.emplace(key, lines_.size());
    if (inserted) {
      lines_.push_back(line);
    } else {
      lines_[it->second].susceptance += line.susceptance;
    }
  }

  DisjointSets sets(buses_.size());
  for (const auto& line : lines_) {
    sets.unite(static_cast<std::size_t>(*index_of(line.from)), static_cast<std::size_t>(*index_of(line.to)));
  }
  const std::size_t root = sets.find(0);
  for (std::size_t k = 1; k < buses_.size(); ++k) {
    if (sets.find(k) != root) {
      throw Error(ErrorCode::Disconnected, "bus '" + buses_[k].id + "' is not connected to '" + buses_[0].id + "'");
    }
  }

  long double total = 0.0L;
  for (const auto& b : buses_) total += b.power;
  if (std::fabs(static_cast<double>(total)) > kRebalanceLimit) {
    std::ostringstream msg;
    msg << "sum of injections is " << static_cast<double>(total) << " (limit " << kRebalanceLimit << ")";
    throw Error(ErrorCode::Unbalanced, msg.str());
  }
  if (std::fabs(static_cast<double>(total)) > kBalanceTolerance) {
    const long double shift = total / static_cast<long double>(buses_.size());
    for (auto& b : buses_) b.power = static_cast<double>(b.power - shift);
  }
}

std::optional<Index> GridModel::index_of(std::string_view id) const {
  auto it = index_.find(std::string(id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

Index GridModel::require_index(std::string_view id) const {
  auto idx = index_of(id);
  if (!idx) throw Error(ErrorCode::UnknownBus, "no bus with id '" + std::string(id) + "'");
  return *idx;
}

VectorXd GridModel::power() const {
  VectorXd v(size());
  for (Index i = 0; i < size(); ++i) v(i) = bus(i).power;
  return v;
}

VectorXd GridModel::inertia() const {
  VectorXd v(size());
  for (Index i = 0; i < size(); ++i) v(i) = bus(i).inertia;
  return v;
}

VectorXd GridModel::damping() const {
  VectorXd v(size());
  for (Index i = 0; i < size(); ++i) v(i) = bus(i).damping;
  return v;
}

std::vector<std::string> GridModel::ids() const {
  std::vector<std::string> out;
  out.reserve(buses_.size());
  for (const auto& b : buses_) out.push_back(b.id);
  return out;
}

GridModel load_grid(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::Parse, e.what());
  }
  if (!doc.is_object()) throw Error(ErrorCode::Parse, "grid document must be a JSON object");
  reject_unknown_keys(doc, {"base_mva", "buses", "lines"}, "grid");

  const double base_mva = number_field(doc, "base_mva", 100.0, "grid");
  auto buses_it = doc.find("buses");
  auto lines_it = doc.find("lines");
  if (buses_it == doc.end() || !buses_it->is_array()) throw Error(ErrorCode::Parse, "'buses' must be an array");
  if (lines_it == doc.end() || !lines_it->is_array()) throw Error(ErrorCode::Parse, "'lines' must be an array");

  std::vector<Bus> buses;
  for (const auto& entry : *buses_it) {
    if (!entry.is_object()) throw Error(ErrorCode::Parse, "bus entries must be objects");
    reject_unknown_keys(entry, {"id", "power", "inertia", "damping", "is_generator"}, "bus");
    Bus b;
    b.id = string_field(entry, "id", "bus");
    b.power = number_field(entry, "power", 0.0, "bus '" + b.id + "'");
    b.inertia = number_field(entry, "inertia", 0.0, "bus '" + b.id + "'");
    b.damping = number_field(entry, "damping", 0.0, "bus '" + b.id + "'");
    if (auto it = entry.find("is_generator"); it != entry.end()) {
      if (!it->is_boolean()) throw Error(ErrorCode::Parse, "'is_generator' must be a boolean on bus '" + b.id + "'");
      b.is_generator = it->get<bool>();
    }
    buses.push_back(std::move(b));
  }

  std::vector<Line> lines;
  for (const auto& entry : *lines_it) {
    if (!entry.is_object()) throw Error(ErrorCode::Parse, "line entries must be objects");
    reject_unknown_keys(entry, {"from", "to", "susceptance"}, "line");
    Line l;
    l.from = string_field(entry, "from", "line");
    l.to = string_field(entry, "to", "line");
    l.susceptance = number_field(entry, "susceptance", std::nullopt, "line " + l.from + "-" + l.to);
    lines.push_back(std::move(l));
  }
  return GridModel(base_mva, std::move(buses), std::move(lines));
}

GridModel load_grid_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return load_grid(buffer.str());
}

std::string grid_to_json(const GridModel& grid) {
  json doc;
  doc["base_mva"] = grid.base_mva();
  doc["buses"] = json::array();
  for (const auto& b : grid.buses()) {
    doc["buses"].push_back({{"id", b.id},
                            {"power", b.power},
                            {"inertia", b.inertia},
                            {"damping", b.damping},
                            {"is_generator", b.is_generator}});
  }
  doc["lines"] = json::array();
  for (const auto& l : grid.lines()) {
    doc["lines"].push_back({{"from", l.from}, {"to", l.to}, {"susceptance", l.susceptance}});
  }
  return doc.dump(2);
}

AnglesSolution solve_power_flow(const GridModel& grid, const PowerFlowOptions& options) {
  if (!(options.tol > 0.0)) throw Error(ErrorCode::InvalidParameters, "power-flow tolerance must be positive");
  const Index n = grid.size();
  const VectorXd injections = grid.power();
  const MatrixXd gauge = MatrixXd::Constant(n, n, 1.0 / static_cast<double>(n));

  VectorXd theta = VectorXd::Zero(n);
  VectorXd mismatch = injections - power_outflow(grid, theta);
  double residual = mismatch.cwiseAbs().maxCoeff();
  int iter = 0;
  while (residual > options.tol) {
    if (iter >= options.max_iter) {
      std::ostringstream msg;
      msg << "residual " << residual << " after " << iter << " Newton iterations";
      throw Error(ErrorCode::NoConvergence, msg.str());
    }
    ++iter;
    // The Jacobian is the cosine Laplacian; adding the rank-one gauge term
    // makes it invertible and keeps the update in the zero-mean subspace.
    const MatrixXd jac = cosine_laplacian(grid, theta) + gauge;
    Eigen::PartialPivLU<MatrixXd> lu(jac);
    VectorXd step = lu.solve(mismatch);
    if (!step.allFinite()) throw Error(ErrorCode::NoConvergence, "singular power-flow Jacobian");
    step.array() -= step.mean();

    double scale = 1.0;
    VectorXd trial;
    VectorXd trial_mismatch;
    double trial_residual = residual;
    for (int halving = 0; halving < 30; ++halving) {
      trial = theta + scale * step;
      trial_mismatch = injections - power_outflow(grid, trial);
      trial_residual = trial_mismatch.cwiseAbs().maxCoeff();
      if (trial_residual < residual) break;
      scale *= 0.5;
    }
    if (!(trial_residual < residual)) {
      std::ostringstream msg;
      msg << "line search stalled at residual " << residual;
      throw Error(ErrorCode::NoConvergence, msg.str());
    }
    theta = trial;
    mismatch = trial_mismatch;
    residual = trial_residual;
  }
  theta.array() -= theta.mean();

  for (const auto& line : grid.lines()) {
    const double diff = theta(*grid.index_of(line.from)) - theta(*grid.index_of(line.to));
    if (std::fabs(diff) >= std::numbers::pi / 2.0) {
      throw Error(ErrorCode::UnstableBranch, "angle difference on line " + line.from + "-" + line.to +
                                                 " exceeds pi/2");
    }
  }
  return AnglesSolution{theta, residual, iter};
}

MatrixXd build_laplacian(const GridModel& grid, const AnglesSolution& angles) {
  if (angles.theta.size() != grid.size()) {
    throw Error(ErrorCode::DimensionMismatch, "angle vector does not match grid size");
  }
  return cosine_laplacian(grid, angles.theta);
}

KronReduction kron_reduce(const MatrixXd& laplacian, const VectorXd& injections, const std::vector<Index>& retained) {
  const Index n = laplacian.rows();
  if (retained.empty()) throw Error(ErrorCode::InvalidParameters, "Kron reduction needs at least one retained bus");
  if (injections.size() != n) throw Error(ErrorCode::DimensionMismatch, "injection vector does not match Laplacian");

  std::vector<bool> keep(static_cast<std::size_t>(n), false);
  for (Index r : retained) {
    if (r < 0 || r >= n) throw Error(ErrorCode::UnknownBus, "retained index out of range");
    if (keep[static_cast<std::size_t>(r)]) throw Error(ErrorCode::InvalidParameters, "retained bus listed twice");
    keep[static_cast<std::size_t>(r)] = true;
  }
  std::vector<Index> eliminated;
  for (Index i = 0; i < n; ++i) {
    if (!keep[static_cast<std::size_t>(i)]) eliminated.push_back(i);
  }

  const Index ne = static_cast<Index>(eliminated.size());
  MatrixXd lrr = laplacian(retained, retained);
  VectorXd pr = injections(retained);
  if (ne == 0) return KronReduction{retained, lrr, pr};

  const MatrixXd lre = laplacian(retained, eliminated);
  const MatrixXd lee = laplacian(eliminated, eliminated);
  Eigen::FullPivLU<MatrixXd> lu(lee);
  lu.setThreshold(1e-12);
  if (lu.rank() < ne) {
    throw Error(ErrorCode::SingularEliminationBlock, "eliminated block is singular");
  }
  const MatrixXd x = lu.solve(lre.transpose());
  MatrixXd reduced = lrr - lre * x;
  reduced = 0.5 * (reduced + reduced.transpose());
  VectorXd reduced_p = pr - x.transpose() * injections(eliminated);
  return KronReduction{retained, reduced, reduced_p};
}

KronReduction kron_reduce(const GridModel& grid, const AnglesSolution& angles,
                          const std::vector<std::string>& retained_ids) {
  std::vector<Index> retained;
  retained.reserve(retained_ids.size());
  for (const auto& id : retained_ids) retained.push_back(grid.require_index(id));
  return kron_reduce(build_laplacian(grid, angles), grid.power(), retained);
}

namespace {

double extended_mean(const VectorXd& v) {
  long double sum = 0.0L;
  for (Index i = 0; i < v.size(); ++i) sum += v(i);
  return static_cast<double>(sum / static_cast<long double>(v.size()));
}

}  // namespace

GridModel homogenize(const GridModel& grid) {
  const double m = extended_mean(grid.inertia());
  const double d = extended_mean(grid.damping());
  std::vector<Bus> buses = grid.buses();
  for (auto& b : buses) {
    b.inertia = m;
    b.damping = d;
  }
  return GridModel(grid.base_mva(), std::move(buses), grid.lines());
}

std::vector<Index> SwingSystem::generator_buses() const {
  std::vector<Index> out;
  for (std::size_t i = 0; i < is_generator.size(); ++i) {
    if (is_generator[i]) out.push_back(static_cast<Index>(i));
  }
  return out;
}

std::optional<Index> SwingSystem::index_of(std::string_view id) const {
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] == id) return static_cast<Index>(i);
  }
  return std::nullopt;
}

SwingSystem linearize(const GridModel& grid, const AnglesSolution& angles) {
  SwingSystem sys;
  sys.ids = grid.ids();
  sys.laplacian = build_laplacian(grid, angles);
  sys.inertia = grid.inertia();
  sys.damping = grid.damping();
  for (const auto& b : grid.buses()) sys.is_generator.push_back(b.is_generator);
  return sys;
}

SwingSystem eliminate_inertialess(const GridModel& grid, const AnglesSolution& angles) {
  std::vector<Index> retained;
  for (Index i = 0; i < grid.size(); ++i) {
    if (grid.bus(i).inertia > 0.0) retained.push_back(i);
  }
  if (retained.empty()) throw Error(ErrorCode::ZeroInertia, "no bus carries inertia");
  const KronReduction red = kron_reduce(build_laplacian(grid, angles), grid.power(), retained);

  SwingSystem sys;
  sys.laplacian = red.laplacian;
  sys.inertia.resize(static_cast<Index>(retained.size()));
  sys.damping.resize(static_cast<Index>(retained.size()));
  for (std::size_t k = 0; k < retained.size(); ++k) {
    const Bus& b = grid.bus(retained[k]);
    sys.ids.push_back(b.id);
    sys.inertia(static_cast<Index>(k)) = b.inertia;
    sys.damping(static_cast<Index>(k)) = b.damping;
    sys.is_generator.push_back(b.is_generator);
  }
  return sys;
}

SwingSystem homogenize(const SwingSystem& system) {
  SwingSystem out = system;
  out.inertia.setConstant(extended_mean(system.inertia));
  out.damping.setConstant(extended_mean(system.damping));
  return out;
}

}  // namespace gridplace
