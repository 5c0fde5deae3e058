#include "gridplace/fixtures.hpp"

#include <random>
#include <string>

#include "gridplace/errors.hpp"

namespace gridplace {

std::optional<Topology> parse_topology(std::string_view name) {
  if (name == "ring") return Topology::Ring;
  if (name == "star") return Topology::Star;
  if (name == "tree") return Topology::Tree;
  return std::nullopt;
}

const char* to_string(Topology topology) {
  switch (topology) {
    case Topology::Ring: return "ring";
    case Topology::Star: return "star";
    case Topology::Tree: return "tree";
  }
  return "ring";
}

GridModel make_fixture(const FixtureOptions& options) {
  const Index n = options.size;
  const Index min_size = options.topology == Topology::Ring ? 3 : 2;
  if (n < min_size) throw Error(ErrorCode::InvalidParameters, "fixture too small for its topology");
  if (!(options.inertia > 0.0) || !(options.gamma > 0.0) || !(options.susceptance > 0.0)) {
    throw Error(ErrorCode::InvalidParameters, "fixture inertia, gamma and susceptance must be positive");
  }
  if (options.jitter < 0.0 || options.jitter >= 1.0 || options.inertia_spread < 0.0 || options.inertia_spread >= 1.0) {
    throw Error(ErrorCode::InvalidParameters, "fixture jitter and inertia spread must lie in [0, 1)");
  }

  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);

  auto name = [](Index i) { return "b" + std::to_string(i + 1); };

  std::vector<Line> lines;
  auto add_line = [&](Index i, Index j, double b) {
    lines.push_back(Line{name(i), name(j), b * (1.0 + options.jitter * unit(rng))});
  };
  switch (options.topology) {
    case Topology::Ring:
      for (Index i = 0; i < n; ++i) add_line(i, (i + 1) % n, options.susceptance);
      break;
    case Topology::Star:
      for (Index i = 1; i < n; ++i) add_line(0, i, options.susceptance);
      break;
    case Topology::Tree: {
      std::uniform_real_distribution<double> strength(0.5, 2.0);
      for (Index i = 1; i < n; ++i) {
        std::uniform_int_distribution<Index> parent(0, i - 1);
        const Index p = parent(rng);
        const double b = strength(rng) * options.susceptance;
        add_line(p, i, b);
      }
      break;
    }
  }

  std::vector<double> power(static_cast<std::size_t>(n), 0.0);
  if (options.injection_scale > 0.0) {
    double mean = 0.0;
    for (auto& p : power) {
      p = options.injection_scale * unit(rng);
      mean += p;
    }
    mean /= static_cast<double>(n);
    for (auto& p : power) p -= mean;
  }

  std::vector<Bus> buses;
  for (Index i = 0; i < n; ++i) {
    const double m = options.inertia * (1.0 + options.inertia_spread * unit(rng));
    buses.push_back(Bus{name(i), power[static_cast<std::size_t>(i)], m, options.gamma * m, true});
  }
  return GridModel(100.0, std::move(buses), std::move(lines));
}

GridModel two_bus_fixture() {
  return GridModel(100.0, {Bus{"A", 0.0, 1.0, 1.0, true}, Bus{"B", 0.0, 1.0, 1.0, true}}, {Line{"A", "B", 1.0}});
}

GridModel triangle_fixture() {
  std::vector<Bus> buses{Bus{"A", 0.0, 1.0, 1.0, true}, Bus{"B", 0.0, 1.0, 1.0, true}, Bus{"C", 0.0, 1.0, 1.0, true}};
  std::vector<Line> lines{Line{"A", "B", 1.0}, Line{"B", "C", 1.5}, Line{"A", "C", 2.0}};
  return GridModel(100.0, std::move(buses), std::move(lines));
}

}  // namespace gridplace
