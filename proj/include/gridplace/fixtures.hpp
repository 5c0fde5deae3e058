#pragma once

#include <cstdint>
#include <optional>
#include <string_view>

#include "gridplace/grid.hpp"

namespace gridplace {

enum class Topology { Ring, Star, Tree };

std::optional<Topology> parse_topology(std::string_view name);
const char* to_string(Topology topology);

// Seeded synthetic grids. Every bus is a generator.
struct FixtureOptions {
  Topology topology = Topology::Ring;
  Index size = 10;
  std::uint64_t seed = 1;
  double inertia = 1.0;
  double gamma = 1.0;             // damping is gamma * inertia on every bus
  double susceptance = 1.0;       // ring and star lines; trees draw from [0.5, 2] * susceptance
  double jitter = 0.0;            // relative susceptance noise, e.g. 1e-3 to split degenerate modes
  double injection_scale = 0.0;   // balanced random injections in [-s, s]
  double inertia_spread = 0.0;    // relative inertia noise; damping follows to keep gamma fixed
};

GridModel make_fixture(const FixtureOptions& options);

// Two generator buses joined by one unit line, m = d = 1.
GridModel two_bus_fixture();

// Three generator buses on a triangle with unequal lines so the spectrum is simple.
GridModel triangle_fixture();

}  // namespace gridplace
