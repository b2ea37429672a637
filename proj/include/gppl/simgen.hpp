#pragma once

// Synthetic scenarios on a 250-node path and a 25 x 25 grid, with Gaussian
// designs and noise drawn from independent counter-based streams.

#include "gppl/graph.hpp"
#include "gppl/solver.hpp"
#include "gppl/types.hpp"

#include <cmath>
#include <cstdint>
#include <string_view>

namespace gppl {

enum class Family { kPath250, kGrid25 };

std::string_view to_string(Family family);
Family parse_family(std::string_view name);  // "path" / "path_250", "grid" / "grid_25x25"

// Default noise level: variance 0.1.
inline const double kDefaultSigmaEps = std::sqrt(0.1);

struct ScenarioSpec {
  Family family = Family::kPath250;
  int scenario = 1;
  Index samples = 200;
  double sigma_eps = kDefaultSigmaEps;
  std::uint64_t seed = 1;

  void validate() const;
};

struct SyntheticDataset {
  RegressionProblem problem;
  Vector beta_star;
  Vector epsilon;
  UndirectedGraph graph;
};

UndirectedGraph family_graph(Family family);
Index family_dimension(Family family);

// Throws std::invalid_argument for scenarios outside 1..4.
Vector make_beta_star(Family family, int scenario);
inline Vector make_beta_star(const ScenarioSpec& spec) { return make_beta_star(spec.family, spec.scenario); }

// The operator order matched to a scenario: 0, 1, 2 for scenarios 1-3 and
// -1 for scenario 4, whose order is chosen by cross-validation.
int scenario_order(int scenario);

// Entry (i, j) is draw i * cols + j of the design stream, so the first rows
// do not change when more rows are requested.
Matrix gaussian_design(Index rows, Index cols, std::uint64_t seed);
Vector gaussian_noise(Index size, double sigma, std::uint64_t seed);

SyntheticDataset make_dataset(const ScenarioSpec& spec);

// Same draws, but with a caller-supplied design (for studies that hold X fixed).
SyntheticDataset make_dataset(const ScenarioSpec& spec, const Matrix& design);

}  // namespace gppl
