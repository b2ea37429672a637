#include "gppl/simgen.hpp"

#include "gppl/rng.hpp"

#include <string>

namespace gppl {

namespace {

bool in(int j, int lo, int hi) { return j >= lo && j <= hi; }

// Indices are 1-based as in the scenario definitions.
double path_entry(int scenario, int j) {
  switch (scenario) {
    case 1:
      if (in(j, 101, 110)) return -1.0;
      if (in(j, 111, 120)) return 1.0;
      if (in(j, 121, 130)) return -2.0;
      if (in(j, 131, 140)) return 2.0;
      if (in(j, 141, 150)) return 1.5;
      return 0.0;
    case 2:
      if (in(j, 1, 10) || in(j, 50, 60) || in(j, 100, 110) || in(j, 150, 160) || in(j, 200, 210))
        return std::abs((j % 25) - 10) / 5.0 - 1.0;
      return 0.0;
    case 3: {
      const double q = std::pow((j % 50) - 10, 2) / 50.0;
      if (in(j, 5, 15) || in(j, 105, 115) || in(j, 205, 215)) return q - 1.0;
      if (in(j, 55, 65) || in(j, 155, 165)) return 1.0 - q;
      return 0.0;
    }
    case 4:
      if (in(j, 1, 10) || in(j, 50, 60) || in(j, 100, 110) || in(j, 150, 160) || in(j, 200, 210))
        return std::sin(j / 10.0) + std::cos(j / 3.0);
      return 0.0;
  }
  throw std::invalid_argument("scenario must be 1, 2, 3 or 4");
}

double grid_entry(int scenario, int i, int j) {
  switch (scenario) {
    case 1:
      if (in(i, 9, 13) && in(j, 13, 17)) return 0.5;
      if (in(i, 9, 13) && in(j, 9, 12)) return -1.0;
      if (in(i, 14, 17) && in(j, 9, 12)) return 1.0;
      if (in(i, 14, 17) && in(j, 13, 17)) return -0.5;
      return 0.0;
    case 2:
      if (in(i, 9, 13) && in(j, 13, 17)) return 0.1 * (i + j) - 2.6;
      if (in(i, 9, 13) && in(j, 9, 12)) return 2.6 - 0.1 * (i + j);
      if (in(i, 14, 17) && in(j, 9, 17)) return 0.1 * (j - i);
      return 0.0;
    case 3: {
      const double a = std::pow(0.1 * j - 0.7, 2);
      const double b = std::pow(0.1 * j - 1.9, 2);
      if (in(i, 9, 13)) return in(j, 1, 12) ? 0.7 * a : 0.7 * b;
      if (in(i, 14, 17)) return in(j, 1, 12) ? -0.7 * a : -0.7 * b;
      return 0.0;
    }
    case 4:
      if (in(i, 9, 17)) {
        const double sj = 0.1 * j - 1.3;
        const double si = 0.1 * i - 1.3;
        return std::sin(sj / 8.0) - std::cos(si / 10.0) + 2.0 * std::sin(sj / 2.0 - si) -
               std::cos(0.1 * (i + j) - 2.6) + 2.0;
      }
      return 0.0;
  }
  throw std::invalid_argument("scenario must be 1, 2, 3 or 4");
}

}  // namespace

std::string_view to_string(Family family) {
  return family == Family::kPath250 ? "path_250" : "grid_25x25";
}

Family parse_family(std::string_view name) {
  if (name == "path" || name == "path_250") return Family::kPath250;
  if (name == "grid" || name == "grid_25x25") return Family::kGrid25;
  throw std::invalid_argument("unknown scenario family '" + std::string(name) + "'");
}

void ScenarioSpec::validate() const {
  if (scenario < 1 || scenario > 4) throw std::invalid_argument("scenario must be 1, 2, 3 or 4");
  if (samples < 1) throw std::invalid_argument("sample size must be positive");
  if (!(sigma_eps >= 0.0) || !std::isfinite(sigma_eps))
    throw std::invalid_argument("noise level must be finite and non-negative");
}

UndirectedGraph family_graph(Family family) {
  return family == Family::kPath250 ? path_graph(250) : grid_graph(25, 25);
}

Index family_dimension(Family family) { return family == Family::kPath250 ? 250 : 625; }

Vector make_beta_star(Family family, int scenario) {
  if (scenario < 1 || scenario > 4) throw std::invalid_argument("scenario must be 1, 2, 3 or 4");
  if (family == Family::kPath250) {
    Vector b(250);
    for (int j = 1; j <= 250; ++j) b[j - 1] = path_entry(scenario, j);
    return b;
  }
  // Column-major stacking of the 25 x 25 matrix.
  Vector b(625);
  for (int j = 1; j <= 25; ++j)
    for (int i = 1; i <= 25; ++i) b[(j - 1) * 25 + (i - 1)] = grid_entry(scenario, i, j);
  return b;
}

int scenario_order(int scenario) {
  if (scenario < 1 || scenario > 4) throw std::invalid_argument("scenario must be 1, 2, 3 or 4");
  return scenario == 4 ? -1 : scenario - 1;
}

Matrix gaussian_design(Index rows, Index cols, std::uint64_t seed) {
  const CounterRng rng = make_stream(seed, Stream::kDesign);
  Matrix X(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j)
      X(i, j) = rng.normal_at(static_cast<std::uint64_t>(i * cols + j));
  return X;
}

Vector gaussian_noise(Index size, double sigma, std::uint64_t seed) {
  const CounterRng rng = make_stream(seed, Stream::kNoise);
  Vector e(size);
  for (Index i = 0; i < size; ++i) e[i] = sigma * rng.normal_at(static_cast<std::uint64_t>(i));
  return e;
}

SyntheticDataset make_dataset(const ScenarioSpec& spec) {
  spec.validate();
  return make_dataset(spec, gaussian_design(spec.samples, family_dimension(spec.family), spec.seed));
}

SyntheticDataset make_dataset(const ScenarioSpec& spec, const Matrix& design) {
  spec.validate();
  const Index n = family_dimension(spec.family);
  if (design.rows() != spec.samples || design.cols() != n)
    throw DimensionError("design shape does not match the scenario");
  Vector beta = make_beta_star(spec);
  Vector eps = gaussian_noise(spec.samples, spec.sigma_eps, spec.seed);
  Vector y = design * beta + eps;
  return SyntheticDataset{RegressionProblem(design, std::move(y)), std::move(beta), std::move(eps),
                          family_graph(spec.family)};
}

}  // namespace gppl
