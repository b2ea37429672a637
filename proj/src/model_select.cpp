#include "gppl/model_select.hpp"

#include "gppl/parallel.hpp"
#include "gppl/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace gppl {

void CVConfig::validate(Index samples) const {
  if (folds < 2) throw std::invalid_argument("cross-validation needs at least 2 folds");
  if (folds > samples) throw std::invalid_argument("more folds than samples");
  for (double l : lambda_grid)
    if (!(l > 0.0) || !std::isfinite(l)) throw std::invalid_argument("lambda grid must be positive");
  if (gamma_grid.empty()) throw std::invalid_argument("gamma grid is empty");
  for (double g : gamma_grid)
    if (!(g >= 0.0) || !std::isfinite(g)) throw std::invalid_argument("gamma grid must be non-negative");
  if (k_candidates.empty()) throw std::invalid_argument("no k candidates");
  for (int k : k_candidates)
    if (k < 0) throw std::invalid_argument("k candidates must be non-negative");
  solver.validate();
}

double CVResult::fold_error(std::size_t ki, std::size_t gi, std::size_t li, std::size_t f) const {
  const std::size_t G = gamma_grid.size(), L = lambda_grid.size(), F = static_cast<std::size_t>(folds);
  return fold_errors.at(((ki * G + gi) * L + li) * F + f);
}

double CVResult::mean_error(std::size_t ki, std::size_t gi, std::size_t li) const {
  double sum = 0.0;
  for (int f = 0; f < folds; ++f) sum += fold_error(ki, gi, li, static_cast<std::size_t>(f));
  return sum / folds;
}

std::vector<std::vector<Index>> make_folds(Index samples, int folds, std::uint64_t seed) {
  if (folds < 1 || folds > samples) throw std::invalid_argument("invalid fold count");
  std::vector<Index> perm(static_cast<std::size_t>(samples));
  std::iota(perm.begin(), perm.end(), Index{0});
  // Fisher-Yates driven by the fold stream.
  CounterRng rng = make_stream(seed, Stream::kFolds);
  for (std::size_t i = perm.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.uniform() * static_cast<double>(i));
    std::swap(perm[i - 1], perm[std::min(j, i - 1)]);
  }
  std::vector<std::vector<Index>> out(static_cast<std::size_t>(folds));
  const Index base = samples / folds, extra = samples % folds;
  Index pos = 0;
  for (int f = 0; f < folds; ++f) {
    const Index size = base + (f < extra ? 1 : 0);
    auto& fold = out[static_cast<std::size_t>(f)];
    fold.assign(perm.begin() + pos, perm.begin() + pos + size);
    std::sort(fold.begin(), fold.end());
    pos += size;
  }
  return out;
}

std::vector<double> default_lambda_grid(const RegressionProblem& problem, int count, double ratio) {
  if (count < 1 || !(ratio > 0.0 && ratio <= 1.0)) throw std::invalid_argument("invalid grid request");
  const double lmax = (problem.X().transpose() * problem.y()).lpNorm<Eigen::Infinity>() /
                      static_cast<double>(problem.samples());
  if (!(lmax > 0.0)) throw std::invalid_argument("zero design/response: lambda_max is 0");
  std::vector<double> grid(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    const double t = count == 1 ? 0.0 : static_cast<double>(i) / (count - 1);
    grid[static_cast<std::size_t>(i)] = lmax * std::pow(ratio, t);
  }
  return grid;
}

CVResult cross_validate(const RegressionProblem& problem, const UndirectedGraph* graph,
                        PenaltyKind kind, const CVConfig& config) {
  config.validate(problem.samples());
  CVResult res;
  res.lambda_grid = config.lambda_grid.empty() ? default_lambda_grid(problem) : config.lambda_grid;
  const bool uses_gamma = kind != PenaltyKind::kLasso;
  const bool uses_k = kind == PenaltyKind::kGppl;
  res.gamma_grid = uses_gamma ? config.gamma_grid : std::vector<double>{0.0};
  res.k_candidates = uses_k ? config.k_candidates : std::vector<int>{config.k_candidates.front()};
  res.folds = config.folds;
  res.seed = config.seed;
  res.fold_members = make_folds(problem.samples(), config.folds, config.seed);

  const std::size_t K = res.k_candidates.size(), G = res.gamma_grid.size(), L = res.lambda_grid.size();
  const std::size_t F = static_cast<std::size_t>(config.folds);
  res.fold_errors.assign(K * G * L * F, 0.0);

  // Training/validation splits, shared by every task.
  std::vector<RegressionProblem> train;
  std::vector<RegressionProblem> valid;
  for (std::size_t f = 0; f < F; ++f) {
    std::vector<Index> tr;
    for (std::size_t g = 0; g < F; ++g)
      if (g != f) tr.insert(tr.end(), res.fold_members[g].begin(), res.fold_members[g].end());
    std::sort(tr.begin(), tr.end());
    train.push_back(problem.subset(tr));
    valid.push_back(problem.subset(res.fold_members[f]));
  }

  // Descending lambda order for the warm-start chain.
  std::vector<std::size_t> order(L);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return res.lambda_grid[a] > res.lambda_grid[b]; });

  std::vector<int> nonconverged(K * G * F, 0);
  parallel_for(K * G * F, [&](std::size_t task) {
    const std::size_t f = task % F;
    const std::size_t gi = (task / F) % G;
    const std::size_t ki = task / (F * G);
    const int k = res.k_candidates[ki];
    const double gamma = res.gamma_grid[gi];
    Fitter fitter(train[f], graph, kind, k, config.solver);
    AdmmState state;
    bool have_state = false;
    for (std::size_t li : order) {
      const double lambda = res.lambda_grid[li];
      const FitResult fr = fitter.fit(lambda, gamma * lambda, (config.warm_start && have_state) ? &state : nullptr);
      if (!fr.converged) ++nonconverged[task];
      const Vector resid = valid[f].y() - valid[f].X() * fr.beta_hat;
      const double err = resid.squaredNorm() / static_cast<double>(valid[f].samples());
      if (!std::isfinite(err)) {
        std::ostringstream msg;
        msg << "non-finite CV error at lambda=" << lambda << " gamma=" << gamma << " k=" << k
            << " fold=" << f;
        throw std::runtime_error(msg.str());
      }
      res.fold_errors[((ki * G + gi) * L + li) * F + f] = err;
      if (config.warm_start) {
        state = fr.state;
        have_state = state.beta.size() > 0;
      }
    }
  });
  res.nonconverged_fits = std::accumulate(nonconverged.begin(), nonconverged.end(), 0);

  // Minimum mean error; near-ties go to the smallest lambda, then gamma, then k.
  bool found = false;
  std::size_t bk = 0, bg = 0, bl = 0;
  double best = 0.0;
  auto key_less = [&](std::size_t k1, std::size_t g1, std::size_t l1) {
    const double la = res.lambda_grid[l1], lb = res.lambda_grid[bl];
    if (la != lb) return la < lb;
    const double ga = res.gamma_grid[g1], gb = res.gamma_grid[bg];
    if (ga != gb) return ga < gb;
    return res.k_candidates[k1] < res.k_candidates[bk];
  };
  for (std::size_t ki = 0; ki < K; ++ki)
    for (std::size_t gi = 0; gi < G; ++gi)
      for (std::size_t li = 0; li < L; ++li) {
        const double e = res.mean_error(ki, gi, li);
        bool take = !found;
        if (found) {
          const double tol = 1e-12 * std::max(std::abs(e), std::abs(best));
          if (e < best - tol) take = true;
          else if (std::abs(e - best) <= tol) take = key_less(ki, gi, li);
        }
        if (take) {
          found = true;
          best = e;
          bk = ki;
          bg = gi;
          bl = li;
        }
      }

  res.best_error = best;
  res.best.lambda = res.lambda_grid[bl];
  res.best.gamma = res.gamma_grid[bg];
  res.best.lambda_g = res.best.gamma * res.best.lambda;
  res.best.k = res.k_candidates[bk];
  Fitter full(problem, graph, kind, res.best.k, config.solver);
  res.refit = full.fit(res.best.lambda, res.best.lambda_g);
  return res;
}

}  // namespace gppl
