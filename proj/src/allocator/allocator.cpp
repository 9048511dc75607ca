#include "allocator/allocator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace owc::alloc {

void AllocationProblem::validate() const {
  const int K = num_users();
  const int L = num_aps();
  require(K >= 1 && L >= 1, ErrorCode::InvalidParameter, "empty problem");
  require(e_min.size() == K && e_max.size() == K && weight.size() == K,
          ErrorCode::InvalidParameter, "per-user vector sizes must equal K");
  require(capacity.size() == L, ErrorCode::InvalidParameter,
          "capacity size must equal L");
  require((rates.array() >= 0).all(), ErrorCode::InvalidParameter,
          "rates must be nonnegative");
  require((capacity.array() > 0).all(), ErrorCode::InvalidParameter,
          "capacities must be positive");
  require((weight.array() > 0).all(), ErrorCode::InvalidParameter,
          "weights must be positive");
  for (int k = 0; k < K; ++k)
    require(0 <= e_min(k) && e_min(k) <= e_max(k), ErrorCode::InvalidParameter,
            "need 0 <= e_min <= e_max per user");
  require(e_min.sum() <= capacity.sum() + 1e-12, ErrorCode::Infeasible,
          "sum of minimum demands exceeds total capacity");
}

MultiplierState MultiplierState::initial(int num_users, int num_aps,
                                         double value, StepSchedule sched) {
  MultiplierState s;
  s.lambda = Eigen::VectorXd::Constant(num_aps, value);
  s.eta1 = Eigen::VectorXd::Constant(num_users, value);
  s.eta2 = Eigen::VectorXd::Constant(num_users, value);
  s.schedule = sched;
  return s;
}

double utility(const Eigen::MatrixXd& e, const AllocationProblem& problem) {
  require(e.rows() == problem.num_users() && e.cols() == problem.num_aps(),
          ErrorCode::InvalidAllocation, "allocation shape mismatch");
  require((e.array() >= 0).all(), ErrorCode::InvalidAllocation,
          "allocation entries must be nonnegative");
  double sum = 0.0;
  for (int l = 0; l < problem.num_aps(); ++l)
    for (int k = 0; k < problem.num_users(); ++k)
      sum += std::log1p(problem.weight(k) * e(k, l) * problem.rates(k, l));
  return sum;
}

double max_violation(const Eigen::MatrixXd& e,
                     const AllocationProblem& problem) {
  double v = 0.0;
  v = std::max(v, -e.minCoeff());
  for (int l = 0; l < problem.num_aps(); ++l)
    v = std::max(v, e.col(l).sum() - problem.capacity(l));
  for (int k = 0; k < problem.num_users(); ++k) {
    const double total = e.row(k).sum();
    v = std::max(v, total - problem.e_max(k));
    v = std::max(v, problem.e_min(k) - total);
  }
  return v;
}

bool is_feasible(const Eigen::MatrixXd& e, const AllocationProblem& problem,
                 double tol) {
  return max_violation(e, problem) <= tol;
}

Eigen::VectorXd per_ap_best_response(int ap, const MultiplierState& state,
                                     const AllocationProblem& problem) {
  require(ap >= 0 && ap < problem.num_aps(), ErrorCode::InvalidParameter,
          "per_ap_best_response: AP index out of range");
  const int K = problem.num_users();
  Eigen::VectorXd e(K);
  for (int k = 0; k < K; ++k) {
    const double r = problem.rates(k, ap);
    if (r <= 0.0) {
      e(k) = 0.0;
      continue;
    }
    const double mu = state.lambda(ap) + state.eta1(k) - state.eta2(k);
    if (mu <= 0.0) {
      // unbounded subproblem; box at the tightest meaningful cap and let the
      // subgradient updates push lambda back up
      e(k) = problem.e_max(k);
    } else {
      e(k) = std::max(0.0, 1.0 / mu - 1.0 / (problem.weight(k) * r));
    }
  }
  return e;
}

MultiplierState update_multipliers(const MultiplierState& state,
                                   const Eigen::MatrixXd& e,
                                   const AllocationProblem& problem) {
  require((e.array() >= 0).all(), ErrorCode::InvalidAllocation,
          "update_multipliers: allocation must be nonnegative");
  MultiplierState next = state;
  const double step = state.schedule.at(state.iteration);
  for (int l = 0; l < problem.num_aps(); ++l) {
    const double slack = problem.capacity(l) - e.col(l).sum();
    next.lambda(l) = std::max(0.0, state.lambda(l) - step * slack);
  }
  for (int k = 0; k < problem.num_users(); ++k) {
    const double total = e.row(k).sum();
    next.eta1(k) =
        std::max(0.0, state.eta1(k) - step * (problem.e_max(k) - total));
    next.eta2(k) =
        std::max(0.0, state.eta2(k) - step * (total - problem.e_min(k)));
  }
  next.iteration = state.iteration + 1;
  return next;
}

bool repair_allocation(Eigen::MatrixXd& e, const AllocationProblem& problem) {
  const int K = problem.num_users();
  const int L = problem.num_aps();
  const double tol = problem.feasibility_tol();
  e = e.cwiseMax(0.0);

  // AP-overload scaling first
  for (int l = 0; l < L; ++l) {
    const double s = e.col(l).sum();
    if (s > problem.capacity(l)) e.col(l) *= problem.capacity(l) / s;
  }
  // user upper bounds (scaling down never overloads an AP)
  for (int k = 0; k < K; ++k) {
    const double s = e.row(k).sum();
    if (s > problem.e_max(k)) e.row(k) *= problem.e_max(k) / s;
  }
  // raise users below e_min from remaining AP slack, in user order
  for (int k = 0; k < K; ++k) {
    double deficit = problem.e_min(k) - e.row(k).sum();
    if (deficit <= 0) continue;
    Eigen::VectorXd slack(L);
    for (int l = 0; l < L; ++l)
      slack(l) = std::max(0.0, problem.capacity(l) - e.col(l).sum());
    const double total_slack = slack.sum();
    if (total_slack <= 0) continue;
    const double add = std::min(deficit, total_slack);
    for (int l = 0; l < L; ++l) e(k, l) += add * slack(l) / total_slack;
  }

  if (is_feasible(e, problem, tol)) return true;

  // proportional repair failed; fall back to the canonical minimum-demand
  // spread, which is feasible whenever sum(e_min) <= sum(rho)
  const double total_cap = problem.capacity.sum();
  for (int k = 0; k < K; ++k)
    for (int l = 0; l < L; ++l)
      e(k, l) = problem.e_min(k) * problem.capacity(l) / total_cap;
  return is_feasible(e, problem, tol);
}

namespace {

struct GridSearch {
  const AllocationProblem& problem;
  double step;
  std::vector<double> lo, hi;  // per flattened (k-major) dimension
  double eps;

  Eigen::MatrixXd best;
  double best_utility = -std::numeric_limits<double>::infinity();
  bool found = false;
  Eigen::MatrixXd current;
  Eigen::VectorXd col_sum;
  double row_sum = 0.0;

  explicit GridSearch(const AllocationProblem& p) : problem(p) {
    current.resize(p.num_users(), p.num_aps());
    col_sum = Eigen::VectorXd::Zero(p.num_aps());
    eps = p.feasibility_tol();
  }

  long points(int dim) const {
    return static_cast<long>(std::floor((hi[dim] - lo[dim]) / step + 1e-9)) + 1;
  }

  double total_points() const {
    double t = 1.0;
    for (int d = 0; d < static_cast<int>(lo.size()); ++d)
      t *= static_cast<double>(points(d));
    return t;
  }

  void run() {
    found = false;
    best_utility = -std::numeric_limits<double>::infinity();
    col_sum.setZero();
    descend(0, 0.0);
  }

  void descend(int dim, double partial_utility) {
    const int L = problem.num_aps();
    const int k = dim / L;
    const int l = dim % L;
    if (dim == problem.num_users() * L) {
      if (partial_utility > best_utility) {
        best_utility = partial_utility;
        best = current;
        found = true;
      }
      return;
    }
    if (l == 0) row_sum = 0.0;
    const double saved_row = row_sum;
    const long n = points(dim);
    for (long i = 0; i < n; ++i) {
      const double v = lo[dim] + static_cast<double>(i) * step;
      if (col_sum(l) + v > problem.capacity(l) + eps) break;
      if (saved_row + v > problem.e_max(k) + eps) break;
      // last AP of this user: minimum demand must already be met
      if (l == L - 1 && saved_row + v < problem.e_min(k) - eps) continue;
      current(k, l) = v;
      col_sum(l) += v;
      row_sum = saved_row + v;
      descend(dim + 1,
              partial_utility +
                  std::log1p(problem.weight(k) * v * problem.rates(k, l)));
      col_sum(l) -= v;
    }
    row_sum = saved_row;
  }
};

AllocationSolution finish(AllocationSolution sol,
                          const AllocationProblem& problem) {
  sol.feasible = is_feasible(sol.e, problem, problem.feasibility_tol());
  sol.utility = utility(sol.e, problem);
  return sol;
}

}  // namespace

AllocationSolution solve_exhaustive(const AllocationProblem& problem,
                                    const ExhaustiveConfig& cfg) {
  problem.validate();
  require(cfg.grid_step > 0, ErrorCode::InvalidParameter,
          "grid_step must be > 0");
  const int K = problem.num_users();
  const int L = problem.num_aps();

  GridSearch search(problem);
  search.lo.assign(static_cast<size_t>(K) * L, 0.0);
  search.hi.resize(static_cast<size_t>(K) * L);
  for (int k = 0; k < K; ++k)
    for (int l = 0; l < L; ++l)
      search.hi[static_cast<size_t>(k) * L + l] =
          std::min(problem.e_max(k), problem.capacity(l));

  // choose a coarse step fitting the enumeration budget
  double step = cfg.grid_step;
  search.step = step;
  while (search.total_points() > cfg.budget) {
    require(cfg.allow_refinement, ErrorCode::ProblemTooLarge,
            "grid enumeration exceeds the configured budget");
    step *= 2.0;
    search.step = step;
    require(step < 1e6, ErrorCode::ProblemTooLarge,
            "grid enumeration exceeds the configured budget");
  }

  Eigen::MatrixXd best;
  double best_utility = -std::numeric_limits<double>::infinity();
  bool found = false;
  while (true) {
    search.step = step;
    search.run();
    if (search.found && search.best_utility > best_utility) {
      best_utility = search.best_utility;
      best = search.best;
      found = true;
    }
    if (step <= cfg.grid_step * (1 + 1e-12)) break;
    // zoom the window around the incumbent and refine the step
    require(found, ErrorCode::Infeasible,
            "no feasible grid point found at coarse resolution");
    const double next_step = std::max(cfg.grid_step, step / cfg.refine_factor);
    for (int k = 0; k < K; ++k)
      for (int l = 0; l < L; ++l) {
        const size_t d = static_cast<size_t>(k) * L + l;
        const double ub = std::min(problem.e_max(k), problem.capacity(l));
        search.lo[d] = std::max(0.0, best(k, l) - step);
        search.hi[d] = std::min(ub, best(k, l) + step);
      }
    step = next_step;
  }
  require(found, ErrorCode::Infeasible, "empty feasible grid");

  AllocationSolution sol;
  sol.e = best;
  sol.method = "exhaustive";
  return finish(std::move(sol), problem);
}

namespace {

// One term of a line move: the entry at (k, l) changes as x + s * delta.
struct MoveTerm {
  double coef;  // xi_k * r(k, l)
  double base;  // current entry value
  double sign;  // +1 or -1
};

// Exact 1-D maximization of sum_i log1p(c_i (x_i + s_i d)) over [lo, hi].
// The derivative is strictly decreasing, so bisection suffices.
double line_move(const std::vector<MoveTerm>& terms, double lo, double hi) {
  if (hi <= lo) return lo;
  auto deriv = [&](double d) {
    double g = 0.0;
    for (const auto& t : terms) {
      if (t.coef <= 0.0) continue;
      g += t.sign * t.coef / (1.0 + t.coef * (t.base + t.sign * d));
    }
    return g;
  };
  if (deriv(lo) <= 0.0) return lo;
  if (deriv(hi) >= 0.0) return hi;
  double a = lo, b = hi;
  for (int i = 0; i < 100; ++i) {
    const double m = 0.5 * (a + b);
    (deriv(m) > 0.0 ? a : b) = m;
  }
  return 0.5 * (a + b);
}

// Deterministic primal ascent on the best dual iterate: exact line searches
// along the circuit directions of the constraint polytope (single-entry
// raises, within-row and within-column exchanges, and 4-cycles). The
// objective is separable concave, so every move is a closed 1-D problem and
// the utility is non-decreasing throughout.
void polish_primal(Eigen::MatrixXd& e, const AllocationProblem& problem) {
  const int K = problem.num_users();
  const int L = problem.num_aps();
  const double scale = problem.capacity.maxCoeff();
  auto coef = [&](int k, int l) { return problem.weight(k) * problem.rates(k, l); };

  Eigen::VectorXd row = e.rowwise().sum();
  Eigen::VectorXd col = e.colwise().sum();
  for (int sweep = 0; sweep < 200; ++sweep) {
    double moved = 0.0;

    // single-entry raises into joint row/column slack (log1p is increasing)
    for (int k = 0; k < K; ++k)
      for (int l = 0; l < L; ++l) {
        if (coef(k, l) <= 0.0) continue;
        const double head = std::min(problem.e_max(k) - row(k),
                                     problem.capacity(l) - col(l));
        if (head <= 0.0) continue;
        e(k, l) += head;
        row(k) += head;
        col(l) += head;
        moved = std::max(moved, head);
      }

    // within-row exchanges: row sum fixed, shifts column load
    for (int k = 0; k < K; ++k)
      for (int l1 = 0; l1 < L; ++l1)
        for (int l2 = l1 + 1; l2 < L; ++l2) {
          const double lo = -std::min(e(k, l2), problem.capacity(l1) - col(l1));
          const double hi = std::min(e(k, l1), problem.capacity(l2) - col(l2));
          const double d = line_move({{coef(k, l1), e(k, l1), -1.0},
                                      {coef(k, l2), e(k, l2), 1.0}},
                                     lo, hi);
          if (d == 0.0) continue;
          e(k, l1) -= d;
          e(k, l2) += d;
          col(l1) -= d;
          col(l2) += d;
          moved = std::max(moved, std::abs(d));
        }

    // within-column exchanges: column sum fixed, shifts user load
    for (int l = 0; l < L; ++l)
      for (int k1 = 0; k1 < K; ++k1)
        for (int k2 = k1 + 1; k2 < K; ++k2) {
          const double lo = std::max(
              {-e(k2, l), row(k1) - problem.e_max(k1),
               problem.e_min(k2) - row(k2)});
          const double hi = std::min(
              {e(k1, l), problem.e_max(k2) - row(k2),
               row(k1) - problem.e_min(k1)});
          const double d = line_move({{coef(k1, l), e(k1, l), -1.0},
                                      {coef(k2, l), e(k2, l), 1.0}},
                                     lo, hi);
          if (d == 0.0) continue;
          e(k1, l) -= d;
          e(k2, l) += d;
          row(k1) -= d;
          row(k2) += d;
          moved = std::max(moved, std::abs(d));
        }

    // diagonal exchanges: shift load across both a row and a column,
    // consuming slack on the receiving side and freeing it on the giving side
    auto diagonal = [&](int k1, int l1, int k2, int l2) {
      const double hi = std::min(
          {e(k1, l1), row(k1) - problem.e_min(k1),
           problem.e_max(k2) - row(k2), problem.capacity(l2) - col(l2)});
      const double lo = -std::min(
          {e(k2, l2), row(k2) - problem.e_min(k2),
           problem.e_max(k1) - row(k1), problem.capacity(l1) - col(l1)});
      const double d = line_move({{coef(k1, l1), e(k1, l1), -1.0},
                                  {coef(k2, l2), e(k2, l2), 1.0}},
                                 lo, hi);
      if (d == 0.0) return;
      e(k1, l1) -= d;
      e(k2, l2) += d;
      row(k1) -= d;
      row(k2) += d;
      col(l1) -= d;
      col(l2) += d;
      moved = std::max(moved, std::abs(d));
    };
    for (int k1 = 0; k1 < K; ++k1)
      for (int k2 = k1 + 1; k2 < K; ++k2)
        for (int l1 = 0; l1 < L; ++l1)
          for (int l2 = 0; l2 < L; ++l2) {
            if (l1 == l2) continue;
            diagonal(k1, l1, k2, l2);
          }

    // 4-cycles: all row and column sums fixed
    for (int k1 = 0; k1 < K; ++k1)
      for (int k2 = k1 + 1; k2 < K; ++k2)
        for (int l1 = 0; l1 < L; ++l1)
          for (int l2 = l1 + 1; l2 < L; ++l2) {
            const double lo = -std::min(e(k1, l1), e(k2, l2));
            const double hi = std::min(e(k1, l2), e(k2, l1));
            const double d = line_move({{coef(k1, l1), e(k1, l1), 1.0},
                                        {coef(k2, l2), e(k2, l2), 1.0},
                                        {coef(k1, l2), e(k1, l2), -1.0},
                                        {coef(k2, l1), e(k2, l1), -1.0}},
                                       lo, hi);
            if (d == 0.0) continue;
            e(k1, l1) += d;
            e(k2, l2) += d;
            e(k1, l2) -= d;
            e(k2, l1) -= d;
            moved = std::max(moved, std::abs(d));
          }

    if (moved <= 1e-10 * scale) break;
  }
  e = e.cwiseMax(0.0);
}

AllocationSolution dual_loop(const AllocationProblem& problem,
                             const DualSolverConfig& cfg,
                             const Eigen::MatrixXd* warm_start) {
  problem.validate();
  const int K = problem.num_users();
  const int L = problem.num_aps();
  const double tol = cfg.tol_scale * problem.capacity.maxCoeff();

  AllocationSolution sol;
  sol.method = "dual";
  double best_utility = -std::numeric_limits<double>::infinity();
  Eigen::MatrixXd best;
  bool have_best = false;

  auto consider = [&](Eigen::MatrixXd candidate) {
    if (!repair_allocation(candidate, problem)) return;
    const double u = utility(candidate, problem);
    if (u > best_utility) {
      best_utility = u;
      best = std::move(candidate);
      have_best = true;
    }
  };

  if (warm_start != nullptr) consider(*warm_start);

  MultiplierState state = MultiplierState::initial(
      K, L, cfg.init_multiplier, cfg.schedule);
  Eigen::MatrixXd e(K, L);
  bool converged = false;
  long iter = 0;
  for (; iter < cfg.max_iters; ++iter) {
    for (int l = 0; l < L; ++l) e.col(l) = per_ap_best_response(l, state, problem);
    const double viol = max_violation(e, problem);
    // complementary-slackness residual: at the optimum every multiplier is
    // orthogonal to its constraint slack
    double cs = 0.0;
    for (int l = 0; l < L; ++l)
      cs = std::max(cs, state.lambda(l) *
                            std::abs(problem.capacity(l) - e.col(l).sum()));
    for (int k = 0; k < K; ++k) {
      const double total = e.row(k).sum();
      cs = std::max(cs, state.eta1(k) * std::abs(problem.e_max(k) - total));
      cs = std::max(cs, state.eta2(k) * std::abs(total - problem.e_min(k)));
    }
    const bool done = viol <= tol && cs <= tol;
    if (iter % cfg.eval_stride == 0 || done) {
      consider(e);
      sol.trace.push_back({iter, utility(e, problem), viol});
    }
    if (done) {
      converged = true;
      ++iter;
      break;
    }
    state = update_multipliers(state, e, problem);
  }
  if (!have_best) {
    // canonical minimum-demand spread as a last resort
    Eigen::MatrixXd fallback = Eigen::MatrixXd::Zero(K, L);
    require(repair_allocation(fallback, problem), ErrorCode::Infeasible,
            "no feasible allocation found");
    best = fallback;
    best_utility = utility(best, problem);
  }
  polish_primal(best, problem);
  sol.e = best;
  sol.iterations = iter;
  if (!converged) sol.method += " (iteration limit reached)";
  return finish(std::move(sol), problem);
}

}  // namespace

AllocationSolution solve_dual(const AllocationProblem& problem,
                              const DualSolverConfig& cfg) {
  return dual_loop(problem, cfg, nullptr);
}

AllocationSolution refine_dual(const AllocationProblem& problem,
                               const Eigen::MatrixXd& warm_start, long iters,
                               const DualSolverConfig& cfg) {
  DualSolverConfig limited = cfg;
  limited.max_iters = iters;
  return dual_loop(problem, limited, &warm_start);
}

AllocationSolution uniform_allocation(const AllocationProblem& problem) {
  const int K = problem.num_users();
  const int L = problem.num_aps();
  AllocationSolution sol;
  sol.e.resize(K, L);
  for (int l = 0; l < L; ++l)
    sol.e.col(l).setConstant(problem.capacity(l) / K);
  sol.method = "uniform";
  return finish(std::move(sol), problem);
}

}  // namespace owc::alloc
