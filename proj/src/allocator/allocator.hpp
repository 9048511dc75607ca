#ifndef OWC_ALLOCATOR_ALLOCATOR_HPP
#define OWC_ALLOCATOR_ALLOCATOR_HPP

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "util/error.hpp"

namespace owc::alloc {

// Utility-maximization instance: rates r[k][l], per-user demand bounds,
// per-AP capacities and fairness weights.
struct AllocationProblem {
  Eigen::MatrixXd rates;    // K x L
  Eigen::VectorXd e_min;    // K
  Eigen::VectorXd e_max;    // K
  Eigen::VectorXd capacity; // L (rho)
  Eigen::VectorXd weight;   // K (xi)

  int num_users() const { return static_cast<int>(rates.rows()); }
  int num_aps() const { return static_cast<int>(rates.cols()); }

  void validate() const;
  double feasibility_tol() const { return 1e-6 * capacity.maxCoeff(); }
};

struct StepSchedule {
  double numerator = 0.1;  // a
  double offset = 10.0;    // b; step(i) = a / (b + i)

  double at(long iteration) const { return numerator / (offset + iteration); }
};

struct MultiplierState {
  Eigen::VectorXd lambda;  // per AP
  Eigen::VectorXd eta1;    // per user, e_max side
  Eigen::VectorXd eta2;    // per user, e_min side
  long iteration = 0;
  StepSchedule schedule;

  static MultiplierState initial(int num_users, int num_aps,
                                 double value = 0.1,
                                 StepSchedule sched = {});
};

struct TracePoint {
  long iteration = 0;
  double utility = 0.0;
  double max_violation = 0.0;
};

struct AllocationSolution {
  Eigen::MatrixXd e;  // K x L
  double utility = 0.0;
  bool feasible = false;
  std::vector<TracePoint> trace;
  std::string method;
  long iterations = 0;
};

struct DualSolverConfig {
  double tol_scale = 1e-4;   // stop at violation <= tol_scale * max(rho)
  long max_iters = 5000;
  double init_multiplier = 0.1;
  StepSchedule schedule;
  long eval_stride = 1;      // best-so-far evaluation cadence
};

struct ExhaustiveConfig {
  double grid_step = 0.01;
  double budget = 1e8;       // max grid points enumerated in one pass
  // When the full grid exceeds the budget the search runs coarse-to-fine,
  // shrinking a window around the incumbent until the step reaches
  // grid_step. refine_factor divides the step each pass.
  bool allow_refinement = true;
  double refine_factor = 4.0;
};

double utility(const Eigen::MatrixXd& e, const AllocationProblem& problem);

// max constraint violation (absolute, in resource units)
double max_violation(const Eigen::MatrixXd& e, const AllocationProblem& problem);
bool is_feasible(const Eigen::MatrixXd& e, const AllocationProblem& problem,
                 double tol);

// KKT closed form for one AP's subproblem given multipliers.
Eigen::VectorXd per_ap_best_response(int ap, const MultiplierState& state,
                                     const AllocationProblem& problem);

// Projected subgradient step for all three multiplier families.
MultiplierState update_multipliers(const MultiplierState& state,
                                   const Eigen::MatrixXd& e,
                                   const AllocationProblem& problem);

// Deterministic feasibility repair: AP-overload scaling, then user-bound
// clamping (raising deficits from remaining AP slack), jointly re-checked.
// Returns false if no feasible point was reached.
bool repair_allocation(Eigen::MatrixXd& e, const AllocationProblem& problem);

AllocationSolution solve_exhaustive(const AllocationProblem& problem,
                                    const ExhaustiveConfig& cfg = {});

AllocationSolution solve_dual(const AllocationProblem& problem,
                              const DualSolverConfig& cfg = {});

// Warm-started variant used by the surrogate: seeds the best-so-far point
// with `warm_start` (after repair) and runs `iters` dual iterations.
AllocationSolution refine_dual(const AllocationProblem& problem,
                               const Eigen::MatrixXd& warm_start, long iters,
                               const DualSolverConfig& cfg = {});

AllocationSolution uniform_allocation(const AllocationProblem& problem);

}  // namespace owc::alloc

#endif
