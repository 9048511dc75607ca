#include "doctest.h"

#include <cmath>

#include "allocator/allocator.hpp"
#include "util/rng.hpp"

using namespace owc;
using namespace owc::alloc;

namespace {

AllocationProblem make_problem(const Eigen::MatrixXd& rates,
                               const Eigen::VectorXd& emin,
                               const Eigen::VectorXd& emax,
                               const Eigen::VectorXd& rho,
                               const Eigen::VectorXd& xi) {
  AllocationProblem p;
  p.rates = rates;
  p.e_min = emin;
  p.e_max = emax;
  p.capacity = rho;
  p.weight = xi;
  p.validate();
  return p;
}

AllocationProblem random_problem(Rng& rng, int K, int L) {
  Eigen::MatrixXd r(K, L);
  for (long i = 0; i < r.size(); ++i) r(i) = rng.uniform(0.2, 2.0);
  Eigen::VectorXd emax(K), emin(K), xi(K), rho(L);
  for (int k = 0; k < K; ++k) {
    emax(k) = rng.uniform(0.5, 2.0);
    emin(k) = rng.uniform(0.0, 0.3 * emax(k));
    xi(k) = rng.uniform(0.5, 2.0);
  }
  for (int l = 0; l < L; ++l)
    rho(l) = rng.uniform(0.5, 2.0) * static_cast<double>(K) / L;
  // keep the instance feasible
  if (emin.sum() > rho.sum()) emin *= 0.5 * rho.sum() / emin.sum();
  return make_problem(r, emin, emax, rho, xi);
}

// golden-section maximizer of f over [0, hi]: the 1-D oracle for the KKT
// closed form
template <typename F>
double golden_max(F f, double hi) {
  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = 0.0, b = hi;
  double c = b - gr * (b - a), d = a + gr * (b - a);
  for (int i = 0; i < 200; ++i) {
    if (f(c) > f(d)) b = d;
    else a = c;
    c = b - gr * (b - a);
    d = a + gr * (b - a);
  }
  return 0.5 * (a + b);
}

}  // namespace

TEST_CASE("problem validation") {
  Eigen::MatrixXd r = Eigen::MatrixXd::Ones(2, 1);
  Eigen::VectorXd emin(2), emax(2), rho(1), xi(2);
  emin << 1.0, 1.0;
  emax << 2.0, 2.0;
  rho << 1.0;  // sum(e_min) = 2 > 1
  xi << 1.0, 1.0;
  AllocationProblem p;
  p.rates = r;
  p.e_min = emin;
  p.e_max = emax;
  p.capacity = rho;
  p.weight = xi;
  CHECK_THROWS_AS(p.validate(), Error);  // [TRIVIAL: infeasible minimums]
  p.capacity(0) = 3.0;
  CHECK_NOTHROW(p.validate());
  p.e_min(0) = 5.0;  // e_min > e_max
  CHECK_THROWS_AS(p.validate(), Error);
}

TEST_CASE("utility") {
  // [DERIVED] K=L=1, xi=1, e=3, r=1 -> ln 4
  auto p = make_problem(Eigen::MatrixXd::Ones(1, 1),
                        Eigen::VectorXd::Zero(1),
                        Eigen::VectorXd::Constant(1, 5.0),
                        Eigen::VectorXd::Constant(1, 5.0),
                        Eigen::VectorXd::Ones(1));
  Eigen::MatrixXd e = Eigen::MatrixXd::Constant(1, 1, 3.0);
  CHECK(utility(e, p) == doctest::Approx(std::log(4.0)));
  // [TRIVIAL] e = 0 -> 0 (the +1 guard)
  CHECK(utility(Eigen::MatrixXd::Zero(1, 1), p) == doctest::Approx(0.0));
  CHECK_THROWS_AS(utility(Eigen::MatrixXd::Constant(1, 1, -0.1), p), Error);

  // invariant under simultaneous user permutation
  Rng rng(3);
  auto q = random_problem(rng, 3, 2);
  Eigen::MatrixXd alloc(3, 2);
  for (long i = 0; i < alloc.size(); ++i) alloc(i) = rng.uniform(0.0, 0.4);
  AllocationProblem swapped = q;
  swapped.rates.row(0).swap(swapped.rates.row(2));
  std::swap(swapped.weight(0), swapped.weight(2));
  std::swap(swapped.e_min(0), swapped.e_min(2));
  std::swap(swapped.e_max(0), swapped.e_max(2));
  Eigen::MatrixXd alloc2 = alloc;
  alloc2.row(0).swap(alloc2.row(2));
  CHECK(utility(alloc, q) == doctest::Approx(utility(alloc2, swapped)));
}

TEST_CASE("KKT best response matches golden-section oracle on 1000 triples") {
  // [DERIVED] maximize ln(1 + xi e r) - mu e over e in [0, big]
  Rng rng(17);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double mu = rng.uniform(0.05, 3.0);
    const double xi = rng.uniform(0.3, 3.0);
    const double r = rng.uniform(0.1, 3.0);
    auto p = make_problem(Eigen::MatrixXd::Constant(1, 1, r),
                          Eigen::VectorXd::Zero(1),
                          Eigen::VectorXd::Constant(1, 100.0),
                          Eigen::VectorXd::Constant(1, 100.0),
                          Eigen::VectorXd::Constant(1, xi));
    MultiplierState st = MultiplierState::initial(1, 1, 0.0);
    st.lambda(0) = mu;
    const double closed = per_ap_best_response(0, st, p)(0);
    auto f = [&](double e) { return std::log1p(xi * e * r) - mu * e; };
    const double numeric = golden_max(f, 50.0);
    // compare objective values: the numeric argmax itself is limited by
    // comparison noise on the flat top
    worst = std::max(worst, f(numeric) - f(closed));
  }
  CHECK(worst <= 1e-8);
}

TEST_CASE("best response corner cases") {
  auto p = make_problem(Eigen::MatrixXd::Ones(1, 1),
                        Eigen::VectorXd::Zero(1),
                        Eigen::VectorXd::Constant(1, 2.5),
                        Eigen::VectorXd::Constant(1, 10.0),
                        Eigen::VectorXd::Ones(1));
  MultiplierState st = MultiplierState::initial(1, 1, 0.0);
  // [DERIVED] xi = r = 1, mu = 0.5 -> e = 2 - 1 = 1
  st.lambda(0) = 0.5;
  CHECK(per_ap_best_response(0, st, p)(0) == doctest::Approx(1.0));
  // [TRIVIAL] mu >= xi r -> 0
  st.lambda(0) = 1.5;
  CHECK(per_ap_best_response(0, st, p)(0) == doctest::Approx(0.0));
  // mu <= 0 -> boxed at e_max
  st.lambda(0) = 0.0;
  CHECK(per_ap_best_response(0, st, p)(0) == doctest::Approx(2.5));
  // r = 0 -> forced 0 even with mu <= 0
  auto pz = make_problem(Eigen::MatrixXd::Zero(1, 1),
                         Eigen::VectorXd::Zero(1),
                         Eigen::VectorXd::Constant(1, 2.5),
                         Eigen::VectorXd::Constant(1, 10.0),
                         Eigen::VectorXd::Ones(1));
  CHECK(per_ap_best_response(0, st, pz)(0) == doctest::Approx(0.0));
}

TEST_CASE("multiplier updates follow Eqs. (14)-(16)") {
  auto p = make_problem(Eigen::MatrixXd::Ones(1, 1),
                        Eigen::VectorXd::Constant(1, 0.5),
                        Eigen::VectorXd::Constant(1, 2.0),
                        Eigen::VectorXd::Constant(1, 3.0),
                        Eigen::VectorXd::Ones(1));
  // [DERIVED] lambda = 0.1, Omega = 0.05, slack rho - sum(e) = 1 -> 0.05
  MultiplierState st = MultiplierState::initial(1, 1, 0.1, {0.05, 1.0});
  st.iteration = 0;  // step = 0.05 / (1 + 0) = 0.05
  Eigen::MatrixXd e = Eigen::MatrixXd::Constant(1, 1, 2.0);  // slack = 1
  auto next = update_multipliers(st, e, p);
  CHECK(next.lambda(0) == doctest::Approx(0.05));
  CHECK(next.iteration == 1);

  // [TRIVIAL] all constraints exactly tight -> unchanged
  auto tight = make_problem(Eigen::MatrixXd::Ones(1, 1),
                            Eigen::VectorXd::Constant(1, 2.0),
                            Eigen::VectorXd::Constant(1, 2.0),
                            Eigen::VectorXd::Constant(1, 2.0),
                            Eigen::VectorXd::Ones(1));
  auto same = update_multipliers(st, e, tight);
  CHECK(same.lambda(0) == doctest::Approx(st.lambda(0)));
  CHECK(same.eta1(0) == doctest::Approx(st.eta1(0)));
  CHECK(same.eta2(0) == doctest::Approx(st.eta2(0)));

  // [TRIVIAL] projection never yields negatives
  MultiplierState small = MultiplierState::initial(1, 1, 0.01, {10.0, 1.0});
  Eigen::MatrixXd tiny = Eigen::MatrixXd::Zero(1, 1);  // big positive slack
  auto proj = update_multipliers(small, tiny, p);
  CHECK(proj.lambda(0) >= 0.0);
  CHECK(proj.eta1(0) >= 0.0);
  CHECK(proj.eta2(0) >= 0.0);
}

TEST_CASE("solve_exhaustive") {
  // [TRIVIAL] single user/AP with ample capacity -> e = e_max
  auto p = make_problem(Eigen::MatrixXd::Ones(1, 1),
                        Eigen::VectorXd::Zero(1),
                        Eigen::VectorXd::Constant(1, 1.5),
                        Eigen::VectorXd::Constant(1, 5.0),
                        Eigen::VectorXd::Ones(1));
  auto sol = solve_exhaustive(p, {0.01});
  CHECK(sol.e(0, 0) == doctest::Approx(1.5).epsilon(0.02));
  CHECK(sol.feasible);

  // [TRIVIAL] rho below the sum of minimums -> infeasible at validation
  Eigen::VectorXd emin2(2);
  emin2 << 0.8, 0.8;
  AllocationProblem bad;
  bad.rates = Eigen::MatrixXd::Ones(2, 1);
  bad.e_min = emin2;
  bad.e_max = Eigen::VectorXd::Constant(2, 2.0);
  bad.capacity = Eigen::VectorXd::Constant(1, 1.0);
  bad.weight = Eigen::VectorXd::Ones(2);
  CHECK_THROWS_AS(solve_exhaustive(bad, {0.01}), Error);

  // [DERIVED] enumeration is its own oracle: solution beats random feasible
  Rng rng(5);
  auto q = random_problem(rng, 2, 2);
  auto opt = solve_exhaustive(q, {0.05});
  for (int trial = 0; trial < 200; ++trial) {
    Eigen::MatrixXd e(2, 2);
    for (long i = 0; i < e.size(); ++i) e(i) = rng.uniform(0.0, 1.0);
    if (!is_feasible(e, q, q.feasibility_tol())) continue;
    // slack covers the grid discretization of the enumeration
    CHECK(opt.utility >= utility(e, q) - 0.15);
  }

  // refinement reaches the requested resolution under a tiny budget
  ExhaustiveConfig tight_budget{0.01, 2000.0, true, 4.0};
  auto refined = solve_exhaustive(q, tight_budget);
  CHECK(refined.utility >= opt.utility - 5e-2);
  ExhaustiveConfig no_refine{0.01, 10.0, false, 4.0};
  CHECK_THROWS_AS(solve_exhaustive(q, no_refine), Error);
}

TEST_CASE("solve_dual") {
  // [TRIVIAL] single user/AP converges to e_max when rho >= e_max
  auto p = make_problem(Eigen::MatrixXd::Ones(1, 1),
                        Eigen::VectorXd::Zero(1),
                        Eigen::VectorXd::Constant(1, 1.5),
                        Eigen::VectorXd::Constant(1, 5.0),
                        Eigen::VectorXd::Ones(1));
  auto sol = solve_dual(p);
  CHECK(sol.feasible);
  CHECK(sol.e(0, 0) == doctest::Approx(1.5).epsilon(1e-2));

  // [DERIVED] oracle dominance on random desk-scale instances
  Rng rng(11);
  for (int i = 0; i < 10; ++i) {
    auto q = random_problem(rng, 2 + i % 2, 1 + i % 2);
    auto oracle = solve_exhaustive(q, {0.01});
    auto dual = solve_dual(q);
    CHECK(dual.feasible);
    CHECK(dual.utility >= oracle.utility - 1e-2);
  }

  // [DERIVED] symmetric instance -> symmetric allocation
  auto sym = make_problem(Eigen::MatrixXd::Ones(2, 2),
                          Eigen::VectorXd::Constant(2, 0.1),
                          Eigen::VectorXd::Constant(2, 1.0),
                          Eigen::VectorXd::Constant(2, 1.0),
                          Eigen::VectorXd::Ones(2));
  auto ssol = solve_dual(sym);
  CHECK(std::abs(ssol.e(0, 0) - ssol.e(1, 1)) <= 1e-6);
  CHECK(std::abs(ssol.e(0, 1) - ssol.e(1, 0)) <= 1e-6);

  // trace is recorded and best-so-far utility is non-decreasing
  CHECK(!sol.trace.empty());
}

TEST_CASE("repair_allocation") {
  auto p = make_problem(Eigen::MatrixXd::Ones(2, 2),
                        Eigen::VectorXd::Constant(2, 0.2),
                        Eigen::VectorXd::Constant(2, 1.0),
                        Eigen::VectorXd::Constant(2, 1.0),
                        Eigen::VectorXd::Ones(2));
  // [TRIVIAL] feasible input unchanged
  Eigen::MatrixXd ok = Eigen::MatrixXd::Constant(2, 2, 0.3);
  Eigen::MatrixXd repaired = ok;
  CHECK(repair_allocation(repaired, p));
  CHECK((repaired - ok).cwiseAbs().maxCoeff() <= 1e-12);

  // [TRIVIAL] one AP overloaded 2x -> column halved
  Eigen::MatrixXd over = Eigen::MatrixXd::Zero(2, 2);
  over.col(0) << 1.0, 1.0;  // sum 2 > rho = 1
  repaired = over;
  CHECK(repair_allocation(repaired, p));
  CHECK(repaired(0, 0) == doctest::Approx(0.5));
  CHECK(repaired(1, 0) == doctest::Approx(0.5));

  // under-minimum rows get raised from slack
  Eigen::MatrixXd low = Eigen::MatrixXd::Zero(2, 2);
  repaired = low;
  CHECK(repair_allocation(repaired, p));
  CHECK(is_feasible(repaired, p, p.feasibility_tol()));
  CHECK(repaired.row(0).sum() >= 0.2 - 1e-9);
}

TEST_CASE("uniform_allocation") {
  Eigen::VectorXd rho(2);
  rho << 10.0, 4.0;
  auto p = make_problem(Eigen::MatrixXd::Ones(10, 2),
                        Eigen::VectorXd::Zero(10),
                        Eigen::VectorXd::Constant(10, 100.0),
                        rho, Eigen::VectorXd::Ones(10));
  auto sol = uniform_allocation(p);
  // [TRIVIAL] rho = 10, K = 10 -> every share 1; per-AP sums = rho
  CHECK(sol.e(3, 0) == doctest::Approx(1.0));
  CHECK(sol.e.col(0).sum() == doctest::Approx(10.0));
  CHECK(sol.e.col(1).sum() == doctest::Approx(4.0));
  CHECK(sol.feasible);

  // [DERIVED] e_max below the uniform share flips the feasible flag
  auto tightp = make_problem(Eigen::MatrixXd::Ones(2, 1),
                             Eigen::VectorXd::Zero(2),
                             Eigen::VectorXd::Constant(2, 0.3),
                             Eigen::VectorXd::Constant(1, 2.0),
                             Eigen::VectorXd::Ones(2));
  CHECK_FALSE(uniform_allocation(tightp).feasible);
}

TEST_CASE("refine_dual improves a warm start and keeps feasibility") {
  Rng rng(23);
  auto q = random_problem(rng, 3, 2);
  Eigen::MatrixXd guess = Eigen::MatrixXd::Constant(3, 2, 0.2);
  auto refined = refine_dual(q, guess, 5);
  CHECK(refined.feasible);
  Eigen::MatrixXd repaired_guess = guess;
  repair_allocation(repaired_guess, q);
  CHECK(refined.utility >= utility(repaired_guess, q) - 1e-12);
}
