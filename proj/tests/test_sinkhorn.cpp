#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "mot/oracle.hpp"
#include "mot/sinkhorn.hpp"
#include "testutil.hpp"

using mot::CostMatrix;
using mot::ErrorCode;
using mot::MaskMatrix;
using mot::Matrix;
using mot::ProbVec;
using mot::SolverConfig;
using mot::Vec;

namespace {

// Plain dense log-domain Sinkhorn, written independently of the library so the
// ones-mask path can be checked against a reference with no shared code.
struct DenseReference {
  Matrix plan;
  double value = 0.0;
};

DenseReference dense_reference(const Matrix& cost, const Vec& a, const Vec& b,
                               double epsilon, double tau, int max_iter) {
  const std::size_t n = cost.rows();
  const std::size_t m = cost.cols();
  Vec f(n, 0.0);
  Vec g(m, 0.0);
  for (int it = 0; it < max_iter; ++it) {
    double delta = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double hi = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < m; ++j) {
        hi = std::max(hi, (-cost(i, j) + f[i] + g[j]) / epsilon);
      }
      double s = 0.0;
      for (std::size_t j = 0; j < m; ++j) {
        s += std::exp((-cost(i, j) + f[i] + g[j]) / epsilon - hi);
      }
      const double next = f[i] + epsilon * (std::log(a[i]) - hi - std::log(s));
      delta += std::abs(next - f[i]);
      f[i] = next;
    }
    for (std::size_t j = 0; j < m; ++j) {
      double hj = -std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < n; ++i) {
        hj = std::max(hj, (-cost(i, j) + f[i] + g[j]) / epsilon);
      }
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        s += std::exp((-cost(i, j) + f[i] + g[j]) / epsilon - hj);
      }
      g[j] += epsilon * (std::log(b[j]) - hj - std::log(s));
    }
    if (delta < epsilon * tau) break;
  }
  DenseReference out{Matrix(n, m), 0.0};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      out.plan(i, j) = std::exp((-cost(i, j) + f[i] + g[j]) / epsilon);
      out.value += out.plan(i, j) * cost(i, j);
    }
  }
  return out;
}

}  // namespace

TEST_CASE("one-by-one problem has the trivial solution and tight duals") {
  CostMatrix cost(Matrix(1, 1, 0.37));
  auto sol = mot::solve_mwd(cost, MaskMatrix::ones(1, 1), ProbVec::uniform(1),
                            ProbVec::uniform(1));
  CHECK(sol.report.converged);
  CHECK(sol.plan(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(sol.distance == doctest::Approx(0.37).epsilon(1e-12));
  // With one slot the optimal duals must satisfy f + g = c exactly (up to the
  // tolerance of the final half-update).
  CHECK(sol.duals.f[0] + sol.duals.g[0] == doctest::Approx(0.37).epsilon(1e-9));
}

TEST_CASE("identity mask forces the diagonal coupling") {
  Matrix c(2, 2);
  c(0, 0) = 0.3;
  c(0, 1) = 5.0;
  c(1, 0) = 7.0;
  c(1, 1) = 0.9;
  auto sol = mot::solve_mwd(CostMatrix(c), MaskMatrix::identity(2),
                            ProbVec::uniform(2), ProbVec::uniform(2));
  CHECK(sol.report.converged);
  CHECK(std::abs(sol.plan(0, 0) - 0.5) <= 1e-12);
  CHECK(std::abs(sol.plan(1, 1) - 0.5) <= 1e-12);
  CHECK(sol.plan(0, 1) == 0.0);
  CHECK(sol.plan(1, 0) == 0.0);
  CHECK(sol.distance == doctest::Approx(0.5 * (0.3 + 0.9)).epsilon(1e-12));
}

TEST_CASE("triangular mask pins the anti-diagonal-free coupling") {
  // Masking the lower-left slot leaves a single feasible coupling for uniform
  // marginals: the diagonal, which here costs 1.0.
  Matrix c(2, 2);
  c(0, 0) = 1.0;
  c(0, 1) = 0.0;
  c(1, 0) = 0.0;
  c(1, 1) = 1.0;
  Matrix m(2, 2, 1.0);
  m(1, 0) = 0.0;
  // The feasible set is the single coupling diag(0.5, 0.5). The unmasked
  // off-diagonal slot is squeezed to zero only sublinearly (mass ~ 1/iter),
  // so the potential-change stopping rule is not reached at the default
  // budget; the plan itself is already accurate to ~1e-5, which is what this
  // fixture pins down.
  auto sol = mot::solve_mwd(CostMatrix(c), MaskMatrix::from_support(m),
                            ProbVec::uniform(2), ProbVec::uniform(2));
  CHECK(sol.distance == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(sol.plan(0, 0) == doctest::Approx(0.5).epsilon(1e-4));
  CHECK(sol.plan(1, 1) == doctest::Approx(0.5).epsilon(1e-4));
  CHECK(sol.plan(1, 0) == 0.0);
}

TEST_CASE("dual objective closed form at zero potentials") {
  // f = g = 0, all-ones 2x2 mask, zero cost, epsilon = 1:
  // F = 0 + 0 - 1 * sum exp(0) = -4.
  Vec zero2(2, 0.0);
  double val = mot::dual_objective(zero2, zero2, CostMatrix::zeros(2, 2),
                                   MaskMatrix::ones(2, 2), ProbVec::uniform(2),
                                   ProbVec::uniform(2), 1.0);
  CHECK(val == doctest::Approx(-4.0).epsilon(1e-14));
}

TEST_CASE("masked slots stay bitwise zero in the returned plan") {
  mot::Rng rng(11);
  auto cost = mottest::random_cost(rng, 5, 4);
  auto mask = mottest::random_valid_mask(rng, 5, 4);
  auto sol =
      mot::solve_mwd(cost, mask, ProbVec::uniform(5), ProbVec::uniform(4));
  for (std::size_t i = 0; i < 5; ++i) {
    for (std::size_t j = 0; j < 4; ++j) {
      if (mask(i, j) == 0) {
        CHECK(sol.plan(i, j) == 0.0);
        CHECK_FALSE(std::signbit(sol.plan(i, j)));
      }
    }
  }
}

TEST_CASE("all-ones mask agrees with an independent dense reference") {
  mot::Rng rng(29);
  for (int rep = 0; rep < 5; ++rep) {
    const std::size_t n = 3 + rep % 3;
    const std::size_t m = 2 + rep % 4;
    auto cost = mottest::random_cost(rng, n, m);
    auto a = mottest::random_marginal(rng, n);
    auto b = mottest::random_marginal(rng, m);
    SolverConfig cfg;
    cfg.epsilon = 0.2;
    cfg.tau = 1e-12;
    cfg.max_iter = 50000;
    auto sol = mot::solve_mwd(cost, MaskMatrix::ones(n, m), a, b, cfg);
    auto ref = dense_reference(cost.values(), a.values(), b.values(), 0.2,
                               1e-12, 50000);
    CHECK(mottest::max_abs_diff(sol.plan.values(), ref.plan) <= 1e-10);
    CHECK(std::abs(sol.distance - ref.value) <= 1e-10);
  }
}

TEST_CASE("log-domain and scaling-form solvers produce the same plan") {
  mot::Rng rng(31);
  auto cost = mottest::random_cost(rng, 4, 4);
  auto a = mottest::random_marginal(rng, 4);
  auto b = mottest::random_marginal(rng, 4);
  auto mask = mottest::random_feasible_mask(rng, a, b);
  SolverConfig cfg;
  cfg.epsilon = 1.0;
  cfg.tau = 1e-11;
  cfg.max_iter = 100000;
  auto log_sol = mot::solve_mwd(cost, mask, a, b, cfg);
  auto van_sol = mot::solve_mwd_vanilla(cost, mask, a, b, cfg);
  CHECK(log_sol.report.converged);
  CHECK(van_sol.report.converged);
  CHECK(mottest::max_abs_diff(log_sol.plan.values(), van_sol.plan.values()) <=
        1e-9);
  CHECK(std::abs(log_sol.distance - van_sol.distance) <= 1e-9);
}

TEST_CASE("scaling-form solver underflows where the log-domain one survives") {
  // Every kernel entry exp(-C/eps) is below the double denormal range, so the
  // scaling iteration divides by zero while the log-domain form is unfazed.
  Matrix c(2, 2, 2e6);
  c(0, 0) = 1e6;
  c(1, 1) = 1e6;
  SolverConfig cfg;
  cfg.epsilon = 0.01;
  auto mask = MaskMatrix::ones(2, 2);
  auto a = ProbVec::uniform(2);
  auto b = ProbVec::uniform(2);
  CHECK(mottest::throws_code(ErrorCode::NumericalUnderflow, [&] {
    mot::solve_mwd_vanilla(CostMatrix(c), mask, a, b, cfg);
  }));
  auto sol = mot::solve_mwd(CostMatrix(c), mask, a, b, cfg);
  CHECK(sol.report.converged);
  CHECK(sol.plan(0, 0) == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(sol.plan(0, 1) == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
}

TEST_CASE("marginal-incompatible identity mask is reported infeasible") {
  // Identity mask forces P = diag(p) with p = a = b; a != b means no feasible
  // coupling, which the solver detects as a stall.
  Vec av{0.3, 0.7};
  Vec bv{0.7, 0.3};
  SolverConfig cfg;
  cfg.max_iter = 2000;
  CHECK(mottest::throws_code(ErrorCode::Infeasible, [&] {
    mot::solve_mwd(CostMatrix::zeros(2, 2), MaskMatrix::identity(2),
                   ProbVec(av), ProbVec(bv), cfg);
  }));
}

TEST_CASE("structural starvation is reported infeasible immediately") {
  Vec av{1.0, 0.0};
  Vec bv{0.0, 1.0};
  CHECK(mottest::throws_code(ErrorCode::Infeasible, [&] {
    mot::solve_mwd(CostMatrix::zeros(2, 2), MaskMatrix::identity(2),
                   ProbVec(av), ProbVec(bv));
  }));
}

TEST_CASE("zero-mass rows and columns are dropped, potentials stay finite") {
  Vec av{1.0, 0.0};
  Vec bv{1.0, 0.0};
  Matrix c(2, 2);
  c(0, 0) = 0.25;
  c(0, 1) = 0.5;
  c(1, 0) = 0.75;
  c(1, 1) = 1.0;
  auto sol = mot::solve_mwd(CostMatrix(c), MaskMatrix::ones(2, 2), ProbVec(av),
                            ProbVec(bv));
  CHECK(sol.report.converged);
  CHECK(sol.plan(0, 0) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(sol.plan(1, 0) == 0.0);
  CHECK(sol.plan(0, 1) == 0.0);
  CHECK(sol.plan(1, 1) == 0.0);
  CHECK(sol.distance == doctest::Approx(0.25).epsilon(1e-9));
  for (double v : sol.duals.f) CHECK(std::isfinite(v));
  for (double v : sol.duals.g) CHECK(std::isfinite(v));
}

TEST_CASE("converged runs have marginal residuals near the tolerance") {
  mot::Rng rng(47);
  for (int rep = 0; rep < 10; ++rep) {
    auto cost = mottest::random_cost(rng, 6, 5);
    auto mask = mottest::random_valid_mask(rng, 6, 5);
    auto a = mottest::random_marginal(rng, 6);
    auto b = mottest::random_marginal(rng, 5);
    try {
      auto sol = mot::solve_mwd(cost, mask, a, b);
      REQUIRE(sol.report.converged);
      CHECK(sol.report.marginal_residual_row <= 10 * 1e-6);
      CHECK(sol.report.marginal_residual_col <= 10 * 1e-6);
      auto [rrow, rcol] = sol.plan.marginal_residuals(a, b);
      CHECK(rrow ==
            doctest::Approx(sol.report.marginal_residual_row).epsilon(1e-12));
      CHECK(rcol ==
            doctest::Approx(sol.report.marginal_residual_col).epsilon(1e-12));
    } catch (const mot::Error& e) {
      REQUIRE(e.code() == ErrorCode::Infeasible);
    }
  }
}

TEST_CASE("dual trace is nondecreasing along the iterations") {
  mot::Rng rng(53);
  auto cost = mottest::random_cost(rng, 5, 5);
  auto a = mottest::random_marginal(rng, 5);
  auto b = mottest::random_marginal(rng, 5);
  auto mask = mottest::random_feasible_mask(rng, a, b);
  SolverConfig cfg;
  cfg.record_dual_trace = true;
  auto sol = mot::solve_mwd(cost, mask, a, b, cfg);
  REQUIRE(sol.report.dual_trace.has_value());
  const auto& trace = *sol.report.dual_trace;
  REQUIRE(trace.size() >= 2);
  for (std::size_t k = 1; k < trace.size(); ++k) {
    CHECK(trace[k] >= trace[k - 1] - 1e-10);
  }
}

TEST_CASE("iteration budget of one reports non-convergence") {
  mot::Rng rng(59);
  auto cost = mottest::random_cost(rng, 4, 4);
  SolverConfig cfg;
  cfg.max_iter = 1;
  auto sol = mot::solve_mwd(cost, MaskMatrix::ones(4, 4), ProbVec::uniform(4),
                            ProbVec::uniform(4), cfg);
  CHECK_FALSE(sol.report.converged);
  CHECK(sol.report.iterations == 1);
  // A non-converged solution refuses to hand out an envelope gradient.
  CHECK(mottest::throws_code(ErrorCode::NotConverged,
                             [&] { mot::mwd_gradient_wrt_cost(sol); }));
}

TEST_CASE("plan is the gradient of the regularized value in the cost") {
  mot::Rng rng(61);
  auto cost = mottest::random_cost(rng, 3, 3);
  auto mask = MaskMatrix::ones(3, 3);
  auto a = mottest::random_marginal(rng, 3);
  auto b = mottest::random_marginal(rng, 3);
  SolverConfig cfg;
  cfg.epsilon = 0.5;
  cfg.tau = 1e-12;
  cfg.max_iter = 100000;
  auto sol = mot::solve_mwd(cost, mask, a, b, cfg);
  auto grad = mot::mwd_gradient_wrt_cost(sol);
  const double h = 1e-6;
  // The envelope theorem differentiates the transport-plus-entropy objective
  // exactly; compare against central differences of that quantity.
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      Matrix cp = cost.values();
      Matrix cm = cost.values();
      cp(i, j) += h;
      cm(i, j) -= h;
      auto sp = mot::solve_mwd(CostMatrix(cp), mask, a, b, cfg);
      auto sm = mot::solve_mwd(CostMatrix(cm), mask, a, b, cfg);
      const double vp =
          mot::regularized_value(sp.plan, CostMatrix(cp), cfg.epsilon);
      const double vm =
          mot::regularized_value(sm.plan, CostMatrix(cm), cfg.epsilon);
      const double fd = (vp - vm) / (2 * h);
      CHECK(grad(i, j) == doctest::Approx(fd).epsilon(2e-4));
    }
  }
}

TEST_CASE("small-epsilon solutions approach the exact masked optimum") {
  mot::Rng rng(67);
  for (int rep = 0; rep < 5; ++rep) {
    const std::size_t n = 4;
    auto cost = mottest::random_cost(rng, n, n);
    auto a = ProbVec::uniform(n);
    auto b = ProbVec::uniform(n);
    auto mask = mottest::random_feasible_mask(rng, a, b);
    auto exact = mot::exact_mwd(cost, mask, a, b);
    REQUIRE(exact.feasible());
    SolverConfig cfg;
    cfg.epsilon = 1e-3 * cost.max();
    cfg.tau = 1e-9;
    cfg.max_iter = 2000000;
    auto sol = mot::solve_mwd(cost, mask, a, b, cfg);
    CHECK(sol.distance >= exact.value - 1e-6);
    CHECK(std::abs(sol.distance - exact.value) <=
          std::max(0.02 * cost.max(), 0.02 * std::abs(exact.value)));
  }
}

TEST_CASE("optimal duals and primal plan report the same regularized value") {
  // Strong duality for the entropic problem: at convergence the dual
  // objective restricted to the active support equals <P,C> + eps*H-term.
  mot::Rng rng(71);
  auto cost = mottest::random_cost(rng, 4, 5);
  auto a = mottest::random_marginal(rng, 4);
  auto b = mottest::random_marginal(rng, 5);
  auto mask = mottest::random_feasible_mask(rng, a, b);
  SolverConfig cfg;
  cfg.tau = 1e-12;
  cfg.max_iter = 200000;
  auto sol = mot::solve_mwd(cost, mask, a, b, cfg);
  REQUIRE(sol.report.converged);
  const double primal = mot::regularized_value(sol.plan, cost, cfg.epsilon);
  const double dual = mot::dual_objective(sol.duals.f, sol.duals.g, cost, mask,
                                          a, b, cfg.epsilon);
  CHECK(primal == doctest::Approx(dual).epsilon(1e-8));
}

TEST_CASE("invalid shapes and marginals are rejected up front") {
  CHECK(mottest::throws_code(ErrorCode::ShapeMismatch, [&] {
    mot::solve_mwd(CostMatrix::zeros(2, 2), MaskMatrix::ones(3, 2),
                   ProbVec::uniform(2), ProbVec::uniform(2));
  }));
  CHECK(mottest::throws_code(ErrorCode::ShapeMismatch, [&] {
    mot::solve_mwd(CostMatrix::zeros(2, 2), MaskMatrix::ones(2, 2),
                   ProbVec::uniform(3), ProbVec::uniform(2));
  }));
  SolverConfig bad;
  bad.epsilon = 0.0;
  CHECK(mottest::throws_code(ErrorCode::InvalidInput, [&] {
    mot::solve_mwd(CostMatrix::zeros(2, 2), MaskMatrix::ones(2, 2),
                   ProbVec::uniform(2), ProbVec::uniform(2), bad);
  }));
}
