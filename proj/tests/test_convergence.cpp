#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstring>
#include <limits>
#include <stdexcept>
#include <vector>

#include "snls/coefficients.hpp"
#include "snls/convergence.hpp"
#include "snls/rng.hpp"
#include "snls/spectral.hpp"

namespace snls {
namespace {

ExperimentPlan small_plan() {
  ExperimentPlan plan;
  plan.coeffs = CoefficientSet::linear_damped(1.0);
  plan.noise_r = 1.5;
  plan.eps_list = {0.5};
  plan.ladder = {LadderPoint{2, 16}, LadderPoint{4, 16}};
  plan.K_ref = 16;
  plan.M_ref = 128;
  plan.T = 1.0;
  plan.paths = 8;
  plan.seed = 11;
  return plan;
}

TEST_CASE("fit_rate recovers planted power laws exactly", "[convergence]") {
  // exact data e = C N^{-p} must return slope -p to machine precision
  ErrorTable table;
  table.T = 1.0;
  for (int K : {2, 4, 8, 16, 32}) {
    ErrorRow row;
    row.eps = 0.5;
    row.K = K;
    row.M = 64;
    row.e_hat = 3.7 * std::pow(2.0 * K + 1.0, -1.5);
    row.se = 0.0;
    row.paths = 10;
    table.rows.push_back(row);
  }
  const ConvergenceReport rep = fit_rate(table, Axis::spatial, -1.5, 0.2);
  CHECK(std::abs(rep.slope + 1.5) < 1e-12);
  CHECK(std::abs(std::exp(rep.intercept) - 3.7) < 1e-12);
  CHECK(rep.pass);
  CHECK(rep.points_used == 5);
  CHECK(rep.points_excluded == 0);

  // temporal abscissa is tau = T / M
  ErrorTable tt;
  tt.T = 2.0;
  for (int M : {16, 32, 64, 128}) {
    ErrorRow row;
    row.eps = 1.0;
    row.K = 8;
    row.M = M;
    row.e_hat = 0.9 * std::pow(2.0 / M, 0.5);
    tt.rows.push_back(row);
  }
  const ConvergenceReport rt = fit_rate(tt, Axis::temporal);
  CHECK(std::abs(rt.slope - 0.5) < 1e-12);
  // no expected rate declared: the fit reports pass by convention
  CHECK(rt.pass);
}

TEST_CASE("fit_rate excludes zero rows and verifies the band",
          "[convergence]") {
  ErrorTable table;
  table.T = 1.0;
  for (int K : {2, 4, 8, 16}) {
    ErrorRow row;
    row.eps = 0.5;
    row.K = K;
    row.M = 32;
    row.e_hat = (K == 16) ? 0.0 : std::pow(2.0 * K + 1.0, -2.0);
    table.rows.push_back(row);
  }
  const ConvergenceReport rep = fit_rate(table, Axis::spatial, -2.0, 0.1);
  CHECK(rep.points_used == 3);
  CHECK(rep.points_excluded == 1);
  CHECK(rep.note.find("excluded") != std::string::npos);
  CHECK(rep.pass);

  const ConvergenceReport bad = fit_rate(table, Axis::spatial, -1.0, 0.1);
  CHECK_FALSE(bad.pass);
}

TEST_CASE("fit_rate rejects mixed ladders and starved tables",
          "[convergence]") {
  ErrorTable table;
  table.T = 1.0;
  for (int i = 0; i < 4; ++i) {
    ErrorRow row;
    row.eps = 0.5;
    row.K = 2 << i;
    row.M = 16 << i;  // both axes vary
    row.e_hat = 1.0 / (i + 1.0);
    table.rows.push_back(row);
  }
  CHECK_THROWS_AS(fit_rate(table, Axis::spatial), std::invalid_argument);
  CHECK_THROWS_AS(fit_rate(table, Axis::temporal), std::invalid_argument);
  // the combined axis is exactly for such ladders
  CHECK_NOTHROW(fit_rate(table, Axis::combined));

  ErrorTable tiny;
  tiny.T = 1.0;
  for (int i = 0; i < 2; ++i) {
    ErrorRow row;
    row.eps = 0.5;
    row.K = 2 << i;
    row.M = 16;
    row.e_hat = 1.0;
    tiny.rows.push_back(row);
  }
  CHECK_THROWS_AS(fit_rate(tiny, Axis::spatial), std::invalid_argument);
}

TEST_CASE("plan validation enforces reference domination", "[convergence]") {
  ExperimentPlan plan = small_plan();
  CHECK_NOTHROW(validate_plan(plan));

  SECTION("ladder beyond the reference") {
    plan.ladder.push_back(LadderPoint{32, 16});
    CHECK_THROWS_AS(validate_plan(plan), std::invalid_argument);
  }
  SECTION("insufficient spatial margin") {
    plan.ladder.push_back(LadderPoint{8, 16});  // K_ref = 16 < 4 * 8
    CHECK_THROWS_AS(validate_plan(plan), std::invalid_argument);
  }
  SECTION("insufficient temporal margin") {
    plan.ladder.push_back(LadderPoint{2, 32});  // M_ref = 128 < 8 * 32
    CHECK_THROWS_AS(validate_plan(plan), std::invalid_argument);
  }
  SECTION("non-dividing step count") {
    plan.ladder.push_back(LadderPoint{2, 12});
    CHECK_THROWS_AS(validate_plan(plan), std::invalid_argument);
  }
  SECTION("self-comparison point is allowed") {
    plan.ladder.push_back(LadderPoint{16, 128});
    CHECK_NOTHROW(validate_plan(plan));
  }
  SECTION("too few paths") {
    plan.paths = 1;
    CHECK_THROWS_AS(validate_plan(plan), std::invalid_argument);
  }
  SECTION("u0 beyond the reference grid") {
    plan.u0 = unit_mode(FourierGrid(32), 20);
    CHECK_THROWS_AS(validate_plan(plan), std::invalid_argument);
  }
}

TEST_CASE("strong error is bitwise reproducible across thread counts",
          "[convergence]") {
  const ExperimentPlan plan = small_plan();
  const ErrorTable t1 = strong_error(plan, 1);
  const ErrorTable t2 = strong_error(plan, 2);
  const ErrorTable t3 = strong_error(plan, 3);
  REQUIRE(t1.rows.size() == t2.rows.size());
  REQUIRE(t1.rows.size() == t3.rows.size());
  for (std::size_t i = 0; i < t1.rows.size(); ++i) {
    CHECK(std::memcmp(&t1.rows[i].e_hat, &t2.rows[i].e_hat,
                      sizeof(double)) == 0);
    CHECK(std::memcmp(&t1.rows[i].e_hat, &t3.rows[i].e_hat,
                      sizeof(double)) == 0);
    CHECK(std::memcmp(&t1.rows[i].se, &t2.rows[i].se, sizeof(double)) == 0);
    CHECK(std::memcmp(&t1.rows[i].se, &t3.rows[i].se, sizeof(double)) == 0);
  }
  CHECK(t1.rows[0].e_hat > 0.0);
  CHECK(t1.rows[0].se > 0.0);
}

TEST_CASE("self-comparison rows measure exactly zero", "[convergence]") {
  ExperimentPlan plan = small_plan();
  plan.ladder = {LadderPoint{16, 128}};
  plan.paths = 4;
  const ErrorTable table = strong_error(plan, 1);
  REQUIRE(table.rows.size() == 1);
  CHECK(table.rows[0].e_hat == 0.0);
  CHECK(table.rows[0].se == 0.0);
}

TEST_CASE("sup error dominates the terminal error", "[convergence]") {
  ExperimentPlan plan = small_plan();
  plan.paths = 6;
  const ErrorTable terminal = strong_error(plan, 1);
  plan.sup_error = true;
  const ErrorTable sup = strong_error(plan, 1);
  REQUIRE(terminal.rows.size() == sup.rows.size());
  for (std::size_t i = 0; i < sup.rows.size(); ++i) {
    CHECK(sup.rows[i].e_hat >= terminal.rows[i].e_hat * (1.0 - 1e-12));
    CHECK(sup.rows[i].e_hat > 0.0);
  }
}

TEST_CASE("reduce_moment matches a direct computation", "[convergence]") {
  const double x[5] = {0.5, 1.5, 2.5, 0.25, 1.0};
  double value = 0.0, se = 0.0;
  detail::reduce_moment(x, 5, 2.0, &value, &se);
  double mean = 0.0;
  for (double v : x) mean += v * v;
  mean /= 5.0;
  double var = 0.0;
  for (double v : x) var += (v * v - mean) * (v * v - mean);
  var /= 4.0;
  const double sd = std::sqrt(var);
  CHECK(value == Catch::Approx(std::sqrt(mean)).epsilon(1e-14));
  CHECK(se == Catch::Approx(0.5 / std::sqrt(mean) * sd / std::sqrt(5.0))
                  .epsilon(1e-13));

  // all-zero samples report a zero moment with zero spread
  const double z[3] = {0.0, 0.0, 0.0};
  detail::reduce_moment(z, 3, 2.0, &value, &se);
  CHECK(value == 0.0);
  CHECK(se == 0.0);
}

TEST_CASE("moment diagnostic reduces to unitarity when F = G = 0",
          "[convergence]") {
  ExperimentPlan plan;
  plan.coeffs = CoefficientSet::linear_damped(0.0);
  plan.coeffs.with_constant_diffusion(0.0);
  plan.noise_r = 1.5;
  plan.eps_list = {0.5};
  plan.ladder = {LadderPoint{4, 32}};
  plan.K_ref = 4;
  plan.M_ref = 32;
  plan.paths = 3;
  plan.seed = 21;
  plan.target_mu = 0.0;
  plan.snapshots = 4;
  plan.u0 = unit_mode(FourierGrid(2), 1) + unit_mode(FourierGrid(2), -2);

  const MomentTable table = moment_diagnostic(plan, 1);
  const double expect = l2_norm(plan.u0);
  for (const MomentRow& row : table.rows) {
    if (row.kind != "curve" && row.kind != "level") continue;
    CHECK(row.value == Catch::Approx(expect).epsilon(1e-13));
    CHECK(row.se < 1e-13);
  }
}

TEST_CASE("moment plan shape is enforced", "[convergence]") {
  ExperimentPlan plan = small_plan();
  // two ladder points
  CHECK_THROWS_AS(moment_diagnostic(plan, 1), std::invalid_argument);
  // single point that does not match the reference
  plan.ladder = {LadderPoint{2, 16}};
  CHECK_THROWS_AS(moment_diagnostic(plan, 1), std::invalid_argument);
  // holder eps missing from the eps list
  plan.ladder = {LadderPoint{16, 128}};
  plan.holder_eps = 0.25;
  plan.holder_t0 = 0;
  plan.holder_seps = {1, 2};
  CHECK_THROWS_AS(moment_diagnostic(plan, 1), std::invalid_argument);
  // separation walking off the grid
  plan.holder_eps = 0.5;
  plan.holder_seps = {200};
  CHECK_THROWS_AS(moment_diagnostic(plan, 1), std::invalid_argument);
}

TEST_CASE("meshing accepts the smallest candidate at delta = inf",
          "[convergence]") {
  MeshingScenario sc;
  sc.coeffs = CoefficientSet::linear_damped(1.0);
  sc.eps = 0.5;
  sc.mu = 1.0;
  sc.noise_r = 1.5;
  sc.T = 0.05;
  sc.candidates = {2, 4};
  sc.paths_anchor = 4;
  sc.paths_main = 4;
  sc.seed = 5;

  const MeshingReport rep =
      meshing_check(std::numeric_limits<double>::infinity(), sc, 1);
  CHECK(rep.feasible);
  CHECK(rep.selected_K == 2);
  CHECK(rep.M_selected == sc.steps_for(2));
  CHECK(rep.pass);

  // an unreachable target reports the required resolution instead
  const MeshingReport infeasible = meshing_check(1e-12, sc, 1);
  CHECK_FALSE(infeasible.feasible);
  CHECK(infeasible.selected_K == -1);
  CHECK(infeasible.required_K > 4);
  CHECK(infeasible.note.find("requires") != std::string::npos);
}

TEST_CASE("meshing scenario validation", "[convergence]") {
  MeshingScenario sc;
  sc.coeffs = CoefficientSet::linear_damped(1.0);
  sc.T = 0.05;
  sc.mu = 1.0;
  sc.candidates = {4, 2};  // not ascending
  CHECK_THROWS_AS(validate_meshing(1.0, sc), std::invalid_argument);
  sc.candidates = {2, 4};
  CHECK_NOTHROW(validate_meshing(1.0, sc));
  CHECK_THROWS_AS(validate_meshing(0.0, sc), std::invalid_argument);
  sc.candidates.clear();
  CHECK_THROWS_AS(validate_meshing(1.0, sc), std::invalid_argument);
}

}  // namespace
}  // namespace snls
