#ifndef SNLS_CONVERGENCE_HPP
#define SNLS_CONVERGENCE_HPP

// Strong-error experiments for the midpoint scheme: refinement ladders with
// common-noise coupling against a dominating reference solve, log-log rate
// fits, resolution calibration against an accuracy target, and moment /
// time-regularity diagnostics of the discrete solution.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "coefficients.hpp"
#include "noise.hpp"
#include "parallel.hpp"
#include "rng.hpp"
#include "solver.hpp"
#include "spectral.hpp"

namespace snls {

// The combined axis refines space and time together (one ladder, both
// coordinates varying); its abscissa is the spatial one, with tau slaved
// to K by the ladder design.
enum class Axis { spatial, temporal, combined, epsilon };

inline const char* axis_name(Axis a) {
  switch (a) {
    case Axis::spatial: return "spatial";
    case Axis::temporal: return "temporal";
    case Axis::combined: return "combined";
    case Axis::epsilon: return "epsilon";
  }
  throw std::logic_error("axis_name: bad enum value");
}

inline Axis axis_from_name(const std::string& s) {
  if (s == "spatial") return Axis::spatial;
  if (s == "temporal") return Axis::temporal;
  if (s == "combined") return Axis::combined;
  if (s == "epsilon") return Axis::epsilon;
  throw std::invalid_argument("axis_from_name: unknown axis '" + s + "'");
}

// One resolution on the refinement ladder.
struct LadderPoint {
  int K = 0;  // spectral cutoff of the coarse solve
  int M = 1;  // number of time steps of the coarse solve
};

// Full description of one experiment. The plan is the unit of
// reproducibility: equal plans produce bitwise equal tables, for any
// thread count.
struct ExperimentPlan {
  std::string name = "experiment";
  Axis axis = Axis::spatial;
  CoefficientSet coeffs;
  double noise_r = 1.5;             // power-family decay, unused if table set
  std::vector<double> noise_table;  // explicit q_0..q_K on the reference grid
  std::vector<double> eps_list{1.0};
  std::vector<LadderPoint> ladder;
  int K_ref = 0;
  int M_ref = 1;
  double T = 1.0;
  int paths = 2;
  std::uint64_t seed = 0;
  double p_moment = 2.0;   // moment order p of the strong error
  double target_mu = 1.0;  // Sobolev index the experiment reports against
  bool sup_error = false;  // per-path sup over the coarse grid, not only at T
  double expected_rate = std::numeric_limits<double>::quiet_NaN();
  double rate_tol = std::numeric_limits<double>::quiet_NaN();
  SpectralField u0{FourierGrid(0)};

  // moment-diagnostic extras, ignored by strong_error
  int snapshots = 8;             // curve samples between 0 and T inclusive
  double holder_eps = 0.0;       // eps at which pair separations are sampled
  int holder_t0 = 0;             // base step of the separation pairs
  std::vector<int> holder_seps;  // separations, in coarse steps

  FourierGrid ref_grid() const { return FourierGrid(K_ref); }

  NoiseSpec noise() const {
    if (!noise_table.empty()) return NoiseSpec::table(ref_grid(), noise_table);
    return NoiseSpec::power(ref_grid(), noise_r);
  }

  SolverConfig config(double eps, const LadderPoint& pt) const {
    SolverConfig c;
    c.eps = eps;
    c.T = T;
    c.M = pt.M;
    c.K_cut = pt.K;
    c.seed = seed;
    c.p_moment = p_moment;
    return c;
  }

  SolverConfig ref_config(double eps) const {
    return config(eps, LadderPoint{K_ref, M_ref});
  }
};

// Rejects plans whose reference could not stand in for the exact solution.
// A refined spatial axis needs K_ref >= 4 K, a refined temporal axis needs
// M_ref >= 8 M, and M must divide M_ref so the increments couple. A ladder
// point equal to the reference in both axes is allowed; it measures an
// exact zero and is useful as a self-consistency probe.
inline void validate_plan(const ExperimentPlan& plan) {
  if (plan.ladder.empty())
    throw std::invalid_argument("validate_plan: empty ladder");
  if (plan.eps_list.empty())
    throw std::invalid_argument("validate_plan: empty eps list");
  for (double e : plan.eps_list)
    if (!(e > 0.0)) throw std::invalid_argument("validate_plan: eps <= 0");
  if (plan.paths < 2)
    throw std::invalid_argument("validate_plan: need at least two paths");
  if (plan.K_ref < 0) throw std::invalid_argument("validate_plan: K_ref < 0");
  if (plan.M_ref < 1) throw std::invalid_argument("validate_plan: M_ref < 1");
  if (!(plan.T > 0.0)) throw std::invalid_argument("validate_plan: T <= 0");
  if (plan.u0.grid.K > plan.K_ref)
    throw std::invalid_argument(
        "validate_plan: u0 carries modes beyond the reference grid");
  (void)plan.noise();  // table length and positivity checks

  for (const LadderPoint& pt : plan.ladder) {
    if (pt.K < 0 || pt.K > plan.K_ref)
      throw std::invalid_argument("validate_plan: ladder K outside [0, K_ref]");
    if (pt.M < 1 || pt.M > plan.M_ref)
      throw std::invalid_argument("validate_plan: ladder M outside [1, M_ref]");
    if (plan.M_ref % pt.M != 0)
      throw std::invalid_argument(
          "validate_plan: M_ref must be a multiple of every ladder M");
    const bool k_refined = plan.K_ref > pt.K;
    const bool m_refined = plan.M_ref > pt.M;
    if (!k_refined && !m_refined) continue;  // self-comparison point
    if (k_refined && plan.K_ref < 4 * pt.K)
      throw std::invalid_argument(
          "validate_plan: refined spatial axis needs K_ref >= 4 K");
    if (m_refined && plan.M_ref < 8 * pt.M)
      throw std::invalid_argument(
          "validate_plan: refined temporal axis needs M_ref >= 8 M");
  }

  for (double eps : plan.eps_list) {
    plan.ref_config(eps).validate(plan.coeffs);
    for (const LadderPoint& pt : plan.ladder)
      plan.config(eps, pt).validate(plan.coeffs);
  }
}

struct ErrorRow {
  double eps = 0.0;
  int K = 0;
  int M = 0;
  double e_hat = 0.0;  // (mean of err^p)^(1/p) over paths
  double se = 0.0;     // delta-method standard error of e_hat
  int paths = 0;
};

struct ErrorTable {
  std::vector<ErrorRow> rows;
  double T = 1.0;
  double p = 2.0;
};

namespace detail {

inline double pow_p(double x, double p) {
  return p == 2.0 ? x * x : std::pow(x, p);
}

// Mean and delta-method standard error of (E X^p)^(1/p) from per-path
// samples of X >= 0. Reduction order is the slot order, so the result is
// independent of how the samples were produced.
inline void reduce_moment(const double* x, std::size_t n, double p,
                          double* value, double* se) {
  KahanSum sum;
  for (std::size_t i = 0; i < n; ++i) sum.add(pow_p(x[i], p));
  const double mean = sum.value() / static_cast<double>(n);
  if (!(mean > 0.0)) {
    *value = 0.0;
    *se = 0.0;
    return;
  }
  KahanSum ss;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = pow_p(x[i], p) - mean;
    ss.add(d * d);
  }
  const double sd = std::sqrt(ss.value() / static_cast<double>(n - 1));
  *value = std::pow(mean, 1.0 / p);
  *se = (1.0 / p) * std::pow(mean, 1.0 / p - 1.0) * sd /
        std::sqrt(static_cast<double>(n));
}

}  // namespace detail

// Monte Carlo strong error of every ladder point against the reference
// solve, coupled through one noise path per sample. All eps values share
// the same paths. Rows are ordered eps-major, ladder-minor. With
// plan.sup_error the per-path error is the maximum over the coarse time
// grid rather than the terminal value.
inline ErrorTable strong_error(const ExperimentPlan& plan,
                               unsigned threads = 1) {
  validate_plan(plan);
  const NoiseSpec spec = plan.noise();
  const std::size_t ne = plan.eps_list.size();
  const std::size_t nq = plan.ladder.size();
  const std::size_t P = static_cast<std::size_t>(plan.paths);

  // Images of every coarse step on the reference lattice; terminal-only
  // runs leave this empty and integrate snapshots just the last state.
  std::vector<int> ref_snaps;
  if (plan.sup_error) {
    for (const LadderPoint& pt : plan.ladder) {
      const int R = plan.M_ref / pt.M;
      for (int m = 0; m <= pt.M; ++m) ref_snaps.push_back(m * R);
    }
    std::sort(ref_snaps.begin(), ref_snaps.end());
    ref_snaps.erase(std::unique(ref_snaps.begin(), ref_snaps.end()),
                    ref_snaps.end());
  }

  // Refinement coupling spot check on the first path before spending time.
  {
    const NoisePath probe = sample_path(
        spec,
        derive_key(plan.seed,
                   static_cast<std::uint64_t>(StreamPurpose::noise_path), 0),
        plan.M_ref, plan.T);
    for (const LadderPoint& pt : plan.ladder) {
      if (!coupling_consistent(probe, 0, plan.M_ref / pt.M, pt.K))
        throw std::logic_error(
            "strong_error: coarse and fine increments fail to telescope");
    }
  }

  std::vector<double> err(ne * nq * P, 0.0);
  parallel_for(P, threads, [&](std::size_t pi) {
    const NoisePath path = sample_path(
        spec,
        derive_key(plan.seed,
                   static_cast<std::uint64_t>(StreamPurpose::noise_path), pi),
        plan.M_ref, plan.T);
    for (std::size_t e = 0; e < ne; ++e) {
      const double eps = plan.eps_list[e];
      const Trajectory ref =
          integrate(fit_to_grid(plan.u0, spec.grid), path, 1,
                    plan.ref_config(eps), plan.coeffs, ref_snaps);
      for (std::size_t q = 0; q < nq; ++q) {
        const LadderPoint& pt = plan.ladder[q];
        const int R = plan.M_ref / pt.M;
        std::vector<int> coarse_snaps;
        if (plan.sup_error) {
          coarse_snaps.resize(static_cast<std::size_t>(pt.M) + 1);
          for (int m = 0; m <= pt.M; ++m)
            coarse_snaps[static_cast<std::size_t>(m)] = m;
        }
        Trajectory traj =
            integrate(fit_to_grid(plan.u0, FourierGrid(pt.K)), path, R,
                      plan.config(eps, pt), plan.coeffs, coarse_snaps);
        if (!plan.sup_error) {
          const SpectralField diff =
              embedded(traj.states.back(), spec.grid) - ref.states.back();
          err[(e * nq + q) * P + pi] = l2_norm(diff);
        } else {
          double worst = 0.0;
          for (int m = 0; m <= pt.M; ++m) {
            const auto it = std::lower_bound(ref_snaps.begin(),
                                             ref_snaps.end(), m * R);
            const std::size_t ri =
                static_cast<std::size_t>(it - ref_snaps.begin());
            const double d = l2_norm(
                embedded(traj.states[static_cast<std::size_t>(m)],
                         spec.grid) -
                ref.states[ri]);
            if (d > worst) worst = d;
          }
          err[(e * nq + q) * P + pi] = worst;
        }
      }
    }
  });

  ErrorTable table;
  table.T = plan.T;
  table.p = plan.p_moment;
  table.rows.reserve(ne * nq);
  for (std::size_t e = 0; e < ne; ++e) {
    for (std::size_t q = 0; q < nq; ++q) {
      ErrorRow row;
      row.eps = plan.eps_list[e];
      row.K = plan.ladder[q].K;
      row.M = plan.ladder[q].M;
      row.paths = plan.paths;
      detail::reduce_moment(&err[(e * nq + q) * P], P, plan.p_moment,
                            &row.e_hat, &row.se);
      table.rows.push_back(row);
    }
  }
  return table;
}

struct ConvergenceReport {
  Axis axis = Axis::spatial;
  double slope = 0.0;
  double intercept = 0.0;
  double se_slope = std::numeric_limits<double>::quiet_NaN();
  int points_used = 0;
  int points_excluded = 0;
  double expected_rate = std::numeric_limits<double>::quiet_NaN();
  double rate_tol = std::numeric_limits<double>::quiet_NaN();
  bool pass = true;
  std::string note;
};

namespace detail {

struct OlsFit {
  double slope = 0.0;
  double intercept = 0.0;
  double se_slope = std::numeric_limits<double>::quiet_NaN();
};

inline OlsFit ols(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  if (n < 2) throw std::invalid_argument("ols: need at least two points");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0))
    throw std::invalid_argument("ols: abscissae are all equal");
  OlsFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  if (n > 2) {
    double rss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = y[i] - (f.intercept + f.slope * x[i]);
      rss += r * r;
    }
    f.se_slope = std::sqrt(rss / (static_cast<double>(n - 2) * sxx));
  }
  return f;
}

inline ConvergenceReport loglog_report(Axis axis, std::vector<double> xs,
                                       std::vector<double> ys, int excluded,
                                       double expected, double tol,
                                       std::string note) {
  for (double& v : xs) v = std::log(v);
  for (double& v : ys) v = std::log(v);
  const OlsFit fit = ols(xs, ys);
  ConvergenceReport rep;
  rep.axis = axis;
  rep.slope = fit.slope;
  rep.intercept = fit.intercept;
  rep.se_slope = fit.se_slope;
  rep.points_used = static_cast<int>(xs.size());
  rep.points_excluded = excluded;
  rep.expected_rate = expected;
  rep.rate_tol = tol;
  rep.pass = !(std::isfinite(expected) && std::isfinite(tol)) ||
             std::abs(fit.slope - expected) <= tol;
  rep.note = std::move(note);
  return rep;
}

}  // namespace detail

// Abscissa of a row on the requested axis. The spatial variable is the
// dimension count N = 2K + 1 of the Galerkin space, the temporal one is
// the step tau = T / M.
inline double axis_value(Axis axis, const ErrorRow& row, double T) {
  switch (axis) {
    case Axis::spatial:
    case Axis::combined: return 2.0 * static_cast<double>(row.K) + 1.0;
    case Axis::temporal: return T / static_cast<double>(row.M);
    case Axis::epsilon: return row.eps;
  }
  throw std::logic_error("axis_value: bad enum value");
}

// Least-squares slope of log e_hat against the log abscissa. Rows with a
// vanishing error are excluded (their log is undefined; they arise from
// self-comparison points). Off-axis coordinates must be constant across
// the included rows or the fit would mix ladders.
inline ConvergenceReport fit_rate(
    const ErrorTable& table, Axis axis,
    double expected = std::numeric_limits<double>::quiet_NaN(),
    double tol = std::numeric_limits<double>::quiet_NaN()) {
  std::vector<double> xs, ys;
  int excluded = 0;
  bool have_first = false;
  ErrorRow first;
  for (const ErrorRow& row : table.rows) {
    if (!(row.e_hat > 0.0)) {
      ++excluded;
      continue;
    }
    if (!have_first) {
      first = row;
      have_first = true;
    }
    const bool same_eps = row.eps == first.eps;
    const bool same_K = row.K == first.K;
    const bool same_M = row.M == first.M;
    bool ok = false;
    switch (axis) {
      case Axis::spatial: ok = same_eps && same_M; break;
      case Axis::temporal: ok = same_eps && same_K; break;
      case Axis::combined: ok = same_eps; break;
      case Axis::epsilon: ok = same_K && same_M; break;
    }
    if (!ok)
      throw std::invalid_argument(
          "fit_rate: off-axis coordinates vary across rows");
    xs.push_back(axis_value(axis, row, table.T));
    ys.push_back(row.e_hat);
  }
  if (xs.size() < 3)
    throw std::invalid_argument(
        "fit_rate: need at least three rows with nonzero error");
  std::string note;
  if (excluded > 0)
    note = std::to_string(excluded) + " zero-error row(s) excluded";
  return detail::loglog_report(axis, std::move(xs), std::move(ys), excluded,
                               expected, tol, std::move(note));
}

// --- resolution calibration -------------------------------------------------

// Setting for picking the coarsest resolution that meets an accuracy
// target delta under the coupled meshing tau ~ K^(-2 mu). The error model
// e(K)^2 = C K^(-2 mu) / eps is calibrated at one anchor resolution; the
// model captures the regime where the truncated noise tail dominates, so
// anchor and candidates should live in that regime.
struct MeshingScenario {
  CoefficientSet coeffs;
  double eps = 0.5;
  double mu = 3.0;       // smoothness exponent driving the meshing
  double noise_r = 3.5;  // power-family decay of the driving noise
  double T = 1.0;
  std::vector<int> candidates;  // ascending spectral cutoffs to choose from
  int anchor_K = 0;             // 0 means candidates.front()
  int paths_anchor = 64;
  int paths_main = 64;
  std::uint64_t seed = 0;
  double p_moment = 2.0;
  SpectralField u0{FourierGrid(0)};

  // Step count of the coupled meshing at cutoff K: tau = T / M ~ K^(-2 mu).
  int steps_for(int K) const {
    const double raw = T * std::pow(static_cast<double>(K), 2.0 * mu);
    if (raw > 2.0e9)
      throw std::invalid_argument("MeshingScenario: step count overflows");
    return static_cast<int>(std::max(1LL, std::llround(raw)));
  }
};

struct MeshingReport {
  double delta = 0.0;
  double anchor_e_hat = 0.0;
  double C_fit = 0.0;
  std::vector<int> candidates;
  std::vector<double> predicted;  // model error per candidate
  bool feasible = false;
  int selected_K = -1;
  int M_selected = 0;
  double tau_selected = 0.0;
  int required_K = 0;  // model-implied cutoff when no candidate is feasible
  double e_hat = std::numeric_limits<double>::quiet_NaN();
  double se = std::numeric_limits<double>::quiet_NaN();
  bool pass = false;
  std::string note;
};

namespace detail {

inline ExperimentPlan meshing_point_plan(const MeshingScenario& sc, int K,
                                         int paths, std::uint64_t seed) {
  ExperimentPlan plan;
  plan.name = "meshing";
  plan.axis = Axis::spatial;
  plan.coeffs = sc.coeffs;
  plan.noise_r = sc.noise_r;
  plan.eps_list = {sc.eps};
  const int M = sc.steps_for(K);
  plan.ladder = {LadderPoint{K, M}};
  plan.K_ref = 4 * K;
  plan.M_ref = 8 * M;
  plan.T = sc.T;
  plan.paths = paths;
  plan.seed = seed;
  plan.p_moment = sc.p_moment;
  plan.target_mu = sc.mu;
  plan.u0 = sc.u0;
  return plan;
}

}  // namespace detail

// Calibrates the error model at the anchor, predicts every candidate,
// selects the smallest candidate whose prediction meets delta, then runs
// the selected resolution and verifies the achieved error against 2 delta
// (factor two of slack for the calibration transfer). delta = infinity
// admits every candidate and selects the smallest.
inline void validate_meshing(double delta, const MeshingScenario& sc) {
  if (!(delta > 0.0))
    throw std::invalid_argument("meshing_check: delta must be positive");
  if (sc.candidates.empty())
    throw std::invalid_argument("meshing_check: no candidate resolutions");
  for (std::size_t i = 0; i < sc.candidates.size(); ++i) {
    if (sc.candidates[i] < 1)
      throw std::invalid_argument("meshing_check: candidate K < 1");
    if (i > 0 && sc.candidates[i] <= sc.candidates[i - 1])
      throw std::invalid_argument("meshing_check: candidates must ascend");
  }
  if (!(sc.mu > 0.0)) throw std::invalid_argument("meshing_check: mu <= 0");
  if (!(sc.eps > 0.0)) throw std::invalid_argument("meshing_check: eps <= 0");
  if (sc.anchor_K < 0)
    throw std::invalid_argument("meshing_check: anchor_K < 0");
  // Every resolution the check might run must itself be a valid plan;
  // this also catches step-count overflow and contraction-gate violations
  // before any path is sampled.
  const int K0 = sc.anchor_K > 0 ? sc.anchor_K : sc.candidates.front();
  validate_plan(detail::meshing_point_plan(sc, K0, sc.paths_anchor, 0));
  for (int K : sc.candidates)
    validate_plan(detail::meshing_point_plan(sc, K, sc.paths_main, 0));
}

inline MeshingReport meshing_check(double delta, const MeshingScenario& sc,
                                   unsigned threads = 1) {
  validate_meshing(delta, sc);

  MeshingReport rep;
  rep.delta = delta;
  rep.candidates = sc.candidates;

  const int K0 = sc.anchor_K > 0 ? sc.anchor_K : sc.candidates.front();
  const std::uint64_t anchor_seed = derive_key(
      sc.seed, static_cast<std::uint64_t>(StreamPurpose::validation), 0);
  const ErrorTable anchor = strong_error(
      detail::meshing_point_plan(sc, K0, sc.paths_anchor, anchor_seed),
      threads);
  rep.anchor_e_hat = anchor.rows.front().e_hat;
  if (!(rep.anchor_e_hat > 0.0))
    throw std::logic_error("meshing_check: anchor error vanished");
  rep.C_fit = rep.anchor_e_hat * rep.anchor_e_hat * sc.eps *
              std::pow(static_cast<double>(K0), 2.0 * sc.mu);

  rep.predicted.reserve(sc.candidates.size());
  for (int K : sc.candidates) {
    const double pred = std::sqrt(
        rep.C_fit / (sc.eps * std::pow(static_cast<double>(K), 2.0 * sc.mu)));
    rep.predicted.push_back(pred);
    if (!rep.feasible && pred <= delta) {
      rep.feasible = true;
      rep.selected_K = K;
    }
  }

  if (!rep.feasible) {
    const double needed =
        std::ceil(std::pow(rep.C_fit / (sc.eps * delta * delta), 0.5 / sc.mu));
    rep.required_K = needed < 2.0e9 ? static_cast<int>(needed)
                                    : std::numeric_limits<int>::max();
    rep.note = "no candidate meets delta; model requires K >= " +
               std::to_string(rep.required_K);
    return rep;
  }

  const std::uint64_t main_seed = derive_key(
      sc.seed, static_cast<std::uint64_t>(StreamPurpose::validation), 1);
  const ErrorTable main_run = strong_error(
      detail::meshing_point_plan(sc, rep.selected_K, sc.paths_main, main_seed),
      threads);
  rep.M_selected = sc.steps_for(rep.selected_K);
  rep.tau_selected = sc.T / static_cast<double>(rep.M_selected);
  rep.e_hat = main_run.rows.front().e_hat;
  rep.se = main_run.rows.front().se;
  rep.pass = rep.e_hat <= 2.0 * delta;
  rep.note = rep.pass ? "achieved error within 2 delta"
                      : "achieved error exceeds 2 delta";
  return rep;
}

// --- moment and time-regularity diagnostics ---------------------------------

struct MomentRow {
  std::string kind;  // "curve", "level", "level_C", "holder"
  double eps = 0.0;
  double t = 0.0;  // time of the sample; separation for holder rows
  double value = 0.0;
  double se = 0.0;
};

struct MomentTable {
  std::vector<MomentRow> rows;
  double T = 1.0;
  double mu = 0.0;
  double p = 2.0;
};

// Tracks E || u(t) ||_mu^p along the discrete solution on a single
// resolution, without any reference solve. Emits:
//   curve    m_hat(t) = (E||u(t)||_mu^p)^(1/p) at the sampled steps
//   level    sup of the curve over the sampled steps
//   level_C  smallest C with level^2 <= e^(-2 alpha t/eps)||u0||_mu^2
//            + C^2/(alpha eps), the constant of the stationary-response
//            bound (p = 2 only)
//   holder   H(s) = sqrt(E||u(t0+s) - u(t0)||_0^2) per separation s, at
//            eps = holder_eps
// The plan must carry exactly one ladder point coinciding with the
// reference resolution; the noise lives on that same grid.
inline void validate_moment_plan(const ExperimentPlan& plan) {
  validate_plan(plan);
  if (plan.ladder.size() != 1)
    throw std::invalid_argument(
        "moment_diagnostic: need exactly one ladder point");
  const LadderPoint pt = plan.ladder.front();
  if (pt.K != plan.K_ref || pt.M != plan.M_ref)
    throw std::invalid_argument(
        "moment_diagnostic: ladder point must coincide with the reference");
  if (plan.snapshots < 1)
    throw std::invalid_argument("moment_diagnostic: snapshots < 1");
  if (!plan.holder_seps.empty()) {
    bool found = false;
    for (double e : plan.eps_list) found = found || e == plan.holder_eps;
    if (!found)
      throw std::invalid_argument(
          "moment_diagnostic: holder_eps is not in the eps list");
    if (plan.holder_t0 < 0 || plan.holder_t0 > pt.M)
      throw std::invalid_argument("moment_diagnostic: holder_t0 out of range");
    for (int s : plan.holder_seps)
      if (s < 1 || plan.holder_t0 + s > pt.M)
        throw std::invalid_argument(
            "moment_diagnostic: holder separation out of range");
  }
}

inline MomentTable moment_diagnostic(const ExperimentPlan& plan,
                                     unsigned threads = 1) {
  validate_moment_plan(plan);
  const LadderPoint pt = plan.ladder.front();

  // Sample steps of the moment curve, endpoints included.
  std::vector<int> curve_steps;
  for (int i = 0; i <= plan.snapshots; ++i) {
    const int s = static_cast<int>(std::llround(
        static_cast<double>(i) * pt.M / static_cast<double>(plan.snapshots)));
    if (curve_steps.empty() || curve_steps.back() != s) curve_steps.push_back(s);
  }

  const bool holder_active = !plan.holder_seps.empty();
  std::size_t holder_e = plan.eps_list.size();
  if (holder_active) {
    for (std::size_t e = 0; e < plan.eps_list.size(); ++e)
      if (plan.eps_list[e] == plan.holder_eps) holder_e = e;
  }

  // Snapshot schedule per eps index, plus positions of the steps we read.
  std::vector<std::vector<int>> snaps(plan.eps_list.size());
  for (std::size_t e = 0; e < plan.eps_list.size(); ++e) {
    snaps[e] = curve_steps;
    if (holder_active && e == holder_e) {
      snaps[e].push_back(plan.holder_t0);
      for (int s : plan.holder_seps) snaps[e].push_back(plan.holder_t0 + s);
      std::sort(snaps[e].begin(), snaps[e].end());
      snaps[e].erase(std::unique(snaps[e].begin(), snaps[e].end()),
                     snaps[e].end());
    }
  }
  auto pos_of = [](const std::vector<int>& v, int step) {
    return static_cast<std::size_t>(
        std::lower_bound(v.begin(), v.end(), step) - v.begin());
  };

  const NoiseSpec spec = plan.noise();
  const SobolevIndex mu(plan.target_mu);
  const std::size_t ne = plan.eps_list.size();
  const std::size_t nc = curve_steps.size();
  const std::size_t nh = plan.holder_seps.size();
  const std::size_t P = static_cast<std::size_t>(plan.paths);

  // norm_p[(e * nc + c) * P + path], holder_d2[h * P + path]
  std::vector<double> norm_p(ne * nc * P, 0.0);
  std::vector<double> holder_d2(nh * P, 0.0);

  parallel_for(P, threads, [&](std::size_t pi) {
    const NoisePath path = sample_path(
        spec,
        derive_key(plan.seed,
                   static_cast<std::uint64_t>(StreamPurpose::noise_path), pi),
        plan.M_ref, plan.T);
    for (std::size_t e = 0; e < ne; ++e) {
      const Trajectory traj =
          integrate(fit_to_grid(plan.u0, spec.grid), path, 1,
                    plan.config(plan.eps_list[e], pt), plan.coeffs, snaps[e]);
      for (std::size_t c = 0; c < nc; ++c) {
        const SpectralField& u = traj.states[pos_of(snaps[e], curve_steps[c])];
        norm_p[(e * nc + c) * P + pi] = sobolev_norm(u, mu);
      }
      if (holder_active && e == holder_e) {
        const SpectralField& base =
            traj.states[pos_of(snaps[e], plan.holder_t0)];
        for (std::size_t h = 0; h < nh; ++h) {
          const SpectralField& shifted = traj.states[pos_of(
              snaps[e], plan.holder_t0 + plan.holder_seps[h])];
          const double d = l2_norm(shifted - base);
          holder_d2[h * P + pi] = d * d;
        }
      }
    }
  });

  MomentTable table;
  table.T = plan.T;
  table.mu = plan.target_mu;
  table.p = plan.p_moment;
  const double tau = plan.T / static_cast<double>(pt.M);

  for (std::size_t e = 0; e < ne; ++e) {
    const double eps = plan.eps_list[e];
    std::size_t best = 0;
    double best_value = -1.0, best_se = 0.0;
    for (std::size_t c = 0; c < nc; ++c) {
      MomentRow row;
      row.kind = "curve";
      row.eps = eps;
      row.t = static_cast<double>(curve_steps[c]) * tau;
      detail::reduce_moment(&norm_p[(e * nc + c) * P], P, plan.p_moment,
                            &row.value, &row.se);
      if (row.value > best_value) {
        best_value = row.value;
        best_se = row.se;
        best = c;
      }
      table.rows.push_back(row);
    }
    MomentRow level;
    level.kind = "level";
    level.eps = eps;
    level.t = static_cast<double>(curve_steps[best]) * tau;
    level.value = best_value;
    level.se = best_se;
    table.rows.push_back(level);

    if (plan.p_moment == 2.0) {
      const double alpha = plan.coeffs.alpha;
      const double u0n =
          sobolev_norm(fit_to_grid(plan.u0, spec.grid), mu);
      const double floor = std::exp(-alpha * level.t / eps) * u0n;
      const double c2 =
          (best_value * best_value - floor * floor) * alpha * eps;
      MomentRow cons;
      cons.kind = "level_C";
      cons.eps = eps;
      cons.t = level.t;
      cons.value = c2 > 0.0 ? std::sqrt(c2) : 0.0;
      cons.se = cons.value > 0.0
                    ? (best_value * alpha * eps / cons.value) * best_se
                    : 0.0;
      table.rows.push_back(cons);
    }
  }

  if (holder_active) {
    for (std::size_t h = 0; h < nh; ++h) {
      MomentRow row;
      row.kind = "holder";
      row.eps = plan.holder_eps;
      row.t = static_cast<double>(plan.holder_seps[h]) * tau;
      detail::reduce_moment(&holder_d2[h * P], P, 1.0, &row.value, &row.se);
      // reduce_moment at p = 1 returns the mean of the squared increments;
      // fold in the square root by the delta method.
      if (row.value > 0.0) {
        row.se = 0.5 / std::sqrt(row.value) * row.se;
        row.value = std::sqrt(row.value);
      }
      table.rows.push_back(row);
    }
  }
  return table;
}

// Slope of log(level) against log(eps) across the moment table.
inline ConvergenceReport fit_moment_level(
    const MomentTable& table,
    double expected = std::numeric_limits<double>::quiet_NaN(),
    double tol = std::numeric_limits<double>::quiet_NaN()) {
  std::vector<double> xs, ys;
  int excluded = 0;
  for (const MomentRow& row : table.rows) {
    if (row.kind != "level") continue;
    if (!(row.value > 0.0)) {
      ++excluded;
      continue;
    }
    xs.push_back(row.eps);
    ys.push_back(row.value);
  }
  if (xs.size() < 3)
    throw std::invalid_argument("fit_moment_level: need three level rows");
  return detail::loglog_report(Axis::epsilon, std::move(xs), std::move(ys),
                               excluded, expected, tol, "moment level fit");
}

// Slope of log H(s) against log(s): the empirical time-Holder exponent.
inline ConvergenceReport fit_holder(
    const MomentTable& table,
    double expected = std::numeric_limits<double>::quiet_NaN(),
    double tol = std::numeric_limits<double>::quiet_NaN()) {
  std::vector<double> xs, ys;
  int excluded = 0;
  for (const MomentRow& row : table.rows) {
    if (row.kind != "holder") continue;
    if (!(row.value > 0.0)) {
      ++excluded;
      continue;
    }
    xs.push_back(row.t);
    ys.push_back(row.value);
  }
  if (xs.size() < 3)
    throw std::invalid_argument("fit_holder: need three holder rows");
  return detail::loglog_report(Axis::temporal, std::move(xs), std::move(ys),
                               excluded, expected, tol,
                               "time regularity fit");
}

// --- physical observables ---------------------------------------------------

struct Observables {
  double mass = 0.0;            // integral of |u|^2 over the torus
  std::vector<double> density;  // |u(x_j)|^2 at the collocation points
  std::vector<double> current;  // eps Im(conj(u) du/dx) at the points
};

inline Observables observables(const SpectralField& u, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("observables: eps <= 0");
  Observables o;
  for (const cplx& c : u.a) o.mass += std::norm(c);

  SpectralField du(u.grid);
  for (int i = 0; i < u.size(); ++i) {
    const double k = static_cast<double>(u.grid.mode_at(i));
    du.a[static_cast<std::size_t>(i)] =
        cplx{0.0, kTwoPi * k} * u.a[static_cast<std::size_t>(i)];
  }
  const std::vector<cplx> uv = to_grid(u);
  const std::vector<cplx> dv = to_grid(du);
  o.density.resize(uv.size());
  o.current.resize(uv.size());
  for (std::size_t j = 0; j < uv.size(); ++j) {
    o.density[j] = std::norm(uv[j]);
    o.current[j] = eps * std::imag(std::conj(uv[j]) * dv[j]);
  }
  return o;
}

}  // namespace snls

#endif  // SNLS_CONVERGENCE_HPP
