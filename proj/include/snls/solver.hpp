#ifndef SNLS_SOLVER_HPP
#define SNLS_SOLVER_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "coefficients.hpp"
#include "noise.hpp"
#include "semigroup.hpp"
#include "spectral.hpp"

namespace snls {

// Implicit midpoint / spectral Galerkin step for
//   i eps du + (eps^2/2 Lap u + F(u)) dt = G(u) dW
// in the rearranged one-step form
//   u_{m+1} = S_tau u_m + i tau/eps T_tau P_N F(u_{m+1/2})
//           - i/eps     T_tau P_N G(u_m) dW_m,
// u_{m+1/2} = (u_m + u_{m+1})/2, S_tau / T_tau the Cayley and resolvent
// factors. The diffusion argument is the explicit u_m. The nonlinear
// midpoint is resolved by Picard iteration; linear drift short-circuits to
// an exact per-mode solve.

struct SolverConfig {
  double eps = 1.0;
  double T = 1.0;
  int M = 1;
  int K_cut = 0;
  double fp_tol = 1e-12;
  int fp_max_iter = 50;
  std::uint64_t seed = 0;   // noise seed bookkeeping for reports
  double p_moment = 2.0;    // moment order for diagnostics

  double tau() const { return T / static_cast<double>(M); }

  void validate(const CoefficientSet& cs) const {
    if (!(eps > 0.0)) throw std::invalid_argument("SolverConfig: eps <= 0");
    if (M < 1) throw std::invalid_argument("SolverConfig: M < 1");
    if (K_cut < 0) throw std::invalid_argument("SolverConfig: K_cut < 0");
    if (!(tau() > 0.0 && tau() < 1.0))
      throw std::invalid_argument("SolverConfig: tau = T/M must lie in (0,1)");
    if (!(p_moment >= 2.0))
      throw std::invalid_argument("SolverConfig: p_moment < 2");
    if (!cs.is_linear_drift()) {
      // Contraction gate for the Picard solve: factor tau L1 / (2 eps) must
      // stay below 1/2 with margin, i.e. tau < eps * min(1, 1/L1).
      const double gate = eps * std::min(1.0, (cs.L1 > 0.0) ? 1.0 / cs.L1 : 1.0);
      if (!(tau() < gate))
        throw std::invalid_argument(
            "SolverConfig: contraction gate violated, need tau < eps*min(1,1/L1) = " +
            std::to_string(gate));
    }
  }
};

struct StepFailure : std::runtime_error {
  int step = -1;
  int iterations = 0;
  double residual = 0.0;
  StepFailure(const std::string& msg, int iters, double res)
      : std::runtime_error(msg), iterations(iters), residual(res) {}
};

struct FixedPointResult {
  SpectralField x;
  int iterations = 0;
  double residual = 0.0;
};

// Picard iteration x <- map(x) until ||map(x) - x|| <= tol (1 + ||map(x)||).
template <class Map>
FixedPointResult fixed_point_solve(Map&& map, const SpectralField& guess,
                                   double fp_tol, int fp_max_iter) {
  SpectralField x = guess;
  for (int it = 1; it <= fp_max_iter; ++it) {
    SpectralField y = map(x);
    const double res = l2_norm(y - x);
    if (res <= fp_tol * (1.0 + l2_norm(y)))
      return FixedPointResult{std::move(y), it, res};
    x = std::move(y);
  }
  const double res = l2_norm(map(x) - x);
  throw StepFailure("fixed_point_solve: no convergence within " +
                        std::to_string(fp_max_iter) + " iterations, residual " +
                        std::to_string(res),
                    fp_max_iter, res);
}

struct Trajectory {
  std::vector<double> times;
  std::vector<SpectralField> states;
  std::vector<int> fp_iterations;  // one entry per time step taken
};

namespace detail {

// Per-mode factors of the linear-drift closed form. With
// z_k = tau (-i eps lambda_k / 2 - alpha / eps) the implicit relation
// collapses to u' = (1 + z/2)/(1 - z/2) u - (i/eps) (1 - z/2)^{-1} dW-hat;
// note the noise resolvent absorbs the drift term too.
struct LinearFactors {
  std::vector<cplx> prop;    // (1 + z/2)/(1 - z/2)
  std::vector<cplx> noise;   // -(i/eps) c_diff / (1 - z/2)
};

inline LinearFactors linear_factors(const FourierGrid& g,
                                    const SolverConfig& cfg,
                                    const CoefficientSet& cs) {
  LinearFactors f;
  f.prop.resize(static_cast<std::size_t>(g.size()));
  f.noise.resize(static_cast<std::size_t>(g.size()));
  const double tau = cfg.tau();
  const double dcoef = cs.is_constant_diffusion() ? cs.c : 1.0;
  for (int i = 0; i < g.size(); ++i) {
    const double lam = eigenvalue(g.mode_at(i));
    const cplx z{-tau * cs.alpha / cfg.eps, -0.5 * tau * cfg.eps * lam};
    const cplx denom = 1.0 - 0.5 * z;
    f.prop[static_cast<std::size_t>(i)] = (1.0 + 0.5 * z) / denom;
    f.noise[static_cast<std::size_t>(i)] =
        cplx{0.0, -dcoef / cfg.eps} / denom;
  }
  return f;
}

}  // namespace detail

// One midpoint step. u_m and dW live on the same truncated grid V_N with
// K = cfg.K_cut. stats, when given, receives the Picard iteration count.
inline SpectralField midpoint_step(const SpectralField& u_m,
                                   const SpectralField& dW,
                                   const SolverConfig& cfg,
                                   const CoefficientSet& cs,
                                   int* fp_iterations = nullptr) {
  if (u_m.grid.K != cfg.K_cut)
    throw std::invalid_argument("midpoint_step: field grid != K_cut");
  check_same_grid(u_m, dW, "midpoint_step");

  if (cs.is_linear_drift() && cs.is_constant_diffusion()) {
    const auto f = detail::linear_factors(u_m.grid, cfg, cs);
    SpectralField out = u_m;
    for (std::size_t i = 0; i < out.a.size(); ++i)
      out.a[i] = f.prop[i] * u_m.a[i] + f.noise[i] * dW.a[i];
    if (fp_iterations) *fp_iterations = 0;
    return out;
  }

  const double tau = cfg.tau();
  const CayleyParams cp(cfg.eps, tau, 1);

  // Explicit part: S_tau u_m - (i/eps) T_tau G(u_m) dW.
  const SpectralField gdw = apply_diffusion_increment(cs, u_m, dW);
  const SpectralField fixed =
      apply_cayley(u_m, cp) +
      cplx{0.0, -1.0 / cfg.eps} * apply_resolvent(gdw, cp);

  const cplx drift_scale{0.0, tau / cfg.eps};
  auto map = [&](const SpectralField& x) {
    const SpectralField mid = cplx{0.5, 0.0} * (u_m + x);
    return fixed + drift_scale * apply_resolvent(apply_drift(cs, mid), cp);
  };
  FixedPointResult r = fixed_point_solve(map, u_m, cfg.fp_tol, cfg.fp_max_iter);
  if (fp_iterations) *fp_iterations = r.iterations;
  return std::move(r.x);
}

// Integrate M steps consuming coarse increments of the given path at
// refinement R (tau = R tau_fine). Snapshots are recorded at the requested
// step indices; the terminal step M is always included.
inline Trajectory integrate(const SpectralField& u0, const NoisePath& path,
                            int R, const SolverConfig& cfg,
                            const CoefficientSet& cs,
                            std::vector<int> snapshot_steps = {}) {
  cfg.validate(cs);
  if (u0.grid.K != cfg.K_cut)
    throw std::invalid_argument("integrate: u0 grid != K_cut");
  if (R < 1 || cfg.M * R != path.M_fine)
    throw std::invalid_argument("integrate: M * R != path.M_fine");
  if (cfg.K_cut > path.spec.grid.K)
    throw std::invalid_argument("integrate: K_cut exceeds noise grid");
  if (cfg.T != path.T)
    throw std::invalid_argument("integrate: horizon differs from path");

  std::sort(snapshot_steps.begin(), snapshot_steps.end());
  snapshot_steps.erase(
      std::unique(snapshot_steps.begin(), snapshot_steps.end()),
      snapshot_steps.end());
  for (int s : snapshot_steps)
    if (s < 0 || s > cfg.M)
      throw std::invalid_argument("integrate: snapshot step out of range");
  if (snapshot_steps.empty() || snapshot_steps.back() != cfg.M)
    snapshot_steps.push_back(cfg.M);

  const double tau = cfg.tau();
  Trajectory traj;
  traj.fp_iterations.reserve(static_cast<std::size_t>(cfg.M));

  SpectralField u = u0;
  std::size_t next_snap = 0;
  auto maybe_snapshot = [&](int m) {
    while (next_snap < snapshot_steps.size() && snapshot_steps[next_snap] == m) {
      traj.times.push_back(static_cast<double>(m) * tau);
      traj.states.push_back(u);
      ++next_snap;
    }
  };
  maybe_snapshot(0);

  const bool fast = cs.is_linear_drift() && cs.is_constant_diffusion();
  detail::LinearFactors lf;
  if (fast) lf = detail::linear_factors(u.grid, cfg, cs);
  std::vector<cplx> dw(static_cast<std::size_t>(u.grid.size()));

  for (int m = 0; m < cfg.M; ++m) {
    if (fast) {
      std::fill(dw.begin(), dw.end(), cplx{});
      detail::accumulate_increment(path, m * R, R, cfg.K_cut, dw.data());
      for (std::size_t i = 0; i < u.a.size(); ++i)
        u.a[i] = lf.prop[i] * u.a[i] + lf.noise[i] * dw[i];
      traj.fp_iterations.push_back(0);
    } else {
      const SpectralField dW =
          coarse_increment_restricted(path, m, R, cfg.K_cut);
      int iters = 0;
      try {
        u = midpoint_step(u, dW, cfg, cs, &iters);
      } catch (StepFailure& f) {
        f.step = m;
        throw;
      }
      traj.fp_iterations.push_back(iters);
    }
    maybe_snapshot(m + 1);
  }
  return traj;
}

// Reference solve: the path's own fine lattice (R = 1), terminal state only.
// Margin checks against compared configurations live in the experiment
// planner, which sees both sides.
inline SpectralField reference_solve(const SpectralField& u0,
                                     const NoisePath& path,
                                     const SolverConfig& cfg_ref,
                                     const CoefficientSet& cs) {
  Trajectory t = integrate(u0, path, 1, cfg_ref, cs);
  return std::move(t.states.back());
}

}  // namespace snls

#endif  // SNLS_SOLVER_HPP
