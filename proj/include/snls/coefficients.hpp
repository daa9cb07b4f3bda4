#ifndef SNLS_COEFFICIENTS_HPP
#define SNLS_COEFFICIENTS_HPP

#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "noise.hpp"
#include "rng.hpp"
#include "spectral.hpp"

namespace snls {

// Drift F and diffusion G as Nemytskii operators with declared Lipschitz
// and growth constants. Only the built-in registry is supported; all
// members are globally Lipschitz (true cubic NLS is out of bounds):
//   drift:     linear F(u) = i alpha u | potential f(x,u) = V(x) u
//            | saturated f(x,u) = gamma u / (1 + |u|^2)
//   diffusion: constant g = c (c = 1 is G = Id) | saturated g(u) = 1/(1+|u|^2)
// Nemytskii products are evaluated on the collocation grid without
// dealiasing; grid refinement is the accuracy control.

enum class DriftKind { linear, potential, saturated };
enum class DiffusionKind { constant, saturated };

struct CoefficientSet {
  DriftKind drift = DriftKind::linear;
  double alpha = 0.0;        // linear: F(u) = i alpha u
  SpectralField potential;   // potential: V as a trigonometric polynomial
  double gamma = 0.0;        // saturated drift strength

  DiffusionKind diffusion = DiffusionKind::constant;
  double c = 1.0;            // constant diffusion multiplier

  double L1 = 0.0;           // declared drift Lipschitz constant
  double g_lip = 0.0;        // declared Lipschitz constant of the scalar g
  double mu_max = 3.0;       // largest mu the growth bounds are declared for

  bool is_linear_drift() const { return drift == DriftKind::linear; }
  bool is_additive() const {
    return diffusion == DiffusionKind::constant && c == 1.0;
  }
  bool is_constant_diffusion() const {
    return diffusion == DiffusionKind::constant;
  }

  static CoefficientSet linear_damped(double alpha) {
    if (!(alpha >= 0.0))
      throw std::invalid_argument("linear_damped: alpha < 0");
    CoefficientSet cs;
    cs.drift = DriftKind::linear;
    cs.alpha = alpha;
    cs.L1 = alpha;
    cs.diffusion = DiffusionKind::constant;
    cs.c = 1.0;
    return cs;
  }

  static CoefficientSet potential_drift(const SpectralField& V) {
    CoefficientSet cs;
    cs.drift = DriftKind::potential;
    cs.potential = V;
    // Nemytskii multiplication by a real V is Lipschitz with constant
    // sup |V|; bounded on the V grid by the coefficient l1 norm.
    double l1 = 0.0;
    for (const auto& a : V.a) l1 += std::abs(a);
    cs.L1 = l1;
    return cs;
  }

  static CoefficientSet saturated_drift(double gamma) {
    if (!(gamma >= 0.0))
      throw std::invalid_argument("saturated_drift: gamma < 0");
    CoefficientSet cs;
    cs.drift = DriftKind::saturated;
    cs.gamma = gamma;
    cs.L1 = 2.0 * gamma;  // |D(u/(1+|u|^2))| <= 2
    return cs;
  }

  CoefficientSet& with_constant_diffusion(double cc) {
    diffusion = DiffusionKind::constant;
    c = cc;
    g_lip = 0.0;
    return *this;
  }

  CoefficientSet& with_saturated_diffusion() {
    diffusion = DiffusionKind::saturated;
    // sup |d/du (1+|u|^2)^{-1}| = 3 sqrt(3) / 8, attained at |u| = 1/sqrt(3).
    g_lip = 0.64951905283832893507;
    return *this;
  }
};

// --- drift ------------------------------------------------------------------

inline SpectralField apply_drift(const CoefficientSet& cs,
                                 const SpectralField& u) {
  switch (cs.drift) {
    case DriftKind::linear: {
      // exact diagonal path, no transform roundoff
      return cplx{0.0, cs.alpha} * u;
    }
    case DriftKind::potential: {
      if (cs.potential.grid.K > u.grid.K)
        throw std::invalid_argument(
            "apply_drift: potential bandwidth exceeds field grid");
      const auto uv = to_grid(u);
      const auto vv = to_grid(embedded(cs.potential, u.grid));
      std::vector<cplx> prod(uv.size());
      for (std::size_t j = 0; j < uv.size(); ++j) prod[j] = vv[j] * uv[j];
      return from_grid(prod, u.grid);
    }
    case DriftKind::saturated: {
      const auto uv = to_grid(u);
      std::vector<cplx> fv(uv.size());
      for (std::size_t j = 0; j < uv.size(); ++j)
        fv[j] = cs.gamma * uv[j] / (1.0 + std::norm(uv[j]));
      return from_grid(fv, u.grid);
    }
  }
  throw std::logic_error("apply_drift: unreachable");
}

// --- diffusion --------------------------------------------------------------

inline SpectralField apply_diffusion_increment(const CoefficientSet& cs,
                                               const SpectralField& u,
                                               const SpectralField& dW) {
  if (u.grid != dW.grid)
    throw std::invalid_argument("apply_diffusion_increment: grid mismatch");
  switch (cs.diffusion) {
    case DiffusionKind::constant: {
      if (cs.c == 1.0) return dW;  // G = Id, exact
      return cplx{cs.c, 0.0} * dW;
    }
    case DiffusionKind::saturated: {
      const auto uv = to_grid(u);
      const auto wv = to_grid(dW);
      std::vector<cplx> gv(uv.size());
      for (std::size_t j = 0; j < uv.size(); ++j)
        gv[j] = wv[j] / (1.0 + std::norm(uv[j]));
      return from_grid(gv, u.grid);
    }
  }
  throw std::logic_error("apply_diffusion_increment: unreachable");
}

// Pointwise diffusion multiplier g(u) on the collocation grid, for reuse by
// validation (rows of the Hilbert-Schmidt sums).
inline std::vector<double> diffusion_multiplier(const CoefficientSet& cs,
                                                const std::vector<cplx>& uv) {
  std::vector<double> g(uv.size());
  switch (cs.diffusion) {
    case DiffusionKind::constant:
      for (std::size_t j = 0; j < uv.size(); ++j) g[j] = cs.c;
      break;
    case DiffusionKind::saturated:
      for (std::size_t j = 0; j < uv.size(); ++j)
        g[j] = 1.0 / (1.0 + std::norm(uv[j]));
      break;
  }
  return g;
}

// --- assumption validation --------------------------------------------------

// Declared diffusion constant against the configured noise: Lip(g) times
// the worst-case basis amplification sqrt(q_0 + 2 sum_{s>=1} q_s * 2)
// (the cos/sin functions have sup norm sqrt(2)); for G = c Id the constant
// is 0 for differences and |c| * HS norm for growth.
inline double declared_L2(const CoefficientSet& cs, const NoiseSpec& noise) {
  double amp2 = noise.q[0];
  for (std::size_t s = 1; s < noise.q.size(); ++s) amp2 += 4.0 * noise.q[s];
  return cs.g_lip * std::sqrt(amp2);
}

struct ValidationReport {
  bool pass = true;
  std::string message;
  double worst_drift_lip = 0.0;     // max ||F(u)-F(v)|| / ||u-v||
  double worst_drift_growth = 0.0;  // max ||F(z)||_mu / (1 + ||z||_mu)
  double worst_diff_lip = 0.0;      // max ||(G(u)-G(v))Q^{1/2}||_HS / ||u-v||
  double worst_diff_growth = 0.0;   // max ||G(z)Q^{1/2}||_{HS,mu} / (1+||z||_mu)
  double declared_l1 = 0.0;
  double declared_l2 = 0.0;
  int witness = -1;  // sample index of the worst violation, if any
};

namespace detail {

// mu-weighted Hilbert-Schmidt norm of (multiplier . ) Q^{1/2} on the grid:
// sqrt( sum_k q_k || m * g_k ||_mu^2 ), rows evaluated by collocation.
inline double hs_norm_of_multiplier(const std::vector<double>& m,
                                    const NoiseSpec& noise, double mu) {
  const FourierGrid& g = noise.grid;
  const int n = g.n();
  if (static_cast<int>(m.size()) != n)
    throw std::invalid_argument("hs_norm_of_multiplier: size mismatch");
  const auto roots = unit_roots(n);
  constexpr double sqrt2 = 1.4142135623730950488016887242097;
  double total = 0.0;
  std::vector<cplx> row(static_cast<std::size_t>(n));
  for (int s = 0; s <= g.K; ++s) {
    const double qs = noise.q[static_cast<std::size_t>(s)];
    if (qs == 0.0) continue;
    // basis values at x_j: g_0 = 1, sqrt(2) cos(2 pi s x_j), sqrt(2) sin(...)
    for (int trig = 0; trig < (s == 0 ? 1 : 2); ++trig) {
      for (int j = 0; j < n; ++j) {
        const cplx w = (*roots)[static_cast<std::size_t>(
            (static_cast<long>(s) * j) % n)];
        double basis;
        if (s == 0)
          basis = 1.0;
        else
          basis = sqrt2 * (trig == 0 ? w.real() : w.imag());
        row[static_cast<std::size_t>(j)] =
            m[static_cast<std::size_t>(j)] * basis;
      }
      const SpectralField rf = from_grid(row, g);
      const double nrm = sobolev_norm(rf, SobolevIndex(mu));
      total += qs * nrm * nrm;
    }
  }
  return std::sqrt(total);
}

}  // namespace detail

// Samples random field pairs and checks the declared Lipschitz and growth
// constants of F and G, the latter in the weighted Hilbert-Schmidt norm of
// the configured noise. Violations fail with the witnessing sample.
inline ValidationReport validate_assumption(const CoefficientSet& cs,
                                            const NoiseSpec& noise,
                                            SobolevIndex mu, int samples,
                                            const GaussianStream& stream) {
  if (!(mu.mu <= cs.mu_max))
    throw std::invalid_argument("validate_assumption: mu exceeds mu_max");
  ValidationReport rep;
  rep.declared_l1 = cs.L1;
  rep.declared_l2 = declared_L2(cs, noise);

  // G = Id needs the plain weighted HS norm finite at mu; a divergent power
  // tail can never satisfy the growth bound, so fail with that diagnostic.
  if (cs.is_constant_diffusion() && cs.c != 0.0) {
    const auto hs = weighted_hs_norm(noise, mu);
    if (!hs.tail_converges) {
      rep.pass = false;
      rep.message = "diffusion growth bound unsatisfiable: " + hs.note;
      return rep;
    }
    rep.declared_l2 = std::abs(cs.c) * hs.value;
  }

  const FourierGrid& g = noise.grid;
  const double draw_r = 0.5 * mu.mu + 0.75;  // keeps ||.||_mu finite in d=1
  const double tol = 1.0 + 1e-9;             // grid-quadrature slack

  for (int i = 0; i < samples; ++i) {
    const GaussianStream su(derive_key(stream.key, 2 * static_cast<std::uint64_t>(i)));
    const GaussianStream sv(derive_key(stream.key, 2 * static_cast<std::uint64_t>(i) + 1));
    const SpectralField u = random_field(g, draw_r, su);
    const SpectralField v = random_field(g, draw_r, sv);

    const double duv = l2_norm(u - v);
    if (duv > 0.0) {
      const double lip = l2_norm(apply_drift(cs, u) - apply_drift(cs, v)) / duv;
      if (lip > rep.worst_drift_lip) rep.worst_drift_lip = lip;
      if (lip > cs.L1 * tol && rep.pass) {
        rep.pass = false;
        rep.witness = i;
        rep.message = "drift Lipschitz ratio " + std::to_string(lip) +
                      " exceeds declared L1 " + std::to_string(cs.L1);
      }
    }

    // The declared L1 bounds the growth ratio only in the flat norm, where
    // it follows from F(0) = 0 and the Lipschitz bound. At positive mu the
    // Nemytskii composition picks up algebra constants that are recorded in
    // worst_drift_growth but not gated against.
    const double growth =
        sobolev_norm(apply_drift(cs, u), mu) / (1.0 + sobolev_norm(u, mu));
    if (growth > rep.worst_drift_growth) rep.worst_drift_growth = growth;
    if (mu.mu == 0.0 && growth > cs.L1 * tol && rep.pass) {
      rep.pass = false;
      rep.witness = i;
      rep.message = "drift growth ratio " + std::to_string(growth) +
                    " exceeds declared L1 " + std::to_string(cs.L1);
    }

    const auto uv = to_grid(u);
    const auto vv = to_grid(v);
    const auto gu = diffusion_multiplier(cs, uv);
    const auto gv = diffusion_multiplier(cs, vv);

    if (duv > 0.0 && !cs.is_constant_diffusion()) {
      std::vector<double> diff(gu.size());
      for (std::size_t j = 0; j < gu.size(); ++j) diff[j] = gu[j] - gv[j];
      const double lip2 =
          detail::hs_norm_of_multiplier(diff, noise, 0.0) / duv;
      if (lip2 > rep.worst_diff_lip) rep.worst_diff_lip = lip2;
      if (lip2 > rep.declared_l2 * tol && rep.pass) {
        rep.pass = false;
        rep.witness = i;
        rep.message = "diffusion Lipschitz ratio " + std::to_string(lip2) +
                      " exceeds declared L2 " + std::to_string(rep.declared_l2);
      }
    }

    const double hsg = detail::hs_norm_of_multiplier(gu, noise, mu.mu);
    const double growth2 = hsg / (1.0 + sobolev_norm(u, mu));
    if (growth2 > rep.worst_diff_growth) rep.worst_diff_growth = growth2;
  }
  return rep;
}

}  // namespace snls

#endif  // SNLS_COEFFICIENTS_HPP
