#ifndef SNLS_SEMIGROUP_HPP
#define SNLS_SEMIGROUP_HPP

#include <cmath>
#include <complex>
#include <stdexcept>

#include "spectral.hpp"

namespace snls {

// Schrodinger semigroup S_t^eps = exp(i eps t Lap / 2) and the damped
// variant S_t^{alpha,eps} = e^{-alpha t / eps} S_t^eps, diagonal in the
// Fourier basis. Sign convention: Lap has mode eigenvalue -lambda_k, so the
// per-mode factor is e^{-i eps lambda_k t / 2}. The discrete counterparts
// are the Cayley one-step map S_tau and resolvent factor T_tau; the phase
// identity arg(S_tau factor) = -2 arctan(eps tau lambda / 4) pins the sign.

struct SemigroupParams {
  double eps = 1.0;
  double alpha = 0.0;
  double t = 0.0;

  SemigroupParams() = default;
  SemigroupParams(double eps_, double alpha_, double t_)
      : eps(eps_), alpha(alpha_), t(t_) {
    if (!(eps > 0.0)) throw std::invalid_argument("SemigroupParams: eps <= 0");
    if (!(alpha >= 0.0))
      throw std::invalid_argument("SemigroupParams: alpha < 0");
    if (!(t >= 0.0)) throw std::invalid_argument("SemigroupParams: t < 0");
  }
};

struct CayleyParams {
  double eps = 1.0;
  double tau = 0.5;
  long m = 1;

  CayleyParams() = default;
  CayleyParams(double eps_, double tau_, long m_ = 1)
      : eps(eps_), tau(tau_), m(m_) {
    if (!(eps > 0.0)) throw std::invalid_argument("CayleyParams: eps <= 0");
    if (!(tau > 0.0 && tau < 1.0))
      throw std::invalid_argument("CayleyParams: tau must lie in (0,1)");
    if (m < 0) throw std::invalid_argument("CayleyParams: m < 0");
  }
};

// Per-mode multiplier of S_t^{alpha,eps}.
inline cplx exact_factor(double lambda, const SemigroupParams& p) {
  const double damp = std::exp(-p.alpha * p.t / p.eps);
  const double phase = -0.5 * p.eps * lambda * p.t;
  return cplx{damp * std::cos(phase), damp * std::sin(phase)};
}

// Per-mode multiplier of one Cayley step S_tau.
inline cplx cayley_factor(double lambda, double eps, double tau) {
  const cplx x{0.0, 0.25 * eps * tau * lambda};
  return (1.0 - x) / (1.0 + x);
}

// Per-mode multiplier of the resolvent T_tau = (I + (i eps tau / 4) Lap_N)^{-1}
// ... with the sign convention above: 1 / (1 + i eps tau lambda / 4).
inline cplx resolvent_factor(double lambda, double eps, double tau) {
  const cplx x{0.0, 0.25 * eps * tau * lambda};
  return 1.0 / (1.0 + x);
}

inline SpectralField apply_exact(const SpectralField& v,
                                 const SemigroupParams& p) {
  SpectralField out = v;
  for (int i = 0; i < v.size(); ++i) {
    const double lam = eigenvalue(v.grid.mode_at(i));
    out.a[static_cast<std::size_t>(i)] *= exact_factor(lam, p);
  }
  return out;
}

// m Cayley steps. The power is applied as m successive multiplications per
// coefficient so the result is bitwise identical to composing apply_cayley
// m times with m = 1.
inline SpectralField apply_cayley(const SpectralField& v,
                                  const CayleyParams& c) {
  SpectralField out = v;
  for (int i = 0; i < v.size(); ++i) {
    const double lam = eigenvalue(v.grid.mode_at(i));
    const cplx f = cayley_factor(lam, c.eps, c.tau);
    cplx& coef = out.a[static_cast<std::size_t>(i)];
    for (long s = 0; s < c.m; ++s) coef *= f;
  }
  return out;
}

inline SpectralField apply_resolvent(const SpectralField& v,
                                     const CayleyParams& c) {
  SpectralField out = v;
  for (int i = 0; i < v.size(); ++i) {
    const double lam = eigenvalue(v.grid.mode_at(i));
    out.a[static_cast<std::size_t>(i)] *= resolvent_factor(lam, c.eps, c.tau);
  }
  return out;
}

// --- defect functionals -----------------------------------------------------
// Each lemma of the appendix becomes a computable defect plus its explicit
// bound, so the lemma suite and the CLI can tabulate defect vs bound.

// ||(S_t^{alpha,eps} - Id) v||_0, evaluated exactly per mode.
inline double smoothing_defect(const SpectralField& v,
                               const SemigroupParams& p) {
  double s = 0.0;
  for (int i = 0; i < v.size(); ++i) {
    const double lam = eigenvalue(v.grid.mode_at(i));
    s += std::norm((exact_factor(lam, p) - 1.0) *
                   v.a[static_cast<std::size_t>(i)]);
  }
  return std::sqrt(s);
}

// Bound 2 (eps t / 2)^rho e^{-alpha t/eps} ||v||_{2 rho}
//       + |1 - e^{-alpha t/eps}| ||v||_0.
// The constant 2 comes from |e^{ix} - e^{iy}| <= 2 |x - y|^beta; the second
// term carries the damping prefactor exactly as the proof splits it.
inline double smoothing_bound(const SpectralField& v, const SemigroupParams& p,
                              double rho) {
  if (!(rho >= 0.0 && rho <= 1.0))
    throw std::invalid_argument("smoothing_bound: rho outside [0,1]");
  const double damp = std::exp(-p.alpha * p.t / p.eps);
  const double osc = 2.0 * std::pow(0.5 * p.eps * p.t, rho) *
                     sobolev_norm(v, SobolevIndex(2.0 * rho));
  return damp * osc + std::abs(1.0 - damp) * l2_norm(v);
}

// ||(Id - P_N) S_t^{alpha,eps} v||_0 = e^{-alpha t/eps} ||(Id - P_N) v||_0.
inline double projection_defect(const SpectralField& v,
                                const SemigroupParams& p, int K_cut) {
  if (K_cut < 0 || K_cut > v.grid.K)
    throw std::invalid_argument("projection_defect: K_cut outside grid");
  double s = 0.0;
  for (int i = 0; i < v.size(); ++i) {
    if (std::abs(v.grid.mode_at(i)) <= K_cut) continue;
    const double lam = eigenvalue(v.grid.mode_at(i));
    s += std::norm(exact_factor(lam, p) * v.a[static_cast<std::size_t>(i)]);
  }
  return std::sqrt(s);
}

// Bound e^{-alpha t/eps} lambda_{K_cut}^{-mu/2} ||v||_mu. Infinite at
// K_cut = 0 with mu > 0 (lambda_0 = 0); tail modes have lambda >= lambda_{K_cut+1},
// so the bound is tight only on single-tail-mode inputs at K_cut + 1 when
// evaluated with that mode's eigenvalue.
inline double projection_bound(const SpectralField& v, const SemigroupParams& p,
                               int K_cut, SobolevIndex mu) {
  const double damp = std::exp(-p.alpha * p.t / p.eps);
  const double lam = eigenvalue(K_cut);
  return damp * std::pow(lam, -0.5 * mu.mu) * sobolev_norm(v, mu);
}

// x - arctan(x), series-switched so the cancellation for small x never
// costs more than one ulp of the result.
inline double arctan_defect(double x) {
  const double ax = std::abs(x);
  if (ax < 1e-2) {
    const double x2 = x * x;
    // alternating tail of the arctan series: x^3/3 - x^5/5 + x^7/7 - x^9/9
    return x * x2 *
           (1.0 / 3.0 + x2 * (-1.0 / 5.0 + x2 * (1.0 / 7.0 - x2 / 9.0)));
  }
  return x - std::atan(x);
}

// |e^{i eps tau m lambda / 2} - e^{2 i m arctan(eps tau lambda / 4)}|
//   = 2 |sin(m (x - arctan x))|, x = eps tau lambda / 4.
inline double cayley_defect(double eps, double tau, long m, double lambda) {
  if (m < 1) throw std::invalid_argument("cayley_defect: m < 1");
  const double x = 0.25 * eps * tau * lambda;
  return 2.0 * std::abs(std::sin(static_cast<double>(m) * arctan_defect(x)));
}

// min(2, 2 (2m)^beta |x - arctan x|^beta).
inline double cayley_defect_bound(double eps, double tau, long m, double lambda,
                                  double beta) {
  if (!(beta >= 0.0 && beta <= 1.0))
    throw std::invalid_argument("cayley_defect_bound: beta outside [0,1]");
  const double x = 0.25 * eps * tau * lambda;
  const double d = std::abs(arctan_defect(x));
  return std::min(2.0,
                  2.0 * std::pow(2.0 * static_cast<double>(m), beta) *
                      std::pow(d, beta));
}

// The elementary-inequality form: |x - arctan x| <= x^3/3 gives
// 2 (2m)^beta (x^3/3)^beta, always >= cayley_defect_bound.
inline double cayley_defect_bound_cubic(double eps, double tau, long m,
                                        double lambda, double beta) {
  if (!(beta >= 0.0 && beta <= 1.0))
    throw std::invalid_argument("cayley_defect_bound_cubic: beta outside [0,1]");
  const double x = 0.25 * eps * tau * lambda;
  const double cube = std::abs(x * x * x) / 3.0;
  return std::min(2.0,
                  2.0 * std::pow(2.0 * static_cast<double>(m), beta) *
                      std::pow(cube, beta));
}

}  // namespace snls

#endif  // SNLS_SEMIGROUP_HPP
