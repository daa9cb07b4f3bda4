#ifndef SNLS_LEMMAS_HPP
#define SNLS_LEMMAS_HPP

// Batch audit of the semigroup estimates. Each row records one defect, the
// explicit bound claimed by the corresponding proof, and the verdict, in a
// shape ready for CSV reporting and batch assertion.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "rng.hpp"
#include "semigroup.hpp"
#include "spectral.hpp"

namespace snls {

struct LemmaRow {
  std::string lemma;   // family id
  std::string params;  // semicolon-separated key=value pairs
  double defect = 0.0;
  double bound = 0.0;
  bool pass = false;
};

namespace detail {

inline void append_kv(std::string* s, const char* key, double value) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%s%s=%.6g", s->empty() ? "" : ";", key,
                value);
  *s += buf;
}

}  // namespace detail

// Random-tuple audit over the four estimate families:
//   isometry          | ||S v||_0 - e^(-alpha t/eps) ||v||_0 |  vs  1e-12 rel
//   smoothing         ||(S - Id)v||_0  vs  the two-term explicit bound
//   projection        tail norm of S v  vs  e^(-..) lambda_K^(-mu/2) ||v||_mu
//   projection_tight  single-tail-mode input, bound evaluated at the tail
//                     eigenvalue, where the estimate is an identity
//   cayley            phase defect of m Cayley steps vs the cubic bound,
//                     worst mode of the full grid
// Bounds hold with equality margins in exact arithmetic; comparisons allow
// a relative 1e-12 for rounding of the bound expressions themselves.
inline std::vector<LemmaRow> lemma_suite(int tuples, std::uint64_t seed,
                                         long m_max = 10000) {
  if (tuples < 1) throw std::invalid_argument("lemma_suite: tuples < 1");
  if (m_max < 1) throw std::invalid_argument("lemma_suite: m_max < 1");
  constexpr double slack = 1e-12;

  std::vector<LemmaRow> rows;
  rows.reserve(static_cast<std::size_t>(tuples) * 5);

  for (int i = 0; i < tuples; ++i) {
    const GaussianStream par = stream_for(
        seed, StreamPurpose::validation, 2 * static_cast<std::uint64_t>(i));
    const GaussianStream fld = stream_for(
        seed, StreamPurpose::validation, 2 * static_cast<std::uint64_t>(i) + 1);

    const int K = 8 + static_cast<int>(par.bits(0) % 25);  // 8..32
    const double eps = 0.1 + 1.9 * par.uniform(1);
    const double alpha = par.uniform(2) < 0.25 ? 0.0 : 2.0 * par.uniform(3);
    const double t = 2.0 * par.uniform(4);
    const double rho = par.uniform(5);
    const double mu = 3.0 * par.uniform(6);
    const int K_cut = 1 + static_cast<int>(par.bits(7) % K);  // 1..K
    const double draw_r = 0.5 + 2.0 * par.uniform(8);
    const double tau = 0.001 + 0.998 * par.uniform(9);
    const long m =
        1 + static_cast<long>(par.bits(10) % static_cast<std::uint64_t>(m_max));
    const double beta = par.uniform(11);
    const int K_tight =
        1 + static_cast<int>(par.bits(12) % static_cast<unsigned>(K - 1));

    const FourierGrid grid(K);
    const SpectralField v = random_field(grid, draw_r, fld);
    const SemigroupParams sp(eps, alpha, t);
    const double damp = std::exp(-alpha * t / eps);

    {
      LemmaRow row;
      row.lemma = "isometry";
      detail::append_kv(&row.params, "eps", eps);
      detail::append_kv(&row.params, "alpha", alpha);
      detail::append_kv(&row.params, "t", t);
      detail::append_kv(&row.params, "K", K);
      row.defect = std::abs(l2_norm(apply_exact(v, sp)) - damp * l2_norm(v));
      row.bound = 1e-12 * l2_norm(v);
      row.pass = row.defect <= row.bound;
      rows.push_back(row);
    }
    {
      LemmaRow row;
      row.lemma = "smoothing";
      detail::append_kv(&row.params, "eps", eps);
      detail::append_kv(&row.params, "alpha", alpha);
      detail::append_kv(&row.params, "t", t);
      detail::append_kv(&row.params, "rho", rho);
      detail::append_kv(&row.params, "K", K);
      row.defect = smoothing_defect(v, sp);
      row.bound = smoothing_bound(v, sp, rho);
      row.pass = row.defect <= row.bound * (1.0 + slack);
      rows.push_back(row);
    }
    {
      LemmaRow row;
      row.lemma = "projection";
      detail::append_kv(&row.params, "eps", eps);
      detail::append_kv(&row.params, "alpha", alpha);
      detail::append_kv(&row.params, "t", t);
      detail::append_kv(&row.params, "mu", mu);
      detail::append_kv(&row.params, "K_cut", K_cut);
      row.defect = projection_defect(v, sp, K_cut);
      row.bound = projection_bound(v, sp, K_cut, SobolevIndex(mu));
      row.pass = row.defect <= row.bound * (1.0 + slack);
      rows.push_back(row);
    }
    {
      // One mode just past the cut, arbitrary amplitude: the tail estimate
      // evaluated at that mode's eigenvalue is an identity.
      const auto [re, im] = par.normal_pair(13);
      const SpectralField w = cplx{re, im} * unit_mode(grid, K_tight + 1);
      LemmaRow row;
      row.lemma = "projection_tight";
      detail::append_kv(&row.params, "eps", eps);
      detail::append_kv(&row.params, "alpha", alpha);
      detail::append_kv(&row.params, "t", t);
      detail::append_kv(&row.params, "mu", mu);
      detail::append_kv(&row.params, "K_cut", K_tight);
      row.defect = projection_defect(w, sp, K_tight);
      row.bound = damp * std::pow(eigenvalue(K_tight + 1), -0.5 * mu) *
                  sobolev_norm(w, SobolevIndex(mu));
      row.pass =
          std::abs(row.defect - row.bound) <= 1e-12 * std::max(1.0, row.bound);
      rows.push_back(row);
    }
    {
      // Worst mode of the full grid under the cubic bound.
      LemmaRow row;
      row.lemma = "cayley";
      detail::append_kv(&row.params, "eps", eps);
      detail::append_kv(&row.params, "tau", tau);
      detail::append_kv(&row.params, "m", static_cast<double>(m));
      detail::append_kv(&row.params, "beta", beta);
      detail::append_kv(&row.params, "K", K);
      bool all_pass = true;
      double worst = -std::numeric_limits<double>::infinity();
      for (int k = 0; k <= K; ++k) {
        const double lam = eigenvalue(k);
        const double defect = cayley_defect(eps, tau, m, lam);
        const double bound = cayley_defect_bound_cubic(eps, tau, m, lam, beta);
        all_pass = all_pass && defect <= bound * (1.0 + slack);
        const double margin = defect - bound;
        if (margin > worst) {
          worst = margin;
          row.defect = defect;
          row.bound = bound;
        }
      }
      row.pass = all_pass;
      rows.push_back(row);
    }
  }
  return rows;
}

}  // namespace snls

#endif  // SNLS_LEMMAS_HPP
