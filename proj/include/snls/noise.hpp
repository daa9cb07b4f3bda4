#ifndef SNLS_NOISE_HPP
#define SNLS_NOISE_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "rng.hpp"
#include "spectral.hpp"

namespace snls {

// Q-Wiener process on L^2(T;R), diagonal in the real trigonometric basis
// {1, sqrt(2) cos(2 pi k x), sqrt(2) sin(2 pi k x)}. Internally everything
// lives on the conjugate-symmetric complex modes: with independent real
// Brownian motions beta^c_k, beta^s_k of eigenvalue q_k,
//   W-hat_0  = sqrt(q_0) beta_0,
//   W-hat_k  = sqrt(q_k) (beta^c_k - i beta^s_k) / sqrt(2),  k > 0,
//   W-hat_-k = conj(W-hat_k),
// so E |W-hat_k(t)|^2 = q_k t for every mode and the physical field is real.

struct NoiseSpec {
  FourierGrid grid;            // truncation = reference spatial resolution
  std::vector<double> q;       // q[s] for s = |k|, shared by the cos/sin pair
  double r = std::numeric_limits<double>::quiet_NaN();  // set for power family
  bool power_family = false;

  NoiseSpec() = default;

  static NoiseSpec power(const FourierGrid& g, double decay_r) {
    NoiseSpec s;
    s.grid = g;
    s.r = decay_r;
    s.power_family = true;
    s.q.resize(static_cast<std::size_t>(g.K) + 1);
    for (int k = 0; k <= g.K; ++k)
      s.q[static_cast<std::size_t>(k)] = std::pow(1.0 + eigenvalue(k), -decay_r);
    return s;
  }

  static NoiseSpec table(const FourierGrid& g, std::vector<double> values) {
    if (static_cast<int>(values.size()) != g.K + 1)
      throw std::invalid_argument("NoiseSpec: table needs K+1 entries");
    for (double v : values)
      if (!(v >= 0.0)) throw std::invalid_argument("NoiseSpec: q_k < 0");
    NoiseSpec s;
    s.grid = g;
    s.q = std::move(values);
    return s;
  }

  double q_of(int k) const {
    const int s = std::abs(k);
    if (s > grid.K) throw std::invalid_argument("NoiseSpec: mode outside grid");
    return q[static_cast<std::size_t>(s)];
  }

  // Trace over all represented complex modes: q_0 + 2 sum_{s>=1} q_s.
  double trace() const {
    double t = q[0];
    for (std::size_t s = 1; s < q.size(); ++s) t += 2.0 * q[s];
    return t;
  }
};

// sqrt(sum_k kappa_k^mu q_k) over represented modes, plus the analytic
// verdict on the infinite tail. For the power family the full-series sum
// converges iff 2(r - mu) > 1 in d = 1; a divergent request reports
// +inf with a diagnostic rather than throwing (the grid-truncated partial
// sum is still returned for inspection).
struct HsNormReport {
  double value = 0.0;       // +inf when the tail diverges
  double grid_value = 0.0;  // partial sum over represented modes
  bool tail_converges = true;
  std::string note;
};

inline HsNormReport weighted_hs_norm(const NoiseSpec& spec, SobolevIndex mu) {
  HsNormReport rep;
  double s = 0.0;
  for (int k = -spec.grid.K; k <= spec.grid.K; ++k)
    s += norm_weight(k, mu.mu) * spec.q_of(k);
  rep.grid_value = std::sqrt(s);
  if (spec.power_family && !(2.0 * (spec.r - mu.mu) > 1.0)) {
    rep.tail_converges = false;
    rep.value = std::numeric_limits<double>::infinity();
    rep.note = "tail diverges: power family needs 2(r - mu) > 1, got 2(" +
               std::to_string(spec.r) + " - " + std::to_string(mu.mu) + ")";
  } else {
    rep.value = rep.grid_value;
  }
  return rep;
}

// A sampled Wiener path on the finest time lattice. Increments are never
// stored: each one is a pure function of (key, step, slot), regenerable in
// O(1), so the lattice can be astronomically long and any subset of modes
// can be assembled without touching the rest. Counter layout: step j, slot
// s = |k| maps to counter j * (K+1) + s; one counter yields the (cos, sin)
// Brownian pair for that slot and step.
struct NoisePath {
  NoiseSpec spec;
  std::uint64_t key = 0;
  int M_fine = 0;
  double tau_fine = 0.0;
  double T = 0.0;

  int slots() const { return spec.grid.K + 1; }

  // Raw dof pair (delta beta^c, delta beta^s) ~ N(0, tau_fine)^2 for slot s
  // at fine step j, before sqrt(q) scaling.
  std::pair<double, double> dof_pair(int j, int s) const {
    const std::uint64_t ctr =
        static_cast<std::uint64_t>(j) * static_cast<std::uint64_t>(slots()) +
        static_cast<std::uint64_t>(s);
    auto [a, b] = GaussianStream(key).normal_pair(ctr);
    const double sd = std::sqrt(tau_fine);
    return {sd * a, sd * b};
  }
};

inline NoisePath sample_path(const NoiseSpec& spec, std::uint64_t seed,
                             int M_fine, double T) {
  if (M_fine < 1) throw std::invalid_argument("sample_path: M_fine < 1");
  if (!(T > 0.0)) throw std::invalid_argument("sample_path: T <= 0");
  NoisePath p;
  p.spec = spec;
  p.key = seed;
  p.M_fine = M_fine;
  p.tau_fine = T / static_cast<double>(M_fine);
  p.T = T;
  return p;
}

namespace detail {

// Writes the assembled increment for modes |k| <= K_out into out (an array
// indexed like a SpectralField on FourierGrid(K_out)), summing fine steps
// j0 <= j < j0 + count in index order. Scaling happens inside the loop so
// a count-R sum is bitwise the in-order sum of the R single-step assembled
// increments (scale*(a+b) and scale*a + scale*b are not the same doubles).
// Per-mode values are independent sums, so truncating to fewer modes never
// changes the retained ones.
inline void accumulate_increment(const NoisePath& path, int j0, int count,
                                 int K_out, cplx* out) {
  constexpr double inv_sqrt2 = 0.70710678118654752440084436210485;
  const int S = std::min(K_out, path.spec.grid.K);
  for (int s = 0; s <= S; ++s) {
    const double qs = path.spec.q[static_cast<std::size_t>(s)];
    if (qs == 0.0) {
      continue;  // out stays zero for this slot
    }
    const double scale =
        (s == 0) ? std::sqrt(qs) : std::sqrt(qs) * inv_sqrt2;
    double acc_re = 0.0, acc_im = 0.0;
    for (int j = j0; j < j0 + count; ++j) {
      auto [dc, ds] = path.dof_pair(j, s);
      acc_re += scale * dc;
      acc_im -= scale * ds;
    }
    if (s == 0) {
      out[K_out] += cplx{acc_re, 0.0};
    } else {
      out[K_out + s] += cplx{acc_re, acc_im};
      out[K_out - s] += cplx{acc_re, -acc_im};
    }
  }
}

}  // namespace detail

// Assembled fine increment delta_j W as a field on the noise grid.
inline SpectralField fine_increment(const NoisePath& path, int j) {
  if (j < 0 || j >= path.M_fine)
    throw std::invalid_argument("fine_increment: step out of range");
  SpectralField f(path.spec.grid);
  detail::accumulate_increment(path, j, 1, path.spec.grid.K, f.a.data());
  return f;
}

// Coarse increment m at refinement R: the in-order sum of its R fine
// increments, per mode. Summing all coarse increments therefore equals
// summing all fine increments bitwise at matching block grouping.
inline SpectralField coarse_increment(const NoisePath& path, int m, int R) {
  if (R < 1) throw std::invalid_argument("coarse_increment: R < 1");
  if (path.M_fine % R != 0)
    throw std::invalid_argument("coarse_increment: R does not divide M_fine");
  if (m < 0 || m >= path.M_fine / R)
    throw std::invalid_argument("coarse_increment: index out of range");
  SpectralField f(path.spec.grid);
  detail::accumulate_increment(path, m * R, R, path.spec.grid.K, f.a.data());
  return f;
}

// Performance form: same values as coarse_increment, assembled only for
// modes |k| <= K_out on the corresponding coarser grid.
inline SpectralField coarse_increment_restricted(const NoisePath& path, int m,
                                                 int R, int K_out) {
  if (R < 1) throw std::invalid_argument("coarse_increment: R < 1");
  if (path.M_fine % R != 0)
    throw std::invalid_argument("coarse_increment: R does not divide M_fine");
  if (m < 0 || m >= path.M_fine / R)
    throw std::invalid_argument("coarse_increment: index out of range");
  if (K_out > path.spec.grid.K)
    throw std::invalid_argument("coarse_increment: K_out exceeds noise grid");
  SpectralField f(FourierGrid{K_out});
  detail::accumulate_increment(path, m * R, R, K_out, f.a.data());
  return f;
}

// Spot check of the refinement coupling: coarse increment m must equal the
// in-order sum of its R fine increments after restriction, bitwise. The
// comparison is on representations, so it is stricter than operator==.
inline bool coupling_consistent(const NoisePath& path, int m, int R,
                                int K_out) {
  const SpectralField coarse = coarse_increment_restricted(path, m, R, K_out);
  SpectralField acc(FourierGrid{K_out});
  SpectralField fine(FourierGrid{K_out});
  for (int j = m * R; j < (m + 1) * R; ++j) {
    std::fill(fine.a.begin(), fine.a.end(), cplx{});
    detail::accumulate_increment(path, j, 1, K_out, fine.a.data());
    for (std::size_t i = 0; i < acc.a.size(); ++i) acc.a[i] += fine.a[i];
  }
  return std::memcmp(coarse.a.data(), acc.a.data(),
                     acc.a.size() * sizeof(cplx)) == 0;
}

}  // namespace snls

#endif  // SNLS_NOISE_HPP
