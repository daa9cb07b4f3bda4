#ifndef SNLS_SPECTRAL_HPP
#define SNLS_SPECTRAL_HPP

#include <cmath>
#include <complex>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include "rng.hpp"

namespace snls {

using cplx = std::complex<double>;

constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr double kFourPiSq = 39.478417604357434475337963999505;

// Fourier wavenumber on the torus [0,1]^d. Only the d = 1 kernels ship;
// the tuple collapses to a single component.
struct ModeIndex {
  int k = 0;
};

// Eigenvalue of -Laplacian on the periodic torus: lambda_k = 4 pi^2 |k|^2.
inline double eigenvalue(ModeIndex m) {
  const double kk = static_cast<double>(m.k);
  return kFourPiSq * kk * kk;
}

inline double eigenvalue(int k) { return eigenvalue(ModeIndex{k}); }

// Fractional regularity exponent mu >= 0.
struct SobolevIndex {
  double mu = 0.0;

  SobolevIndex() = default;
  explicit SobolevIndex(double m) : mu(m) {
    if (!(mu >= 0.0))
      throw std::invalid_argument("SobolevIndex: mu must be >= 0");
  }
};

// Symmetric mode set {-K..K}, n = 2K+1 collocation points per axis. Odd n
// keeps the set conjugate-symmetric with no unpaired Nyquist mode.
struct FourierGrid {
  int dim = 1;
  int K = 0;

  FourierGrid() = default;
  explicit FourierGrid(int half_bandwidth, int d = 1)
      : dim(d), K(half_bandwidth) {
    if (d != 1)
      throw std::invalid_argument("FourierGrid: only d = 1 kernels ship");
    if (K < 0) throw std::invalid_argument("FourierGrid: K must be >= 0");
  }

  int n() const { return 2 * K + 1; }
  int size() const { return n(); }  // d = 1: one point per mode

  int index_of(int k) const {
    if (k < -K || k > K)
      throw std::invalid_argument("FourierGrid: mode outside bandwidth");
    return k + K;
  }
  int mode_at(int i) const { return i - K; }

  friend bool operator==(const FourierGrid& a, const FourierGrid& b) {
    return a.dim == b.dim && a.K == b.K;
  }
  friend bool operator!=(const FourierGrid& a, const FourierGrid& b) {
    return !(a == b);
  }
};

// Complex Fourier coefficients of a field on the torus, indexed by mode.
// Storage order is ascending k: a[i] belongs to mode k = i - K.
struct SpectralField {
  FourierGrid grid;
  std::vector<cplx> a;

  SpectralField() = default;
  explicit SpectralField(const FourierGrid& g) : grid(g), a(g.size(), cplx{}) {}

  int size() const { return static_cast<int>(a.size()); }

  cplx& at(int k) { return a[static_cast<std::size_t>(grid.index_of(k))]; }
  const cplx& at(int k) const {
    return a[static_cast<std::size_t>(grid.index_of(k))];
  }
};

inline SpectralField unit_mode(const FourierGrid& g, int k) {
  SpectralField v(g);
  v.at(k) = cplx{1.0, 0.0};
  return v;
}

// --- small field arithmetic -------------------------------------------------

inline void check_same_grid(const SpectralField& u, const SpectralField& v,
                            const char* who) {
  if (u.grid != v.grid)
    throw std::invalid_argument(std::string(who) + ": grid mismatch");
}

inline SpectralField operator+(SpectralField u, const SpectralField& v) {
  check_same_grid(u, v, "operator+");
  for (std::size_t i = 0; i < u.a.size(); ++i) u.a[i] += v.a[i];
  return u;
}

inline SpectralField operator-(SpectralField u, const SpectralField& v) {
  check_same_grid(u, v, "operator-");
  for (std::size_t i = 0; i < u.a.size(); ++i) u.a[i] -= v.a[i];
  return u;
}

inline SpectralField operator*(cplx s, SpectralField u) {
  for (auto& c : u.a) c *= s;
  return u;
}

// --- norms ------------------------------------------------------------------

inline double l2_norm(const SpectralField& v) {
  double s = 0.0;
  for (const auto& c : v.a) s += std::norm(c);
  return std::sqrt(s);
}

// Weight of mode k in the squared H^mu norm. The zero mode carries weight 1
// (pure lambda^mu would annihilate constants and break the norm axioms);
// tail estimates only ever use lambda_K^{-mu} on k != 0, which is unaffected.
inline double norm_weight(int k, double mu) {
  if (k == 0) return 1.0;
  if (mu == 0.0) return 1.0;
  return std::pow(eigenvalue(k), mu);
}

inline double sobolev_norm(const SpectralField& v, SobolevIndex mu) {
  double s = 0.0;
  for (int i = 0; i < v.size(); ++i) {
    const int k = v.grid.mode_at(i);
    s += norm_weight(k, mu.mu) * std::norm(v.a[static_cast<std::size_t>(i)]);
  }
  return std::sqrt(s);
}

// --- projection and grid changes -------------------------------------------

// P_N: truncation by max-norm of the wavenumber, |k| <= K_cut. Idempotent,
// self-adjoint, contraction in every H^mu.
inline SpectralField project(const SpectralField& v, int K_cut) {
  if (K_cut < 0 || K_cut > v.grid.K)
    throw std::invalid_argument("project: K_cut outside grid bandwidth");
  SpectralField out = v;
  for (int i = 0; i < v.size(); ++i) {
    if (std::abs(v.grid.mode_at(i)) > K_cut)
      out.a[static_cast<std::size_t>(i)] = cplx{};
  }
  return out;
}

// Zero-padding injection into a finer grid (the adjoint of P_N). Used to
// compare coarse solutions against reference fields.
inline SpectralField embedded(const SpectralField& v, const FourierGrid& fine) {
  if (fine.K < v.grid.K)
    throw std::invalid_argument("embedded: target grid is coarser");
  SpectralField out(fine);
  for (int k = -v.grid.K; k <= v.grid.K; ++k) out.at(k) = v.at(k);
  return out;
}

// Restriction onto a coarser grid: keep modes |k| <= coarse.K.
inline SpectralField restricted(const SpectralField& v,
                                const FourierGrid& coarse) {
  if (coarse.K > v.grid.K)
    throw std::invalid_argument("restricted: target grid is finer");
  SpectralField out(coarse);
  for (int k = -coarse.K; k <= coarse.K; ++k) out.at(k) = v.at(k);
  return out;
}

// Embeds or restricts as needed so v lives on the requested grid.
inline SpectralField fit_to_grid(const SpectralField& v,
                                 const FourierGrid& grid) {
  if (grid.K >= v.grid.K) return embedded(v, grid);
  return restricted(v, grid);
}

// --- collocation transforms -------------------------------------------------

// Unit roots e^{2 pi i r / n}, cached per n. Transforms are dense O(n^2)
// mat-vecs; at the shipped sizes (n <= 257) that is microseconds, and the
// hot experiment paths are diagonal in mode space and never transform.
inline std::shared_ptr<const std::vector<cplx>> unit_roots(int n) {
  static std::mutex mu;
  static std::map<int, std::shared_ptr<const std::vector<cplx>>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  auto roots = std::make_shared<std::vector<cplx>>();
  roots->reserve(static_cast<std::size_t>(n));
  for (int r = 0; r < n; ++r) {
    const double th = kTwoPi * static_cast<double>(r) / static_cast<double>(n);
    roots->push_back(cplx{std::cos(th), std::sin(th)});
  }
  cache.emplace(n, roots);
  return roots;
}

// u(x_j) = sum_k a_k e^{2 pi i k x_j} at x_j = j/n.
inline std::vector<cplx> to_grid(const SpectralField& v) {
  const int n = v.grid.n();
  const int K = v.grid.K;
  const auto roots = unit_roots(n);
  std::vector<cplx> u(static_cast<std::size_t>(n), cplx{});
  for (int j = 0; j < n; ++j) {
    cplx s{};
    for (int i = 0; i < n; ++i) {
      int e = (j * (i - K)) % n;
      if (e < 0) e += n;
      s += v.a[static_cast<std::size_t>(i)] * (*roots)[static_cast<std::size_t>(e)];
    }
    u[static_cast<std::size_t>(j)] = s;
  }
  return u;
}

// a_k = (1/n) sum_j u(x_j) e^{-2 pi i k x_j}; exact inverse of to_grid.
inline SpectralField from_grid(const std::vector<cplx>& u,
                               const FourierGrid& g) {
  const int n = g.n();
  if (static_cast<int>(u.size()) != n)
    throw std::invalid_argument("from_grid: value count != grid size");
  const int K = g.K;
  const auto roots = unit_roots(n);
  SpectralField v(g);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (int i = 0; i < n; ++i) {
    const int k = i - K;
    cplx s{};
    for (int j = 0; j < n; ++j) {
      int e = (-k * j) % n;
      if (e < 0) e += n;
      s += u[static_cast<std::size_t>(j)] * (*roots)[static_cast<std::size_t>(e)];
    }
    v.a[static_cast<std::size_t>(i)] = s * inv_n;
  }
  return v;
}

// --- test-vector generation -------------------------------------------------

// Random field with coefficient a_k = (1+lambda_k)^{-r} z_k, z_k standard
// circular complex Gaussian (E|z|^2 = 1). r = +inf collapses the spectrum
// to the zero mode. Deterministic per (stream key, grid).
inline SpectralField random_field(const FourierGrid& g, double r,
                                  const GaussianStream& stream) {
  SpectralField v(g);
  constexpr double inv_sqrt2 = 0.70710678118654752440084436210485;
  for (int i = 0; i < g.size(); ++i) {
    const int k = g.mode_at(i);
    double w;
    if (std::isinf(r)) {
      w = (k == 0) ? 1.0 : 0.0;
    } else {
      w = std::pow(1.0 + eigenvalue(k), -r);
    }
    if (w != 0.0) {
      const auto [x, y] = stream.normal_pair(static_cast<std::uint64_t>(i));
      v.a[static_cast<std::size_t>(i)] = w * cplx{x * inv_sqrt2, y * inv_sqrt2};
    }
  }
  return v;
}

}  // namespace snls

#endif  // SNLS_SPECTRAL_HPP
