#ifndef SNLS_IO_HPP
#define SNLS_IO_HPP

// Report writers and serialization. Numeric text uses %.17g so every double
// round-trips exactly through its decimal form; files are written in binary
// mode with '\n' separators so repeated runs produce identical bytes.

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "convergence.hpp"
#include "lemmas.hpp"
#include "solver.hpp"
#include "spectral.hpp"

namespace snls {

constexpr const char* kVersion = "1.0.0";

inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace detail {

inline std::ofstream open_for_write(const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  return f;
}

inline std::ifstream open_for_read(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for reading: " + path);
  return f;
}

}  // namespace detail

// --- experiment tables ------------------------------------------------------

inline void write_errors_csv(const std::string& path, const ErrorTable& table) {
  std::ofstream f = detail::open_for_write(path);
  f << "eps,K_cut,M,e_hat,stderr,paths\n";
  for (const ErrorRow& r : table.rows) {
    f << format_double(r.eps) << ',' << r.K << ',' << r.M << ','
      << format_double(r.e_hat) << ',' << format_double(r.se) << ',' << r.paths
      << '\n';
  }
}

inline void write_rates_csv(const std::string& path,
                            const std::vector<ConvergenceReport>& reports) {
  std::ofstream f = detail::open_for_write(path);
  f << "axis,slope,ci\n";
  for (const ConvergenceReport& r : reports) {
    // ci is the 95% half-width of the slope from the fit residuals.
    f << axis_name(r.axis) << ',' << format_double(r.slope) << ','
      << format_double(1.96 * r.se_slope) << '\n';
  }
}

inline void write_moments_csv(const std::string& path,
                              const MomentTable& table) {
  std::ofstream f = detail::open_for_write(path);
  f << "kind,eps,t,value,stderr\n";
  for (const MomentRow& r : table.rows) {
    f << r.kind << ',' << format_double(r.eps) << ',' << format_double(r.t)
      << ',' << format_double(r.value) << ',' << format_double(r.se) << '\n';
  }
}

inline void write_lemmas_csv(const std::string& path,
                             const std::vector<LemmaRow>& rows) {
  std::ofstream f = detail::open_for_write(path);
  f << "lemma,params,defect,bound,verdict\n";
  for (const LemmaRow& r : rows) {
    f << r.lemma << ',' << r.params << ',' << format_double(r.defect) << ','
      << format_double(r.bound) << ',' << (r.pass ? "pass" : "fail") << '\n';
  }
}

// --- field serialization ----------------------------------------------------

inline void write_field_csv(const std::string& path, const SpectralField& v) {
  std::ofstream f = detail::open_for_write(path);
  f << "mode,re,im\n";
  for (int i = 0; i < v.size(); ++i) {
    const cplx& c = v.a[static_cast<std::size_t>(i)];
    f << v.grid.mode_at(i) << ',' << format_double(c.real()) << ','
      << format_double(c.imag()) << '\n';
  }
}

inline SpectralField read_field_csv(const std::string& path) {
  std::ifstream f = detail::open_for_read(path);
  std::string line;
  if (!std::getline(f, line) || line.rfind("mode,re,im", 0) != 0)
    throw std::runtime_error("read_field_csv: missing header in " + path);
  std::vector<int> modes;
  std::vector<cplx> coefs;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    int k = 0;
    double re = 0.0, im = 0.0;
    if (std::sscanf(line.c_str(), "%d,%lf,%lf", &k, &re, &im) != 3)
      throw std::runtime_error("read_field_csv: bad row '" + line + "'");
    modes.push_back(k);
    coefs.push_back(cplx{re, im});
  }
  if (modes.empty() || modes.size() % 2 == 0)
    throw std::runtime_error("read_field_csv: expected 2K+1 rows");
  const int K = static_cast<int>(modes.size() / 2);
  SpectralField v{FourierGrid(K)};
  for (std::size_t i = 0; i < modes.size(); ++i) {
    if (modes[i] != static_cast<int>(i) - K)
      throw std::runtime_error("read_field_csv: modes must ascend from -K");
    v.a[i] = coefs[i];
  }
  return v;
}

// Flat binary twin of the CSV form: magic, K as int64, then interleaved
// re/im doubles in ascending mode order. Exact by construction.
inline void write_field_bin(const std::string& path, const SpectralField& v) {
  std::ofstream f = detail::open_for_write(path);
  const char magic[8] = {'S', 'N', 'L', 'S', 'F', 'L', 'D', '1'};
  f.write(magic, sizeof magic);
  const std::int64_t K = v.grid.K;
  f.write(reinterpret_cast<const char*>(&K), sizeof K);
  f.write(reinterpret_cast<const char*>(v.a.data()),
          static_cast<std::streamsize>(v.a.size() * sizeof(cplx)));
}

inline SpectralField read_field_bin(const std::string& path) {
  std::ifstream f = detail::open_for_read(path);
  char magic[8] = {};
  f.read(magic, sizeof magic);
  if (!f || std::memcmp(magic, "SNLSFLD1", 8) != 0)
    throw std::runtime_error("read_field_bin: bad magic in " + path);
  std::int64_t K = 0;
  f.read(reinterpret_cast<char*>(&K), sizeof K);
  if (!f || K < 0 || K > (1 << 20))
    throw std::runtime_error("read_field_bin: implausible bandwidth");
  SpectralField v{FourierGrid(static_cast<int>(K))};
  f.read(reinterpret_cast<char*>(v.a.data()),
         static_cast<std::streamsize>(v.a.size() * sizeof(cplx)));
  if (!f) throw std::runtime_error("read_field_bin: truncated file " + path);
  return v;
}

// --- trajectory exports -----------------------------------------------------

inline void write_trajectory_csv(const std::string& path,
                                 const Trajectory& traj) {
  std::ofstream f = detail::open_for_write(path);
  f << "t,mode,re,im\n";
  for (std::size_t s = 0; s < traj.states.size(); ++s) {
    const SpectralField& u = traj.states[s];
    for (int i = 0; i < u.size(); ++i) {
      const cplx& c = u.a[static_cast<std::size_t>(i)];
      f << format_double(traj.times[s]) << ',' << u.grid.mode_at(i) << ','
        << format_double(c.real()) << ',' << format_double(c.imag()) << '\n';
    }
  }
}

inline void write_grid_csv(const std::string& path, const Trajectory& traj) {
  std::ofstream f = detail::open_for_write(path);
  f << "t,x,density\n";
  for (std::size_t s = 0; s < traj.states.size(); ++s) {
    const std::vector<cplx> vals = to_grid(traj.states[s]);
    const double n = static_cast<double>(vals.size());
    for (std::size_t j = 0; j < vals.size(); ++j) {
      f << format_double(traj.times[s]) << ','
        << format_double(static_cast<double>(j) / n) << ','
        << format_double(std::norm(vals[j])) << '\n';
    }
  }
}

// --- config digest ----------------------------------------------------------

inline std::uint64_t fnv1a64(const std::string& text) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::string digest_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace snls

#endif  // SNLS_IO_HPP
