#ifndef SNLS_CLI_HPP
#define SNLS_CLI_HPP

// Config-file front end: parse a json experiment description, dispatch the
// requested run, and write reports under a directory named by the config
// digest. Exit protocol: 0 on success, 1 on experiment or acceptance
// failure (manifest still written), 2 on invalid config or unknown
// subcommand (field diagnostic on stderr, nothing written).

#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <system_error>
#include <utility>
#include <vector>

#include <json.hpp>

#include "convergence.hpp"
#include "io.hpp"
#include "lemmas.hpp"
#include "rng.hpp"
#include "solver.hpp"
#include "spectral.hpp"

namespace snls {

using json = nlohmann::json;

// Flag overrides applied on top of the config file. seed and paths are
// merged into the config before the digest is taken, so overriding them
// selects a different run directory; out and threads are runtime plumbing
// and leave the digest alone.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> paths;
  std::optional<std::string> out;
  std::optional<unsigned> threads;
};

namespace detail {

[[noreturn]] inline void config_fail(const std::string& field,
                                     const std::string& what) {
  throw std::invalid_argument("config field '" + field + "': " + what);
}

inline std::string join_field(const std::string& where, const char* key) {
  return where.empty() ? std::string(key) : where + "." + key;
}

inline const json& member(const json& obj, const std::string& where,
                          const char* key) {
  if (!obj.is_object())
    config_fail(where.empty() ? "(root)" : where, "expected an object");
  const auto it = obj.find(key);
  if (it == obj.end()) config_fail(join_field(where, key), "missing");
  return *it;
}

inline double num_at(const json& obj, const std::string& where,
                     const char* key) {
  const json& v = member(obj, where, key);
  if (!v.is_number()) config_fail(join_field(where, key), "expected a number");
  return v.get<double>();
}

inline double num_or(const json& obj, const std::string& where,
                     const char* key, double dflt) {
  if (!obj.is_object() || !obj.contains(key)) return dflt;
  return num_at(obj, where, key);
}

inline int int_at(const json& obj, const std::string& where, const char* key) {
  const json& v = member(obj, where, key);
  if (!v.is_number_integer())
    config_fail(join_field(where, key), "expected an integer");
  const std::int64_t n = v.get<std::int64_t>();
  if (n < std::numeric_limits<int>::min() ||
      n > std::numeric_limits<int>::max())
    config_fail(join_field(where, key), "integer out of range");
  return static_cast<int>(n);
}

inline int int_or(const json& obj, const std::string& where, const char* key,
                  int dflt) {
  if (!obj.is_object() || !obj.contains(key)) return dflt;
  return int_at(obj, where, key);
}

inline std::uint64_t u64_or(const json& obj, const std::string& where,
                            const char* key, std::uint64_t dflt) {
  if (!obj.is_object() || !obj.contains(key)) return dflt;
  const json& v = member(obj, where, key);
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0)
    return static_cast<std::uint64_t>(v.get<std::int64_t>());
  config_fail(join_field(where, key), "expected a nonnegative integer");
}

inline std::string str_at(const json& obj, const std::string& where,
                          const char* key) {
  const json& v = member(obj, where, key);
  if (!v.is_string()) config_fail(join_field(where, key), "expected a string");
  return v.get<std::string>();
}

inline std::string str_or(const json& obj, const std::string& where,
                          const char* key, const std::string& dflt) {
  if (!obj.is_object() || !obj.contains(key)) return dflt;
  return str_at(obj, where, key);
}

inline int int_entry(const json& v, const std::string& field) {
  if (!v.is_number_integer()) config_fail(field, "expected an integer");
  const std::int64_t n = v.get<std::int64_t>();
  if (n < std::numeric_limits<int>::min() ||
      n > std::numeric_limits<int>::max())
    config_fail(field, "integer out of range");
  return static_cast<int>(n);
}

// A spectral field written as [[k, re, im], ...]; the grid bandwidth is
// the largest |k| present, an empty array is the zero field on mode 0.
inline SpectralField field_from_modes(const json& arr,
                                      const std::string& field) {
  if (!arr.is_array()) config_fail(field, "expected an array of [k, re, im]");
  int K = 0;
  for (const json& e : arr) {
    if (!e.is_array() || e.size() != 3 || !e[0].is_number_integer() ||
        !e[1].is_number() || !e[2].is_number())
      config_fail(field, "entries must be [k, re, im]");
    const int k = int_entry(e[0], field);
    K = std::max(K, std::abs(k));
  }
  SpectralField v{FourierGrid(K)};
  std::vector<char> seen(static_cast<std::size_t>(2 * K + 1), 0);
  for (const json& e : arr) {
    const int k = int_entry(e[0], field);
    if (seen[static_cast<std::size_t>(k + K)])
      config_fail(field, "duplicate mode " + std::to_string(k));
    seen[static_cast<std::size_t>(k + K)] = 1;
    v = v + cplx{e[1].get<double>(), e[2].get<double>()} * unit_mode(v.grid, k);
  }
  return v;
}

inline CoefficientSet coeffs_from_config(const json& model) {
  const json& drift = member(model, "model", "drift");
  const std::string kind = str_at(drift, "model.drift", "kind");
  CoefficientSet cs;
  if (kind == "linear") {
    cs = CoefficientSet::linear_damped(
        num_or(drift, "model.drift", "alpha", 0.0));
  } else if (kind == "potential") {
    cs = CoefficientSet::potential_drift(field_from_modes(
        member(drift, "model.drift", "modes"), "model.drift.modes"));
  } else if (kind == "saturated") {
    cs = CoefficientSet::saturated_drift(num_at(drift, "model.drift", "gamma"));
  } else {
    config_fail("model.drift.kind", "unknown drift '" + kind + "'");
  }
  if (model.contains("diffusion")) {
    const json& diff = member(model, "model", "diffusion");
    const std::string dk = str_at(diff, "model.diffusion", "kind");
    if (dk == "constant")
      cs.with_constant_diffusion(num_or(diff, "model.diffusion", "c", 1.0));
    else if (dk == "saturated")
      cs.with_saturated_diffusion();
    else
      config_fail("model.diffusion.kind", "unknown diffusion '" + dk + "'");
  }
  return cs;
}

inline std::vector<double> eps_from_config(const json& cfg) {
  if (!cfg.contains("eps")) return {1.0};
  const json& e = cfg.at("eps");
  if (e.is_number()) return {e.get<double>()};
  if (!e.is_array() || e.empty())
    config_fail("eps", "expected a number or a nonempty array");
  std::vector<double> out;
  out.reserve(e.size());
  for (const json& v : e) {
    if (!v.is_number()) config_fail("eps", "entries must be numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

// Moment runs live on one resolution given as "resolution": {K, M}; the
// convergence runs take a "ladder" array plus a dominating "reference".
inline ExperimentPlan plan_from_config(const json& cfg, bool moments) {
  ExperimentPlan plan;
  plan.name = str_or(cfg, "", "name", moments ? "moments" : "convergence");
  plan.axis =
      axis_from_name(str_or(cfg, "", "axis", moments ? "epsilon" : "spatial"));
  plan.coeffs = coeffs_from_config(member(cfg, "", "model"));
  if (cfg.contains("noise")) {
    const json& noise = member(cfg, "", "noise");
    if (noise.contains("q")) {
      const json& q = member(noise, "noise", "q");
      if (!q.is_array() || q.empty())
        config_fail("noise.q", "expected a nonempty array");
      for (const json& v : q) {
        if (!v.is_number()) config_fail("noise.q", "entries must be numbers");
        plan.noise_table.push_back(v.get<double>());
      }
    } else {
      plan.noise_r = num_or(noise, "noise", "r", plan.noise_r);
    }
  }
  plan.eps_list = eps_from_config(cfg);

  if (moments) {
    if (cfg.contains("ladder") || cfg.contains("reference"))
      config_fail("resolution",
                  "moment runs take a single resolution, not a ladder");
    const json& res = member(cfg, "", "resolution");
    const LadderPoint pt{int_at(res, "resolution", "K"),
                         int_at(res, "resolution", "M")};
    plan.ladder = {pt};
    plan.K_ref = pt.K;
    plan.M_ref = pt.M;
  } else {
    const json& lad = member(cfg, "", "ladder");
    if (!lad.is_array() || lad.empty())
      config_fail("ladder", "expected a nonempty array");
    for (std::size_t i = 0; i < lad.size(); ++i) {
      const std::string at = "ladder[" + std::to_string(i) + "]";
      plan.ladder.push_back(
          LadderPoint{int_at(lad[i], at, "K"), int_at(lad[i], at, "M")});
    }
    const json& ref = member(cfg, "", "reference");
    plan.K_ref = int_at(ref, "reference", "K");
    plan.M_ref = int_at(ref, "reference", "M");
  }

  plan.T = num_or(cfg, "", "T", plan.T);
  plan.paths = int_or(cfg, "", "paths", plan.paths);
  plan.seed = u64_or(cfg, "", "seed", 0);
  plan.p_moment = num_or(cfg, "", "p", plan.p_moment);
  plan.target_mu = num_or(cfg, "", "mu", plan.target_mu);
  plan.expected_rate = num_or(cfg, "", "expected_rate", plan.expected_rate);
  plan.rate_tol = num_or(cfg, "", "rate_tol", plan.rate_tol);
  const std::string err_kind = str_or(cfg, "", "error", "terminal");
  if (err_kind == "sup")
    plan.sup_error = true;
  else if (err_kind != "terminal")
    config_fail("error", "expected 'terminal' or 'sup'");
  if (cfg.contains("u0")) plan.u0 = field_from_modes(cfg.at("u0"), "u0");
  plan.snapshots = int_or(cfg, "", "snapshots", plan.snapshots);
  if (cfg.contains("holder")) {
    const json& h = member(cfg, "", "holder");
    plan.holder_eps = num_at(h, "holder", "eps");
    plan.holder_t0 = int_at(h, "holder", "t0");
    const json& seps = member(h, "holder", "seps");
    if (!seps.is_array() || seps.empty())
      config_fail("holder.seps", "expected a nonempty array");
    for (const json& v : seps)
      plan.holder_seps.push_back(int_entry(v, "holder.seps"));
  }
  return plan;
}

struct MeshingJob {
  double delta = 0.0;
  MeshingScenario sc;
};

inline MeshingJob meshing_from_config(const json& cfg) {
  MeshingJob job;
  const json& d = member(cfg, "", "delta");
  if (d.is_string()) {
    if (d.get<std::string>() != "inf")
      config_fail("delta", "expected a number or 'inf'");
    job.delta = std::numeric_limits<double>::infinity();
  } else if (d.is_number()) {
    job.delta = d.get<double>();
  } else {
    config_fail("delta", "expected a number or 'inf'");
  }
  job.sc.coeffs = coeffs_from_config(member(cfg, "", "model"));
  if (cfg.contains("noise"))
    job.sc.noise_r = num_or(cfg.at("noise"), "noise", "r", job.sc.noise_r);
  job.sc.eps = num_or(cfg, "", "eps", job.sc.eps);
  job.sc.mu = num_or(cfg, "", "mu", job.sc.mu);
  job.sc.T = num_or(cfg, "", "T", job.sc.T);
  const json& cand = member(cfg, "", "candidates");
  if (!cand.is_array() || cand.empty())
    config_fail("candidates", "expected a nonempty array");
  for (const json& v : cand)
    job.sc.candidates.push_back(int_entry(v, "candidates"));
  job.sc.anchor_K = int_or(cfg, "", "anchor_K", job.sc.anchor_K);
  const int paths_default = int_or(cfg, "", "paths", job.sc.paths_main);
  job.sc.paths_anchor = int_or(cfg, "", "paths_anchor", paths_default);
  job.sc.paths_main = int_or(cfg, "", "paths_main", paths_default);
  job.sc.seed = u64_or(cfg, "", "seed", 0);
  job.sc.p_moment = num_or(cfg, "", "p", job.sc.p_moment);
  if (cfg.contains("u0")) job.sc.u0 = field_from_modes(cfg.at("u0"), "u0");
  return job;
}

struct LemmaJob {
  int tuples = 1000;
  std::uint64_t seed = 0;
  long max_m = 10000;
};

inline LemmaJob lemmas_from_config(const json& cfg) {
  LemmaJob job;
  job.tuples = int_or(cfg, "", "tuples", job.tuples);
  job.seed = u64_or(cfg, "", "seed", 0);
  job.max_m = int_or(cfg, "", "max_m", static_cast<int>(job.max_m));
  return job;
}

inline std::string timestamp_utc() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline void write_manifest(const std::filesystem::path& path, const json& m) {
  std::ofstream f = open_for_write(path.string());
  f << m.dump(2) << '\n';
}

}  // namespace detail

// Parses, validates, runs, reports. The digest is taken after seed and
// path-count overrides are merged, so it names the effective experiment;
// json objects serialize with sorted keys, which keeps the digest stable
// under key reordering in the file.
inline int dispatch(const std::string& subcommand,
                    const std::string& config_path, const Overrides& ov) {
  const bool known =
      subcommand == "run-convergence" || subcommand == "run-lemma-tests" ||
      subcommand == "run-meshing" || subcommand == "run-moments" ||
      subcommand == "print-plan";
  if (!known) {
    std::fprintf(stderr, "unknown subcommand '%s'\n", subcommand.c_str());
    return 2;
  }

  json cfg;
  try {
    std::ifstream f(config_path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open config: " + config_path);
    cfg = json::parse(f);
    if (!cfg.is_object())
      throw std::invalid_argument("config root must be an object");
  } catch (const std::exception& ex) {
    std::fprintf(stderr, "config error: %s\n", ex.what());
    return 2;
  }

  if (ov.seed) cfg["seed"] = *ov.seed;
  if (ov.paths) cfg["paths"] = *ov.paths;
  const std::string digest = digest_hex(fnv1a64(cfg.dump()));
  const unsigned threads = ov.threads ? *ov.threads : default_threads();

  // Build and validate the whole job before touching the filesystem, so a
  // bad config cannot leave a half-written run directory behind.
  std::string kind;
  ExperimentPlan plan;
  detail::MeshingJob mjob;
  detail::LemmaJob ljob;
  try {
    kind = detail::str_at(cfg, "", "experiment");
    const std::string want = subcommand == "run-convergence" ? "convergence"
                             : subcommand == "run-lemma-tests" ? "lemmas"
                             : subcommand == "run-meshing"     ? "meshing"
                             : subcommand == "run-moments"     ? "moments"
                                                               : kind;
    if (kind != want)
      detail::config_fail("experiment",
                          "'" + kind + "' does not match " + subcommand);
    if (kind == "convergence") {
      plan = detail::plan_from_config(cfg, false);
      validate_plan(plan);
    } else if (kind == "moments") {
      plan = detail::plan_from_config(cfg, true);
      validate_moment_plan(plan);
    } else if (kind == "meshing") {
      mjob = detail::meshing_from_config(cfg);
      validate_meshing(mjob.delta, mjob.sc);
    } else if (kind == "lemmas") {
      ljob = detail::lemmas_from_config(cfg);
      if (ljob.tuples < 1) detail::config_fail("tuples", "must be at least 1");
      if (ljob.max_m < 1) detail::config_fail("max_m", "must be at least 1");
    } else {
      detail::config_fail("experiment", "unknown kind '" + kind + "'");
    }
  } catch (const std::exception& ex) {
    std::fprintf(stderr, "config error: %s\n", ex.what());
    return 2;
  }

  if (subcommand == "print-plan") {
    std::printf("%s\n", cfg.dump(2).c_str());
    std::printf("digest: %s\n", digest.c_str());
    return 0;
  }

  const std::filesystem::path run_dir =
      std::filesystem::path(ov.out ? *ov.out : "runs") / digest;
  std::error_code ec;
  std::filesystem::create_directories(run_dir, ec);
  if (ec) {
    std::fprintf(stderr, "cannot create run directory %s: %s\n",
                 run_dir.string().c_str(), ec.message().c_str());
    return 1;
  }

  json manifest;
  manifest["digest"] = digest;
  manifest["version"] = kVersion;
  manifest["command"] = subcommand;
  manifest["seed"] = cfg.contains("seed") ? cfg["seed"] : json(0);
  manifest["config"] = cfg;
  manifest["timestamp"] = detail::timestamp_utc();
  json outputs = json::array();

  try {
    if (kind == "convergence") {
      const ErrorTable table = strong_error(plan, threads);
      const ConvergenceReport rep =
          fit_rate(table, plan.axis, plan.expected_rate, plan.rate_tol);
      write_errors_csv((run_dir / "errors.csv").string(), table);
      write_rates_csv((run_dir / "rates.csv").string(), {rep});
      outputs.push_back("errors.csv");
      outputs.push_back("rates.csv");
      manifest["result"] = {{"axis", axis_name(rep.axis)},
                            {"slope", rep.slope},
                            {"se_slope", rep.se_slope},
                            {"expected_rate", rep.expected_rate},
                            {"rate_tol", rep.rate_tol},
                            {"points_used", rep.points_used},
                            {"points_excluded", rep.points_excluded},
                            {"pass", rep.pass},
                            {"note", rep.note}};
      manifest["outputs"] = outputs;
      detail::write_manifest(run_dir / "manifest.json", manifest);
      if (!rep.pass)
        std::fprintf(stderr, "rate check failed: slope %.4f vs %.3f +- %.3f\n",
                     rep.slope, rep.expected_rate, rep.rate_tol);
      return rep.pass ? 0 : 1;
    }

    if (kind == "moments") {
      const MomentTable mt = moment_diagnostic(plan, threads);
      write_moments_csv((run_dir / "moments.csv").string(), mt);
      outputs.push_back("moments.csv");
      int level_rows = 0, holder_rows = 0;
      for (const MomentRow& r : mt.rows) {
        if (r.kind == "level") ++level_rows;
        if (r.kind == "holder") ++holder_rows;
      }
      std::vector<ConvergenceReport> fits;
      if (level_rows >= 3)
        fits.push_back(fit_moment_level(mt, plan.expected_rate, plan.rate_tol));
      if (holder_rows >= 3) {
        const double nan = std::numeric_limits<double>::quiet_NaN();
        double he = nan, ht = nan;
        if (cfg.contains("holder")) {
          he = detail::num_or(cfg.at("holder"), "holder", "expected_rate", he);
          ht = detail::num_or(cfg.at("holder"), "holder", "rate_tol", ht);
        }
        fits.push_back(fit_holder(mt, he, ht));
      }
      bool all_pass = true;
      json jfits = json::array();
      for (const ConvergenceReport& r : fits) {
        all_pass = all_pass && r.pass;
        jfits.push_back({{"axis", axis_name(r.axis)},
                         {"slope", r.slope},
                         {"expected_rate", r.expected_rate},
                         {"rate_tol", r.rate_tol},
                         {"pass", r.pass},
                         {"note", r.note}});
      }
      if (!fits.empty()) {
        write_rates_csv((run_dir / "rates.csv").string(), fits);
        outputs.push_back("rates.csv");
      }
      manifest["result"] = {{"fits", jfits}, {"pass", all_pass}};
      manifest["outputs"] = outputs;
      detail::write_manifest(run_dir / "manifest.json", manifest);
      if (!all_pass) std::fprintf(stderr, "moment rate check failed\n");
      return all_pass ? 0 : 1;
    }

    if (kind == "meshing") {
      const MeshingReport rep = meshing_check(mjob.delta, mjob.sc, threads);
      {
        std::ofstream f =
            detail::open_for_write((run_dir / "meshing.csv").string());
        f << "K,predicted,selected\n";
        for (std::size_t i = 0; i < rep.candidates.size(); ++i)
          f << rep.candidates[i] << ',' << format_double(rep.predicted[i])
            << ',' << (rep.candidates[i] == rep.selected_K ? 1 : 0) << '\n';
      }
      outputs.push_back("meshing.csv");
      manifest["result"] = {{"delta", rep.delta},
                            {"anchor_e_hat", rep.anchor_e_hat},
                            {"C_fit", rep.C_fit},
                            {"feasible", rep.feasible},
                            {"selected_K", rep.selected_K},
                            {"M_selected", rep.M_selected},
                            {"tau_selected", rep.tau_selected},
                            {"required_K", rep.required_K},
                            {"e_hat", rep.e_hat},
                            {"stderr", rep.se},
                            {"pass", rep.pass},
                            {"note", rep.note}};
      manifest["outputs"] = outputs;
      detail::write_manifest(run_dir / "manifest.json", manifest);
      if (!rep.pass)
        std::fprintf(stderr, "meshing check failed: %s\n", rep.note.c_str());
      return rep.pass ? 0 : 1;
    }

    const std::vector<LemmaRow> rows =
        lemma_suite(ljob.tuples, ljob.seed, ljob.max_m);
    write_lemmas_csv((run_dir / "lemmas.csv").string(), rows);
    outputs.push_back("lemmas.csv");
    int failures = 0;
    for (const LemmaRow& r : rows)
      if (!r.pass) ++failures;
    manifest["result"] = {
        {"rows", rows.size()}, {"failures", failures}, {"pass", failures == 0}};
    manifest["outputs"] = outputs;
    detail::write_manifest(run_dir / "manifest.json", manifest);
    if (failures > 0) std::fprintf(stderr, "%d lemma row(s) failed\n", failures);
    return failures == 0 ? 0 : 1;
  } catch (const std::exception& ex) {
    manifest["error"] = ex.what();
    manifest["outputs"] = outputs;
    detail::write_manifest(run_dir / "manifest.json", manifest);
    std::fprintf(stderr, "run failed: %s\n", ex.what());
    return 1;
  }
}

}  // namespace snls

#endif  // SNLS_CLI_HPP
