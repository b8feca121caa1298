#pragma once

// Batch driver behind the command-line verbs: cached tables, per-eps runs and
// report files.

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <thread>
#include <vector>

#include "spikechain/continuum_ode.hpp"
#include "spikechain/discrete_solver.hpp"
#include "spikechain/error.hpp"
#include "spikechain/geometry.hpp"
#include "spikechain/ground_state.hpp"
#include "spikechain/interaction.hpp"
#include "spikechain/run_config.hpp"
#include "spikechain/table_io.hpp"
#include "spikechain/verifier.hpp"

namespace spikechain {

using Logger = std::function<void(const std::string&)>;

namespace fs = std::filesystem;

inline std::string eps_label(double eps) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "eps_%g", eps);
  return buf;
}

inline QuadratureSpec quadrature_of(const RunConfig& c) {
  QuadratureSpec q;
  q.order = c.quadrature_order;
  q.panel_width = c.quadrature_panel_width;
  q.rel_tol = c.quadrature_rel_tol;
  return q;
}

inline PipelineOptions pipeline_of(const RunConfig& c) {
  PipelineOptions o;
  o.continuum.rtol = c.integrator_rtol;
  o.continuum.shoot_tol = c.shoot_tol;
  o.solve.tol = c.solve_tol;
  o.lambda_C = c.lambda_C;
  return o;
}

inline unsigned thread_count(const RunConfig& c) {
  return c.threads > 0 ? c.threads : std::max(1u, std::thread::hardware_concurrency());
}

namespace detail {

inline std::string profile_cache_path(const RunConfig& c) {
  return (fs::path(c.cache_dir) / ("profile_p" + io::fmt_double(c.p) + ".tsv")).string();
}
inline std::string kernel_cache_path(const RunConfig& c) {
  return (fs::path(c.cache_dir) / ("kernel_p" + io::fmt_double(c.p) + ".tsv")).string();
}

inline bool header_matches(const io::Table& t, const std::vector<std::pair<std::string, std::string>>& want) {
  for (const auto& [k, v] : want)
    if (!t.has(k) || t.get(k) != v) return false;
  return true;
}

inline void write_json(const fs::path& path, const nlohmann::ordered_json& j) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorCode::ArtifactMissing, "cli_io", "cannot write " + path.string());
  os << j.dump(2) << '\n';
}

inline void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorCode::ArtifactMissing, "cli_io", "cannot write " + path.string());
  os << text;
}

}  // namespace detail

/// Profile from the cache when its header matches the configuration,
/// otherwise solved and written back.
inline GroundStateProfile obtain_profile(const RunConfig& c, const Logger& log, bool allow_compute = true) {
  const std::string path = detail::profile_cache_path(c);
  const GroundStateOptions defaults;
  const std::vector<std::pair<std::string, std::string>> want = {{"p", io::fmt_double(c.p)},
                                                                  {"R_max", io::fmt_double(c.R_max)},
                                                                  {"tol", io::fmt_double(c.ground_state_tol)},
                                                                  {"dr", io::fmt_double(defaults.dr)}};
  if (fs::exists(path)) {
    if (detail::header_matches(io::read_table(path), want)) {
      log("profile cache hit: " + path);
      return read_profile(path);
    }
    log("profile cache stale: " + path);
  }
  if (!allow_compute) throw Error(ErrorCode::ArtifactMissing, "cli_io", "no matching profile at " + path);
  log("solving ground state (p = " + io::fmt_double(c.p) + ")");
  GroundStateProfile prof = solve_ground_state(c.p, c.ground_state_tol, c.R_max);
  fs::create_directories(c.cache_dir);
  write_profile(path, prof);
  return prof;
}

inline InteractionKernel obtain_kernel(const RunConfig& c, const GroundStateProfile& prof, const Logger& log,
                                       bool allow_compute = true) {
  const std::string path = detail::kernel_cache_path(c);
  const QuadratureSpec q = quadrature_of(c);
  const std::vector<std::pair<std::string, std::string>> want = {
      {"p", io::fmt_double(c.p)},
      {"R_max", io::fmt_double(c.R_max)},
      {"profile_tol", io::fmt_double(prof.tol())},
      {"profile_dr", io::fmt_double(prof.dr())},
      {"s_min", io::fmt_double(c.s_min)},
      {"s_max", io::fmt_double(c.s_max)},
      {"quad_order", std::to_string(q.order)},
      {"quad_panel_width", io::fmt_double(q.panel_width)},
      {"quad_rel_tol", io::fmt_double(q.rel_tol)}};
  if (fs::exists(path)) {
    const io::Table t = io::read_table(path);
    const std::size_t expect_rows = static_cast<std::size_t>(std::llround((c.s_max - c.s_min) / c.ds)) + 1;
    if (detail::header_matches(t, want) && t.rows.size() == expect_rows) {
      log("kernel cache hit: " + path);
      return read_kernel(path);
    }
    log("kernel cache stale: " + path);
  }
  if (!allow_compute) throw Error(ErrorCode::ArtifactMissing, "cli_io", "no matching kernel at " + path);
  log("building kernel on [" + io::fmt_double(c.s_min) + ", " + io::fmt_double(c.s_max) + "]");
  InteractionKernel k = build_kernel(prof, c.s_min, c.s_max, c.ds, q, thread_count(c));
  fs::create_directories(c.cache_dir);
  write_kernel(path, k);
  return k;
}

inline nlohmann::ordered_json run_summary(const EpsRun& r) {
  nlohmann::ordered_json j;
  j["eps"] = r.eps;
  j["ok"] = r.ok;
  if (!r.ok) {
    j["error"] = r.error;
    return j;
  }
  const auto& s = r.solved;
  const std::size_t k = s.s.size();
  const double unit = r.eps * -r.sol.lattice.ln_eps;
  double min_gap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i + 2 < k; ++i) min_gap = std::min(min_gap, double(s.s[i + 1] - s.s[i]) / unit);
  j["k"] = r.sol.k();
  j["h"] = r.sol.h();
  j["b_eps"] = r.sol.b_eps();
  j["continuum"] = {{"x_b", r.sol.x_b},
                    {"rho_b", r.sol.rho_b},
                    {"x0", r.sol.x0},
                    {"shoot_residual", r.sol.shoot_residual},
                    {"shoot_tol", r.sol.shoot_tol},
                    {"shoot_iterations", r.sol.iterations},
                    {"clamped_steps", r.sol.clamped_steps},
                    {"forward_mismatch", r.forward_mismatch}};
  j["error_terms"] = {{"max_interior", double(r.initial.E_max)},
                      {"sum_interior", double(r.initial.E_sum)},
                      {"closing", double(r.initial.E_k)}};
  j["solve"] = {{"path", to_string(s.path)},
                {"iterations", s.iterations},
                {"initial_max_residual", double(s.initial_max_residual)},
                {"max_residual", double(s.max_residual)},
                {"y_inf_norm", double(s.y_inf_norm)},
                {"lambda_y1_ok", s.lambda_y1_ok},
                {"lambda_second_ok", s.lambda_second_ok}};
  j["spacing"] = {{"min_interior_gap", min_gap},
                  {"first_gap", double(s.s[1] - s.s[0]) / unit},
                  {"last_gap", double(s.s[k - 1] - s.s[k - 2]) / unit}};
  j["midpoint_max_error"] = r.midpoint.max_error;
  return j;
}

inline void write_run_artifacts(const RunConfig& c, const EpsRun& r) {
  const fs::path dir = fs::path(c.output_dir) / eps_label(r.eps);
  fs::create_directories(dir);
  if (r.ok) {
    write_trajectory((dir / "trajectory.tsv").string(), r.sol);
    write_configuration((dir / "configuration.tsv").string(), r.solved);
  }
  detail::write_json(dir / "summary.json", run_summary(r));
}

inline void write_report(const RunConfig& c, const VerificationReport& rep) {
  const fs::path out(c.output_dir);
  fs::create_directories(out);
  detail::write_json(out / "report.json", report_json(rep));
  detail::write_text(out / "report.txt", report_text(rep));
  io::Table fits;
  fits.set("kind", "sweep_fits");
  fits.columns = {"check", "quantity", "value"};
  for (const auto& ch : rep.checks)
    for (const auto& [label, v] : ch.fitted) {
      std::string q = label;
      for (auto& ch2 : q)
        if (ch2 == ' ' || ch2 == '\t') ch2 = '_';
      fits.rows.push_back({ch.name, q, io::fmt_double(v)});
    }
  io::write_table((out / "sweep_fits.tsv").string(), fits);
}

/// `kernel` verb.
inline int run_kernel_verb(const RunConfig& c, const Logger& log) {
  const auto prof = obtain_profile(c, log);
  const auto k = obtain_kernel(c, prof, log);
  const fs::path dir = fs::path(c.output_dir) / "kernel";
  fs::create_directories(dir);
  write_kernel((dir / "psi.tsv").string(), k);
  log("nu2 = " + io::fmt_double(k.nu2()) + ", asymptotic constant = " + io::fmt_double(k.asym_constant()));
  return 0;
}

/// `solve` verb: first eps of the configuration only.
inline int run_solve_verb(const RunConfig& c, const Logger& log) {
  const CurvatureModel model = make_model(c.geometry);
  const H1Report h1 = validate_H1(model, c.mismatch_tol);
  if (!h1.pass) throw Error(ErrorCode::InvalidArgument, "geometry", "curvature model rejected: " + h1.reason);
  const auto prof = obtain_profile(c, log);
  const auto k = obtain_kernel(c, prof, log);
  const EpsRun r = run_eps(model, k, c.eps.front(), pipeline_of(c));
  write_run_artifacts(c, r);
  if (!r.ok) {
    log("solve failed: " + r.error);
    return 1;
  }
  log("eps = " + io::fmt_double(r.eps) + ": k = " + std::to_string(r.sol.k()) + ", max residual " +
      io::fmt_long_double(r.solved.max_residual) + " via " + to_string(r.solved.path));
  return 0;
}

/// `sweep` verb: every eps plus the verification report.
inline int run_sweep_verb(const RunConfig& c, const Logger& log) {
  SweepInput in;
  in.model = make_model(c.geometry);
  const H1Report h1 = validate_H1(in.model, c.mismatch_tol);
  if (!h1.pass) throw Error(ErrorCode::InvalidArgument, "geometry", "curvature model rejected: " + h1.reason);
  const auto prof = obtain_profile(c, log);
  const auto k = obtain_kernel(c, prof, log);
  in.profile = &prof;
  in.kernel = &k;
  in.eps = c.eps;
  in.options = pipeline_of(c);
  in.mismatch_tol = c.mismatch_tol;
  in.threads = thread_count(c);
  in.evenness_quadrature = quadrature_of(c);
  in.checks = c.checks;
  const VerificationReport rep = run_sweep(in);
  for (const auto& r : rep.runs) write_run_artifacts(c, r);
  const fs::path kdir = fs::path(c.output_dir) / "kernel";
  fs::create_directories(kdir);
  write_kernel((kdir / "psi.tsv").string(), k);
  write_report(c, rep);
  for (const auto& ch : rep.checks) log(std::string("[") + to_string(ch.status) + "] " + ch.name);
  return rep.all_pass() ? 0 : 1;
}

/// `check` verb: verifier suite from cached tables, plus a residual check of
/// the stored configurations. Nothing expensive is recomputed.
inline int run_check_verb(const RunConfig& c, const Logger& log) {
  SweepInput in;
  in.model = make_model(c.geometry);
  const auto prof = obtain_profile(c, log, false);
  const auto k = obtain_kernel(c, prof, log, false);
  in.profile = &prof;
  in.kernel = &k;
  in.eps = c.eps;
  in.options = pipeline_of(c);
  in.mismatch_tol = c.mismatch_tol;
  in.threads = thread_count(c);
  in.evenness_quadrature = quadrature_of(c);
  in.checks = c.checks;
  const VerificationReport rep = run_sweep(in);
  bool stored_ok = true;
  for (double eps : rep.eps) {
    const fs::path file = fs::path(c.output_dir) / eps_label(eps) / "configuration.tsv";
    if (!fs::exists(file)) {
      log("missing artifact " + file.string());
      stored_ok = false;
      continue;
    }
    const auto s = io::read_table(file.string()).column_values_ld("s");
    const Real tol = c.solve_tol > 0.0 ? Real(c.solve_tol) : Real(1e-12) * Real(eps) * Real(eps);
    const Real res = max_abs(residual(s, eps, k, in.model));
    const bool ok = res <= tol;
    log(file.string() + ": stored max residual " + io::fmt_long_double(res) + (ok ? " ok" : " ABOVE TOLERANCE"));
    stored_ok = stored_ok && ok;
  }
  write_report(c, rep);
  for (const auto& ch : rep.checks) log(std::string("[") + to_string(ch.status) + "] " + ch.name);
  return rep.all_pass() && stored_ok ? 0 : 1;
}

}  // namespace spikechain
