// Acceptance gate: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Usage: acceptance [WORK_DIR]

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <spikechain/spikechain.hpp>

#include "oracles.hpp"

using namespace spikechain;
namespace fs = std::filesystem;

namespace {

// Pinned thresholds.
constexpr double kGroundResidual = 1e-8;
constexpr double kGroundOracleRel = 1e-6;
constexpr double kDecayDefect = 1e-3;
constexpr double kGroundSeconds = 5.0;
constexpr double kSlopeLo = -1.02, kSlopeHi = -0.98;
constexpr double kPrefactorBand = 0.05;
constexpr double kNu2Refine = 1e-8;
constexpr double kKernelSeconds = 60.0;
constexpr double kOddness = 1e-8;
constexpr double kCompatibility = 1e-8;
constexpr double kTerminalFraction = 0.5;
constexpr double kShootSecondsPerEps = 10.0;
constexpr double kStability = 3.0;
constexpr double kResidualScale = 1e-12;
constexpr double kMinGap = 0.8;
constexpr double kEndGapLo = 1.5, kEndGapHi = 2.5;
constexpr double kOracleCoordinate = 1e-9;
constexpr double kSymmetry = 1e-8;
constexpr double kClosingShootTols = 10.0;
constexpr double kAlphaLo = 1.8, kAlphaHi = 2.2;
constexpr double kMidpointExact = 1e-10;
constexpr double kEvennessZero = 1e-8;
constexpr double kEvennessSpread = 2.0;

const std::vector<double> kSweep = {1e-2, 5e-3, 2e-3, 1e-3};

using Clock = std::chrono::steady_clock;
double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string join(const std::vector<double>& v) {
  std::string s;
  for (double x : v) s += (s.empty() ? "" : " ") + fmt(x);
  return s;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

int failures = 0;

void verdict(int id, const char* title, bool ok, const std::string& detail) {
  std::printf("criterion %2d %s  %s: %s\n", id, ok ? "PASS" : "FAIL", title, detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path work = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "spikechain_acceptance";
  fs::remove_all(work);
  fs::create_directories(work / "cache");
  RunConfig cfg;
  cfg.cache_dir = (work / "cache").string();
  cfg.eps = kSweep;
  const unsigned threads = std::max(1u, std::thread::hardware_concurrency());
  const CurvatureModel model = make_model(cfg.geometry);

  try {
    // 1. ground state
    auto t0 = Clock::now();
    const GroundStateProfile prof = solve_ground_state(cfg.p, cfg.ground_state_tol, cfg.R_max);
    const double gs_time = seconds_since(t0);
    {
      const double oracle = oracles::relaxation_w0_extrapolated(cfg.p);
      const double rel = std::fabs(prof.w0() - oracle) / oracle;
      const double R = prof.R_max();
      const double decay = std::fabs(prof.w_prime(R) / prof.w(R) + 1.0);
      const bool ok = prof.ode_residual_max() <= kGroundResidual && rel <= kGroundOracleRel && decay <= kDecayDefect &&
                      gs_time < kGroundSeconds;
      verdict(1, "ground-state fidelity", ok,
              "residual " + fmt(prof.ode_residual_max()) + ", w(0) " + fmt(prof.w0()) + " vs oracle rel " + fmt(rel) +
                  ", |w'/w+1| at R_max " + fmt(decay) + ", " + fmt(gs_time) + " s");
    }
    write_profile(detail::profile_cache_path(cfg), prof);

    // 2. kernel asymptotics
    t0 = Clock::now();
    const InteractionKernel kernel = build_kernel(prof, cfg.s_min, cfg.s_max, cfg.ds, quadrature_of(cfg), threads);
    const double kernel_time = seconds_since(t0);
    write_kernel(detail::kernel_cache_path(cfg), kernel);
    {
      std::vector<double> s, lp;
      double lo = std::numeric_limits<double>::infinity(), hi = -lo;
      for (std::size_t i = 0; i < kernel.s_grid().size(); ++i) {
        const double x = kernel.s_grid()[i];
        if (x < cfg.s_max - 4.0 - 1e-9) continue;
        s.push_back(x);
        lp.push_back(std::log(kernel.psi_values()[i]));
        const double q = kernel.log_psi1(x) + x + 0.5 * std::log(x);
        lo = std::min(lo, q);
        hi = std::max(hi, q);
      }
      double ms = 0, ml = 0;
      for (std::size_t i = 0; i < s.size(); ++i) ms += s[i], ml += lp[i];
      ms /= s.size();
      ml /= s.size();
      double sxy = 0, sxx = 0;
      for (std::size_t i = 0; i < s.size(); ++i) sxy += (s[i] - ms) * (lp[i] - ml), sxx += (s[i] - ms) * (s[i] - ms);
      const double slope = sxy / sxx;
      QuadratureSpec fine = quadrature_of(cfg);
      fine.order *= 2;
      fine.panel_width /= 2;
      const double nu2_fine = compute_nu2(prof, fine);
      const double nu2_drift = std::fabs(nu2_fine - kernel.nu2()) / kernel.nu2();
      const bool ok = slope >= kSlopeLo && slope <= kSlopeHi && hi - lo <= kPrefactorBand && kernel.nu2() > 0.0 &&
                      nu2_drift <= kNu2Refine && kernel_time < kKernelSeconds;
      verdict(2, "kernel asymptotics", ok,
              "slope " + fmt(slope) + ", prefactor band " + fmt(hi - lo) + ", nu2 " + fmt(kernel.nu2()) +
                  " (refinement drift " + fmt(nu2_drift) + "), table built in " + fmt(kernel_time) + " s");
    }

    // 3. oddness and zero
    {
      const double psi3 = compute_psi(prof, 3.0);
      const double zero = std::fabs(compute_psi(prof, 0.0)) / psi3;
      double odd = 0.0;
      for (double s : {1.0, 3.0, 7.0}) {
        const double a = compute_psi(prof, s);
        odd = std::max(odd, std::fabs(a + compute_psi(prof, -s)) / a);
      }
      verdict(3, "oddness and zero", zero <= kOddness && odd <= kOddness,
              "|Psi(0)|/Psi(3) " + fmt(zero) + ", max |Psi(s)+Psi(-s)|/Psi(s) " + fmt(odd));
    }

    // the sweep behind criteria 4-7, 9, 10
    SweepInput in;
    in.profile = &prof;
    in.kernel = &kernel;
    in.model = model;
    in.eps = kSweep;
    in.options = pipeline_of(cfg);
    in.threads = 1;  // per-eps timings stay single-threaded
    in.checks = {"residual_exactness"};
    const VerificationReport rep = run_sweep(in);
    bool all_ok = true;
    for (const auto& r : rep.runs) {
      if (!r.ok) std::printf("  eps %g failed: %s\n", r.eps, r.error.c_str());
      all_ok = all_ok && r.ok;
    }
    auto series = [&](auto fn) {
      std::vector<double> v;
      for (const auto& r : rep.runs) v.push_back(r.ok ? fn(r) : std::nan(""));
      return v;
    };
    auto lnln = [](double e) { return std::log(-std::log(e)); };

    // 4. shooting compatibility
    {
      const auto compat = series([&](const EpsRun& r) {
        return std::fabs(r.sol.rho_b / (r.eps * std::log(r.eps) * model.Hp(r.sol.x_b)) - 1.0);
      });
      const auto dev = series([&](const EpsRun& r) {
        return std::fabs(r.sol.rho_b / r.sol.h() + model.Hp(model.s_begin() + r.sol.b_eps()));
      });
      const auto runtime = series([](const EpsRun& r) { return r.runtime; });
      double worst_compat = 0.0, worst_time = 0.0;
      for (double c : compat) worst_compat = std::max(worst_compat, c);
      for (double t : runtime) worst_time = std::max(worst_time, t);
      const double terminal_hp = std::fabs(model.Hp(model.s_begin() + rep.runs.back().sol.b_eps()));
      const bool ok = all_ok && worst_compat <= kCompatibility && strictly_decreasing(dev) &&
                      dev.back() <= kTerminalFraction * terminal_hp && worst_time < kShootSecondsPerEps;
      verdict(4, "shooting compatibility", ok,
              "compatibility defect " + fmt(worst_compat) + ", |rho_b/h + H'(b_eps)| " + join(dev) + " (terminal bound " +
                  fmt(kTerminalFraction * terminal_hp) + "), slowest eps " + fmt(worst_time) + " s");
    }

    // 5. error terms
    {
      const auto emax = series([](const EpsRun& r) { return double(r.initial.E_max) / r.eps; });
      const auto esum = series([](const EpsRun& r) { return double(r.initial.E_sum) / r.eps; });
      const auto ek = series([&](const EpsRun& r) {
        return std::fabs(double(r.initial.E_k)) * std::fabs(std::log(r.eps)) / (r.eps * r.eps * lnln(r.eps));
      });
      const double a = stability_ratio(emax), b = stability_ratio(esum), c = stability_ratio(ek);
      verdict(5, "error-term scaling", all_ok && a <= kStability && b <= kStability && c <= kStability,
              "max|E_i|/eps " + join(emax) + " (" + fmt(a) + "x); sum|E_i|/eps " + join(esum) + " (" + fmt(b) +
                  "x); closing constant " + join(ek) + " (" + fmt(c) + "x); limit " + fmt(kStability) + "x");
    }

    // 6. correction bound
    {
      const auto res = series([](const EpsRun& r) { return double(r.solved.max_residual) / (r.eps * r.eps); });
      const auto y = series([&](const EpsRun& r) { return double(r.solved.y_inf_norm) / (r.eps * lnln(r.eps)); });
      double worst = 0.0;
      for (double v : res) worst = std::max(worst, v);
      const double ratio = stability_ratio(y);
      verdict(6, "correction bound", all_ok && worst <= kResidualScale && ratio <= kStability,
              "max residual/eps^2 " + fmt(worst) + "; ||y||/(eps ln(-ln eps)) " + join(y) + " (" + fmt(ratio) +
                  "x, limit " + fmt(kStability) + "x)");
    }

    // 7. spacing
    {
      std::vector<double> min_gap, first, last;
      for (const auto& r : rep.runs) {
        if (!r.ok) continue;
        const auto& s = r.solved.s;
        const double unit = -r.eps * std::log(r.eps);
        double m = std::numeric_limits<double>::infinity();
        for (std::size_t i = 1; i + 2 < s.size(); ++i) m = std::min(m, double(s[i + 1] - s[i]) / unit);
        min_gap.push_back(m);
        first.push_back(double(s[1] - s[0]) / unit);
        last.push_back(double(s[s.size() - 1] - s[s.size() - 2]) / unit);
      }
      bool ok = all_ok;
      for (double m : min_gap) ok = ok && m >= kMinGap;
      for (const auto* v : {&first, &last}) {
        ok = ok && v->back() >= kEndGapLo && v->back() <= kEndGapHi;
        for (std::size_t i = 1; i < v->size(); ++i)
          ok = ok && std::fabs((*v)[i] - 2.0) < std::fabs((*v)[i - 1] - 2.0);
      }
      verdict(7, "spacing laws", ok,
              "min interior gap/(eps|ln eps|) " + join(min_gap) + "; first end gap " + join(first) + "; last end gap " +
                  join(last));
    }

    // 8. small-instance oracle
    {
      const double eps = 0.03;
      const EpsRun r = run_eps(model, kernel, eps, pipeline_of(cfg));
      bool ok = r.ok && r.solved.k <= 12;
      double worst = std::numeric_limits<double>::infinity();
      if (r.ok) {
        std::vector<double> start;
        for (auto v : r.initial.s0) start.push_back(double(v));
        const auto ref = oracles::powell_balance(model, kernel, eps, start);
        worst = 0.0;
        for (std::size_t i = 0; i < ref.s.size(); ++i) worst = std::max(worst, std::fabs(ref.s[i] - double(r.solved.s[i])));
      }
      ok = ok && worst <= kOracleCoordinate;
      verdict(8, "small-instance oracle", ok,
              "eps " + fmt(eps) + ", k " + std::to_string(r.ok ? r.solved.k : 0) + ", max coordinate difference vs Powell hybrid " +
                  fmt(worst));
    }

    // 9. symmetry
    {
      const double span = model.s_begin() + model.s_end();
      const auto mirror = series([&](const EpsRun& r) {
        double m = 0.0;
        const auto& s = r.solved.s;
        for (std::size_t i = 0; i < s.size(); ++i) m = std::max(m, std::fabs(double(s[i] + s[s.size() - 1 - i]) - span));
        return m;
      });
      const auto closing = series([](const EpsRun& r) { return std::fabs(double(r.initial.initial_r_k)) / r.sol.shoot_tol; });
      bool ok = all_ok;
      for (double m : mirror) ok = ok && m <= kSymmetry;
      for (double c : closing) ok = ok && c <= kClosingShootTols;
      verdict(9, "symmetry", ok,
              "max |s_i + s_{k+1-i} - b| " + join(mirror) + "; |r_k(s0)|/shoot_tol " + join(closing) + " (limit " +
                  fmt(kClosingShootTols) + ")");
    }

    // 10. midpoint rule
    {
      const auto h = series([](const EpsRun& r) { return r.sol.h(); });
      const auto err = series([](const EpsRun& r) { return r.midpoint.max_error; });
      const double alpha = loglog_slope(h, err);
      const double c = midpoint_rule_errors([](double) { return -7.5; }, 0.01, 100).max_error;
      const double l = midpoint_rule_errors([](double t) { return 3.0 - 40.0 * t; }, 0.01, 100).max_error;
      const bool ok = all_ok && alpha >= kAlphaLo && alpha <= kAlphaHi && c <= kMidpointExact && l <= kMidpointExact;
      verdict(10, "midpoint rule", ok,
              "alpha " + fmt(alpha) + " from errors " + join(err) + "; constant/linear integrands " + fmt(c) + ", " + fmt(l));
    }

    // 11. evenness
    {
      const auto same = check_evenness(prof, 8.0, 8.0);
      const auto unit = check_evenness(prof, 8.0, 9.0);
      const double zero = std::fabs(same.I) / std::fabs(unit.I);
      std::vector<double> ratios;
      for (double q = 8.0; q <= 12.0 + 1e-9; q += 0.5) ratios.push_back(check_evenness(prof, q, q + 0.05).ratio);
      const double spread = stability_ratio(ratios);
      verdict(11, "evenness cancellation", zero <= kEvennessZero && spread <= kEvennessSpread,
              "|I(8,8)|/|I(8,9)| " + fmt(zero) + "; ratio over q1 in [8,12] " + join(ratios) + " (spread " + fmt(spread) + ")");
    }

    // 12. determinism of the sweep verb
    {
      auto silent = [](const std::string&) {};
      RunConfig a = cfg, b = cfg;
      a.output_dir = (work / "sweep_a").string();
      b.output_dir = (work / "sweep_b").string();
      a.threads = 1;
      b.threads = threads + 1;
      run_sweep_verb(a, silent);
      run_sweep_verb(b, silent);
      std::size_t files = 0, differing = 0;
      for (const auto& entry : fs::recursive_directory_iterator(a.output_dir)) {
        if (!entry.is_regular_file()) continue;
        const auto rel = fs::relative(entry.path(), a.output_dir);
        if (rel.filename() == "report.txt") continue;  // carries wall-clock timings
        ++files;
        if (slurp(entry.path()) != slurp(fs::path(b.output_dir) / rel)) ++differing;
      }
      verdict(12, "end-to-end determinism", files > 0 && differing == 0,
              std::to_string(files) + " machine-readable files compared, " + std::to_string(differing) + " differ");
    }
  } catch (const std::exception& e) {
    std::printf("acceptance aborted: %s\n", e.what());
    return 2;
  }
  return failures == 0 ? 0 : 1;
}
