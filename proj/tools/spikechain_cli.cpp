// Command-line front end: spikechain <solve|sweep|kernel|check> CONFIG [flags]

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "spikechain/spikechain.hpp"

namespace {

struct Overrides {
  std::optional<double> p, R_max, shoot_tol, solve_tol, lambda_C;
  std::vector<double> eps;
  std::optional<std::string> cache_dir, output_dir;
  std::optional<unsigned> threads;
  std::vector<std::string> checks;
};

void add_flags(CLI::App& app, std::string& config, Overrides& o) {
  app.add_option("config", config, "run configuration (JSON)")->required()->check(CLI::ExistingFile);
  app.add_option("--p", o.p, "exponent of the nonlinearity");
  app.add_option("--eps", o.eps, "eps value(s)")->delimiter(',');
  app.add_option("--R-max", o.R_max, "ground-state truncation radius");
  app.add_option("--shoot-tol", o.shoot_tol, "shooting tolerance on rho(0)");
  app.add_option("--solve-tol", o.solve_tol, "residual tolerance of the balance system");
  app.add_option("--lambda-C", o.lambda_C, "constant of the configuration-space bounds");
  app.add_option("--cache-dir", o.cache_dir, "directory of cached profile/kernel tables");
  app.add_option("--output-dir", o.output_dir, "directory for run artifacts");
  app.add_option("--threads", o.threads, "worker threads (0: all cores)");
  app.add_option("--check", o.checks, "restrict the verifier to these checks")->delimiter(',');
}

spikechain::RunConfig resolve(const std::string& path, const Overrides& o) {
  std::ifstream is(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(is, nullptr, true, true);
  } catch (const nlohmann::json::exception& e) {
    throw spikechain::Error(spikechain::ErrorCode::ConfigParseError, "cli_io", path + ": " + e.what());
  }
  if (o.p) j["p"] = *o.p;
  if (!o.eps.empty()) j["eps"] = o.eps;
  if (o.R_max) j["R_max"] = *o.R_max;
  if (o.shoot_tol) j["tolerances"]["shoot"] = *o.shoot_tol;
  if (o.solve_tol) j["tolerances"]["solve"] = *o.solve_tol;
  if (o.lambda_C) j["lambda_C"] = *o.lambda_C;
  if (o.cache_dir) j["cache_dir"] = *o.cache_dir;
  if (o.output_dir) j["output_dir"] = *o.output_dir;
  if (o.threads) j["threads"] = *o.threads;
  if (!o.checks.empty()) j["checks"] = o.checks;
  return spikechain::parse_config(j);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"boundary spike chain construction"};
  app.require_subcommand(1);
  std::string config;
  Overrides o;
  struct Verb {
    const char* name;
    const char* help;
    int (*fn)(const spikechain::RunConfig&, const spikechain::Logger&);
  };
  const Verb verbs[] = {
      {"solve", "single eps: shoot, discretize, solve", spikechain::run_solve_verb},
      {"sweep", "eps list plus the verification report", spikechain::run_sweep_verb},
      {"kernel", "build or load the interaction kernel", spikechain::run_kernel_verb},
      {"check", "verifier suite on cached tables and stored configurations", spikechain::run_check_verb},
  };
  std::vector<CLI::App*> subs;
  for (const auto& v : verbs) {
    auto* sub = app.add_subcommand(v.name, v.help);
    add_flags(*sub, config, o);
    subs.push_back(sub);
  }
  CLI11_PARSE(app, argc, argv);

  auto log = [](const std::string& line) { std::cerr << line << '\n'; };
  try {
    const auto cfg = resolve(config, o);
    for (std::size_t i = 0; i < subs.size(); ++i)
      if (subs[i]->parsed()) return verbs[i].fn(cfg, log);
  } catch (const spikechain::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.code() == spikechain::ErrorCode::ConfigParseError ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
