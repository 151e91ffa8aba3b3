#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qhd/commands.hpp"
#include "qhd/config.hpp"
#include "qhd/records.hpp"
#include "qhd/server.hpp"

namespace {

struct CommonOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<double> omega;
  std::optional<double> sigma;
};

void add_common(CLI::App* cmd, CommonOptions& o, const std::string& out_help) {
  cmd->add_option("--config", o.config, "JSON configuration (default: $QHD_CONFIG)");
  cmd->add_option("--seed", o.seed, "Master seed, overriding the configuration");
  cmd->add_option("--out", o.out, out_help);
  cmd->add_option("--omega", o.omega, "Background effort omega")->check(CLI::PositiveNumber);
}

qhd::RunConfig resolve(const CommonOptions& o) {
  qhd::RunConfig c =
      qhd::load_config(o.config.empty() ? std::nullopt : std::optional<std::filesystem::path>(o.config));
  if (o.seed) c.seed = *o.seed;
  if (o.omega) c.omega = *o.omega;
  if (o.sigma) c.sigma = *o.sigma;
  c.validate();
  return c;
}

std::optional<std::filesystem::path> optional_path(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return std::filesystem::path(s);
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quasi-hyperbolic present-bias simulation and estimation"};
  app.require_subcommand(1);

  CommonOptions sim_opts;
  auto* sim = app.add_subcommand("simulate", "Simulate a decision panel and write it as CSV");
  add_common(sim, sim_opts, "Decision CSV to write");
  sim->get_option("--out")->required();
  sim->add_option("--sigma", sim_opts.sigma, "Latent noise SD")->check(CLI::PositiveNumber);

  CommonOptions est_opts;
  std::string est_in;
  auto* est = app.add_subcommand("estimate", "Fit the Tobit reduced form and print the report");
  est->add_option("input", est_in, "Decision CSV")->required();
  add_common(est, est_opts, "Also write the result JSON here");

  CommonOptions hist_opts;
  std::string hist_in;
  auto* hist = app.add_subcommand("hist", "Effort-share histograms at the certain rate");
  hist->add_option("input", hist_in, "Decision CSV")->required();
  add_common(hist, hist_opts, "Also write the histogram CSV here");

  CommonOptions sweep_opts;
  std::string sweep_in;
  std::vector<double> omegas{10.0, 100.0, 1000.0};
  auto* sweep = app.add_subcommand("sweep-omega", "Re-estimate across background effort values");
  sweep->add_option("input", sweep_in, "Decision CSV")->required();
  add_common(sweep, sweep_opts, "Also write the sweep CSV here");
  sweep->add_option("--omegas", omegas, "Omega values to try")->delimiter(',');

  CommonOptions serve_opts;
  std::optional<int> port;
  std::string static_dir;
  auto* serve = app.add_subcommand("serve", "Serve the session runner and its JSON endpoints");
  add_common(serve, serve_opts, "Decision CSV that completed sessions are appended to");
  serve->add_option("--port", port, "TCP port")->check(CLI::Range(1, 65535));
  serve->add_option("--static-dir", static_dir, "Directory of UI assets");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) {
      qhd::cmd_simulate(resolve(sim_opts), sim_opts.out, std::cout);
    } else if (est->parsed()) {
      qhd::cmd_estimate(est_in, resolve(est_opts), std::cout, optional_path(est_opts.out));
    } else if (hist->parsed()) {
      qhd::cmd_hist(hist_in, resolve(hist_opts), std::cout, optional_path(hist_opts.out));
    } else if (sweep->parsed()) {
      qhd::cmd_sweep_omega(sweep_in, resolve(sweep_opts), omegas, std::cout, optional_path(sweep_opts.out));
    } else if (serve->parsed()) {
      qhd::RunConfig c = resolve(serve_opts);
      if (port) c.serve.port = *port;
      if (!static_dir.empty()) c.serve.static_dir = static_dir;
      if (!serve_opts.out.empty()) c.serve.output = serve_opts.out;
      return qhd::cmd_serve(c, std::cerr);
    }
  } catch (const qhd::ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
