#include "qhd/commands.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "qhd/records.hpp"

namespace qhd {

using nlohmann::json;

namespace {

std::string fixed(double v, int digits = 3) {
  if (!std::isfinite(v)) return "n/a";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string pvalue(double p) {
  if (!std::isfinite(p)) return "n/a";
  return p < 0.001 ? "<0.001" : fixed(p, 3);
}

std::string pad(const std::string& s, std::size_t width, bool right = true) {
  if (s.size() >= width) return s;
  return right ? std::string(width - s.size(), ' ') + s : s + std::string(width - s.size(), ' ');
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json test_json(const WaldTest& t) {
  return {{"hypothesis", t.hypothesis},
          {"contrast", t.contrast},
          {"statistic", t.statistic},
          {"p_value", t.p_value},
          {"scale", std::string(to_string(t.scale))}};
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  return out;
}

const WaldTest* find_test(const std::vector<WaldTest>& tests, const std::string& label) {
  for (const WaldTest& t : tests)
    if (t.hypothesis == label) return &t;
  return nullptr;
}

void print_grid(const EstimateReport& r, const std::vector<WaldTest>& tests, std::ostream& out) {
  const std::array<Param, 4> rows{Param::beta_crcd, Param::beta_cr, Param::beta_cd, Param::beta};
  const std::array<Param, 3> cols{Param::beta, Param::beta_cd, Param::beta_cr};
  out << pad("", 36) << "p-value of chi2(1) test that parameter equals\n";
  out << pad("Param.", 12, false) << pad("Estim.", 9) << pad("Std.Err.", 11) << pad("1", 9);
  for (Param c : cols) out << pad(std::string(param_name(c)), 10);
  out << "\n";
  for (Param row : rows) {
    out << pad(std::string(param_name(row)), 12, false) << pad(fixed(r.recovered[row]), 9)
        << pad("(" + fixed(r.recovered.se_of(row)) + ")", 11);
    const WaldTest* one = find_test(tests, std::string(param_name(row)) + " = 1");
    out << pad(one ? pvalue(one->p_value) : "n/a", 9);
    for (Param c : cols) {
      if (c == row) break;
      const WaldTest* t =
          find_test(tests, std::string(param_name(row)) + " = " + std::string(param_name(c)));
      out << pad(t ? pvalue(t->p_value) : "n/a", 10);
    }
    out << "\n";
  }
  for (Param p : {Param::delta, Param::alpha}) {
    const std::optional<WaldTest>& t = p == Param::delta ? r.delta_is_one : r.alpha_is_one;
    out << pad(std::string(param_name(p)), 12, false) << pad(fixed(r.recovered[p]), 9)
        << pad("(" + fixed(r.recovered.se_of(p)) + ")", 11) << pad(t ? pvalue(t->p_value) : "n/a", 9)
        << "\n";
  }
}

std::optional<WaldTest> try_test(const RecoveredParams& p, const Hypothesis& h, TestScale s) {
  try {
    return wald_test(p, h, s);
  } catch (const std::domain_error&) {
    return std::nullopt;
  }
}

} // namespace

SimulateSummary summarize(std::span<const DecisionRecord> records, double budget) {
  SimulateSummary s;
  s.rows = records.size();
  std::set<int> subjects;
  for (const DecisionRecord& r : records) {
    subjects.insert(r.subject_id);
    if (!r.incentivized) continue;
    ++s.analysis_rows;
    const Allocation a = allocation_from_day_two(r.e2, r.rate, budget);
    s.left_censored += a.censored == Censoring::at_lower ? 1 : 0;
    s.right_censored += a.censored == Censoring::at_upper ? 1 : 0;
  }
  s.subjects = static_cast<int>(subjects.size());
  return s;
}

SimulateSummary cmd_simulate(const RunConfig& config, const std::filesystem::path& out_path,
                             std::ostream& log) {
  config.validate();
  const std::vector<DecisionRecord> records = simulate_panel(config.population());
  write_records(out_path, records);
  const SimulateSummary s = summarize(records, config.schedule.budget);
  log << "wrote " << s.rows << " decisions for " << s.subjects << " subjects to "
      << out_path.string() << "\n"
      << "analysis rows: " << s.analysis_rows << " (" << s.left_censored << " left- and "
      << s.right_censored << " right-censored)\n";
  return s;
}

EstimateReport estimate(std::span<const DecisionRecord> records, const RunConfig& config) {
  if (!(config.omega > 0.0)) throw std::invalid_argument("omega must be positive");
  const std::vector<DecisionRecord> rows = filter_analysis_rows(records);
  EstimateReport r;
  r.omega = config.omega;
  r.primary_scale = config.test_scale;
  r.fit = fit(build_design(rows, config.omega, config.schedule.budget, config.schedule.delay_days),
              config.fit_options());
  if (!r.fit.converged) throw std::runtime_error("optimizer did not converge:\n" + r.fit.diagnostics);
  if (!(r.fit.params[1] < 0.0))
    throw std::runtime_error("estimated theta_lnrate is not negative (alpha <= 1); structural "
                             "parameters cannot be recovered\n" + r.fit.diagnostics);
  r.recovered = delta_method(r.fit);
  r.beta_tests = hypothesis_battery(r.recovered, TestScale::beta);
  r.theta_tests = hypothesis_battery(r.recovered, TestScale::theta);
  r.delta_is_one = try_test(r.recovered, Hypothesis::equals_one(Param::delta), TestScale::beta);
  r.alpha_is_one = try_test(r.recovered, Hypothesis::equals_one(Param::alpha), TestScale::beta);
  return r;
}

json EstimateReport::to_json() const {
  json theta = json::object();
  const Eigen::VectorXd se = fit.standard_errors();
  for (std::size_t j = 0; j < kReducedFormCovariates; ++j)
    theta[std::string(kCovariateNames[j])] = {
        {"estimate", fit.params[static_cast<Eigen::Index>(j)]},
        {"se", finite_or_null(se[static_cast<Eigen::Index>(j)])},
        {"support", fit.support[j]}};
  json structural = json::object();
  for (std::size_t k = 0; k < kStructuralParams; ++k) {
    const auto p = static_cast<Param>(k);
    structural[std::string(param_name(p))] = {{"estimate", finite_or_null(recovered[p])},
                                              {"se", finite_or_null(recovered.se_of(p))}};
  }
  json beta_grid = json::array(), theta_grid = json::array();
  for (const WaldTest& t : beta_tests) beta_grid.push_back(test_json(t));
  for (const WaldTest& t : theta_tests) theta_grid.push_back(test_json(t));
  json one = json::object();
  if (delta_is_one) one["delta"] = test_json(*delta_is_one);
  if (alpha_is_one) one["alpha"] = test_json(*alpha_is_one);

  return {{"n_obs", fit.n_obs},
          {"n_left", fit.n_left},
          {"n_right", fit.n_right},
          {"n_clusters", fit.n_clusters},
          {"loglik", fit.loglik},
          {"converged", fit.converged},
          {"sigma", fit.sigma()},
          {"log_sigma_se", finite_or_null(se[se.size() - 1])},
          {"theta", theta},
          {"structural", structural},
          {"tests", {{"primary_scale", std::string(to_string(primary_scale))},
                     {"beta", beta_grid},
                     {"theta", theta_grid},
                     {"equals_one", one}}},
          {"config",
           {{"omega", omega},
            {"restarts", fit.options.restarts},
            {"restart_seed", fit.options.restart_seed},
            {"cluster_correction", fit.options.cluster_correction},
            {"start", "OLS on interior rows, interior residual scale"},
            {"gradient_tolerance", fit.options.gradient_tolerance},
            {"step_tolerance", fit.options.step_tolerance},
            {"hessian", "central differences of the analytic gradient"},
            {"censoring", "two-limit, observation-specific limits in log-effort-ratio space"}}}};
}

void print_report(const EstimateReport& r, std::ostream& out) {
  const TobitFit& f = r.fit;
  const bool beta_primary = r.primary_scale == TestScale::beta;
  out << "Regression results (two-limit Tobit, robust standard errors clustered on subject)\n";
  out << "Observations: " << f.n_obs << " (" << f.n_left << " left- and " << f.n_right
      << " right-censored) from " << f.n_clusters << " subjects\n";
  out << "Log-likelihood: " << fixed(f.loglik, 4) << "\n\n";
  out << "Recovered parameters; tests on the " << to_string(r.primary_scale) << " scale\n";
  print_grid(r, beta_primary ? r.beta_tests : r.theta_tests, out);

  out << "\nReduced form (theta scale)\n";
  const Eigen::VectorXd se = f.standard_errors();
  for (std::size_t j = 0; j < kReducedFormCovariates; ++j)
    out << pad(std::string(kCovariateNames[j]), 15, false)
        << pad(fixed(f.params[static_cast<Eigen::Index>(j)], 4), 10)
        << pad("(" + fixed(se[static_cast<Eigen::Index>(j)], 4) + ")", 12) << "  support "
        << f.support[j] << "\n";
  out << pad("sigma", 15, false) << pad(fixed(f.sigma(), 4), 10) << "\n";
  out << "\nSame hypotheses, tests on the " << (beta_primary ? "theta" : "beta") << " scale\n";
  print_grid(r, beta_primary ? r.theta_tests : r.beta_tests, out);

  out << "\nFit configuration\n"
      << "  omega               " << r.omega << "\n"
      << "  start               OLS on interior rows, interior residual scale\n"
      << "  restarts            " << f.options.restarts << " perturbed (seed " << f.options.restart_seed
      << ")\n"
      << "  cluster correction  " << (f.options.cluster_correction ? "G/(G-1)" : "none") << "\n"
      << "  convergence         gradient inf-norm < " << f.options.gradient_tolerance
      << ", step < " << f.options.step_tolerance << "\n"
      << "  test scale          " << to_string(r.primary_scale) << "\n";
  out << kResultBegin << "\n" << r.to_json().dump(2) << "\n" << kResultEnd << "\n";
}

json parse_result_block(const std::string& text) {
  const std::size_t begin = text.find(kResultBegin);
  const std::size_t end = text.find(kResultEnd);
  if (begin == std::string::npos || end == std::string::npos || end < begin)
    throw std::invalid_argument("no result block in report");
  const std::size_t start = begin + std::char_traits<char>::length(kResultBegin);
  return json::parse(text.substr(start, end - start));
}

EstimateReport cmd_estimate(const std::filesystem::path& in_path, const RunConfig& config,
                            std::ostream& out,
                            const std::optional<std::filesystem::path>& json_out) {
  const std::vector<DecisionRecord> records = read_records(in_path, config.schedule.budget);
  EstimateReport r = estimate(records, config);
  print_report(r, out);
  if (json_out) open_output(*json_out) << r.to_json().dump(2) << "\n";
  return r;
}

std::vector<HistogramCell> effort_share_histogram(std::span<const DecisionRecord> records,
                                                  const RateSchedule& schedule) {
  std::vector<HistogramCell> out;
  for (TreatmentCell c : kAllCells)
    for (DecisionDay d : {DecisionDay::zero, DecisionDay::two}) out.push_back({c, d, {}, 0});
  const double certain = schedule.rates[schedule.certain_rate_index()];
  for (const DecisionRecord& r : records) {
    if (!r.incentivized || std::abs(r.rate - certain) > 1e-9) continue;
    HistogramCell& h = out[2 * r.cell().index() + (r.decision_day == DecisionDay::two ? 1 : 0)];
    const double share = effort_share(allocation_from_day_two(r.e2, r.rate, schedule.budget),
                                      schedule.budget);
    const auto bin = std::min<std::size_t>(kHistogramBins - 1,
                                           static_cast<std::size_t>(share * kHistogramBins));
    ++h.counts[bin];
    ++h.total;
  }
  return out;
}

std::vector<HistogramCell> cmd_hist(const std::filesystem::path& in_path, const RunConfig& config,
                                    std::ostream& out,
                                    const std::optional<std::filesystem::path>& csv_out) {
  const std::vector<DecisionRecord> records = read_records(in_path, config.schedule.budget);
  const std::vector<HistogramCell> hist = effort_share_histogram(records, config.schedule);

  out << "Day-two effort share at the certain rate, percent of decisions per bin\n";
  out << pad("cell", 27, false) << pad("day", 4) << pad("n", 6);
  for (std::size_t b = 0; b < kHistogramBins; ++b) out << pad(fixed(b / 10.0, 1), 7);
  out << "\n";
  for (const HistogramCell& h : hist) {
    out << pad(std::string(cell_label(h.cell)), 27, false)
        << pad(std::to_string(static_cast<int>(h.day)), 4) << pad(std::to_string(h.total), 6);
    for (std::size_t b = 0; b < kHistogramBins; ++b) out << pad(fixed(100.0 * h.share(b), 1), 7);
    out << "\n";
  }
  if (csv_out) {
    std::ofstream csv = open_output(*csv_out);
    csv << "cell,decision_day,bin_lower,bin_upper,count,total,share\n";
    for (const HistogramCell& h : hist)
      for (std::size_t b = 0; b < kHistogramBins; ++b)
        csv << cell_key(h.cell) << ',' << static_cast<int>(h.day) << ',' << fixed(b / 10.0, 1) << ','
            << fixed((b + 1) / 10.0, 1) << ',' << h.counts[b] << ',' << h.total << ','
            << fixed(h.share(b), 6) << '\n';
  }
  return hist;
}

std::vector<SweepRow> sweep_omega(std::span<const DecisionRecord> records, const RunConfig& config,
                                  std::span<const double> omegas) {
  if (omegas.empty()) throw std::invalid_argument("omega list is empty");
  for (double w : omegas)
    if (!(w > 0.0) || !std::isfinite(w))
      throw std::invalid_argument("every omega must be positive, got " + std::to_string(w));
  std::vector<SweepRow> rows;
  for (double w : omegas) {
    RunConfig c = config;
    c.omega = w;
    rows.push_back({w, estimate(records, c)});
  }
  return rows;
}

std::vector<SweepRow> cmd_sweep_omega(const std::filesystem::path& in_path, const RunConfig& config,
                                      std::span<const double> omegas, std::ostream& out,
                                      const std::optional<std::filesystem::path>& csv_out) {
  for (double w : omegas)
    if (!(w > 0.0) || !std::isfinite(w))
      throw std::invalid_argument("every omega must be positive, got " + std::to_string(w));
  const std::vector<DecisionRecord> records = read_records(in_path, config.schedule.budget);
  std::vector<SweepRow> rows = sweep_omega(records, config, omegas);

  out << "Regression results with various background effort\n";
  out << pad("omega", 10);
  for (std::size_t k = 0; k < kStructuralParams; ++k)
    out << pad(std::string(param_name(static_cast<Param>(k))), 18);
  out << pad("loglik", 14) << "\n";
  for (const SweepRow& row : rows) {
    out << pad(fixed(row.omega, 1), 10);
    for (std::size_t k = 0; k < kStructuralParams; ++k) {
      const auto p = static_cast<Param>(k);
      out << pad(fixed(row.report.recovered[p]) + " (" + fixed(row.report.recovered.se_of(p)) + ")",
                 18);
    }
    out << pad(fixed(row.report.fit.loglik, 3), 14) << "\n";
  }
  if (csv_out) {
    std::ofstream csv = open_output(*csv_out);
    csv << "omega";
    for (std::size_t k = 0; k < kStructuralParams; ++k) {
      const std::string name(param_name(static_cast<Param>(k)));
      csv << ',' << name << ',' << name << "_se";
    }
    csv << ",loglik,n_obs,n_left,n_right\n";
    for (const SweepRow& row : rows) {
      csv << fixed(row.omega, 6);
      for (std::size_t k = 0; k < kStructuralParams; ++k) {
        const auto p = static_cast<Param>(k);
        csv << ',' << fixed(row.report.recovered[p], 6) << ',' << fixed(row.report.recovered.se_of(p), 6);
      }
      csv << ',' << fixed(row.report.fit.loglik, 6) << ',' << row.report.fit.n_obs << ','
          << row.report.fit.n_left << ',' << row.report.fit.n_right << '\n';
    }
  }
  return rows;
}

} // namespace qhd
