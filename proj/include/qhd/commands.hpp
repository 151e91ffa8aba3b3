#pragma once

#include <array>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "qhd/config.hpp"
#include "qhd/estimator.hpp"
#include "qhd/inference.hpp"
#include "qhd/simulator.hpp"

namespace qhd {

struct SimulateSummary {
  std::size_t rows = 0;
  std::size_t analysis_rows = 0;
  std::size_t left_censored = 0;  // among analysis rows
  std::size_t right_censored = 0; // among analysis rows
  int subjects = 0;
};

SimulateSummary summarize(std::span<const DecisionRecord> records, double budget);

// Simulates the configured population and writes the decision file.
SimulateSummary cmd_simulate(const RunConfig& config, const std::filesystem::path& out_path,
                             std::ostream& log);

struct EstimateReport {
  TobitFit fit;
  RecoveredParams recovered;
  std::vector<WaldTest> beta_tests;  // battery on the beta scale
  std::vector<WaldTest> theta_tests; // battery on the theta scale
  std::optional<WaldTest> delta_is_one;
  std::optional<WaldTest> alpha_is_one;
  double omega = kDefaultOmega;
  TestScale primary_scale = TestScale::beta;

  nlohmann::json to_json() const;
};

// Throws std::invalid_argument for unusable data and std::runtime_error with
// optimizer diagnostics when the fit does not converge.
EstimateReport estimate(std::span<const DecisionRecord> records, const RunConfig& config);

void print_report(const EstimateReport& report, std::ostream& out);

inline constexpr const char* kResultBegin = "--- BEGIN RESULT JSON ---";
inline constexpr const char* kResultEnd = "--- END RESULT JSON ---";
// Extracts the machine-readable block from printed report text.
nlohmann::json parse_result_block(const std::string& report_text);

EstimateReport cmd_estimate(const std::filesystem::path& in_path, const RunConfig& config,
                            std::ostream& out,
                            const std::optional<std::filesystem::path>& json_out = std::nullopt);

inline constexpr std::size_t kHistogramBins = 10;

struct HistogramCell {
  TreatmentCell cell;
  DecisionDay day = DecisionDay::zero;
  std::array<std::size_t, kHistogramBins> counts{};
  std::size_t total = 0;

  double share(std::size_t bin) const {
    return total == 0 ? 0.0 : static_cast<double>(counts[bin]) / static_cast<double>(total);
  }
};

// Effort-share histograms of incentivized decisions at the certain rate, one per
// cell and decision day, ordered cell-major. Bins are [k/10, (k+1)/10) with the
// last closed.
std::vector<HistogramCell> effort_share_histogram(std::span<const DecisionRecord> records,
                                                  const RateSchedule& schedule);

std::vector<HistogramCell> cmd_hist(const std::filesystem::path& in_path, const RunConfig& config,
                                    std::ostream& out,
                                    const std::optional<std::filesystem::path>& csv_out = std::nullopt);

struct SweepRow {
  double omega = 0.0;
  EstimateReport report;
};

// Re-estimates at each omega. All omegas are validated before any estimation.
std::vector<SweepRow> sweep_omega(std::span<const DecisionRecord> records, const RunConfig& config,
                                  std::span<const double> omegas);

std::vector<SweepRow> cmd_sweep_omega(const std::filesystem::path& in_path, const RunConfig& config,
                                      std::span<const double> omegas, std::ostream& out,
                                      const std::optional<std::filesystem::path>& csv_out = std::nullopt);

} // namespace qhd
