#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "qhd/core_model.hpp"
#include "qhd/mechanism.hpp"

namespace qhd {

// One allocation decision as recorded in a decision file.
struct DecisionRecord {
  int subject_id = 0;
  bool certain_rate = false;
  bool certain_day = false;
  DecisionDay decision_day = DecisionDay::zero;
  double rate = 1.0;
  double e2 = 0.0;
  bool incentivized = true;

  TreatmentCell cell() const { return {certain_rate, certain_day}; }
  friend bool operator==(const DecisionRecord&, const DecisionRecord&) = default;
};

struct PopulationSpec {
  // Subjects per cell, indexed by TreatmentCell::index().
  std::array<int, 4> cell_sizes{50, 100, 50, 100};
  // Preferences per cell; only beta may differ between cells.
  std::array<Preferences, 4> prefs_by_cell{};
  double sigma = 0.8;
  std::uint64_t seed = 1;
  RateSchedule schedule{};

  void validate() const;
  int total_subjects() const;

  // Generative truths at the reference point (betas 1.009, 0.921, 0.679,
  // 0.581 by cell, delta 0.986, alpha 1.282, omega 10), with
  // `base_cell_size` subjects in each Risky Day cell and twice that in
  // each Certain Day cell.
  static PopulationSpec reference_truth(int base_cell_size, std::uint64_t seed,
                                        double sigma = 0.8);
};

// Mean of the latent log-effort ratio for one decision:
//   7 ln(delta)/(alpha-1) - ln(R)/(alpha-1) + [d=2] ln(beta)/(alpha-1).
double latent_mean(const Preferences& prefs, double rate, DecisionDay day, int delay_days);

// Subject ids are assigned consecutively from 1 through the cells in index order.
TreatmentCell cell_of_subject(const PopulationSpec& spec, int subject_id);

// Sequential reference implementation.
std::vector<DecisionRecord> simulate_panel_serial(const PopulationSpec& spec);
// Parallel across subjects; output is identical to simulate_panel_serial.
std::vector<DecisionRecord> simulate_panel(const PopulationSpec& spec);

std::vector<DecisionRecord> filter_analysis_rows(std::span<const DecisionRecord> records);

} // namespace qhd
