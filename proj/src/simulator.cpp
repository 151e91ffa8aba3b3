#include "qhd/simulator.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "qhd/rng.hpp"

namespace qhd {

void PopulationSpec::validate() const {
  schedule.validate();
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw std::invalid_argument("sigma must be positive");
  for (int n : cell_sizes)
    if (n < 0) throw std::invalid_argument("cell sizes must be non-negative");
  for (const Preferences& p : prefs_by_cell) p.validate();
  const Preferences& ref = prefs_by_cell[0];
  for (const Preferences& p : prefs_by_cell)
    if (p.delta != ref.delta || p.alpha != ref.alpha || p.omega != ref.omega)
      throw std::invalid_argument("delta, alpha and omega must be common to all cells");
}

int PopulationSpec::total_subjects() const {
  return std::accumulate(cell_sizes.begin(), cell_sizes.end(), 0);
}

PopulationSpec PopulationSpec::reference_truth(int base_cell_size, std::uint64_t seed,
                                               double sigma) {
  PopulationSpec spec;
  spec.cell_sizes = {base_cell_size, 2 * base_cell_size, base_cell_size, 2 * base_cell_size};
  const std::array<double, 4> betas{1.009, 0.921, 0.679, 0.581};
  for (std::size_t c = 0; c < 4; ++c) spec.prefs_by_cell[c] = {betas[c], 0.986, 1.282, 10.0};
  spec.sigma = sigma;
  spec.seed = seed;
  return spec;
}

double latent_mean(const Preferences& prefs, double rate, DecisionDay day, int delay_days) {
  const double inv = 1.0 / (prefs.alpha - 1.0);
  double mu = delay_days * std::log(prefs.delta) * inv - std::log(rate) * inv;
  if (is_present_day(day)) mu += std::log(prefs.beta) * inv;
  return mu;
}

TreatmentCell cell_of_subject(const PopulationSpec& spec, int subject_id) {
  int upto = 0;
  for (std::size_t c = 0; c < 4; ++c) {
    upto += spec.cell_sizes[c];
    if (subject_id <= upto) return TreatmentCell::from_index(c);
  }
  throw std::out_of_range("subject id beyond population");
}

namespace {

constexpr std::array<DecisionDay, 2> kDays{DecisionDay::zero, DecisionDay::two};

// Writes the 2 * |schedule| records of one subject starting at `out`.
void simulate_subject(const PopulationSpec& spec, int subject_id, TreatmentCell cell,
                      DecisionRecord* out) {
  const Preferences& prefs = spec.prefs_by_cell[cell.index()];
  const RateSchedule& sched = spec.schedule;
  const RandomStream subject_stream = RandomStream(spec.seed).split(subject_id);
  const MechanismDraw draw =
      draw_mechanism(cell, subject_stream.split(StreamPurpose::mechanism).seed(), sched);
  RandomStream noise = subject_stream.split(StreamPurpose::noise);

  for (DecisionDay day : kDays) {
    for (std::size_t i = 0; i < sched.size(); ++i) {
      const double rate = sched.rates[i];
      const double latent =
          latent_mean(prefs, rate, day, sched.delay_days) + spec.sigma * noise.normal();
      const Allocation a = invert_log_effort_ratio(latent, rate, prefs.omega, sched.budget);
      *out++ = DecisionRecord{subject_id, cell.certain_rate, cell.certain_day, day,
                              rate,       a.e2,              is_incentivized(cell, day, i, draw, sched)};
    }
  }
}

} // namespace

std::vector<DecisionRecord> simulate_panel_serial(const PopulationSpec& spec) {
  spec.validate();
  const int n = spec.total_subjects();
  const std::size_t per_subject = 2 * spec.schedule.size();
  std::vector<DecisionRecord> records(static_cast<std::size_t>(n) * per_subject);
  for (int s = 1; s <= n; ++s)
    simulate_subject(spec, s, cell_of_subject(spec, s), &records[(s - 1) * per_subject]);
  return records;
}

std::vector<DecisionRecord> simulate_panel(const PopulationSpec& spec) {
  spec.validate();
  const int n = spec.total_subjects();
  const std::size_t per_subject = 2 * spec.schedule.size();
  std::vector<DecisionRecord> records(static_cast<std::size_t>(n) * per_subject);
#pragma omp parallel for schedule(static)
  for (int s = 1; s <= n; ++s)
    simulate_subject(spec, s, cell_of_subject(spec, s), &records[(s - 1) * per_subject]);
  return records;
}

std::vector<DecisionRecord> filter_analysis_rows(std::span<const DecisionRecord> records) {
  std::vector<DecisionRecord> kept;
  kept.reserve(records.size());
  for (const DecisionRecord& r : records)
    if (r.incentivized) kept.push_back(r);
  return kept;
}

} // namespace qhd
