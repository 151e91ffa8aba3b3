#include "qhd/mechanism.hpp"

#include "qhd/rng.hpp"

namespace qhd {

std::string_view cell_key(TreatmentCell cell) {
  static constexpr std::array<std::string_view, 4> keys{"baseline", "cd", "cr", "cr_cd"};
  return keys[cell.index()];
}

std::string_view cell_label(TreatmentCell cell) {
  static constexpr std::array<std::string_view, 4> labels{
      "Baseline", "Certain Day", "Certain Rate", "Certain Rate, Certain Day"};
  return labels[cell.index()];
}

std::optional<TreatmentCell> parse_cell(std::string_view key) {
  for (TreatmentCell c : kAllCells)
    if (cell_key(c) == key) return c;
  return std::nullopt;
}

MechanismDraw draw_mechanism(TreatmentCell cell, std::uint64_t seed,
                             const RateSchedule& schedule) {
  RandomStream rng(seed);
  MechanismDraw draw;
  draw.selected_day = rng.coin() ? DecisionDay::two : DecisionDay::zero;
  // The roulette index is drawn even under Certain Rate so both cells consume
  // the stream identically.
  const std::size_t roulette = rng.index(schedule.size());
  draw.selected_rate_index = cell.certain_rate ? schedule.certain_rate_index() : roulette;
  draw.day_revealed_before_day2 = cell.certain_day;
  return draw;
}

Probability implementation_probability(TreatmentCell cell, DecisionDay day) {
  const Probability day_part =
      (cell.certain_day && day == DecisionDay::two) ? Probability(1) : Probability(1, 2);
  const Probability rate_part = cell.certain_rate ? Probability(1) : Probability(1, 5);
  return day_part * rate_part;
}

bool is_incentivized(TreatmentCell cell, DecisionDay day, std::size_t rate_index,
                     const MechanismDraw& draw, const RateSchedule& schedule) {
  if (cell.certain_rate && rate_index != schedule.certain_rate_index()) return false;
  if (cell.certain_day && day == DecisionDay::two && draw.selected_day == DecisionDay::zero)
    return false;
  return true;
}

bool selects(const MechanismDraw& draw, DecisionDay day, std::size_t rate_index) {
  return draw.selected_day == day && draw.selected_rate_index == rate_index;
}

std::size_t incentivized_count(TreatmentCell cell, const MechanismDraw& draw,
                               const RateSchedule& schedule) {
  std::size_t n = 0;
  for (DecisionDay d : {DecisionDay::zero, DecisionDay::two})
    for (std::size_t i = 0; i < schedule.size(); ++i)
      n += is_incentivized(cell, d, i, draw, schedule) ? 1 : 0;
  return n;
}

} // namespace qhd
