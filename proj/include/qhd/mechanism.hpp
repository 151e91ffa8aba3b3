#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>

#include <boost/rational.hpp>

#include "qhd/core_model.hpp"

namespace qhd {

struct TreatmentCell {
  bool certain_rate = false;
  bool certain_day = false;

  friend constexpr bool operator==(TreatmentCell, TreatmentCell) = default;

  // 0 baseline, 1 CD, 2 CR, 3 CR+CD.
  constexpr std::size_t index() const {
    return (certain_rate ? 2u : 0u) + (certain_day ? 1u : 0u);
  }
  static constexpr TreatmentCell from_index(std::size_t i) {
    return {(i & 2u) != 0, (i & 1u) != 0};
  }
};

inline constexpr TreatmentCell kCellBaseline{false, false};
inline constexpr TreatmentCell kCellCd{false, true};
inline constexpr TreatmentCell kCellCr{true, false};
inline constexpr TreatmentCell kCellCrCd{true, true};
inline constexpr std::array<TreatmentCell, 4> kAllCells{kCellBaseline, kCellCd, kCellCr,
                                                        kCellCrCd};

// "baseline", "cd", "cr", "cr_cd".
std::string_view cell_key(TreatmentCell cell);
// "Baseline", "Certain Day", ...
std::string_view cell_label(TreatmentCell cell);
std::optional<TreatmentCell> parse_cell(std::string_view key);

struct MechanismDraw {
  DecisionDay selected_day = DecisionDay::zero;
  std::size_t selected_rate_index = 0;
  bool day_revealed_before_day2 = false;
};

MechanismDraw draw_mechanism(TreatmentCell cell, std::uint64_t seed,
                             const RateSchedule& schedule = {});

using Probability = boost::rational<std::int64_t>;

// Probability that the certain-rate decision made on `day` is the one implemented,
// given the information the subject holds when deciding.
Probability implementation_probability(TreatmentCell cell, DecisionDay day);

bool is_incentivized(TreatmentCell cell, DecisionDay day, std::size_t rate_index,
                     const MechanismDraw& draw, const RateSchedule& schedule = {});

// True when `draw` selects the decision (day, rate_index) for implementation.
bool selects(const MechanismDraw& draw, DecisionDay day, std::size_t rate_index);

// Number of incentivized decisions out of the two days times the schedule.
std::size_t incentivized_count(TreatmentCell cell, const MechanismDraw& draw,
                               const RateSchedule& schedule = {});

} // namespace qhd
