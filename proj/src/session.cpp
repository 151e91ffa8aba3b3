#include "qhd/session.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "qhd/records.hpp"
#include "qhd/rng.hpp"

namespace qhd {

using nlohmann::json;

std::string_view to_string(Stage s) {
  switch (s) {
  case Stage::practice: return "practice";
  case Stage::mandatory_tasks: return "mandatory_tasks";
  case Stage::day_reveal: return "day_reveal";
  case Stage::allocate_separate: return "allocate_separate";
  case Stage::allocate_juxtaposed: return "allocate_juxtaposed";
  case Stage::rate_reveal: return "rate_reveal";
  case Stage::implemented_work: return "implemented_work";
  case Stage::done: return "done";
  }
  return "?";
}

int count_zeros(std::string_view task) {
  return static_cast<int>(std::count(task.begin(), task.end(), '0'));
}

namespace {

constexpr int kTaskDigits = 16;

std::size_t day_slot(DecisionDay d) { return d == DecisionDay::two ? 1 : 0; }

} // namespace

Session::Session(int id, TreatmentCell cell, bool reverse_order, std::uint64_t seed,
                 const RunConfig& config)
    : id_(id), cell_(cell), reverse_order_(reverse_order), config_(config) {
  const RandomStream stream(seed);
  draw_ = draw_mechanism(cell, stream.split(StreamPurpose::mechanism).seed(), config.schedule);
  task_seed_ = stream.split(StreamPurpose::tasks).seed();
  const std::size_t n = config.schedule.size();
  order_.resize(n);
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  if (reverse_order_) std::reverse(order_.begin(), order_.end());
  for (auto& a : allocations_) a.assign(n, std::nullopt);
  practice_allocations_.assign(n, std::nullopt);
  enter(Stage::practice);
}

std::optional<double> Session::allocation(DecisionDay d, std::size_t rate_index) const {
  return allocations_.at(day_slot(d)).at(rate_index);
}

DecisionDay Session::decision_day() const {
  return day_ == 2 ? DecisionDay::two : DecisionDay::zero;
}

bool Session::day_revealed() const { return day_reveal_done_; }

bool Session::rate_revealed() const { return implemented_.has_value(); }

void Session::next_task() {
  RandomStream rng = RandomStream(task_seed_).split(tasks_issued_++);
  const std::uint64_t bits = rng.next();
  task_.assign(kTaskDigits, '0');
  for (int i = 0; i < kTaskDigits; ++i)
    if ((bits >> i) & 1u) task_[static_cast<std::size_t>(i)] = '1';
}

void Session::enter(Stage s) {
  stage_ = s;
  tasks_done_ = 0;
  tasks_required_ = 0;
  task_.clear();
  switch (s) {
  case Stage::mandatory_tasks:
    tasks_required_ = config_.serve.mandatory_tasks;
    break;
  case Stage::day_reveal:
    day_reveal_done_ = true;
    break;
  case Stage::allocate_separate:
    separate_position_ = 0;
    break;
  case Stage::rate_reveal: {
    ImplementedDecision imp;
    imp.decision_day = draw_.selected_day;
    imp.rate_index = draw_.selected_rate_index;
    imp.e2 = allocations_[day_slot(imp.decision_day)][imp.rate_index].value();
    imp.e9 = (config_.schedule.budget - imp.e2) / config_.schedule.rates[imp.rate_index];
    implemented_ = imp;
    break;
  }
  case Stage::implemented_work:
    if (config_.serve.require_implemented_tasks)
      tasks_required_ = static_cast<int>(std::lround(day_ == 2 ? implemented_->e2 : implemented_->e9));
    break;
  default:
    break;
  }
  if (tasks_required_ > 0) next_task();
}

bool Session::submit_task(int answer) {
  if ((stage_ != Stage::mandatory_tasks && stage_ != Stage::implemented_work) ||
      tasks_done_ >= tasks_required_)
    throw SessionError(409, "no task is pending in stage " + std::string(to_string(stage_)));
  if (answer != count_zeros(task_)) return false;
  ++tasks_done_;
  if (tasks_done_ < tasks_required_) next_task();
  else task_.clear();
  return true;
}

void Session::submit_allocation(std::size_t rate_index, double e2, bool practice) {
  const RateSchedule& sched = config_.schedule;
  if (rate_index >= sched.size())
    throw SessionError(400, "rate_index " + std::to_string(rate_index) + " is out of range");
  if (!std::isfinite(e2) || e2 < 0.0 || e2 > sched.budget)
    throw SessionError(400, "e2 must lie in [0, " + std::to_string(static_cast<int>(sched.budget)) + "]");
  e2 = std::round(e2 * 1000.0) / 1000.0;

  if (practice) {
    if (stage_ != Stage::practice) throw SessionError(409, "practice allocations only during practice");
    practice_allocations_[rate_index] = e2;
    return;
  }
  auto& today = allocations_[day_slot(decision_day())];
  if (stage_ == Stage::allocate_separate) {
    if (rate_index != order_[separate_position_])
      throw SessionError(409, "expected an allocation for rate_index " +
                                  std::to_string(order_[separate_position_]));
    today[rate_index] = e2;
    if (++separate_position_ == order_.size()) enter(Stage::allocate_juxtaposed);
    return;
  }
  if (stage_ == Stage::allocate_juxtaposed) {
    today[rate_index] = e2;
    return;
  }
  throw SessionError(409, "allocations are not editable in stage " + std::string(to_string(stage_)));
}

void Session::advance() {
  switch (stage_) {
  case Stage::practice:
    enter(Stage::mandatory_tasks);
    return;
  case Stage::mandatory_tasks:
    if (tasks_done_ < tasks_required_)
      throw SessionError(409, std::to_string(tasks_required_ - tasks_done_) + " tasks remain");
    if (day_ == 9) enter(Stage::implemented_work);
    else if (day_ == 2 && cell_.certain_day) enter(Stage::day_reveal);
    else enter(Stage::allocate_separate);
    return;
  case Stage::day_reveal:
    if (day_ == 2 && cell_.certain_day && !allocations_[1][order_.front()]) enter(Stage::allocate_separate);
    else enter(Stage::rate_reveal);
    return;
  case Stage::allocate_separate:
    throw SessionError(409, "every rate needs a tentative allocation first");
  case Stage::allocate_juxtaposed:
    if (day_ == 0) {
      day_ = 2;
      enter(Stage::practice);
    } else {
      enter(cell_.certain_day ? Stage::rate_reveal : Stage::day_reveal);
    }
    return;
  case Stage::rate_reveal:
    enter(Stage::implemented_work);
    return;
  case Stage::implemented_work:
    if (tasks_done_ < tasks_required_)
      throw SessionError(409, std::to_string(tasks_required_ - tasks_done_) + " tasks remain");
    if (day_ == 2) {
      day_ = 9;
      enter(Stage::mandatory_tasks);
    } else {
      enter(Stage::done);
    }
    return;
  case Stage::done:
    throw SessionError(409, "session is complete");
  }
}

std::vector<DecisionRecord> Session::records() const {
  if (!completed()) throw SessionError(409, "session is not complete");
  std::vector<DecisionRecord> out;
  for (DecisionDay d : {DecisionDay::zero, DecisionDay::two})
    for (std::size_t i = 0; i < config_.schedule.size(); ++i)
      out.push_back({id_, cell_.certain_rate, cell_.certain_day, d, config_.schedule.rates[i],
                     allocations_[day_slot(d)][i].value(),
                     is_incentivized(cell_, d, i, draw_, config_.schedule)});
  return out;
}

json Session::state() const {
  auto allocs = [](const std::vector<std::optional<double>>& v) {
    json a = json::array();
    for (const auto& x : v) a.push_back(x ? json(*x) : json(nullptr));
    return a;
  };
  json j{{"id", id_},
         {"cell",
          {{"key", std::string(cell_key(cell_))},
           {"label", std::string(cell_label(cell_))},
           {"certain_rate", cell_.certain_rate},
           {"certain_day", cell_.certain_day}}},
         {"day", day_},
         {"stage", std::string(to_string(stage_))},
         {"rates", config_.schedule.rates},
         {"budget", config_.schedule.budget},
         {"rate_order", order_},
         {"reverse_order", reverse_order_},
         {"certain_rate_index", config_.schedule.certain_rate_index()},
         {"tasks_completed", tasks_done_},
         {"tasks_required", tasks_required_},
         {"current_task", task_.empty() ? json(nullptr) : json(task_)},
         {"allocations", {{"0", allocs(allocations_[0])}, {"2", allocs(allocations_[1])}}},
         {"practice_allocations", allocs(practice_allocations_)},
         {"completed", completed()}};
  if (stage_ == Stage::allocate_separate) j["next_rate_index"] = order_[separate_position_];
  if (stage_ == Stage::practice && day_ != 9)
    // Scripted practice flips: the alternate decision day, then the present one.
    j["practice_day_flips"] = day_ == 0 ? json::array({2, 0}) : json::array({0, 2});
  json draw = json::object();
  if (day_revealed()) {
    draw["selected_day"] = static_cast<int>(draw_.selected_day);
    draw["day_revealed_before_day2"] = draw_.day_revealed_before_day2;
  }
  if (rate_revealed()) draw["selected_rate_index"] = draw_.selected_rate_index;
  j["draw"] = draw;
  if (implemented_) {
    j["implemented"] = {{"decision_day", static_cast<int>(implemented_->decision_day)},
                        {"rate_index", implemented_->rate_index},
                        {"rate", config_.schedule.rates[implemented_->rate_index]},
                        {"e2", implemented_->e2},
                        {"e9", implemented_->e9}};
  }
  return j;
}

SessionStore::SessionStore(RunConfig config, std::optional<std::filesystem::path> output)
    : config_(std::move(config)), output_(std::move(output)) {
  config_.validate();
}

std::shared_ptr<SessionStore::Entry> SessionStore::find(int id) const {
  std::lock_guard lock(map_mutex_);
  const auto it = sessions_.find(id);
  if (it == sessions_.end()) throw SessionError(404, "no session " + std::to_string(id));
  return it->second;
}

json SessionStore::create(std::optional<TreatmentCell> forced, std::optional<bool> reverse_order) {
  std::lock_guard lock(map_mutex_);
  const int id = next_id_++;
  const RandomStream stream = RandomStream(config_.seed).split(static_cast<std::uint64_t>(id));
  RandomStream assign = stream.split(StreamPurpose::assignment);
  TreatmentCell cell = kCellBaseline;
  if (forced) {
    cell = *forced;
  } else {
    const int total = std::accumulate(config_.cell_sizes.begin(), config_.cell_sizes.end(), 0);
    if (total == 0) {
      cell = TreatmentCell::from_index(assign.index(4));
    } else {
      auto pick = static_cast<int>(assign.index(static_cast<std::size_t>(total)));
      std::size_t c = 0;
      while (pick >= config_.cell_sizes[c]) pick -= config_.cell_sizes[c++];
      cell = TreatmentCell::from_index(c);
    }
  }
  const bool reverse = reverse_order ? *reverse_order : assign.coin();
  auto entry = std::make_shared<Entry>(Session(id, cell, reverse, stream.seed(), config_));
  sessions_.emplace(id, entry);
  return entry->session.state();
}

json SessionStore::get(int id) const {
  const auto e = find(id);
  std::lock_guard lock(e->mutex);
  return e->session.state();
}

json SessionStore::submit_task(int id, int answer) {
  const auto e = find(id);
  std::lock_guard lock(e->mutex);
  if (!e->session.submit_task(answer))
    throw SessionError(422, "incorrect count; correct the answer before submitting");
  return e->session.state();
}

json SessionStore::submit_allocation(int id, std::size_t rate_index, double e2, bool practice) {
  const auto e = find(id);
  std::lock_guard lock(e->mutex);
  e->session.submit_allocation(rate_index, e2, practice);
  return e->session.state();
}

json SessionStore::advance(int id) {
  const auto e = find(id);
  std::lock_guard lock(e->mutex);
  e->session.advance();
  if (e->session.completed()) on_complete(e->session);
  return e->session.state();
}

void SessionStore::on_complete(const Session& s) {
  const std::vector<DecisionRecord> recs = s.records();
  std::lock_guard lock(export_mutex_);
  if (output_) {
    std::ostringstream block;
    const bool fresh = !std::filesystem::exists(*output_) || std::filesystem::file_size(*output_) == 0;
    if (fresh) block << kDecisionCsvHeader << '\n';
    for (const DecisionRecord& r : recs) block << format_record(r) << '\n';
    std::ofstream out(*output_, std::ios::binary | std::ios::app);
    if (!out) throw SessionError(500, "cannot append to " + output_->string());
    const std::string text = block.str();
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    out.flush();
    if (!out) throw SessionError(500, "append to " + output_->string() + " failed");
  }
  completed_.insert(completed_.end(), recs.begin(), recs.end());
}

std::string SessionStore::export_csv() const {
  std::lock_guard lock(export_mutex_);
  std::ostringstream out;
  write_records(out, completed_);
  return out.str();
}

} // namespace qhd
