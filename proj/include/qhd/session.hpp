#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "qhd/config.hpp"
#include "qhd/mechanism.hpp"
#include "qhd/simulator.hpp"

namespace qhd {

// Protocol stages within one session day. Session days are logical stages of
// the three-session protocol (0, 2 and 9), not wall-clock days.
enum class Stage {
  practice,
  mandatory_tasks,
  day_reveal,
  allocate_separate,
  allocate_juxtaposed,
  rate_reveal,
  implemented_work,
  done
};
std::string_view to_string(Stage s);

// Rejected request; `status` is the HTTP status the server answers with.
class SessionError : public std::runtime_error {
public:
  SessionError(int status, const std::string& reason) : std::runtime_error(reason), status_(status) {}
  int status() const { return status_; }

private:
  int status_;
};

// Number of zeros in a sixteen-digit binary string.
int count_zeros(std::string_view task);

struct ImplementedDecision {
  DecisionDay decision_day = DecisionDay::zero;
  std::size_t rate_index = 0;
  double e2 = 0.0;
  double e9 = 0.0;
};

class Session {
public:
  Session(int id, TreatmentCell cell, bool reverse_order, std::uint64_t seed, const RunConfig& config);

  int id() const { return id_; }
  TreatmentCell cell() const { return cell_; }
  int day() const { return day_; }
  Stage stage() const { return stage_; }
  bool completed() const { return stage_ == Stage::done; }
  const MechanismDraw& draw() const { return draw_; }
  const std::string& current_task() const { return task_; }
  int tasks_completed() const { return tasks_done_; }
  int tasks_required() const { return tasks_required_; }
  // Rate indices in presentation order.
  const std::vector<std::size_t>& rate_order() const { return order_; }
  std::optional<double> allocation(DecisionDay d, std::size_t rate_index) const;
  std::optional<ImplementedDecision> implemented() const { return implemented_; }

  // Returns true for a correct count; an incorrect answer leaves state unchanged.
  bool submit_task(int answer);
  void submit_allocation(std::size_t rate_index, double e2, bool practice);
  void advance();

  // Decision records of a completed session, ordered by day then schedule index.
  std::vector<DecisionRecord> records() const;
  nlohmann::json state() const;

private:
  void enter(Stage s);
  void next_task();
  DecisionDay decision_day() const;
  bool day_revealed() const;
  bool rate_revealed() const;

  int id_;
  TreatmentCell cell_;
  bool reverse_order_;
  RunConfig config_;
  MechanismDraw draw_;
  std::uint64_t task_seed_;
  std::uint64_t tasks_issued_ = 0;
  std::vector<std::size_t> order_;

  int day_ = 0;
  Stage stage_ = Stage::practice;
  std::size_t separate_position_ = 0;
  int tasks_done_ = 0;
  int tasks_required_ = 0;
  std::string task_;
  std::array<std::vector<std::optional<double>>, 2> allocations_;
  std::vector<std::optional<double>> practice_allocations_;
  bool day_reveal_done_ = false;
  std::optional<ImplementedDecision> implemented_;
};

// Thread-safe registry of live sessions. Completed sessions are appended to
// the output file as one write per session.
class SessionStore {
public:
  SessionStore(RunConfig config, std::optional<std::filesystem::path> output);

  // Creates a session; the cell is drawn with weights proportional to the
  // configured cell sizes unless forced.
  nlohmann::json create(std::optional<TreatmentCell> forced, std::optional<bool> reverse_order);
  nlohmann::json get(int id) const;
  nlohmann::json submit_task(int id, int answer);
  nlohmann::json submit_allocation(int id, std::size_t rate_index, double e2, bool practice);
  nlohmann::json advance(int id);

  // Decision CSV of every completed session, header included.
  std::string export_csv() const;

private:
  struct Entry {
    mutable std::mutex mutex;
    Session session;
    Entry(Session s) : session(std::move(s)) {}
  };
  std::shared_ptr<Entry> find(int id) const;
  void on_complete(const Session& s);

  RunConfig config_;
  std::optional<std::filesystem::path> output_;
  mutable std::mutex map_mutex_;
  std::map<int, std::shared_ptr<Entry>> sessions_;
  int next_id_ = 1;
  mutable std::mutex export_mutex_;
  std::vector<DecisionRecord> completed_;
};

} // namespace qhd
