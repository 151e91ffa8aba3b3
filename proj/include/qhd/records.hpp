#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "qhd/simulator.hpp"

namespace qhd {

inline constexpr const char* kDecisionCsvHeader =
    "subject_id,certain_rate,certain_day,decision_day,rate,e2,incentivized";

// Raised for malformed decision files; what() carries "<source>:<line>: reason".
class ParseError : public std::runtime_error {
public:
  ParseError(const std::string& source, std::size_t line, const std::string& reason);
  std::size_t line() const { return line_; }

private:
  std::size_t line_;
};

// One CSV line without the trailing newline: booleans as 0/1, rate with six
// decimals, e2 with three.
std::string format_record(const DecisionRecord& r);

void write_records(std::ostream& out, std::span<const DecisionRecord> records);
void write_records(const std::filesystem::path& path, std::span<const DecisionRecord> records);

// Rejects e2 outside [0, budget].
std::vector<DecisionRecord> read_records(std::istream& in, const std::string& source = "<stream>",
                                         double budget = kDefaultBudget);
std::vector<DecisionRecord> read_records(const std::filesystem::path& path,
                                         double budget = kDefaultBudget);

} // namespace qhd
