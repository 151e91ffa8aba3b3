#include "qhd/records.hpp"

#include <cerrno>
#include <charconv>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string_view>

namespace qhd {

ParseError::ParseError(const std::string& source, std::size_t line, const std::string& reason)
    : std::runtime_error(source + ":" + std::to_string(line) + ": " + reason), line_(line) {}

std::string format_record(const DecisionRecord& r) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "%d,%d,%d,%d,%.6f,%.3f,%d", r.subject_id, r.certain_rate ? 1 : 0,
                r.certain_day ? 1 : 0, static_cast<int>(r.decision_day), r.rate, r.e2,
                r.incentivized ? 1 : 0);
  return buf;
}

void write_records(std::ostream& out, std::span<const DecisionRecord> records) {
  out << kDecisionCsvHeader << '\n';
  for (const DecisionRecord& r : records) out << format_record(r) << '\n';
}

void write_records(const std::filesystem::path& path, std::span<const DecisionRecord> records) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw std::runtime_error("cannot open " + path.string() + " for writing: " +
                             std::strerror(errno));
  write_records(out, records);
  out.flush();
  if (!out) throw std::runtime_error("write to " + path.string() + " failed");
}

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    fields.push_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

class LineParser {
public:
  LineParser(const std::string& source, std::size_t line) : source_(source), line_(line) {}

  int integer(std::string_view field, const char* name) const {
    int v = 0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc() || ptr != field.data() + field.size())
      fail(std::string(name) + " is not an integer: '" + std::string(field) + "'");
    return v;
  }

  bool flag(std::string_view field, const char* name) const {
    if (field == "0") return false;
    if (field == "1") return true;
    fail(std::string(name) + " must be 0 or 1, got '" + std::string(field) + "'");
  }

  double real(std::string_view field, const char* name) const {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc() || ptr != field.data() + field.size())
      fail(std::string(name) + " is not a number: '" + std::string(field) + "'");
    return v;
  }

  [[noreturn]] void fail(const std::string& reason) const { throw ParseError(source_, line_, reason); }

private:
  const std::string& source_;
  std::size_t line_;
};

} // namespace

std::vector<DecisionRecord> read_records(std::istream& in, const std::string& source,
                                         double budget) {
  std::vector<DecisionRecord> records;
  std::string raw;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = trim(raw);
    if (line_no == 1 && line.substr(0, 3) == "\xEF\xBB\xBF") line.remove_prefix(3);
    if (line.empty()) continue;
    const LineParser p(source, line_no);
    if (!header_seen) {
      if (line != kDecisionCsvHeader)
        p.fail(std::string("expected header '") + kDecisionCsvHeader + "'");
      header_seen = true;
      continue;
    }
    const std::vector<std::string_view> f = split_fields(line);
    if (f.size() != 7) p.fail("expected 7 fields, found " + std::to_string(f.size()));
    DecisionRecord r;
    r.subject_id = p.integer(trim(f[0]), "subject_id");
    r.certain_rate = p.flag(trim(f[1]), "certain_rate");
    r.certain_day = p.flag(trim(f[2]), "certain_day");
    const int day = p.integer(trim(f[3]), "decision_day");
    if (day != 0 && day != 2) p.fail("decision_day must be 0 or 2, got " + std::to_string(day));
    r.decision_day = static_cast<DecisionDay>(day);
    r.rate = p.real(trim(f[4]), "rate");
    if (!(r.rate > 0.0)) p.fail("rate must be positive");
    r.e2 = p.real(trim(f[5]), "e2");
    if (!(r.e2 >= 0.0 && r.e2 <= budget)) p.fail("e2 must lie in [0, budget]");
    r.incentivized = p.flag(trim(f[6]), "incentivized");
    records.push_back(r);
  }
  if (!header_seen) throw ParseError(source, line_no, "file is empty; missing header");
  return records;
}

std::vector<DecisionRecord> read_records(const std::filesystem::path& path, double budget) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw std::runtime_error("cannot open " + path.string() + ": " + std::strerror(errno));
  return read_records(in, path.string(), budget);
}

} // namespace qhd
