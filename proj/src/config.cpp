#include "qhd/config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>
#include <stdexcept>

namespace qhd {

using nlohmann::json;

void RunConfig::validate() const {
  if (!(omega > 0.0)) throw std::invalid_argument("omega must be positive");
  schedule.validate();
  try {
    schedule.certain_rate_index();
  } catch (const std::out_of_range& e) {
    throw std::invalid_argument(std::string("schedule: ") + e.what());
  }
  for (int n : cell_sizes)
    if (n < 0) throw std::invalid_argument("cell sizes must be non-negative");
  for (double b : betas)
    if (!(b > 0.0)) throw std::invalid_argument("betas must be positive");
  Preferences{betas[0], delta, alpha, omega}.validate();
  if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be positive");
  if (restarts < 0) throw std::invalid_argument("restarts must be non-negative");
  if (serve.port <= 0 || serve.port > 65535) throw std::invalid_argument("port out of range");
  if (serve.mandatory_tasks < 0) throw std::invalid_argument("mandatory_tasks must be non-negative");
}

PopulationSpec RunConfig::population() const {
  PopulationSpec spec;
  spec.cell_sizes = cell_sizes;
  for (std::size_t c = 0; c < 4; ++c) spec.prefs_by_cell[c] = {betas[c], delta, alpha, omega};
  spec.sigma = sigma;
  spec.seed = seed;
  spec.schedule = schedule;
  return spec;
}

FitOptions RunConfig::fit_options() const {
  FitOptions o;
  o.restarts = restarts;
  o.restart_seed = seed;
  o.cluster_correction = cluster_correction;
  return o;
}

namespace {

json per_cell(const std::array<double, 4>& v) {
  json j = json::object();
  for (TreatmentCell c : kAllCells) j[std::string(cell_key(c))] = v[c.index()];
  return j;
}

json per_cell(const std::array<int, 4>& v) {
  json j = json::object();
  for (TreatmentCell c : kAllCells) j[std::string(cell_key(c))] = v[c.index()];
  return j;
}

template <typename T>
void read_per_cell(const json& j, std::array<T, 4>& out, const char* what) {
  if (!j.is_object()) throw std::invalid_argument(std::string(what) + " must be an object keyed by cell");
  for (const auto& [key, value] : j.items()) {
    const auto cell = parse_cell(key);
    if (!cell) throw std::invalid_argument(std::string("unknown cell '") + key + "' in " + what);
    out[cell->index()] = value.template get<T>();
  }
}

void reject_unknown(const json& j, const std::set<std::string>& known, const char* where) {
  for (const auto& item : j.items())
    if (!known.contains(item.key()))
      throw std::invalid_argument(std::string("unknown key '") + item.key() + "' in " + where);
}

} // namespace

json to_json(const RunConfig& c) {
  return json{{"omega", c.omega},
              {"rates", c.schedule.rates},
              {"budget", c.schedule.budget},
              {"delay_days", c.schedule.delay_days},
              {"cell_sizes", per_cell(c.cell_sizes)},
              {"beta", per_cell(c.betas)},
              {"delta", c.delta},
              {"alpha", c.alpha},
              {"sigma", c.sigma},
              {"seed", c.seed},
              {"cluster_correction", c.cluster_correction},
              {"test_scale", std::string(to_string(c.test_scale))},
              {"restarts", c.restarts},
              {"serve",
               {{"port", c.serve.port},
                {"host", c.serve.host},
                {"static_dir", c.serve.static_dir},
                {"output", c.serve.output},
                {"require_implemented_tasks", c.serve.require_implemented_tasks},
                {"mandatory_tasks", c.serve.mandatory_tasks}}}};
}

void merge_json(RunConfig& c, const json& j) {
  if (!j.is_object()) throw std::invalid_argument("configuration must be a JSON object");
  reject_unknown(j,
                 {"omega", "rates", "budget", "delay_days", "cell_sizes", "beta", "delta", "alpha",
                  "sigma", "seed", "cluster_correction", "test_scale", "restarts", "serve"},
                 "configuration");
  if (j.contains("omega")) c.omega = j["omega"].get<double>();
  if (j.contains("rates")) c.schedule.rates = j["rates"].get<std::vector<double>>();
  if (j.contains("budget")) c.schedule.budget = j["budget"].get<double>();
  if (j.contains("delay_days")) c.schedule.delay_days = j["delay_days"].get<int>();
  if (j.contains("cell_sizes")) read_per_cell(j["cell_sizes"], c.cell_sizes, "cell_sizes");
  if (j.contains("beta")) read_per_cell(j["beta"], c.betas, "beta");
  if (j.contains("delta")) c.delta = j["delta"].get<double>();
  if (j.contains("alpha")) c.alpha = j["alpha"].get<double>();
  if (j.contains("sigma")) c.sigma = j["sigma"].get<double>();
  if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("cluster_correction")) c.cluster_correction = j["cluster_correction"].get<bool>();
  if (j.contains("test_scale")) {
    const std::string s = j["test_scale"].get<std::string>();
    if (s == "beta") c.test_scale = TestScale::beta;
    else if (s == "theta") c.test_scale = TestScale::theta;
    else throw std::invalid_argument("test_scale must be \"beta\" or \"theta\"");
  }
  if (j.contains("restarts")) c.restarts = j["restarts"].get<int>();
  if (j.contains("serve")) {
    const json& s = j["serve"];
    reject_unknown(s, {"port", "host", "static_dir", "output", "require_implemented_tasks",
                       "mandatory_tasks"},
                   "serve");
    if (s.contains("port")) c.serve.port = s["port"].get<int>();
    if (s.contains("host")) c.serve.host = s["host"].get<std::string>();
    if (s.contains("static_dir")) c.serve.static_dir = s["static_dir"].get<std::string>();
    if (s.contains("output")) c.serve.output = s["output"].get<std::string>();
    if (s.contains("require_implemented_tasks"))
      c.serve.require_implemented_tasks = s["require_implemented_tasks"].get<bool>();
    if (s.contains("mandatory_tasks")) c.serve.mandatory_tasks = s["mandatory_tasks"].get<int>();
  }
}

RunConfig load_config(const std::optional<std::filesystem::path>& path) {
  RunConfig config;
  std::optional<std::filesystem::path> source = path;
  if (!source) {
    if (const char* env = std::getenv(kConfigEnvVar); env != nullptr && *env != '\0') source = env;
  }
  if (source) {
    std::ifstream in(*source);
    if (!in) throw std::runtime_error("cannot open configuration " + source->string());
    json j;
    try {
      in >> j;
    } catch (const json::parse_error& e) {
      throw std::runtime_error("configuration " + source->string() + ": " + e.what());
    }
    try {
      merge_json(config, j);
    } catch (const json::exception& e) {
      throw std::runtime_error("configuration " + source->string() + ": " + e.what());
    }
  }
  config.validate();
  return config;
}

} // namespace qhd
