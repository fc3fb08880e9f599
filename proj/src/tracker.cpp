#include "aet/tracker.hpp"

#include <spawn.h>
#include <sys/wait.h>

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <regex>
#include <sstream>

extern char** environ;

namespace aet {
namespace {

namespace fs = std::filesystem;

// Cumulative counters are process-global; a second concurrent session
// would double-count them.
std::atomic<bool> g_session_active{false};

std::string strip(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

double counter_delta_uj(double prev_uj, double curr_uj, double max_range_uj) {
  if (!(max_range_uj > 0.0)) throw ValidationError("counter max range must be > 0");
  if (curr_uj >= prev_uj) return curr_uj - prev_uj;
  return curr_uj + (max_range_uj - prev_uj);
}

double read_counter_uj(const CounterSource& source) {
  std::ifstream in(source.path);
  double v = 0.0;
  if (!(in >> v)) throw MeasurementError("cannot read energy counter: " + source.path);
  return v;
}

std::vector<CounterSource> discover_counter_sources() {
  std::string root = "/sys/class/powercap";
  if (const char* env = std::getenv("AET_COUNTER_ROOT")) root = env;
  std::vector<CounterSource> sources;
  std::error_code ec;
  // top-level package zones only; subzones would double-count the package
  static const std::regex package_re("^intel-rapl:[0-9]+$");
  for (const auto& entry : fs::directory_iterator(root, ec)) {
    if (!entry.is_directory(ec)) continue;
    const std::string name = entry.path().filename().string();
    if (!std::regex_match(name, package_re)) continue;
    CounterSource src;
    src.path = (entry.path() / "energy_uj").string();
    std::ifstream max_in(entry.path() / "max_energy_range_uj");
    if (!(max_in >> src.max_range_uj) || !(src.max_range_uj > 0.0)) continue;
    try {
      read_counter_uj(src);
    } catch (const MeasurementError&) {
      continue;  // unreadable (permissions): demote, don't crash
    }
    sources.push_back(std::move(src));
  }
  std::sort(sources.begin(), sources.end(),
            [](const CounterSource& a, const CounterSource& b) { return a.path < b.path; });
  return sources;
}

double integrate_power_samples(const std::vector<std::pair<double, double>>& samples) {
  if (samples.size() < 2)
    throw MeasurementError("power integration needs at least 2 samples");
  double wh = 0.0;
  for (std::size_t i = 1; i < samples.size(); ++i) {
    const double dt = samples[i].first - samples[i - 1].first;
    if (!(dt > 0.0))
      throw MeasurementError("power samples must have strictly increasing timestamps");
    wh += 0.5 * (samples[i].second + samples[i - 1].second) * dt / 3600.0;
  }
  return wh;
}

Session::Session(TrackerConfig config, const HardwareTable& hw,
                 const GridIntensityTable& grid)
    : cfg_(std::move(config)) {
  if (!(cfg_.pue >= 1.0)) throw ValidationError("pue must be >= 1");
  if (cfg_.sample_interval_ms < 10)
    throw ValidationError("sample_interval_ms must be >= 10");
  if (cfg_.backend_preference.empty())
    throw ConfigError("backend preference list must be non-empty");

  if (g_session_active.exchange(true))
    throw UsageError("another tracking session is already active in this process");
  bool armed = false;
  struct Disarm {
    bool* armed;
    ~Disarm() {
      if (!*armed) g_session_active = false;
    }
  } disarm{&armed};

  if (cfg_.report_embodied || cfg_.country_iso_code || !cfg_.hardware_id.empty()) {
    const HardwareSpec* spec = hw.find(cfg_.hardware_id);
    if (spec) spec_ = *spec;
    if (cfg_.report_embodied && !spec_)
      throw ConfigError("embodied reporting needs a known hardware id, got '" +
                        cfg_.hardware_id + "'");
  }
  if (cfg_.country_iso_code) ci_ = grid.lookup(*cfg_.country_iso_code);

  bool selected = false;
  for (Backend b : cfg_.backend_preference) {
    if (b == Backend::hwcounters) {
      sources_ = discover_counter_sources();
      if (!sources_.empty()) {
        backend_ = Backend::hwcounters;
        selected = true;
        break;
      }
    } else if (b == Backend::tdp) {
      if (spec_) {
        backend_ = Backend::tdp;
        selected = true;
        break;
      }
    } else {
      throw ConfigError("'imported' is not a live measurement backend");
    }
  }
  if (!selected)
    throw ConfigError("no measurement backend available: no readable energy counters and "
                      "hardware id '" + cfg_.hardware_id + "' is not in the table");

  t0_ = std::chrono::steady_clock::now();
  if (backend_ == Backend::hwcounters) {
    last_uj_.resize(sources_.size());
    acc_uj_.assign(sources_.size(), 0.0);
    for (std::size_t i = 0; i < sources_.size(); ++i)
      last_uj_[i] = read_counter_uj(sources_[i]);
    sampler_ = std::thread([this] { sampler_loop(); });
  }
  armed = true;
}

void Session::sample_once() {
  for (std::size_t i = 0; i < sources_.size(); ++i) {
    const double cur = read_counter_uj(sources_[i]);
    acc_uj_[i] += counter_delta_uj(last_uj_[i], cur, sources_[i].max_range_uj);
    last_uj_[i] = cur;
  }
}

void Session::sampler_loop() {
  std::unique_lock<std::mutex> lock(mu_);
  while (!stopping_) {
    cv_.wait_for(lock, std::chrono::milliseconds(cfg_.sample_interval_ms),
                 [this] { return stopping_; });
    if (stopping_) break;
    try {
      sample_once();
    } catch (const MeasurementError&) {
      // counter vanished mid-session; the final read at stop() decides
    }
  }
}

EnergyReading Session::stop(std::optional<double> n_items) {
  if (stopped_) throw UsageError("session already stopped");
  stopped_ = true;
  if (sampler_.joinable()) {
    {
      std::lock_guard<std::mutex> lock(mu_);
      stopping_ = true;
    }
    cv_.notify_all();
    sampler_.join();
  }
  const auto t1 = std::chrono::steady_clock::now();
  g_session_active = false;

  const double duration_s = std::chrono::duration<double>(t1 - t0_).count();
  if (!(duration_s > 0.0))
    throw MeasurementError("non-monotonic clock: session duration is not positive");

  double raw_wh = 0.0;
  if (backend_ == Backend::hwcounters) {
    std::lock_guard<std::mutex> lock(mu_);
    sample_once();
    for (double uj : acc_uj_) raw_wh += uj / 3.6e9;
  } else {
    raw_wh = spec_->tdp_w * duration_s / 3600.0;
  }

  EnergyReading r;
  r.label = cfg_.label;
  r.energy_wh = raw_wh * cfg_.pue;
  r.duration_s = duration_s;
  r.co2_g_operational = r.energy_wh / 1000.0 * ci_;
  r.co2_g_embodied =
      cfg_.report_embodied ? spec_->embodied_g() * (duration_s / spec_->lifetime_s()) : 0.0;
  r.co2_g_total = r.co2_g_operational + r.co2_g_embodied;
  if (n_items) {
    r.n_items = *n_items;
    r.throughput_items_per_s = *n_items / duration_s;
  }
  r.backend_used = backend_;
  r.hardware_id = cfg_.hardware_id;
  r.pue = cfg_.pue;
  r.country_iso_code = cfg_.country_iso_code;
  r.validate();
  return r;
}

Session::~Session() {
  if (!stopped_) {
    if (sampler_.joinable()) {
      {
        std::lock_guard<std::mutex> lock(mu_);
        stopping_ = true;
      }
      cv_.notify_all();
      sampler_.join();
    }
    g_session_active = false;
  }
}

Session start_session(const TrackerConfig& config, const HardwareTable& hw,
                      const GridIntensityTable& grid) {
  return Session(config, hw, grid);
}

WrappedResult run_wrapped(const TrackerConfig& config, const std::vector<std::string>& argv,
                          std::optional<double> n_items, const HardwareTable& hw,
                          const GridIntensityTable& grid) {
  if (argv.empty()) throw ValidationError("wrapped command must be non-empty");
  Session session(config, hw, grid);

  std::vector<char*> cargv;
  cargv.reserve(argv.size() + 1);
  for (const auto& a : argv) cargv.push_back(const_cast<char*>(a.c_str()));
  cargv.push_back(nullptr);

  pid_t pid = -1;
  const int spawn_rc =
      posix_spawnp(&pid, cargv[0], nullptr, nullptr, cargv.data(), environ);
  if (spawn_rc != 0)
    throw MeasurementError("cannot spawn '" + argv[0] + "': " + std::strerror(spawn_rc));

  int status = 0;
  if (waitpid(pid, &status, 0) < 0)
    throw MeasurementError(std::string("waitpid failed: ") + std::strerror(errno));

  WrappedResult out;
  out.reading = session.stop(n_items);
  if (WIFEXITED(status))
    out.exit_status = WEXITSTATUS(status);
  else if (WIFSIGNALED(status))
    out.exit_status = 128 + WTERMSIG(status);
  else
    out.exit_status = 1;
  return out;
}

namespace {

EnergyReading import_from_fields(const std::string& origin,
                                 std::map<std::string, double> nums,
                                 std::map<std::string, std::string> strs,
                                 const GridIntensityTable& grid) {
  auto num = [&](const char* k) -> std::optional<double> {
    auto it = nums.find(k);
    return it == nums.end() ? std::nullopt : std::optional<double>(it->second);
  };
  auto str = [&](const char* k) -> std::optional<std::string> {
    auto it = strs.find(k);
    return it == strs.end() ? std::nullopt : std::optional<std::string>(it->second);
  };

  const auto e_wh = num("energy_wh");
  const auto e_kwh = num("energy_kwh");
  const auto e_consumed = num("energy_consumed");  // codecarbon, kWh
  const int n_energy = int(bool(e_wh)) + int(bool(e_kwh)) + int(bool(e_consumed));
  if (n_energy == 0)
    throw ParseError(origin + ": no energy field (energy_wh, energy_kwh or energy_consumed)");
  if (n_energy > 1)
    throw ParseError(origin + ": conflicting duplicate energy fields");
  double energy_wh = e_wh ? *e_wh : (e_kwh ? *e_kwh : *e_consumed) * 1000.0;

  const auto dur = num("duration_s") ? num("duration_s") : num("duration");
  if (!dur) throw ParseError(origin + ": missing duration field");

  const auto em_g = num("emissions_g");
  const auto em_kg = num("emissions_kg") ? num("emissions_kg") : num("emissions");
  if (em_g && em_kg)
    throw ParseError(origin + ": conflicting duplicate emissions fields");

  EnergyReading r;
  r.label = str("label").value_or("imported");
  r.duration_s = *dur;
  r.pue = num("pue").value_or(1.0);
  const bool pue_applied = nums.count("pue_applied") ? nums["pue_applied"] != 0.0 : true;
  r.energy_wh = pue_applied ? energy_wh : energy_wh * r.pue;
  r.country_iso_code = str("country_iso_code");
  if (em_g || em_kg) {
    // the source's own figure is preserved, never recomputed
    r.co2_g_operational = em_g ? *em_g : *em_kg * 1000.0;
  } else if (r.country_iso_code) {
    r.co2_g_operational = r.energy_wh / 1000.0 * grid.lookup(*r.country_iso_code);
  }
  r.co2_g_total = r.co2_g_operational;
  if (num("n_items")) {
    r.n_items = *num("n_items");
    r.throughput_items_per_s = *r.n_items / r.duration_s;
  }
  r.backend_used = Backend::imported;
  r.hardware_id = str("hardware_id").value_or("external");
  r.validate();
  return r;
}

}  // namespace

EnergyReading import_external_reading(const std::string& path,
                                      const GridIntensityTable& grid) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open import file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string content = buf.str();
  const auto first = content.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) throw ParseError(path + ": empty import file");

  std::map<std::string, double> nums;
  std::map<std::string, std::string> strs;

  if (content[first] == '{') {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(content);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path + ": " + e.what());
    }
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (it->is_number())
        nums[it.key()] = it->get<double>();
      else if (it->is_boolean())
        nums[it.key()] = it->get<bool>() ? 1.0 : 0.0;
      else if (it->is_string())
        strs[it.key()] = it->get<std::string>();
      else
        throw ParseError(path + ": field '" + it.key() + "' has an unsupported type");
    }
  } else {
    // one header row plus one data row, codecarbon style
    std::stringstream ss(content);
    std::string header_line, data_line;
    if (!std::getline(ss, header_line) || !std::getline(ss, data_line))
      throw ParseError(path + ": CSV import needs a header row and one data row");
    auto split = [](const std::string& line) {
      std::vector<std::string> out;
      std::stringstream ls(line);
      std::string f;
      while (std::getline(ls, f, ',')) out.push_back(strip(f));
      return out;
    };
    const auto headers = split(header_line);
    const auto values = split(data_line);
    if (headers.size() != values.size())
      throw ParseError(path + ":2: " + std::to_string(values.size()) + " fields but " +
                       std::to_string(headers.size()) + " columns in the header");
    for (std::size_t i = 0; i < headers.size(); ++i) {
      if (values[i].empty()) continue;
      try {
        std::size_t pos = 0;
        const double v = std::stod(values[i], &pos);
        if (pos == values[i].size()) {
          nums[headers[i]] = v;
          continue;
        }
      } catch (const std::exception&) {
      }
      strs[headers[i]] = values[i];
    }
  }
  return import_from_fields(path, std::move(nums), std::move(strs), grid);
}

}  // namespace aet
