#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "aet/model.hpp"

namespace aet {

struct TrackerConfig {
  std::string label;
  double pue = 1.0;
  std::string hardware_id;
  bool report_embodied = false;
  std::optional<std::string> country_iso_code;
  int sample_interval_ms = 100;
  std::vector<Backend> backend_preference = {Backend::hwcounters, Backend::tdp};
};

// A cumulative microjoule counter with a published wraparound range.
struct CounterSource {
  std::string path;          // file holding the cumulative value
  double max_range_uj = 0.0; // counter wraps back to 0 at this value
};

// Delta between two reads of a cumulative counter, unwrapping a single
// wraparound at max_range_uj.
double counter_delta_uj(double prev_uj, double curr_uj, double max_range_uj);

// Reads the counter file; throws MeasurementError if unreadable (callers
// demote to the next backend rather than crash).
double read_counter_uj(const CounterSource& source);

// Package-level energy counters under the powercap tree (or the directory
// named by AET_COUNTER_ROOT, which tests use to inject fixtures). Only
// sources that can actually be read are returned.
std::vector<CounterSource> discover_counter_sources();

// Trapezoidal integral of (t_s, power_w) samples, in Wh.
double integrate_power_samples(const std::vector<std::pair<double, double>>& samples);

// One measurement session. At most one session may be active per process:
// cumulative counters are process-global and concurrent sessions would
// double-count.
class Session {
 public:
  Session(TrackerConfig config, const HardwareTable& hw = HardwareTable::builtin(),
          const GridIntensityTable& grid = GridIntensityTable::builtin());
  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;
  ~Session();

  Backend backend() const { return backend_; }

  // Ends the session and assembles the PUE-adjusted, embodied-amortized
  // reading. Throughput is set iff n_items is given.
  EnergyReading stop(std::optional<double> n_items = std::nullopt);

 private:
  void sampler_loop();
  void sample_once();

  TrackerConfig cfg_;
  std::optional<HardwareSpec> spec_;
  double ci_ = 0.0;
  Backend backend_ = Backend::tdp;
  std::vector<CounterSource> sources_;
  std::vector<double> last_uj_;
  std::vector<double> acc_uj_;
  std::chrono::steady_clock::time_point t0_;
  std::thread sampler_;
  std::mutex mu_;
  std::condition_variable cv_;
  bool stopping_ = false;
  bool stopped_ = false;
};

// Convenience pair for Session construction per the operation contract.
Session start_session(const TrackerConfig& config,
                      const HardwareTable& hw = HardwareTable::builtin(),
                      const GridIntensityTable& grid = GridIntensityTable::builtin());

struct WrappedResult {
  EnergyReading reading;
  int exit_status = 0;  // child's exit code, or 128+signal
};

// Measures an arbitrary child command. The session spans the child's
// lifetime; a reading is emitted even when the child fails, and the
// child's exit status is passed through untouched.
WrappedResult run_wrapped(const TrackerConfig& config, const std::vector<std::string>& argv,
                          std::optional<double> n_items = std::nullopt,
                          const HardwareTable& hw = HardwareTable::builtin(),
                          const GridIntensityTable& grid = GridIntensityTable::builtin());

// File-import adapter for external estimator output (JSON object or a
// one-row CSV with named columns). Imported emission figures are
// preserved, never recomputed; PUE is not re-applied when the source
// already applied it.
EnergyReading import_external_reading(const std::string& path,
                                      const GridIntensityTable& grid = GridIntensityTable::builtin());

}  // namespace aet
