#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "aet/common.hpp"

namespace aet {

constexpr double kSecondsPerYear = 365.25 * 24.0 * 3600.0;

enum class Backend { hwcounters, tdp, imported };
enum class HardwareKind { gpu, cpu, soc };
enum class ThreadMode { mono, multi };
enum class Unit { energy_wh, carbon_g, money };

std::string to_string(Backend b);
Backend backend_from_string(const std::string& s);
std::string to_string(HardwareKind k);
HardwareKind hardware_kind_from_string(const std::string& s);
std::string to_string(ThreadMode m);
ThreadMode thread_mode_from_string(const std::string& s);
std::string to_string(Unit u);
Unit unit_from_string(const std::string& s);

// One measurement session's operational energy, carbon split, throughput
// and backend provenance. Immutable once validated.
struct EnergyReading {
  std::string label;
  double energy_wh = 0.0;  // PUE-adjusted operational energy
  double co2_g_operational = 0.0;
  double co2_g_embodied = 0.0;
  double co2_g_total = 0.0;
  double duration_s = 0.0;
  std::optional<double> n_items;
  std::optional<double> throughput_items_per_s;
  Backend backend_used = Backend::tdp;
  std::string hardware_id;
  double pue = 1.0;  // overhead factor already applied to energy_wh
  std::optional<std::string> country_iso_code;

  void validate() const;
  nlohmann::json to_json() const;
  static EnergyReading from_json(const nlohmann::json& j);
};

// One SKU: fabrication carbon, rated power, amortization lifetime.
struct HardwareSpec {
  std::string id;
  HardwareKind kind = HardwareKind::cpu;
  double embodied_kg = 0.0;  // full-lifetime fabrication carbon
  double tdp_w = 0.0;
  double lifetime_years = 5.0;
  std::string source;

  double embodied_g() const { return embodied_kg * 1000.0; }
  double lifetime_s() const { return lifetime_years * kSecondsPerYear; }
  void validate() const;
};

class HardwareTable {
 public:
  HardwareTable() = default;
  explicit HardwareTable(std::vector<HardwareSpec> specs);

  const HardwareSpec& at(const std::string& id) const;  // throws ConfigError
  const HardwareSpec* find(const std::string& id) const;
  const std::vector<HardwareSpec>& specs() const { return specs_; }

  static HardwareTable builtin();
  static HardwareTable load(const std::string& path);

 private:
  std::vector<HardwareSpec> specs_;
};

// Regional electricity carbon intensity, g CO2e per kWh.
class GridIntensityTable {
 public:
  GridIntensityTable() = default;
  explicit GridIntensityTable(std::map<std::string, double> entries);

  double lookup(const std::string& country_iso_code) const;  // throws ConfigError
  const std::map<std::string, double>& entries() const { return entries_; }

  static GridIntensityTable builtin();
  static GridIntensityTable load(const std::string& path);

 private:
  std::map<std::string, double> entries_;
};

// A solver's marginal cost profile: per-instance energy, throughput and
// solution-quality samples.
struct SolverProfile {
  std::string name;
  double per_instance_energy_wh = 0.0;
  double throughput_inst_per_s = 0.0;
  std::string hardware_id;
  enum class Mode { batched_accelerator, serial_host } mode = Mode::serial_host;
  std::optional<int> batch_size;
  // (solution_cost, reference_cost) pairs; negative gaps are legal.
  std::vector<std::pair<double, double>> cost_samples;
  std::optional<double> gap_override;

  void validate() const;
};

// Per-seed training energy totals.
struct TrainingProfile {
  std::vector<double> per_seed_energy_wh;
  bool pue_applied = false;

  double median_wh() const;
  std::pair<double, double> iqr_wh() const;
  void validate() const;
};

// The comparison context: unit, quality tolerance, regularizer, overheads,
// deployment-volume range.
struct Scenario {
  Unit unit = Unit::energy_wh;
  double delta = 0.0;            // quality tolerance, dimensionless
  double epsilon_wh = 1e-3;      // denominator regularizer, energy units
  double pue = 1.4;              // symmetric overhead factor
  double grid_intensity_g_per_kwh = 0.0;
  std::optional<double> unit_price_per_kwh;
  double n_min = 1e2;
  double n_max = 1e8;
  int n_points = 200;
  bool include_embodied = false;
  bool include_training_embodied = false;

  // epsilon converted into the scenario's accounting unit.
  double epsilon_in_unit() const;
  void validate() const;
  static Scenario from_json(const nlohmann::json& j);
};

// One coordinate of the sensitivity grid.
struct GridPoint {
  int batch_size = 1;
  double delta = 0.0;
  ThreadMode thread_mode = ThreadMode::mono;
  int thread_count = 1;
  std::string hardware_id;
  int seed_index = 0;
  std::optional<double> baseline_budget_s;
};

// [OP] load_hardware_table: path or the shipped built-in table.
HardwareTable load_hardware_table(const std::optional<std::string>& path);

// [OP] load_grid_intensity: CI for an ISO-3166 alpha-3 code.
double load_grid_intensity(const std::string& country_iso_code,
                           const GridIntensityTable& table = GridIntensityTable::builtin());

}  // namespace aet
