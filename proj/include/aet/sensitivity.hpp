#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "aet/accounting.hpp"
#include "aet/model.hpp"

namespace aet {

struct ThreadSetting {
  ThreadMode mode = ThreadMode::mono;
  int count = 1;
};

// Axis-value sets for the sensitivity grid. The budget axis is the only
// one that may be omitted (empty); every other empty axis is a
// configuration error.
struct Axes {
  std::vector<int> batch;
  std::vector<double> delta;  // fractions, e.g. 0.05 for 5%
  std::vector<ThreadSetting> threads;
  std::vector<std::string> hardware;
  std::vector<int> seeds;
  std::vector<double> budgets_s;  // empty = no budget axis

  static Axes defaults();
  std::size_t size() const;
  void validate() const;
};

// Measured per-instance energy for one neural-side coordinate. Entries
// without a seed apply to every seed; an entry with a seed wins over a
// seedless one for that seed.
struct NnEnergyEntry {
  int batch = 1;
  std::string hardware_id;
  std::optional<int> seed;
  double per_instance_energy_wh = 0.0;
  std::optional<double> throughput_inst_per_s;
};

struct BaselineEnergyEntry {
  ThreadMode mode = ThreadMode::mono;
  std::optional<int> threads;
  std::optional<double> budget_s;
  double per_instance_energy_wh = 0.0;
  std::optional<double> throughput_inst_per_s;
  std::optional<std::string> hardware_id;
};

// Measurement manifest: everything the sweep needs that the artifact must
// not fabricate. Unknown grid coordinates surface as per-point errors.
struct Manifest {
  TrainingProfile training;
  double gap_nn = 0.0;
  double gap_base = 0.0;
  std::vector<NnEnergyEntry> nn;
  std::vector<BaselineEnergyEntry> baseline;
  std::optional<Axes> axes;
  std::optional<double> training_duration_s;   // for training-side embodied
  std::optional<std::string> training_hardware_id;

  const NnEnergyEntry* find_nn(const GridPoint& p) const;
  const BaselineEnergyEntry* find_baseline(const GridPoint& p) const;

  static Manifest from_json(const nlohmann::json& j);
  static Manifest load(const std::string& path);
};

struct PointResult {
  GridPoint point;
  double e_train = 0.0;  // scenario units
  double e_nn = 0.0;     // scenario units per instance
  double e_base = 0.0;
  double ratio = 0.0;
  Crossover crossover;
  bool feasible = false;
  std::string error;  // empty = evaluated

  bool ok() const { return error.empty(); }
};

// Cartesian product in lexicographic order over (batch, delta, threads,
// hardware, seed, budget).
std::vector<GridPoint> build_grid(const Axes& axes);

PointResult evaluate_point(const GridPoint& p, const Manifest& m, const Scenario& sc,
                           const HardwareTable& hw = HardwareTable::builtin());
std::vector<PointResult> evaluate_grid(const Axes& axes, const Manifest& m,
                                       const Scenario& sc,
                                       const HardwareTable& hw = HardwareTable::builtin());

struct SliceStats {
  std::size_t n_points = 0;
  std::size_t n_ok = 0;
  std::size_t n_errors = 0;
  std::size_t n_infeasible = 0;
  Crossover median_crossover;
  Crossover q1_crossover, q3_crossover;
  double median_ratio = 0.0;
  double q1_ratio = 0.0, q3_ratio = 0.0;
};

// Medians/IQRs over evaluated points; unbounded crossovers participate as
// greater than every finite value.
SliceStats aggregate(const std::vector<PointResult>& results);
nlohmann::json slice_stats_json(const SliceStats& s);

struct BandPoint {
  double n = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

struct PairCrossover {
  std::string nn_key;
  std::string base_key;
  double delta = 0.0;
  Crossover crossover;
  bool feasible = false;
};

// Per-side min/max cumulative-energy bands plus the crossover interval.
struct EnvelopeResult {
  std::vector<BandPoint> nn_band;
  std::vector<BandPoint> base_band;
  std::vector<PairCrossover> crossovers;
  std::optional<std::pair<double, double>> aet_interval;  // empty: no finite crossover
  Crossover median_crossover;
};

EnvelopeResult envelope(const std::vector<PointResult>& results, const Scenario& sc);

// Deterministic sweep serialization. CSV carries one row per grid point;
// the summary bundles slice statistics and the envelope interval.
void write_sweep_csv(std::ostream& os, const std::vector<PointResult>& results);
std::vector<PointResult> read_sweep_csv(std::istream& is);
nlohmann::json summary_json(const std::vector<PointResult>& results, const Scenario& sc);

}  // namespace aet
