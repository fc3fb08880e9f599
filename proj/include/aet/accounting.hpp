#pragma once

#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "aet/model.hpp"

namespace aet {

// Break-even deployment volume. Unbounded means the comparison never
// amortizes (non-positive marginal gap, or an infeasible quality check);
// it sorts above every finite value and serializes as the string
// "infinity" so downstream aggregates cannot hide it.
class Crossover {
 public:
  Crossover() = default;  // unbounded
  static Crossover unbounded() { return Crossover{}; }
  static Crossover at(double n);

  bool is_finite() const;
  double value() const { return n_; }  // +inf when unbounded

  friend bool operator<(const Crossover& a, const Crossover& b) { return a.n_ < b.n_; }
  friend bool operator==(const Crossover& a, const Crossover& b);

 private:
  double n_ = std::numeric_limits<double>::infinity();
};

// Median with unbounded values sorting above all finite ones; an even-length
// central pair containing an unbounded value yields unbounded.
Crossover median_crossover(std::vector<Crossover> values);
std::pair<Crossover, Crossover> crossover_hinges(std::vector<Crossover> values);

std::string to_string(const Crossover& c);          // "%.17g" or "infinity"
nlohmann::json crossover_json(const Crossover& c);  // number or "infinity"
Crossover crossover_from_json(const nlohmann::json& j);

// Serial host solver: energy of one instance at constant power over the
// per-instance time budget.
double baseline_per_instance_energy(double power_w, double t_meta_s);

struct NnPerInstance {
  double energy_wh = 0.0;
  double throughput_inst_per_s = 0.0;
};

// Batched accelerator: throughput-amortized per-instance energy.
NnPerInstance nn_per_instance_energy(double power_w, double batch, double t_batch_s);

// Mean relative excess of solution cost over the reference cost.
double optimality_gap(const std::vector<std::pair<double, double>>& samples);

// Quality constraint: the candidate's gap must not exceed the baseline's
// gap plus the tolerance (inclusive).
bool feasibility(double gap_nn, double gap_base, double delta);

// The threshold itself: training cost over the marginal per-instance gap,
// regularized by epsilon; unbounded when infeasible or non-amortizing.
Crossover compute_aet(double e_train, double e_base_inst, double e_nn_inst,
                      double epsilon, bool feasible);

double to_carbon(double energy_wh, double ci_g_per_kwh);
double to_cost(double energy_wh, double price_per_kwh);

// Fabrication carbon attributed to n instances at throughput tau,
// amortized linearly over the hardware lifetime.
double embodied_carbon(double n, double tau_inst_per_s, const HardwareSpec& spec);

// Operational plus (optionally) embodied carbon of n instances.
double total_carbon(double n, const SolverProfile& profile, const Scenario& scenario,
                    const HardwareSpec& spec);

// lambda * (e_train + n * e_inst); baseline callers pass e_train = 0.
double cumulative_energy(double n, double e_train, double e_inst, double pue);

}  // namespace aet
