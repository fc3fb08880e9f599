#include "aet/accounting.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace aet {

Crossover Crossover::at(double n) {
  if (!std::isfinite(n) || !(n > 0.0))
    throw ValidationError("finite crossover must be a positive finite count");
  Crossover c;
  c.n_ = n;
  return c;
}

bool Crossover::is_finite() const { return std::isfinite(n_); }

bool operator==(const Crossover& a, const Crossover& b) {
  if (!a.is_finite() && !b.is_finite()) return true;
  return a.n_ == b.n_;
}

Crossover median_crossover(std::vector<Crossover> values) {
  if (values.empty()) throw ValidationError("median of empty crossover list");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  if (n % 2) return values[n / 2];
  const Crossover& lo = values[n / 2 - 1];
  const Crossover& hi = values[n / 2];
  if (!lo.is_finite() || !hi.is_finite()) return Crossover::unbounded();
  return Crossover::at(0.5 * (lo.value() + hi.value()));
}

std::pair<Crossover, Crossover> crossover_hinges(std::vector<Crossover> values) {
  if (values.empty()) throw ValidationError("hinges of empty crossover list");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  if (n == 1) return {values[0], values[0]};
  std::vector<Crossover> lower(values.begin(), values.begin() + n / 2);
  std::vector<Crossover> upper(values.begin() + (n + 1) / 2, values.end());
  return {median_crossover(std::move(lower)), median_crossover(std::move(upper))};
}

std::string to_string(const Crossover& c) {
  if (!c.is_finite()) return "infinity";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", c.value());
  return buf;
}

nlohmann::json crossover_json(const Crossover& c) {
  if (!c.is_finite()) return "infinity";
  return c.value();
}

Crossover crossover_from_json(const nlohmann::json& j) {
  if (j.is_string()) {
    if (j.get<std::string>() == "infinity") return Crossover::unbounded();
    throw ParseError("crossover must be a number or \"infinity\"");
  }
  return Crossover::at(j.get<double>());
}

double baseline_per_instance_energy(double power_w, double t_meta_s) {
  if (!(power_w > 0.0)) throw ValidationError("power_w must be > 0");
  if (!(t_meta_s > 0.0)) throw ValidationError("t_meta_s must be > 0");
  return power_w * t_meta_s / 3600.0;
}

NnPerInstance nn_per_instance_energy(double power_w, double batch, double t_batch_s) {
  if (!(power_w > 0.0)) throw ValidationError("power_w must be > 0");
  if (!(batch > 0.0)) throw ValidationError("batch must be > 0");
  if (!(t_batch_s > 0.0)) throw ValidationError("t_batch_s must be > 0");
  NnPerInstance out;
  out.throughput_inst_per_s = batch / t_batch_s;
  out.energy_wh = power_w / (3600.0 * out.throughput_inst_per_s);
  return out;
}

double optimality_gap(const std::vector<std::pair<double, double>>& samples) {
  if (samples.empty()) throw ValidationError("optimality gap needs at least one sample");
  double sum = 0.0;
  for (const auto& [cost, ref] : samples) {
    if (!(ref > 0.0)) throw ValidationError("reference_cost must be > 0");
    sum += (cost - ref) / ref;
  }
  return sum / static_cast<double>(samples.size());
}

bool feasibility(double gap_nn, double gap_base, double delta) {
  if (!(delta >= 0.0)) throw ValidationError("delta must be >= 0");
  return gap_nn <= gap_base + delta;
}

Crossover compute_aet(double e_train, double e_base_inst, double e_nn_inst,
                      double epsilon, bool feasible) {
  if (!(e_train > 0.0)) throw ValidationError("e_train must be > 0");
  if (!(epsilon > 0.0)) throw ValidationError("epsilon must be > 0");
  if (!feasible) return Crossover::unbounded();
  if (e_base_inst <= e_nn_inst) return Crossover::unbounded();
  return Crossover::at(e_train / std::max(e_base_inst - e_nn_inst, epsilon));
}

double to_carbon(double energy_wh, double ci_g_per_kwh) {
  if (!(energy_wh >= 0.0)) throw ValidationError("energy_wh must be >= 0");
  if (!(ci_g_per_kwh >= 0.0)) throw ValidationError("grid intensity must be >= 0");
  return energy_wh / 1000.0 * ci_g_per_kwh;
}

double to_cost(double energy_wh, double price_per_kwh) {
  if (!(energy_wh >= 0.0)) throw ValidationError("energy_wh must be >= 0");
  if (!(price_per_kwh >= 0.0)) throw ValidationError("price must be >= 0");
  return energy_wh / 1000.0 * price_per_kwh;
}

double embodied_carbon(double n, double tau_inst_per_s, const HardwareSpec& spec) {
  if (!(n >= 0.0)) throw ValidationError("n must be >= 0");
  if (!(tau_inst_per_s > 0.0)) throw ValidationError("throughput must be > 0");
  return spec.embodied_g() * ((n / tau_inst_per_s) / spec.lifetime_s());
}

double total_carbon(double n, const SolverProfile& profile, const Scenario& scenario,
                    const HardwareSpec& spec) {
  profile.validate();
  if (scenario.unit != Unit::carbon_g)
    throw ConfigError("total_carbon requires a carbon-unit scenario");
  double total = n * to_carbon(profile.per_instance_energy_wh,
                               scenario.grid_intensity_g_per_kwh);
  if (scenario.include_embodied)
    total += embodied_carbon(n, profile.throughput_inst_per_s, spec);
  return total;
}

double cumulative_energy(double n, double e_train, double e_inst, double pue) {
  if (!(n >= 0.0)) throw ValidationError("n must be >= 0");
  if (!(pue >= 1.0)) throw ValidationError("pue must be >= 1");
  return pue * (e_train + n * e_inst);
}

}  // namespace aet
