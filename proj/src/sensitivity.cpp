#include "aet/sensitivity.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <thread>

#include "aet/asymptotics.hpp"
#include "aet/stats.hpp"

namespace aet {
namespace {

bool close(double a, double b) {
  return std::fabs(a - b) <= 1e-12 * std::max({std::fabs(a), std::fabs(b), 1.0});
}

std::string fmt_g17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string nn_config_key(const GridPoint& p) {
  return "B=" + std::to_string(p.batch_size) + "|hw=" + p.hardware_id +
         "|seed=" + std::to_string(p.seed_index);
}

std::string base_config_key(const GridPoint& p) {
  std::string key = "mode=" + to_string(p.thread_mode) +
                    "|threads=" + std::to_string(p.thread_count);
  if (p.baseline_budget_s) key += "|t=" + fmt_g17(*p.baseline_budget_s);
  return key;
}

// Per-instance Wh converted into the scenario's accounting unit, with an
// optional per-instance embodied carbon rate for the carbon unit.
double unit_value(double wh, const Scenario& sc, double embodied_rate_g) {
  switch (sc.unit) {
    case Unit::energy_wh:
      return wh;
    case Unit::carbon_g:
      return to_carbon(wh, sc.grid_intensity_g_per_kwh) + embodied_rate_g;
    case Unit::money:
      return to_cost(wh, sc.unit_price_per_kwh.value());
  }
  throw ValidationError("invalid unit enum value");
}

}  // namespace

Axes Axes::defaults() {
  Axes a;
  a.batch = {1, 32, 128, 512, 1024};
  a.delta = {0.0, 0.01, 0.02, 0.05, 0.10};
  const int nproc = std::max(2u, std::thread::hardware_concurrency());
  a.threads = {{ThreadMode::mono, 1},
               {ThreadMode::multi, nproc / 2},
               {ThreadMode::multi, nproc}};
  a.hardware = {"apple-m4", "intel-xeon-8480", "nvidia-rtx-4090", "nvidia-h100"};
  a.seeds = {0, 1, 2, 3, 4};
  a.budgets_s = {1.0, 5.0, 10.0, 30.0, 60.0, 120.0};
  return a;
}

std::size_t Axes::size() const {
  std::size_t n = batch.size() * delta.size() * threads.size() * hardware.size() *
                  seeds.size();
  if (!budgets_s.empty()) n *= budgets_s.size();
  return n;
}

void Axes::validate() const {
  if (batch.empty()) throw ConfigError("empty axis: batch");
  if (delta.empty()) throw ConfigError("empty axis: delta");
  if (threads.empty()) throw ConfigError("empty axis: threads");
  if (hardware.empty()) throw ConfigError("empty axis: hardware");
  if (seeds.empty()) throw ConfigError("empty axis: seeds");
  // the budget axis may be omitted entirely
}

std::vector<GridPoint> build_grid(const Axes& axes) {
  axes.validate();
  std::vector<GridPoint> grid;
  grid.reserve(axes.size());
  for (int b : axes.batch)
    for (double d : axes.delta)
      for (const ThreadSetting& t : axes.threads)
        for (const std::string& h : axes.hardware)
          for (int s : axes.seeds) {
            GridPoint p;
            p.batch_size = b;
            p.delta = d;
            p.thread_mode = t.mode;
            p.thread_count = t.count;
            p.hardware_id = h;
            p.seed_index = s;
            if (axes.budgets_s.empty()) {
              grid.push_back(p);
            } else {
              for (double budget : axes.budgets_s) {
                p.baseline_budget_s = budget;
                grid.push_back(p);
              }
            }
          }
  return grid;
}

const NnEnergyEntry* Manifest::find_nn(const GridPoint& p) const {
  const NnEnergyEntry* seedless = nullptr;
  for (const auto& e : nn) {
    if (e.batch != p.batch_size || e.hardware_id != p.hardware_id) continue;
    if (e.seed) {
      if (*e.seed == p.seed_index) return &e;
    } else if (!seedless) {
      seedless = &e;
    }
  }
  return seedless;
}

const BaselineEnergyEntry* Manifest::find_baseline(const GridPoint& p) const {
  const BaselineEnergyEntry* loose = nullptr;
  for (const auto& e : baseline) {
    if (e.mode != p.thread_mode) continue;
    const bool budget_match =
        (!e.budget_s && !p.baseline_budget_s) ||
        (e.budget_s && p.baseline_budget_s && close(*e.budget_s, *p.baseline_budget_s));
    if (!budget_match) continue;
    if (e.threads) {
      if (*e.threads == p.thread_count) return &e;
    } else if (!loose) {
      loose = &e;
    }
  }
  return loose;
}

Manifest Manifest::from_json(const nlohmann::json& j) {
  Manifest m;
  try {
    const auto& tr = j.at("training");
    m.training.per_seed_energy_wh = tr.at("per_seed_energy_wh").get<std::vector<double>>();
    if (tr.contains("pue_applied")) m.training.pue_applied = tr.at("pue_applied").get<bool>();
    if (tr.contains("duration_s")) m.training_duration_s = tr.at("duration_s").get<double>();
    if (tr.contains("hardware")) m.training_hardware_id = tr.at("hardware").get<std::string>();
    m.training.validate();

    auto parse_gap = [](const nlohmann::json& g) -> double {
      if (g.is_number()) return g.get<double>();
      if (g.is_object() && g.contains("samples")) {
        std::vector<std::pair<double, double>> samples;
        for (const auto& s : g.at("samples"))
          samples.emplace_back(s.at(0).get<double>(), s.at(1).get<double>());
        return optimality_gap(samples);
      }
      throw ParseError("gap must be a number or {\"samples\": [[cost, ref], ...]}");
    };
    if (j.contains("gaps")) {
      if (j.at("gaps").contains("nn")) m.gap_nn = parse_gap(j.at("gaps").at("nn"));
      if (j.at("gaps").contains("baseline"))
        m.gap_base = parse_gap(j.at("gaps").at("baseline"));
    }

    for (const auto& e : j.at("nn_energy")) {
      NnEnergyEntry n;
      n.batch = e.at("batch").get<int>();
      n.hardware_id = e.at("hardware").get<std::string>();
      if (e.contains("seed")) n.seed = e.at("seed").get<int>();
      n.per_instance_energy_wh = e.at("per_instance_energy_wh").get<double>();
      if (e.contains("throughput_inst_per_s"))
        n.throughput_inst_per_s = e.at("throughput_inst_per_s").get<double>();
      if (!(n.per_instance_energy_wh > 0.0))
        throw ValidationError("nn per_instance_energy_wh must be > 0");
      m.nn.push_back(std::move(n));
    }
    for (const auto& e : j.at("baseline_energy")) {
      BaselineEnergyEntry b;
      b.mode = thread_mode_from_string(e.at("mode").get<std::string>());
      if (e.contains("threads")) b.threads = e.at("threads").get<int>();
      if (e.contains("budget_s")) b.budget_s = e.at("budget_s").get<double>();
      b.per_instance_energy_wh = e.at("per_instance_energy_wh").get<double>();
      if (e.contains("throughput_inst_per_s"))
        b.throughput_inst_per_s = e.at("throughput_inst_per_s").get<double>();
      if (e.contains("hardware")) b.hardware_id = e.at("hardware").get<std::string>();
      if (!(b.per_instance_energy_wh > 0.0))
        throw ValidationError("baseline per_instance_energy_wh must be > 0");
      m.baseline.push_back(std::move(b));
    }

    if (j.contains("axes")) {
      const auto& ja = j.at("axes");
      Axes a;
      a.batch = ja.at("batch").get<std::vector<int>>();
      a.delta = ja.at("delta").get<std::vector<double>>();
      for (const auto& t : ja.at("threads")) {
        ThreadSetting ts;
        ts.mode = thread_mode_from_string(t.at("mode").get<std::string>());
        ts.count = t.contains("count") ? t.at("count").get<int>() : 1;
        a.threads.push_back(ts);
      }
      a.hardware = ja.at("hardware").get<std::vector<std::string>>();
      a.seeds = ja.at("seeds").get<std::vector<int>>();
      if (ja.contains("budget_s")) a.budgets_s = ja.at("budget_s").get<std::vector<double>>();
      a.validate();
      m.axes = std::move(a);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed manifest: ") + e.what());
  }
  return m;
}

Manifest Manifest::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open manifest: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
  return from_json(j);
}

PointResult evaluate_point(const GridPoint& p, const Manifest& m, const Scenario& sc,
                           const HardwareTable& hw) {
  PointResult r;
  r.point = p;
  if (p.seed_index < 0 ||
      p.seed_index >= static_cast<int>(m.training.per_seed_energy_wh.size())) {
    r.error = "no training energy for seed " + std::to_string(p.seed_index);
    return r;
  }
  const NnEnergyEntry* nn = m.find_nn(p);
  if (!nn) {
    r.error = "no nn energy for batch=" + std::to_string(p.batch_size) +
              " hardware=" + p.hardware_id;
    return r;
  }
  const BaselineEnergyEntry* base = m.find_baseline(p);
  if (!base) {
    r.error = "no baseline energy for mode=" + to_string(p.thread_mode) +
              (p.baseline_budget_s ? " budget=" + fmt_g17(*p.baseline_budget_s) : "");
    return r;
  }

  double e_train_wh = m.training.per_seed_energy_wh[p.seed_index];
  // readings already carrying PUE are normalized back to raw energy; the
  // scenario's symmetric overhead is applied downstream on both sides.
  if (m.training.pue_applied) e_train_wh /= sc.pue;

  double emb_nn = 0.0, emb_base = 0.0, emb_train = 0.0;
  if (sc.unit == Unit::carbon_g && sc.include_embodied) {
    const HardwareSpec* nn_spec = hw.find(p.hardware_id);
    if (!nn_spec) {
      r.error = "unknown hardware id: " + p.hardware_id;
      return r;
    }
    double tau_nn = nn->throughput_inst_per_s.value_or(0.0);
    if (!(tau_nn > 0.0)) {
      r.error = "embodied accounting needs nn throughput for batch=" +
                std::to_string(p.batch_size);
      return r;
    }
    emb_nn = embodied_rate_g_per_instance(*nn_spec, tau_nn);

    std::string base_hw = base->hardware_id.value_or("generic-cpu");
    const HardwareSpec* base_spec = hw.find(base_hw);
    if (!base_spec) {
      r.error = "unknown baseline hardware id: " + base_hw;
      return r;
    }
    // fall back to one instance per budget when throughput is unstated
    double tau_base = base->throughput_inst_per_s.value_or(
        p.baseline_budget_s ? 1.0 / *p.baseline_budget_s : 0.0);
    if (!(tau_base > 0.0)) {
      r.error = "embodied accounting needs baseline throughput";
      return r;
    }
    emb_base = embodied_rate_g_per_instance(*base_spec, tau_base);
  }
  if (sc.unit == Unit::carbon_g && sc.include_training_embodied) {
    if (!m.training_duration_s || !m.training_hardware_id)
      throw ConfigError(
          "include_training_embodied needs training duration_s and hardware in the manifest");
    const HardwareSpec& spec = hw.at(*m.training_hardware_id);
    emb_train = spec.embodied_g() * (*m.training_duration_s / spec.lifetime_s());
  }

  r.e_train = unit_value(e_train_wh, sc, 0.0) + emb_train;
  r.e_nn = unit_value(nn->per_instance_energy_wh, sc, emb_nn);
  r.e_base = unit_value(base->per_instance_energy_wh, sc, emb_base);
  r.feasible = feasibility(m.gap_nn, m.gap_base, p.delta);
  r.ratio = asymptotic_ratio(r.e_nn, r.e_base);
  r.crossover = compute_aet(r.e_train, r.e_base, r.e_nn, sc.epsilon_in_unit(), r.feasible);
  return r;
}

std::vector<PointResult> evaluate_grid(const Axes& axes, const Manifest& m,
                                       const Scenario& sc, const HardwareTable& hw) {
  std::vector<GridPoint> grid = build_grid(axes);
  std::vector<PointResult> out;
  out.reserve(grid.size());
  for (const GridPoint& p : grid) out.push_back(evaluate_point(p, m, sc, hw));
  return out;
}

SliceStats aggregate(const std::vector<PointResult>& results) {
  if (results.empty()) throw ValidationError("aggregate of empty result set");
  SliceStats s;
  s.n_points = results.size();
  std::vector<Crossover> crossovers;
  std::vector<double> ratios;
  for (const auto& r : results) {
    if (!r.ok()) {
      ++s.n_errors;
      continue;
    }
    ++s.n_ok;
    if (!r.feasible) ++s.n_infeasible;
    crossovers.push_back(r.crossover);
    ratios.push_back(r.ratio);
  }
  if (!crossovers.empty()) {
    s.median_crossover = median_crossover(crossovers);
    std::tie(s.q1_crossover, s.q3_crossover) = crossover_hinges(crossovers);
    s.median_ratio = median(ratios);
    std::tie(s.q1_ratio, s.q3_ratio) = tukey_hinges(ratios);
  }
  return s;
}

nlohmann::json slice_stats_json(const SliceStats& s) {
  nlohmann::json j;
  j["n_points"] = s.n_points;
  j["n_ok"] = s.n_ok;
  j["n_errors"] = s.n_errors;
  j["n_infeasible"] = s.n_infeasible;
  if (s.n_ok > 0) {
    j["median_crossover"] = crossover_json(s.median_crossover);
    j["iqr_crossover"] = {crossover_json(s.q1_crossover), crossover_json(s.q3_crossover)};
    j["median_ratio"] = s.median_ratio;
    j["iqr_ratio"] = {s.q1_ratio, s.q3_ratio};
  }
  return j;
}

EnvelopeResult envelope(const std::vector<PointResult>& results, const Scenario& sc) {
  sc.validate();
  // distinct side configurations, keyed deterministically
  std::map<std::string, std::pair<double, double>> nn_cfg;  // key -> (e_train, e_nn)
  std::map<std::string, double> base_cfg;                   // key -> e_base
  bool any_nn = false, any_base = false;
  for (const auto& r : results) {
    if (!r.ok()) continue;
    nn_cfg[nn_config_key(r.point)] = {r.e_train, r.e_nn};
    base_cfg[base_config_key(r.point)] = r.e_base;
    any_nn = any_base = true;
  }
  if (!any_nn || !any_base)
    throw ValidationError("envelope needs at least one evaluated configuration per side");

  EnvelopeResult env;
  for (double n : log_spaced(sc.n_min, sc.n_max, sc.n_points)) {
    BandPoint bn{n, 0, 0}, bb{n, 0, 0};
    bool first = true;
    for (const auto& [key, cfg] : nn_cfg) {
      (void)key;
      const double y = cumulative_energy(n, cfg.first, cfg.second, sc.pue);
      if (first) {
        bn.lo = bn.hi = y;
        first = false;
      } else {
        bn.lo = std::min(bn.lo, y);
        bn.hi = std::max(bn.hi, y);
      }
    }
    first = true;
    for (const auto& [key, e_base] : base_cfg) {
      (void)key;
      const double y = cumulative_energy(n, 0.0, e_base, sc.pue);
      if (first) {
        bb.lo = bb.hi = y;
        first = false;
      } else {
        bb.lo = std::min(bb.lo, y);
        bb.hi = std::max(bb.hi, y);
      }
    }
    env.nn_band.push_back(bn);
    env.base_band.push_back(bb);
  }

  // one crossover per distinct (nn config, base config, delta) triple
  std::map<std::string, PairCrossover> pairs;
  for (const auto& r : results) {
    if (!r.ok()) continue;
    PairCrossover pc;
    pc.nn_key = nn_config_key(r.point);
    pc.base_key = base_config_key(r.point);
    pc.delta = r.point.delta;
    pc.crossover = r.crossover;
    pc.feasible = r.feasible;
    pairs.emplace(pc.nn_key + "#" + pc.base_key + "#" + fmt_g17(pc.delta), pc);
  }
  std::vector<Crossover> all;
  double lo = 0, hi = 0;
  bool have_finite = false;
  for (const auto& [key, pc] : pairs) {
    (void)key;
    env.crossovers.push_back(pc);
    all.push_back(pc.crossover);
    if (pc.crossover.is_finite()) {
      const double v = pc.crossover.value();
      if (!have_finite) {
        lo = hi = v;
        have_finite = true;
      } else {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    }
  }
  if (have_finite) env.aet_interval = {lo, hi};
  env.median_crossover = median_crossover(all);
  return env;
}

void write_sweep_csv(std::ostream& os, const std::vector<PointResult>& results) {
  os << "batch,delta,thread_mode,thread_count,hardware,seed,budget_s,"
        "e_train,e_nn,e_base,ratio,crossover,feasible,error\n";
  for (const auto& r : results) {
    const GridPoint& p = r.point;
    os << p.batch_size << ',' << fmt_g17(p.delta) << ',' << to_string(p.thread_mode) << ','
       << p.thread_count << ',' << p.hardware_id << ',' << p.seed_index << ','
       << (p.baseline_budget_s ? fmt_g17(*p.baseline_budget_s) : "") << ',';
    if (r.ok()) {
      os << fmt_g17(r.e_train) << ',' << fmt_g17(r.e_nn) << ',' << fmt_g17(r.e_base) << ','
         << fmt_g17(r.ratio) << ',' << to_string(r.crossover) << ','
         << (r.feasible ? '1' : '0') << ',';
    } else {
      std::string msg = r.error;
      std::replace(msg.begin(), msg.end(), ',', ';');
      os << ",,,,," << ',' << msg;
    }
    os << '\n';
  }
}

std::vector<PointResult> read_sweep_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw ParseError("empty sweep CSV");
  std::vector<PointResult> out;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) f.push_back(field);
    while (f.size() < 14) f.push_back("");
    try {
      PointResult r;
      r.point.batch_size = std::stoi(f[0]);
      r.point.delta = std::stod(f[1]);
      r.point.thread_mode = thread_mode_from_string(f[2]);
      r.point.thread_count = std::stoi(f[3]);
      r.point.hardware_id = f[4];
      r.point.seed_index = std::stoi(f[5]);
      if (!f[6].empty()) r.point.baseline_budget_s = std::stod(f[6]);
      if (f[13].empty()) {
        r.e_train = std::stod(f[7]);
        r.e_nn = std::stod(f[8]);
        r.e_base = std::stod(f[9]);
        r.ratio = std::stod(f[10]);
        r.crossover = f[11] == "infinity" ? Crossover::unbounded()
                                          : Crossover::at(std::stod(f[11]));
        r.feasible = f[12] == "1";
      } else {
        r.error = f[13];
      }
      out.push_back(std::move(r));
    } catch (const std::exception& e) {
      throw ParseError("sweep CSV line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

nlohmann::json summary_json(const std::vector<PointResult>& results, const Scenario& sc) {
  nlohmann::json j;
  j["unit"] = to_string(sc.unit);
  j["epsilon"] = sc.epsilon_in_unit();
  j["overall"] = slice_stats_json(aggregate(results));
  std::vector<PointResult> multi;
  for (const auto& r : results)
    if (r.point.thread_mode == ThreadMode::multi) multi.push_back(r);
  if (!multi.empty()) j["multi_thread_slice"] = slice_stats_json(aggregate(multi));
  bool any_ok = false;
  for (const auto& r : results) any_ok = any_ok || r.ok();
  if (any_ok) {
    const EnvelopeResult env = envelope(results, sc);
    if (env.aet_interval)
      j["aet_interval"] = {env.aet_interval->first, env.aet_interval->second};
    else
      j["aet_interval"] = nullptr;
    j["median_crossover"] = crossover_json(env.median_crossover);
  }
  return j;
}

}  // namespace aet
