// aet: amortization analysis for learned combinatorial solvers.
//
// Subcommands: measure, aet, sweep, envelope, curves, ratio.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "aet/accounting.hpp"
#include "aet/asymptotics.hpp"
#include "aet/model.hpp"
#include "aet/report.hpp"
#include "aet/sensitivity.hpp"
#include "aet/tracker.hpp"

namespace {

using nlohmann::json;

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw aet::ParseError("cannot open file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw aet::ParseError("invalid JSON in " + path + ": " + e.what());
  }
  return j;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw aet::ConfigError("cannot write file: " + path);
  out << text;
}

struct Tables {
  aet::HardwareTable hardware;
  aet::GridIntensityTable grid;
};

Tables load_tables(const std::optional<std::string>& hw_path,
                   const std::optional<std::string>& grid_path) {
  Tables t;
  std::optional<std::string> hw = hw_path;
  if (!hw)
    if (const char* env = std::getenv("AET_HARDWARE_TABLE")) hw = env;
  std::optional<std::string> gr = grid_path;
  if (!gr)
    if (const char* env = std::getenv("AET_GRID_TABLE")) gr = env;
  t.hardware = aet::load_hardware_table(hw);
  t.grid = gr ? aet::GridIntensityTable::load(*gr) : aet::GridIntensityTable::builtin();
  return t;
}

// Energy loaded from a file, normalized to exclude any facility overhead
// the producer already applied (the scenario re-applies its own).
struct EnergyInput {
  double wh = 0.0;              // training total or per-instance, raw
  std::optional<double> gap;    // solution-quality gap, if the file carries one
};

double strip_pue(double wh, double pue) {
  if (!(pue >= 1.0)) throw aet::ValidationError("pue must be >= 1");
  return wh / pue;
}

std::optional<double> read_gap(const json& j) {
  if (j.contains("gap")) return j.at("gap").get<double>();
  if (j.contains("samples")) {
    std::vector<std::pair<double, double>> samples;
    for (const auto& row : j.at("samples"))
      samples.emplace_back(row.at(0).get<double>(), row.at(1).get<double>());
    return aet::optimality_gap(samples);
  }
  return std::nullopt;
}

// Training energy: an EnergyReading, a per-seed profile (median taken), or
// a bare {"energy_wh": X} object.
EnergyInput load_training_input(const std::string& path, double scenario_pue) {
  const json j = load_json_file(path);
  EnergyInput out;
  if (j.contains("per_seed_energy_wh")) {
    aet::TrainingProfile tp;
    tp.per_seed_energy_wh = j.at("per_seed_energy_wh").get<std::vector<double>>();
    tp.pue_applied = j.value("pue_applied", false);
    tp.validate();
    out.wh = tp.pue_applied ? strip_pue(tp.median_wh(), scenario_pue) : tp.median_wh();
    return out;
  }
  if (j.contains("backend_used")) {
    const aet::EnergyReading r = aet::EnergyReading::from_json(j);
    out.wh = strip_pue(r.energy_wh, r.pue);
    return out;
  }
  if (j.contains("energy_wh")) {
    out.wh = j.at("energy_wh").get<double>();
    if (j.value("pue_applied", false)) out.wh = strip_pue(out.wh, scenario_pue);
    return out;
  }
  throw aet::ParseError(path + ": expected per_seed_energy_wh, an energy reading, or energy_wh");
}

// Per-instance energy: an EnergyReading with n_items, a direct
// per_instance_energy_wh object, or power/time primitives.
EnergyInput load_per_instance_input(const std::string& path, double scenario_pue) {
  const json j = load_json_file(path);
  EnergyInput out;
  out.gap = read_gap(j);
  if (j.contains("backend_used")) {
    const aet::EnergyReading r = aet::EnergyReading::from_json(j);
    if (!r.n_items)
      throw aet::ValidationError(path + ": reading lacks n_items; cannot derive per-instance energy");
    out.wh = strip_pue(r.energy_wh, r.pue) / *r.n_items;
    return out;
  }
  if (j.contains("per_instance_energy_wh")) {
    out.wh = j.at("per_instance_energy_wh").get<double>();
    if (j.value("pue_applied", false)) out.wh = strip_pue(out.wh, scenario_pue);
    return out;
  }
  if (j.contains("power_w") && j.contains("t_batch_s")) {
    out.wh = aet::nn_per_instance_energy(j.at("power_w").get<double>(),
                                         j.value("batch", 1.0),
                                         j.at("t_batch_s").get<double>())
                 .energy_wh;
    return out;
  }
  if (j.contains("power_w") && j.contains("t_meta_s")) {
    out.wh = aet::baseline_per_instance_energy(j.at("power_w").get<double>(),
                                               j.at("t_meta_s").get<double>());
    return out;
  }
  throw aet::ParseError(path +
                        ": expected an energy reading, per_instance_energy_wh, or power/time fields");
}

double unit_value(double wh, const aet::Scenario& sc) {
  switch (sc.unit) {
    case aet::Unit::energy_wh:
      return wh;
    case aet::Unit::carbon_g:
      return aet::to_carbon(wh, sc.grid_intensity_g_per_kwh);
    case aet::Unit::money:
      if (!sc.unit_price_per_kwh)
        throw aet::ConfigError("money unit requires a unit price in the scenario");
      return aet::to_cost(wh, *sc.unit_price_per_kwh);
  }
  throw aet::ConfigError("unknown unit");
}

std::string unit_suffix(aet::Unit u) {
  switch (u) {
    case aet::Unit::energy_wh: return "Wh";
    case aet::Unit::carbon_g: return "gCO2e";
    case aet::Unit::money: return "currency units";
  }
  return "";
}

// --axes "batch=1,512;delta=0,5;threads=mono,multi:8;hardware=nvidia-h100;seeds=0,1;budgets=10,60"
aet::Axes parse_axes_spec(const std::string& spec, aet::Axes base) {
  std::stringstream ss(spec);
  std::string clause;
  while (std::getline(ss, clause, ';')) {
    if (clause.empty()) continue;
    const auto eq = clause.find('=');
    if (eq == std::string::npos)
      throw aet::ConfigError("axes clause missing '=': " + clause);
    const std::string name = clause.substr(0, eq);
    std::vector<std::string> values;
    std::stringstream vs(clause.substr(eq + 1));
    std::string v;
    while (std::getline(vs, v, ',')) values.push_back(v);
    if (name == "batch") {
      base.batch.clear();
      for (const auto& s : values) base.batch.push_back(std::stoi(s));
    } else if (name == "delta") {
      base.delta.clear();
      for (const auto& s : values) base.delta.push_back(std::stod(s) / 100.0);
    } else if (name == "threads") {
      base.threads.clear();
      for (const auto& s : values) {
        aet::ThreadSetting t;
        const auto colon = s.find(':');
        const std::string mode = s.substr(0, colon);
        t.mode = aet::thread_mode_from_string(mode);
        t.count = (colon == std::string::npos) ? (t.mode == aet::ThreadMode::mono ? 1 : 2)
                                               : std::stoi(s.substr(colon + 1));
        base.threads.push_back(t);
      }
    } else if (name == "hardware") {
      base.hardware = values;
    } else if (name == "seeds") {
      base.seeds.clear();
      for (const auto& s : values) base.seeds.push_back(std::stoi(s));
    } else if (name == "budgets") {
      base.budgets_s.clear();
      for (const auto& s : values) base.budgets_s.push_back(std::stod(s));
    } else {
      throw aet::ConfigError("unknown axis name: " + name);
    }
  }
  base.validate();
  return base;
}

aet::Scenario load_scenario(const std::optional<std::string>& path) {
  if (!path) return aet::Scenario{};
  return aet::Scenario::from_json(load_json_file(*path));
}

struct AetFlags {
  std::optional<std::string> scenario_path;
  std::optional<double> delta_pct;
  std::optional<double> epsilon_wh;
  std::optional<std::string> unit;
};

void add_scenario_flags(CLI::App* sub, AetFlags& f) {
  sub->add_option("--scenario", f.scenario_path, "Scenario JSON file");
  sub->add_option("--delta", f.delta_pct, "Quality tolerance, percent");
  sub->add_option("--epsilon", f.epsilon_wh, "Denominator regularizer, Wh");
  sub->add_option("--unit", f.unit, "Accounting unit: energy|carbon|money");
}

aet::Scenario resolve_scenario(const AetFlags& f) {
  aet::Scenario sc = load_scenario(f.scenario_path);
  if (f.delta_pct) sc.delta = *f.delta_pct / 100.0;
  if (f.epsilon_wh) sc.epsilon_wh = *f.epsilon_wh;
  if (f.unit) {
    std::string u = *f.unit;
    if (u == "energy") u = "energy_wh";
    if (u == "carbon") u = "carbon_g";
    sc.unit = aet::unit_from_string(u);
  }
  sc.validate();
  return sc;
}

struct Comparison {
  double e_train = 0.0;  // scenario units
  double e_nn = 0.0;
  double e_base = 0.0;
  bool feasible = true;
  aet::Crossover crossover;
};

Comparison compare(const std::string& train_path, const std::string& nn_path,
                   const std::string& base_path, const aet::Scenario& sc) {
  const EnergyInput train = load_training_input(train_path, sc.pue);
  const EnergyInput nn = load_per_instance_input(nn_path, sc.pue);
  const EnergyInput base = load_per_instance_input(base_path, sc.pue);
  Comparison c;
  c.e_train = unit_value(train.wh, sc);
  c.e_nn = unit_value(nn.wh, sc);
  c.e_base = unit_value(base.wh, sc);
  c.feasible = true;
  if (nn.gap && base.gap) c.feasible = aet::feasibility(*nn.gap, *base.gap, sc.delta);
  c.crossover = aet::compute_aet(c.e_train, c.e_base, c.e_nn, sc.epsilon_in_unit(), c.feasible);
  return c;
}

void emit_figure(const aet::plot::Figure& fig, const std::optional<std::string>& svg_path,
                 const std::optional<std::string>& data_path) {
  if (svg_path) {
    std::ostringstream os;
    aet::plot::write_svg(os, fig);
    write_text_file(*svg_path, os.str());
  }
  if (data_path) write_text_file(*data_path, aet::plot::figure_data(fig).dump(2) + "\n");
}

int cmd_measure(const std::vector<std::string>& left, const std::vector<std::string>& child,
                const std::optional<std::string>& hw_path,
                const std::optional<std::string>& grid_path) {
  CLI::App app{"measure a child command's energy"};
  std::string label;
  double pue = 1.0;
  std::string hardware_id;
  bool embodied = false;
  std::optional<std::string> country;
  std::optional<double> items;
  std::optional<std::string> out_path;
  std::string backend = "auto";
  app.add_option("--label", label, "Reading label")->required();
  app.add_option("--pue", pue, "Facility overhead factor");
  app.add_option("--hardware", hardware_id, "Hardware id for TDP fallback / embodied share");
  app.add_flag("--embodied", embodied, "Report amortized embodied carbon");
  app.add_option("--country", country, "ISO-3166 alpha-3 code for grid carbon intensity");
  app.add_option("--items", items, "Item count processed by the child (enables throughput)");
  app.add_option("--out", out_path, "Write the reading JSON here instead of stdout");
  app.add_option("--backend", backend, "auto|hwcounters|tdp");
  try {
    std::vector<std::string> reversed(left.rbegin(), left.rend());
    app.parse(std::move(reversed));
  } catch (const CLI::CallForHelp& e) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << "usage error: " << e.what() << "\n" << app.help();
    return 2;
  }

  const Tables tables = load_tables(hw_path, grid_path);
  aet::TrackerConfig cfg;
  cfg.label = label;
  cfg.pue = pue;
  cfg.hardware_id = hardware_id;
  cfg.report_embodied = embodied;
  cfg.country_iso_code = country;
  if (backend == "hwcounters")
    cfg.backend_preference = {aet::Backend::hwcounters};
  else if (backend == "tdp")
    cfg.backend_preference = {aet::Backend::tdp};
  else if (backend != "auto")
    throw aet::ConfigError("unknown backend: " + backend);

  const aet::WrappedResult res =
      aet::run_wrapped(cfg, child, items, tables.hardware, tables.grid);
  const std::string text = res.reading.to_json().dump(2) + "\n";
  if (out_path)
    write_text_file(*out_path, text);
  else
    std::cout << text;
  return res.exit_status;
}

int run_cli(std::vector<std::string> args, const std::vector<std::string>& child_cmd,
            bool saw_separator) {
  CLI::App app{"amortized efficiency threshold analysis"};
  app.require_subcommand(0, 1);
  std::optional<std::string> hw_path, grid_path;
  app.add_option("--hardware-table", hw_path, "Hardware table CSV (env AET_HARDWARE_TABLE)");
  app.add_option("--grid-table", grid_path, "Grid-intensity CSV (env AET_GRID_TABLE)");

  // -- measure is parsed by hand around the `--` separator below --
  CLI::App* measure = app.add_subcommand("measure", "measure a child command");
  measure->allow_extras();

  CLI::App* aet_cmd = app.add_subcommand("aet", "compute the break-even instance count");
  std::string train_path, nn_path, base_path;
  AetFlags aet_flags;
  aet_cmd->add_option("--train", train_path, "Training energy file")->required();
  aet_cmd->add_option("--nn", nn_path, "Neural per-instance energy file")->required();
  aet_cmd->add_option("--base", base_path, "Baseline per-instance energy file")->required();
  add_scenario_flags(aet_cmd, aet_flags);

  CLI::App* sweep = app.add_subcommand("sweep", "evaluate the sensitivity grid");
  std::string manifest_path;
  std::optional<std::string> axes_spec, from_csv;
  std::string out_csv, out_json;
  AetFlags sweep_flags;
  sweep->add_option("--manifest", manifest_path, "Measurement manifest JSON");
  sweep->add_option("--axes", axes_spec, "Axis restriction, e.g. batch=1,512;delta=0,5");
  sweep->add_option("--from-csv", from_csv, "Re-ingest a previous sweep CSV");
  sweep->add_option("--out-csv", out_csv, "Grid CSV output path");
  sweep->add_option("--out-json", out_json, "Summary JSON output path");
  add_scenario_flags(sweep, sweep_flags);

  CLI::App* env_cmd = app.add_subcommand("envelope", "min/max cumulative bands and AET interval");
  std::string env_manifest;
  std::optional<std::string> env_axes, env_from_csv, env_svg, env_data;
  AetFlags env_flags;
  env_cmd->add_option("--manifest", env_manifest, "Measurement manifest JSON");
  env_cmd->add_option("--axes", env_axes, "Axis restriction");
  env_cmd->add_option("--from-csv", env_from_csv, "Re-ingest a previous sweep CSV");
  env_cmd->add_option("--svg", env_svg, "SVG output path");
  env_cmd->add_option("--data", env_data, "Plot-data JSON output path");
  add_scenario_flags(env_cmd, env_flags);

  CLI::App* curves = app.add_subcommand("curves", "cumulative energy curves with crossover marks");
  std::string c_train, c_nn;
  std::vector<std::string> c_bases;
  std::optional<std::string> c_svg, c_data;
  AetFlags c_flags;
  curves->add_option("--train", c_train, "Training energy file")->required();
  curves->add_option("--nn", c_nn, "Neural per-instance energy file")->required();
  curves->add_option("--base", c_bases, "Baseline per-instance energy file (repeatable)")
      ->required();
  curves->add_option("--svg", c_svg, "SVG output path");
  curves->add_option("--data", c_data, "Plot-data JSON output path");
  add_scenario_flags(curves, c_flags);

  CLI::App* ratio = app.add_subcommand("ratio", "cumulative-ratio curve with asymptote");
  std::string r_train, r_nn, r_base;
  std::optional<std::string> r_svg, r_data;
  AetFlags r_flags;
  ratio->add_option("--train", r_train, "Training energy file")->required();
  ratio->add_option("--nn", r_nn, "Neural per-instance energy file")->required();
  ratio->add_option("--base", r_base, "Baseline per-instance energy file")->required();
  ratio->add_option("--svg", r_svg, "SVG output path");
  ratio->add_option("--data", r_data, "Plot-data JSON output path");
  add_scenario_flags(ratio, r_flags);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(std::move(reversed));
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  }

  if (app.get_subcommands().empty()) {
    std::cout << app.help();
    return 2;
  }

  if (measure->parsed()) {
    if (!saw_separator) {
      std::cerr << "usage error: measure requires `-- CMD ...` after its flags\n";
      return 2;
    }
    if (child_cmd.empty()) {
      std::cerr << "usage error: no child command given after `--`\n";
      return 2;
    }
    return cmd_measure(measure->remaining(), child_cmd, hw_path, grid_path);
  }

  const Tables tables = load_tables(hw_path, grid_path);

  if (aet_cmd->parsed()) {
    const aet::Scenario sc = resolve_scenario(aet_flags);
    const Comparison c = compare(train_path, nn_path, base_path, sc);
    const std::string su = unit_suffix(sc.unit);
    if (!c.feasible)
      std::cout << "crossover: infinity (infeasible)\n";
    else if (!c.crossover.is_finite())
      std::cout << "crossover: infinity (non-amortizing: baseline marginal cost does not "
                   "exceed the neural solver's)\n";
    else
      std::cout << "crossover: " << aet::plot::sci3(c.crossover.value()) << " instances\n";
    std::cout << "asymptotic ratio: " << aet::plot::sci3(aet::asymptotic_ratio(c.e_nn, c.e_base))
              << "\n";
    std::cout << "feasible: " << (c.feasible ? "yes" : "no") << " (delta = "
              << aet::plot::sci3(sc.delta) << ")\n";
    std::cout << "epsilon: " << aet::plot::sci3(sc.epsilon_in_unit()) << " " << su << "\n";
    std::cout << "e_train: " << aet::plot::sci3(c.e_train) << " " << su << "\n";
    std::cout << "e_nn: " << aet::plot::sci3(c.e_nn) << " " << su << "/instance\n";
    std::cout << "e_base: " << aet::plot::sci3(c.e_base) << " " << su << "/instance\n";
    return 0;
  }

  auto sweep_results = [&](const std::string& mpath, const std::optional<std::string>& aspec,
                           const std::optional<std::string>& csv_in, const aet::Scenario& sc)
      -> std::vector<aet::PointResult> {
    if (csv_in) {
      std::ifstream in(*csv_in);
      if (!in) throw aet::ParseError("cannot open file: " + *csv_in);
      return aet::read_sweep_csv(in);
    }
    if (mpath.empty())
      throw aet::ConfigError("either --manifest or --from-csv is required");
    const aet::Manifest m = aet::Manifest::load(mpath);
    aet::Axes axes = m.axes ? *m.axes : aet::Axes::defaults();
    if (aspec) axes = parse_axes_spec(*aspec, axes);
    return aet::evaluate_grid(axes, m, sc, tables.hardware);
  };

  if (sweep->parsed()) {
    const aet::Scenario sc = resolve_scenario(sweep_flags);
    const auto results = sweep_results(manifest_path, axes_spec, from_csv, sc);
    if (!out_csv.empty()) {
      std::ostringstream os;
      aet::write_sweep_csv(os, results);
      write_text_file(out_csv, os.str());
    }
    if (!out_json.empty())
      write_text_file(out_json, aet::summary_json(results, sc).dump(2) + "\n");
    std::size_t errors = 0;
    for (const auto& r : results)
      if (!r.ok()) ++errors;
    std::cout << results.size() << " grid points, " << errors << " with errors\n";
    return errors ? 1 : 0;
  }

  if (env_cmd->parsed()) {
    const aet::Scenario sc = resolve_scenario(env_flags);
    const auto results = sweep_results(env_manifest, env_axes, env_from_csv, sc);
    const aet::EnvelopeResult env = aet::envelope(results, sc);
    const aet::plot::Figure fig = aet::plot::make_envelope_figure(env, sc);
    emit_figure(fig, env_svg, env_data);
    if (env.aet_interval)
      std::cout << "AET interval: [" << aet::plot::sci3(env.aet_interval->first) << ", "
                << aet::plot::sci3(env.aet_interval->second) << "]\n";
    else
      std::cout << "AET interval: none\n";
    std::cout << "median crossover: "
              << (env.median_crossover.is_finite()
                      ? aet::plot::sci3(env.median_crossover.value())
                      : std::string("infinity"))
              << "\n";
    return 0;
  }

  if (curves->parsed()) {
    const aet::Scenario sc = resolve_scenario(c_flags);
    const EnergyInput train = load_training_input(c_train, sc.pue);
    const EnergyInput nn = load_per_instance_input(c_nn, sc.pue);
    std::vector<aet::plot::BaselineLine> lines;
    bool feasible = true;
    for (const auto& bp : c_bases) {
      const EnergyInput b = load_per_instance_input(bp, sc.pue);
      if (nn.gap && b.gap && !aet::feasibility(*nn.gap, *b.gap, sc.delta)) feasible = false;
      lines.push_back({bp, unit_value(b.wh, sc)});
    }
    const aet::plot::Figure fig = aet::plot::make_curves_figure(
        unit_value(train.wh, sc), unit_value(nn.wh, sc), lines, sc, feasible);
    emit_figure(fig, c_svg, c_data);
    for (const auto& m : fig.markers) std::cout << m.label << "\n";
    if (fig.markers.empty()) std::cout << "crossover: infinity\n";
    return 0;
  }

  if (ratio->parsed()) {
    const aet::Scenario sc = resolve_scenario(r_flags);
    const Comparison c = compare(r_train, r_nn, r_base, sc);
    const aet::plot::Figure fig =
        aet::plot::make_ratio_figure(c.e_train, c.e_nn, c.e_base, sc, c.feasible);
    emit_figure(fig, r_svg, r_data);
    std::cout << "asymptote: " << aet::plot::sci3(aet::asymptotic_ratio(c.e_nn, c.e_base))
              << "\n";
    std::cout << "crossover: "
              << (c.crossover.is_finite() ? aet::plot::sci3(c.crossover.value())
                                          : std::string("infinity"))
              << "\n";
    return 0;
  }

  std::cout << app.help();
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> raw(argv + 1, argv + argc);
  // Split at the first bare `--`: everything after it is the measured
  // child command and must not be interpreted as our own flags.
  std::vector<std::string> own, child;
  bool saw_separator = false;
  for (const auto& a : raw) {
    if (!saw_separator && a == "--") {
      saw_separator = true;
      continue;
    }
    (saw_separator ? child : own).push_back(a);
  }
  try {
    return run_cli(std::move(own), child, saw_separator);
  } catch (const aet::UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
