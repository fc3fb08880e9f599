#include "aet/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "aet/stats.hpp"

namespace aet {
namespace {

bool rel_equal(double a, double b, double tol) {
  const double scale = std::max({std::fabs(a), std::fabs(b), 1e-300});
  return std::fabs(a - b) <= tol * scale;
}

std::string strip(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& s, const std::string& what) {
  try {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError("cannot parse " + what + ": '" + s + "'");
  }
}

}  // namespace

std::string to_string(Backend b) {
  switch (b) {
    case Backend::hwcounters: return "hwcounters";
    case Backend::tdp: return "tdp";
    case Backend::imported: return "imported";
  }
  throw ValidationError("invalid backend enum value");
}

Backend backend_from_string(const std::string& s) {
  if (s == "hwcounters") return Backend::hwcounters;
  if (s == "tdp") return Backend::tdp;
  if (s == "imported") return Backend::imported;
  throw ParseError("unknown backend: '" + s + "'");
}

std::string to_string(HardwareKind k) {
  switch (k) {
    case HardwareKind::gpu: return "gpu";
    case HardwareKind::cpu: return "cpu";
    case HardwareKind::soc: return "soc";
  }
  throw ValidationError("invalid hardware kind enum value");
}

HardwareKind hardware_kind_from_string(const std::string& s) {
  if (s == "gpu") return HardwareKind::gpu;
  if (s == "cpu") return HardwareKind::cpu;
  if (s == "soc") return HardwareKind::soc;
  throw ValidationError("unknown hardware kind: '" + s + "'");
}

std::string to_string(ThreadMode m) {
  return m == ThreadMode::mono ? "mono" : "multi";
}

ThreadMode thread_mode_from_string(const std::string& s) {
  if (s == "mono") return ThreadMode::mono;
  if (s == "multi") return ThreadMode::multi;
  throw ParseError("unknown thread mode: '" + s + "'");
}

std::string to_string(Unit u) {
  switch (u) {
    case Unit::energy_wh: return "energy";
    case Unit::carbon_g: return "carbon";
    case Unit::money: return "money";
  }
  throw ValidationError("invalid unit enum value");
}

Unit unit_from_string(const std::string& s) {
  if (s == "energy" || s == "energy_wh") return Unit::energy_wh;
  if (s == "carbon" || s == "carbon_g") return Unit::carbon_g;
  if (s == "money") return Unit::money;
  throw ParseError("unknown unit: '" + s + "'");
}

void EnergyReading::validate() const {
  if (!(energy_wh >= 0.0)) throw ValidationError("energy_wh must be >= 0");
  if (!(duration_s > 0.0)) throw ValidationError("duration_s must be > 0");
  if (!(pue >= 1.0)) throw ValidationError("pue must be >= 1");
  if (!rel_equal(co2_g_total, co2_g_operational + co2_g_embodied, 1e-9))
    throw ValidationError("co2_g_total must equal co2_g_operational + co2_g_embodied");
  if (n_items.has_value() != throughput_items_per_s.has_value())
    throw ValidationError("throughput_items_per_s must be present iff n_items is present");
  if (n_items) {
    if (!rel_equal(*throughput_items_per_s, *n_items / duration_s, 1e-9))
      throw ValidationError("throughput_items_per_s must equal n_items / duration_s");
  }
}

nlohmann::json EnergyReading::to_json() const {
  nlohmann::json j;
  j["label"] = label;
  j["energy_wh"] = energy_wh;
  j["co2_g_operational"] = co2_g_operational;
  j["co2_g_embodied"] = co2_g_embodied;
  j["co2_g_total"] = co2_g_total;
  j["duration_s"] = duration_s;
  if (n_items) j["n_items"] = *n_items;
  if (throughput_items_per_s) j["throughput_items_per_s"] = *throughput_items_per_s;
  j["backend_used"] = to_string(backend_used);
  j["hardware_id"] = hardware_id;
  j["pue"] = pue;
  if (country_iso_code) j["country_iso_code"] = *country_iso_code;
  return j;
}

EnergyReading EnergyReading::from_json(const nlohmann::json& j) {
  static const char* known[] = {"label", "energy_wh", "co2_g_operational", "co2_g_embodied",
                                "co2_g_total", "duration_s", "n_items", "throughput_items_per_s",
                                "backend_used", "hardware_id", "pue", "country_iso_code"};
  if (!j.is_object()) throw ParseError("energy reading must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find_if(std::begin(known), std::end(known),
                     [&](const char* k) { return it.key() == k; }) == std::end(known))
      throw ParseError("unknown energy reading key: '" + it.key() + "'");
  }
  EnergyReading r;
  try {
    r.label = j.at("label").get<std::string>();
    r.energy_wh = j.at("energy_wh").get<double>();
    r.co2_g_operational = j.at("co2_g_operational").get<double>();
    r.co2_g_embodied = j.at("co2_g_embodied").get<double>();
    r.co2_g_total = j.at("co2_g_total").get<double>();
    r.duration_s = j.at("duration_s").get<double>();
    if (j.contains("n_items")) r.n_items = j.at("n_items").get<double>();
    if (j.contains("throughput_items_per_s"))
      r.throughput_items_per_s = j.at("throughput_items_per_s").get<double>();
    r.backend_used = backend_from_string(j.at("backend_used").get<std::string>());
    r.hardware_id = j.at("hardware_id").get<std::string>();
    r.pue = j.at("pue").get<double>();
    if (j.contains("country_iso_code"))
      r.country_iso_code = j.at("country_iso_code").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed energy reading: ") + e.what());
  }
  r.validate();
  return r;
}

void HardwareSpec::validate() const {
  if (id.empty()) throw ValidationError("hardware id must be non-empty");
  if (!(embodied_kg > 0.0)) throw ValidationError("embodied_kg must be > 0 for '" + id + "'");
  if (!(tdp_w > 0.0)) throw ValidationError("tdp_w must be > 0 for '" + id + "'");
  if (!(lifetime_years > 0.0))
    throw ValidationError("lifetime_years must be > 0 for '" + id + "'");
}

HardwareTable::HardwareTable(std::vector<HardwareSpec> specs) : specs_(std::move(specs)) {
  for (std::size_t i = 0; i < specs_.size(); ++i) {
    specs_[i].validate();
    for (std::size_t k = 0; k < i; ++k)
      if (specs_[k].id == specs_[i].id)
        throw ValidationError("duplicate hardware id: '" + specs_[i].id + "'");
  }
}

const HardwareSpec* HardwareTable::find(const std::string& id) const {
  for (const auto& s : specs_)
    if (s.id == id) return &s;
  return nullptr;
}

const HardwareSpec& HardwareTable::at(const std::string& id) const {
  if (const auto* s = find(id)) return *s;
  throw ConfigError("unknown hardware id: '" + id + "'");
}

HardwareTable HardwareTable::builtin() {
  // Fabrication carbon per SKU; TDP figures are vendor-published ratings
  // shipped as artifact data alongside the carbon values.
  using K = HardwareKind;
  static const HardwareTable table{{
      {"nvidia-v100", K::gpu, 130.0, 300.0, 5.0, "Luccioni 2023"},
      {"nvidia-a100", K::gpu, 150.0, 400.0, 5.0, "Luccioni 2023"},
      {"nvidia-h100", K::gpu, 200.0, 700.0, 5.0, "Gupta 2021 extrapolation"},
      {"nvidia-h200", K::gpu, 215.0, 700.0, 5.0, "H100 + HBM3e (est.)"},
      {"nvidia-b200", K::gpu, 400.0, 1000.0, 5.0, "2x reticle die (est.)"},
      {"nvidia-gb200", K::gpu, 900.0, 2700.0, 5.0, "2x B200 + Grace (est.)"},
      {"amd-mi250x", K::gpu, 140.0, 560.0, 5.0, "dual MCM + HBM2e (est.)"},
      {"amd-mi300x", K::gpu, 250.0, 750.0, 5.0, "8 XCD + HBM3 (est.)"},
      {"amd-mi350x", K::gpu, 300.0, 1000.0, 5.0, "CDNA4 (est.)"},
      {"nvidia-rtx-4090", K::gpu, 120.0, 450.0, 5.0, "Gupta 2021 extrapolation"},
      {"intel-xeon-8480", K::cpu, 65.0, 350.0, 5.0, "Sapphire Rapids (est.)"},
      {"amd-epyc-9965", K::cpu, 85.0, 500.0, 5.0, "Turin 192c chiplets (est.)"},
      {"apple-m1", K::soc, 30.0, 20.0, 5.0, "Apple PER 2020"},
      {"apple-m3-max", K::soc, 85.0, 78.0, 5.0, "PER + die scaling"},
      {"apple-m4", K::soc, 36.0, 22.0, 5.0, "Apple PER 2024"},
      {"apple-m5-max", K::soc, 95.0, 80.0, 5.0, "PER + die scaling"},
      {"generic-gpu", K::gpu, 150.0, 300.0, 5.0, "midpoint"},
      {"generic-cpu", K::cpu, 55.0, 65.0, 5.0, "midpoint"},
  }};
  return table;
}

HardwareTable HardwareTable::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open hardware table: " + path);
  std::string line;
  int lineno = 0;
  bool header_seen = false;
  std::vector<HardwareSpec> specs;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = strip(line);
    if (t.empty() || t[0] == '#') continue;
    if (!header_seen) {
      header_seen = true;
      if (t != "id,kind,embodied_kg,tdp_w,lifetime_years,source")
        throw ParseError(path + ":" + std::to_string(lineno) +
                         ": expected header 'id,kind,embodied_kg,tdp_w,lifetime_years,source'");
      continue;
    }
    // First five fields are comma-separated; the source note is the rest
    // of the line and may itself contain commas.
    std::vector<std::string> fields;
    std::size_t pos = 0;
    for (int i = 0; i < 5; ++i) {
      auto comma = t.find(',', pos);
      if (comma == std::string::npos)
        throw ParseError(path + ":" + std::to_string(lineno) + ": expected 6 fields");
      fields.push_back(strip(t.substr(pos, comma - pos)));
      pos = comma + 1;
    }
    fields.push_back(strip(t.substr(pos)));
    HardwareSpec spec;
    spec.id = fields[0];
    spec.kind = hardware_kind_from_string(fields[1]);
    spec.embodied_kg = parse_double(fields[2], "embodied_kg");
    spec.tdp_w = parse_double(fields[3], "tdp_w");
    spec.lifetime_years = parse_double(fields[4], "lifetime_years");
    spec.source = fields[5];
    specs.push_back(std::move(spec));
  }
  return HardwareTable(std::move(specs));
}

GridIntensityTable::GridIntensityTable(std::map<std::string, double> entries)
    : entries_(std::move(entries)) {
  for (const auto& [code, ci] : entries_)
    if (!(ci >= 0.0)) throw ValidationError("grid intensity must be >= 0 for '" + code + "'");
}

double GridIntensityTable::lookup(const std::string& code) const {
  auto it = entries_.find(code);
  if (it != entries_.end()) return it->second;
  std::string avail;
  for (const auto& [c, v] : entries_) {
    if (!avail.empty()) avail += ", ";
    avail += c;
  }
  throw ConfigError("unknown region '" + code + "'; available: " + avail);
}

GridIntensityTable GridIntensityTable::builtin() {
  return GridIntensityTable{{{"FRA", 60.0}, {"POL", 700.0}}};
}

GridIntensityTable GridIntensityTable::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open grid intensity table: " + path);
  std::map<std::string, double> entries;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = strip(line);
    if (t.empty() || t[0] == '#') continue;
    auto comma = t.find(',');
    if (comma == std::string::npos)
      throw ParseError(path + ":" + std::to_string(lineno) + ": expected 'CODE,ci_g_per_kwh'");
    std::string code = strip(t.substr(0, comma));
    std::string value = strip(t.substr(comma + 1));
    if (lineno == 1 && code == "country_iso_code") continue;  // optional header
    if (entries.count(code))
      throw ParseError(path + ":" + std::to_string(lineno) + ": duplicate region '" + code + "'");
    entries[code] = parse_double(value, "grid intensity for " + code);
  }
  return GridIntensityTable(std::move(entries));
}

void SolverProfile::validate() const {
  if (!(per_instance_energy_wh > 0.0))
    throw ValidationError("per_instance_energy_wh must be > 0");
  if (!(throughput_inst_per_s > 0.0))
    throw ValidationError("throughput_inst_per_s must be > 0");
  for (const auto& [cost, ref] : cost_samples) {
    (void)cost;
    if (!(ref > 0.0)) throw ValidationError("reference_cost must be > 0");
  }
}

double TrainingProfile::median_wh() const {
  validate();
  return median(per_seed_energy_wh);
}

std::pair<double, double> TrainingProfile::iqr_wh() const {
  validate();
  return tukey_hinges(per_seed_energy_wh);
}

void TrainingProfile::validate() const {
  if (per_seed_energy_wh.empty())
    throw ValidationError("training profile needs at least one seed energy");
  for (double e : per_seed_energy_wh)
    if (!(e > 0.0)) throw ValidationError("per-seed training energy must be > 0");
}

double Scenario::epsilon_in_unit() const {
  switch (unit) {
    case Unit::energy_wh:
      return epsilon_wh;
    case Unit::carbon_g:
      return epsilon_wh * grid_intensity_g_per_kwh / 1000.0;
    case Unit::money:
      if (!unit_price_per_kwh)
        throw ConfigError("money unit requires unit_price_per_kwh");
      return epsilon_wh * *unit_price_per_kwh / 1000.0;
  }
  throw ValidationError("invalid unit enum value");
}

void Scenario::validate() const {
  if (!(epsilon_wh > 0.0)) throw ValidationError("epsilon must be > 0");
  if (!(delta >= 0.0)) throw ValidationError("delta must be >= 0");
  if (!(pue >= 1.0)) throw ValidationError("pue must be >= 1");
  if (!(grid_intensity_g_per_kwh >= 0.0))
    throw ValidationError("grid intensity must be >= 0");
  if (!(n_min >= 1.0)) throw ValidationError("n_min must be >= 1");
  if (n_points < 2) throw ValidationError("n_range needs at least 2 points");
  if (!(n_max > n_min)) throw ValidationError("n_max must exceed n_min");
  if (unit == Unit::money && !unit_price_per_kwh)
    throw ConfigError("money unit requires unit_price_per_kwh");
  if (unit_price_per_kwh && !(*unit_price_per_kwh >= 0.0))
    throw ValidationError("unit_price_per_kwh must be >= 0");
}

Scenario Scenario::from_json(const nlohmann::json& j) {
  Scenario sc;
  try {
    if (j.contains("unit")) sc.unit = unit_from_string(j.at("unit").get<std::string>());
    if (j.contains("delta")) sc.delta = j.at("delta").get<double>();
    if (j.contains("epsilon_wh")) sc.epsilon_wh = j.at("epsilon_wh").get<double>();
    if (j.contains("pue")) sc.pue = j.at("pue").get<double>();
    if (j.contains("grid_intensity_g_per_kwh"))
      sc.grid_intensity_g_per_kwh = j.at("grid_intensity_g_per_kwh").get<double>();
    if (j.contains("unit_price_per_kwh"))
      sc.unit_price_per_kwh = j.at("unit_price_per_kwh").get<double>();
    if (j.contains("n_min")) sc.n_min = j.at("n_min").get<double>();
    if (j.contains("n_max")) sc.n_max = j.at("n_max").get<double>();
    if (j.contains("n_points")) sc.n_points = j.at("n_points").get<int>();
    if (j.contains("include_embodied"))
      sc.include_embodied = j.at("include_embodied").get<bool>();
    if (j.contains("include_training_embodied"))
      sc.include_training_embodied = j.at("include_training_embodied").get<bool>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed scenario: ") + e.what());
  }
  sc.validate();
  return sc;
}

HardwareTable load_hardware_table(const std::optional<std::string>& path) {
  return path ? HardwareTable::load(*path) : HardwareTable::builtin();
}

double load_grid_intensity(const std::string& country_iso_code,
                           const GridIntensityTable& table) {
  return table.lookup(country_iso_code);
}

}  // namespace aet
