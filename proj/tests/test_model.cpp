#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include "aet/model.hpp"
#include "aet/stats.hpp"

namespace {

std::string write_temp(const std::string& name, const std::string& content) {
  const auto path = (std::filesystem::temp_directory_path() / name).string();
  std::ofstream out(path);
  out << content;
  return path;
}

aet::EnergyReading sample_reading() {
  aet::EnergyReading r;
  r.label = "train";
  r.energy_wh = 105.2;
  r.co2_g_operational = 6.312;
  r.co2_g_embodied = 1.5;
  r.co2_g_total = 7.812;
  r.duration_s = 3600.0;
  r.n_items = 200000.0;
  r.throughput_items_per_s = 200000.0 / 3600.0;
  r.backend_used = aet::Backend::hwcounters;
  r.hardware_id = "nvidia-h100";
  r.pue = 1.4;
  r.country_iso_code = "FRA";
  return r;
}

}  // namespace

TEST_CASE("enum string round-trips") {
  for (auto b : {aet::Backend::hwcounters, aet::Backend::tdp, aet::Backend::imported})
    CHECK(aet::backend_from_string(aet::to_string(b)) == b);
  for (auto m : {aet::ThreadMode::mono, aet::ThreadMode::multi})
    CHECK(aet::thread_mode_from_string(aet::to_string(m)) == m);
  for (auto u : {aet::Unit::energy_wh, aet::Unit::carbon_g, aet::Unit::money})
    CHECK(aet::unit_from_string(aet::to_string(u)) == u);
  CHECK_THROWS_AS(aet::backend_from_string("nvml"), aet::ParseError);
}

TEST_CASE("energy reading JSON round-trip is field-identical") {
  const aet::EnergyReading r = sample_reading();
  r.validate();
  const aet::EnergyReading back = aet::EnergyReading::from_json(r.to_json());
  CHECK(back.label == r.label);
  CHECK(back.energy_wh == r.energy_wh);
  CHECK(back.co2_g_operational == r.co2_g_operational);
  CHECK(back.co2_g_embodied == r.co2_g_embodied);
  CHECK(back.co2_g_total == r.co2_g_total);
  CHECK(back.duration_s == r.duration_s);
  CHECK(back.n_items == r.n_items);
  CHECK(back.throughput_items_per_s == r.throughput_items_per_s);
  CHECK(back.backend_used == r.backend_used);
  CHECK(back.hardware_id == r.hardware_id);
  CHECK(back.pue == r.pue);
  CHECK(back.country_iso_code == r.country_iso_code);
}

TEST_CASE("energy reading round-trip holds on randomized records") {
  std::mt19937 rng(77);
  std::uniform_real_distribution<double> e(1e-6, 1e4), t(1e-3, 1e5), ci(0.0, 800.0);
  for (int i = 0; i < 200; ++i) {
    aet::EnergyReading r;
    r.label = "r" + std::to_string(i);
    r.energy_wh = e(rng);
    r.duration_s = t(rng);
    r.pue = 1.0 + std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    r.co2_g_operational = r.energy_wh / 1000.0 * ci(rng);
    r.co2_g_embodied = (i % 2) ? e(rng) * 1e-3 : 0.0;
    r.co2_g_total = r.co2_g_operational + r.co2_g_embodied;
    if (i % 3 == 0) {
      r.n_items = 100.0 + i;
      r.throughput_items_per_s = *r.n_items / r.duration_s;
    }
    r.hardware_id = "generic-cpu";
    r.backend_used = (i % 2) ? aet::Backend::tdp : aet::Backend::hwcounters;
    r.validate();
    const auto back = aet::EnergyReading::from_json(r.to_json());
    CHECK(back.energy_wh == r.energy_wh);
    CHECK(back.co2_g_total == r.co2_g_total);
    CHECK(back.n_items == r.n_items);
  }
}

TEST_CASE("energy reading JSON omits absent optionals and rejects unknown keys") {
  aet::EnergyReading r = sample_reading();
  r.n_items.reset();
  r.throughput_items_per_s.reset();
  r.country_iso_code.reset();
  const auto j = r.to_json();
  CHECK(!j.contains("n_items"));
  CHECK(!j.contains("throughput_items_per_s"));
  CHECK(!j.contains("country_iso_code"));

  auto bad = sample_reading().to_json();
  bad["wattage"] = 1.0;
  CHECK_THROWS_AS(aet::EnergyReading::from_json(bad), aet::ParseError);
}

TEST_CASE("energy reading validation enforces carbon additivity and throughput") {
  aet::EnergyReading r = sample_reading();
  r.co2_g_total = r.co2_g_operational;  // drops the embodied part
  CHECK_THROWS_AS(r.validate(), aet::ValidationError);
  r = sample_reading();
  r.throughput_items_per_s = 1.0;
  CHECK_THROWS_AS(r.validate(), aet::ValidationError);
  r = sample_reading();
  r.throughput_items_per_s.reset();
  CHECK_THROWS_AS(r.validate(), aet::ValidationError);
}

TEST_CASE("built-in hardware table carries the published rows") {
  const auto& table = aet::HardwareTable::builtin();
  CHECK(table.specs().size() == 18);
  CHECK(table.at("nvidia-h100").embodied_kg == 200.0);
  CHECK(table.at("generic-cpu").embodied_kg == 55.0);
  CHECK(table.at("nvidia-h100").embodied_g() == 200000.0);
  CHECK(table.at("nvidia-h100").lifetime_s() == doctest::Approx(157788000.0));
  CHECK_THROWS_WITH_AS(table.at("tpu-v5"), doctest::Contains("unknown hardware id"),
                       aet::ConfigError);
}

TEST_CASE("hardware table file load: shipped file matches the built-in table") {
  const auto table = aet::HardwareTable::load(AET_DATA_DIR "/hardware.csv");
  const auto& builtin = aet::HardwareTable::builtin();
  REQUIRE(table.specs().size() == builtin.specs().size());
  for (const auto& s : builtin.specs()) {
    const auto* loaded = table.find(s.id);
    REQUIRE(loaded != nullptr);
    CHECK(loaded->embodied_kg == s.embodied_kg);
    CHECK(loaded->tdp_w == s.tdp_w);
    CHECK(loaded->lifetime_years == s.lifetime_years);
    CHECK(loaded->kind == s.kind);
  }
}

TEST_CASE("hardware table rejects duplicate ids and unknown kinds") {
  const auto dup = write_temp("aet_dup_hw.csv",
                              "id,kind,embodied_kg,tdp_w,lifetime_years,source\n"
                              "x,gpu,10,100,5,a\n"
                              "x,gpu,20,200,5,b\n");
  CHECK_THROWS_WITH_AS(aet::HardwareTable::load(dup),
                       doctest::Contains("duplicate hardware id"), aet::ValidationError);
  const auto bad = write_temp("aet_bad_kind.csv",
                              "id,kind,embodied_kg,tdp_w,lifetime_years,source\n"
                              "y,fpga,10,100,5,a\n");
  CHECK_THROWS_AS(aet::HardwareTable::load(bad), aet::ValidationError);
}

TEST_CASE("load_hardware_table: no path means the built-in table") {
  const auto table = aet::load_hardware_table(std::nullopt);
  CHECK(table.at("generic-gpu").embodied_kg == 150.0);
}

TEST_CASE("grid intensity: shipped regions and unknown-code diagnostics") {
  CHECK(aet::load_grid_intensity("FRA") == 60.0);
  CHECK(aet::load_grid_intensity("POL") == 700.0);
  CHECK_THROWS_WITH_AS(aet::load_grid_intensity("ZZZ"),
                       doctest::Contains("unknown region"), aet::ConfigError);
  try {
    aet::load_grid_intensity("ZZZ");
  } catch (const aet::ConfigError& e) {
    CHECK(std::string(e.what()).find("FRA") != std::string::npos);  // lists what exists
  }
  const auto file = aet::GridIntensityTable::load(AET_DATA_DIR "/grid_intensity.csv");
  CHECK(file.lookup("FRA") == 60.0);
  CHECK(file.lookup("DEU") == 380.0);
}

TEST_CASE("training profile median/IQR match the stats oracle") {
  aet::TrainingProfile tp;
  tp.per_seed_energy_wh = {104.7, 104.9, 105.2, 105.2, 105.2};
  tp.validate();
  CHECK(tp.median_wh() == 105.2);
  const auto [q1, q3] = tp.iqr_wh();
  CHECK(q1 == doctest::Approx(104.8));
  CHECK(q3 == doctest::Approx(105.2));

  std::mt19937 rng(5);
  std::uniform_real_distribution<double> dist(1.0, 1e3);
  for (int size = 1; size <= 50; ++size) {
    aet::TrainingProfile p;
    for (int i = 0; i < size; ++i) p.per_seed_energy_wh.push_back(dist(rng));
    CHECK(p.median_wh() == doctest::Approx(aet::median(p.per_seed_energy_wh)));
  }

  aet::TrainingProfile bad;
  CHECK_THROWS_AS(bad.validate(), aet::ValidationError);
  bad.per_seed_energy_wh = {1.0, -1.0};
  CHECK_THROWS_AS(bad.validate(), aet::ValidationError);
}

TEST_CASE("scenario validation and epsilon unit conversion") {
  aet::Scenario sc;
  sc.validate();  // defaults are valid
  CHECK(sc.epsilon_wh == 1e-3);
  CHECK(sc.pue == 1.4);
  CHECK(sc.epsilon_in_unit() == 1e-3);

  sc.unit = aet::Unit::carbon_g;
  sc.grid_intensity_g_per_kwh = 700.0;
  CHECK(sc.epsilon_in_unit() == doctest::Approx(1e-3 * 700.0 / 1000.0));

  sc.unit = aet::Unit::money;
  CHECK_THROWS_AS(sc.validate(), aet::ConfigError);
  sc.unit_price_per_kwh = 0.25;
  sc.validate();
  CHECK(sc.epsilon_in_unit() == doctest::Approx(1e-3 * 0.25 / 1000.0));

  sc = aet::Scenario{};
  sc.n_min = 0.0;
  CHECK_THROWS_AS(sc.validate(), aet::ValidationError);
  sc = aet::Scenario{};
  sc.n_points = 1;
  CHECK_THROWS_AS(sc.validate(), aet::ValidationError);
  sc = aet::Scenario{};
  sc.pue = 0.9;
  CHECK_THROWS_AS(sc.validate(), aet::ValidationError);
}
