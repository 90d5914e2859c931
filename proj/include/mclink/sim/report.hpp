// Result persistence: fixed-schema CSV rows plus a JSON sidecar echoing the
// configuration, seed, and code version. Byte-identical output for
// identical (config, seed) is part of the contract.
#pragma once

#include <cstdint>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mclink/sim/config.hpp"
#include "mclink/version.hpp"

namespace mclink::sim {

struct ReportRow {
  double snr_db = 0.0;
  std::string detector;
  double ber = 0.0;
  double ci95 = 0.0;
  long long trials = 0;
  long long decisions = 0;
};

struct BerReport {
  std::string command;
  std::uint64_t seed = 0;
  IniFile config_echo;
  std::vector<ReportRow> rows;

  void write_csv(std::ostream& os) const {
    os << "snr_db,detector,ber,ci95,trials,decisions\n";
    char buf[128];
    for (const auto& r : rows) {
      std::snprintf(buf, sizeof(buf), "%.10g,%s,%.10g,%.10g,%lld,%lld", r.snr_db,
                    r.detector.c_str(), r.ber, r.ci95, r.trials, r.decisions);
      os << buf << '\n';
    }
  }

  void write_json_rows(std::ostream& os) const {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& r : rows) {
      nlohmann::ordered_json row;
      row["snr_db"] = r.snr_db;
      row["detector"] = r.detector;
      row["ber"] = r.ber;
      row["ci95"] = r.ci95;
      row["trials"] = r.trials;
      row["decisions"] = r.decisions;
      arr.push_back(row);
    }
    os << arr.dump(2) << '\n';
  }

  void write_sidecar(std::ostream& os) const {
    nlohmann::ordered_json meta;
    meta["tool"] = "mclink";
    meta["version"] = kVersion;
    meta["command"] = command;
    meta["seed"] = seed;
    nlohmann::ordered_json cfg = nlohmann::ordered_json::object();
    for (const auto& [sec, entries] : config_echo.sections) {
      nlohmann::ordered_json s = nlohmann::ordered_json::object();
      for (const auto& [k, v] : entries) s[k] = v;
      cfg[sec.empty() ? "(top)" : sec] = s;
    }
    meta["config"] = cfg;
    os << meta.dump(2) << '\n';
  }
};

}  // namespace mclink::sim
