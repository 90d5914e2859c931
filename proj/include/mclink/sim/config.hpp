// Experiment configuration: a strict key = value file with [sections].
// Unknown sections or keys are hard errors so typos cannot silently fall
// back to defaults.
#pragma once

#include <algorithm>
#include <fstream>
#include <istream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "mclink/channel.hpp"

namespace mclink::sim {

/// Parsed config file preserving section/key order for faithful echo into
/// report sidecars.
struct IniFile {
  using Section = std::vector<std::pair<std::string, std::string>>;
  std::vector<std::pair<std::string, Section>> sections;

  static IniFile parse(std::istream& in) {
    IniFile ini;
    std::string line;
    std::string current;
    int line_no = 0;
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\r");
      if (a == std::string::npos) return std::string{};
      const auto b = s.find_last_not_of(" \t\r");
      return s.substr(a, b - a + 1);
    };
    while (std::getline(in, line)) {
      ++line_no;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      line = trim(line);
      if (line.empty()) continue;
      if (line.front() == '[') {
        if (line.back() != ']')
          throw std::runtime_error("config line " + std::to_string(line_no) + ": bad section header");
        current = trim(line.substr(1, line.size() - 2));
        ini.sections.emplace_back(current, Section{});
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos)
        throw std::runtime_error("config line " + std::to_string(line_no) + ": expected key = value");
      const std::string key = trim(line.substr(0, eq));
      const std::string value = trim(line.substr(eq + 1));
      if (key.empty())
        throw std::runtime_error("config line " + std::to_string(line_no) + ": empty key");
      if (ini.sections.empty() || ini.sections.back().first != current)
        ini.sections.emplace_back(current, Section{});
      ini.sections.back().second.emplace_back(key, value);
    }
    return ini;
  }

  static IniFile parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    return parse(in);
  }
};

enum class PriorSource { fitted_gamma, empirical_samples, point_mass };
enum class DetectorKind { coherent, ms, ss, df, blind };

inline const char* detector_name(DetectorKind d) {
  switch (d) {
    case DetectorKind::coherent: return "coherent";
    case DetectorKind::ms: return "ms";
    case DetectorKind::ss: return "ss";
    case DetectorKind::df: return "df";
    case DetectorKind::blind: return "blind";
  }
  return "?";
}

struct IsiConfig {
  bool enabled = false;
  double t_symb_multiple = 2.0;  // symbol interval as a multiple of the peak time
  int n_taps = 8;
};

struct SweepConfig {
  ChannelParams channel = ChannelParams::defaults();
  ScenarioSigmas sigmas = ScenarioSigmas::scenario(1);
  std::vector<double> snr_db = {0, 5, 10, 15, 20};
  std::vector<DetectorKind> detectors = {DetectorKind::coherent, DetectorKind::ms,
                                         DetectorKind::ss, DetectorKind::df,
                                         DetectorKind::blind};
  int window = 10;        // K
  int block = 50;         // B
  long long trials = 10000;
  int blocks_per_csi = 1;
  PriorSource prior_source = PriorSource::fitted_gamma;
  long long prior_samples = 10000;
  int fit_bins = 100;
  double fit_delta = 0.5;
  int fit_grid = 101;
  IsiConfig isi;

  void validate() const {
    channel.validate();
    sigmas.validate();
    if (snr_db.empty()) throw std::runtime_error("sweep: snr_db grid must be non-empty");
    if (detectors.empty()) throw std::runtime_error("sweep: detector list must be non-empty");
    if (window < 1 || block < window)
      throw std::runtime_error("sweep: need block >= window >= 1");
    if (trials < 1) throw std::runtime_error("sweep: trials must be >= 1");
    if (blocks_per_csi < 1) throw std::runtime_error("sweep: blocks_per_csi must be >= 1");
    if (prior_samples < 2) throw std::runtime_error("sweep: prior_samples must be >= 2");
    const bool has_blind =
        std::find(detectors.begin(), detectors.end(), DetectorKind::blind) != detectors.end();
    if (has_blind && window < 2)
      throw std::runtime_error("sweep: the blind detector needs window >= 2");
    if (isi.enabled && isi.n_taps < 1) throw std::runtime_error("isi: n_taps must be >= 1");
  }
};

struct BoundConfig {
  int window = 10;
  long long csi_draws = 1000;
  double trunc_eps = 1e-12;
  long long sim_trials = 20000;  // simulated blocks (of `window` symbols) per point

  void validate() const {
    if (window < 1 || window > 12)
      throw std::runtime_error("bound: window must be in [1, 12]");
    if (csi_draws < 1 || sim_trials < 1)
      throw std::runtime_error("bound: csi_draws and sim_trials must be >= 1");
    if (!(trunc_eps > 0)) throw std::runtime_error("bound: trunc_eps must be > 0");
  }
};

struct FitConfig {
  enum class Source { channel, samples_file, histogram_file };
  Source source = Source::channel;
  std::string input;
  long long samples = 20000;
  int bins = 100;
  double delta = 0.5;
  int grid = 101;
  double snr = 1.0;  // rate scaling written for the noise model

  void validate() const {
    if (source != Source::channel && input.empty())
      throw std::runtime_error("fit: input path required for file sources");
    if (samples < 1000) throw std::runtime_error("fit: need >= 1000 samples");
    if (bins < 2 || grid < 2) throw std::runtime_error("fit: bins and grid must be >= 2");
    if (delta < 0) throw std::runtime_error("fit: delta must be >= 0");
    if (!(snr > 0)) throw std::runtime_error("fit: snr must be > 0");
  }
};

struct AppConfig {
  SweepConfig sweep;
  BoundConfig bound;
  FitConfig fit;
  IniFile raw;
};

namespace detail {

class SectionReader {
 public:
  SectionReader(const IniFile& ini, const std::string& name) {
    for (const auto& [sec, entries] : ini.sections)
      if (sec == name)
        for (const auto& [k, v] : entries) {
          if (values_.count(k)) throw std::runtime_error("[" + name + "] duplicate key: " + k);
          values_[k] = v;
        }
    name_ = name;
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return values_.count(key) > 0;
  }

  std::string str(const std::string& key, const std::string& fallback) {
    seen_.insert(key);
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }

  double num(const std::string& key, double fallback) {
    seen_.insert(key);
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    return parse_double(it->second, key);
  }

  long long integer(const std::string& key, long long fallback) {
    seen_.insert(key);
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
      std::size_t pos = 0;
      const long long v = std::stoll(it->second, &pos);
      if (pos != it->second.size()) throw std::invalid_argument("");
      return v;
    } catch (...) {
      throw std::runtime_error("[" + name_ + "] " + key + ": not an integer: " + it->second);
    }
  }

  bool boolean(const std::string& key, bool fallback) {
    seen_.insert(key);
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    if (it->second == "true" || it->second == "1") return true;
    if (it->second == "false" || it->second == "0") return false;
    throw std::runtime_error("[" + name_ + "] " + key + ": expected true/false");
  }

  std::vector<double> num_list(const std::string& key, std::vector<double> fallback) {
    seen_.insert(key);
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    std::vector<double> out;
    std::stringstream ss(it->second);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(parse_double(tok, key));
    if (out.empty()) throw std::runtime_error("[" + name_ + "] " + key + ": empty list");
    return out;
  }

  std::vector<std::string> str_list(const std::string& key, std::vector<std::string> fallback) {
    seen_.insert(key);
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    std::vector<std::string> out;
    std::stringstream ss(it->second);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      const auto a = tok.find_first_not_of(" \t");
      const auto b = tok.find_last_not_of(" \t");
      if (a == std::string::npos) continue;
      out.push_back(tok.substr(a, b - a + 1));
    }
    if (out.empty()) throw std::runtime_error("[" + name_ + "] " + key + ": empty list");
    return out;
  }

  void reject_unknown() const {
    for (const auto& [k, v] : values_)
      if (!seen_.count(k))
        throw std::runtime_error("[" + name_ + "] unknown key: " + k);
  }

 private:
  double parse_double(const std::string& s, const std::string& key) {
    try {
      std::size_t pos = 0;
      const double v = std::stod(s, &pos);
      while (pos < s.size() && (s[pos] == ' ' || s[pos] == '\t')) ++pos;
      if (pos != s.size()) throw std::invalid_argument("");
      return v;
    } catch (...) {
      throw std::runtime_error("[" + name_ + "] " + key + ": not a number: " + s);
    }
  }

  std::string name_;
  std::map<std::string, std::string> values_;
  std::set<std::string> seen_;
};

}  // namespace detail

inline AppConfig load_config(const IniFile& ini) {
  static const std::set<std::string> known_sections = {"",      "channel", "sigmas", "sweep",
                                                       "isi",   "bound",   "fit"};
  for (const auto& [sec, entries] : ini.sections) {
    if (!known_sections.count(sec)) throw std::runtime_error("unknown config section: [" + sec + "]");
    if (sec.empty() && !entries.empty())
      throw std::runtime_error("config keys must appear inside a [section]");
  }

  AppConfig cfg;
  cfg.raw = ini;

  {
    detail::SectionReader r(ini, "channel");
    auto& ch = cfg.sweep.channel;
    ch.receiver_volume = r.num("receiver_volume_m3", ch.receiver_volume);
    ch.distance = r.num("distance_m", ch.distance);
    ch.diffusion = r.num("diffusion_m2_s", ch.diffusion);
    ch.enzyme_conc = r.num("enzyme_per_m3", ch.enzyme_conc);
    ch.reaction_rate = r.num("reaction_rate_m3_s", ch.reaction_rate);
    ch.flow_parallel = r.num("flow_parallel_m_s", ch.flow_parallel);
    ch.flow_perp = r.num("flow_perp_m_s", ch.flow_perp);
    ch.n_tx = r.num("n_tx", ch.n_tx);
    r.reject_unknown();
  }
  {
    detail::SectionReader r(ini, "sigmas");
    auto& sg = cfg.sweep.sigmas;
    if (r.has("scenario"))
      sg = ScenarioSigmas::scenario(static_cast<int>(r.integer("scenario", 1)));
    sg.diffusion = r.num("diffusion", sg.diffusion);
    sg.flow_parallel = r.num("flow_parallel", sg.flow_parallel);
    sg.flow_perp = r.num("flow_perp", sg.flow_perp);
    sg.enzyme = r.num("enzyme", sg.enzyme);
    r.reject_unknown();
  }
  {
    detail::SectionReader r(ini, "sweep");
    auto& sw = cfg.sweep;
    sw.snr_db = r.num_list("snr_db", sw.snr_db);
    std::vector<std::string> names;
    for (auto d : sw.detectors) names.push_back(detector_name(d));
    names = r.str_list("detectors", names);
    sw.detectors.clear();
    for (const auto& n : names) {
      if (n == "coherent") sw.detectors.push_back(DetectorKind::coherent);
      else if (n == "ms") sw.detectors.push_back(DetectorKind::ms);
      else if (n == "ss") sw.detectors.push_back(DetectorKind::ss);
      else if (n == "df") sw.detectors.push_back(DetectorKind::df);
      else if (n == "blind") sw.detectors.push_back(DetectorKind::blind);
      else throw std::runtime_error("[sweep] unknown detector: " + n);
    }
    sw.window = static_cast<int>(r.integer("window", sw.window));
    sw.block = static_cast<int>(r.integer("block", sw.block));
    sw.trials = r.integer("trials", sw.trials);
    sw.blocks_per_csi = static_cast<int>(r.integer("blocks_per_csi", sw.blocks_per_csi));
    const std::string prior = r.str("prior", "fitted-gamma");
    if (prior == "fitted-gamma") sw.prior_source = PriorSource::fitted_gamma;
    else if (prior == "empirical-samples") sw.prior_source = PriorSource::empirical_samples;
    else if (prior == "point-mass") sw.prior_source = PriorSource::point_mass;
    else throw std::runtime_error("[sweep] unknown prior: " + prior);
    sw.prior_samples = r.integer("prior_samples", sw.prior_samples);
    sw.fit_bins = static_cast<int>(r.integer("fit_bins", sw.fit_bins));
    sw.fit_delta = r.num("fit_delta", sw.fit_delta);
    sw.fit_grid = static_cast<int>(r.integer("fit_grid", sw.fit_grid));
    r.reject_unknown();
  }
  {
    detail::SectionReader r(ini, "isi");
    auto& is = cfg.sweep.isi;
    is.enabled = r.boolean("enabled", is.enabled);
    is.t_symb_multiple = r.num("t_symb_multiple", is.t_symb_multiple);
    is.n_taps = static_cast<int>(r.integer("n_taps", is.n_taps));
    r.reject_unknown();
  }
  {
    detail::SectionReader r(ini, "bound");
    auto& b = cfg.bound;
    b.window = static_cast<int>(r.integer("window", b.window));
    b.csi_draws = r.integer("csi_draws", b.csi_draws);
    b.trunc_eps = r.num("trunc_eps", b.trunc_eps);
    b.sim_trials = r.integer("sim_trials", b.sim_trials);
    r.reject_unknown();
  }
  {
    detail::SectionReader r(ini, "fit");
    auto& f = cfg.fit;
    const std::string src = r.str("source", "channel");
    if (src == "channel") f.source = FitConfig::Source::channel;
    else if (src == "samples-file") f.source = FitConfig::Source::samples_file;
    else if (src == "histogram-file") f.source = FitConfig::Source::histogram_file;
    else throw std::runtime_error("[fit] unknown source: " + src);
    f.input = r.str("input", f.input);
    f.samples = r.integer("samples", f.samples);
    f.bins = static_cast<int>(r.integer("bins", f.bins));
    f.delta = r.num("delta", f.delta);
    f.grid = static_cast<int>(r.integer("grid", f.grid));
    f.snr = r.num("snr", f.snr);
    r.reject_unknown();
  }

  cfg.sweep.validate();
  cfg.bound.validate();
  cfg.fit.validate();
  return cfg;
}

inline AppConfig load_config_file(const std::string& path) {
  return load_config(IniFile::parse_file(path));
}

}  // namespace mclink::sim
