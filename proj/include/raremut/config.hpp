// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "raremut/fitness.hpp"
#include "raremut/kolmogorov.hpp"
#include "raremut/simplex.hpp"

namespace raremut {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Everything an experiment run needs, filled from a sectioned key = value
// text file.  Unset keys keep the defaults below.
struct ExperimentConfig {
  // [model]
  std::size_t d = 1;
  FitnessModel fitness = FitnessModel::constant({2.0, 1.0});
  std::vector<double> x0 = {0.5, 0.5};  // initial frequencies, rescaled on use

  // [channels]
  std::vector<MutationChannel> channels;

  // [solver]
  SolverConfig solver;      // dt, t_end, picard_tol, picard_max_iter
  std::size_t nodes = 401;  // mesh nodes per axis

  // [monte_carlo]
  std::size_t n_paths = 10000;
  std::optional<std::uint64_t> seed;
  std::vector<double> times = {1.0};

  // [sweep]
  std::vector<double> sweep_gammas = {0.1, 0.2, 0.3, 0.4, 0.5,
                                      0.6, 0.7, 0.8, 0.9, 1.0};
  double x_probe = 0.3;
  double t_probe = 2.0;
  std::vector<double> ubar_gammas = {0.05, 0.5, 0.95};
  double plateau_tol = 3e-3;
  double plateau_horizon = 400.0;

  // [output]
  std::string output_dir = ".";
};

namespace detail {

struct ConfigEntry {
  std::string section, key, value;
  int line;
  bool used = false;
};

inline std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::string where(const std::string& file, const ConfigEntry& e) {
  return file + ":" + std::to_string(e.line) + ": [" + e.section + "] " + e.key;
}

inline double to_double(const std::string& file, const ConfigEntry& e,
                        const std::string& token) {
  char* end = nullptr;
  double v = std::strtod(token.c_str(), &end);
  if (end == token.c_str() || *end != '\0')
    throw ConfigError(where(file, e) + ": '" + token + "' is not a number");
  return v;
}

inline std::vector<double> to_doubles(const std::string& file,
                                      const ConfigEntry& e) {
  std::istringstream in(e.value);
  std::vector<double> out;
  std::string tok;
  while (in >> tok) out.push_back(to_double(file, e, tok));
  if (out.empty()) throw ConfigError(where(file, e) + ": empty value");
  return out;
}

inline std::int64_t to_int(const std::string& file, const ConfigEntry& e) {
  char* end = nullptr;
  long long v = std::strtoll(e.value.c_str(), &end, 10);
  if (end == e.value.c_str() || *end != '\0')
    throw ConfigError(where(file, e) + ": '" + e.value + "' is not an integer");
  return v;
}

inline std::vector<ConfigEntry> parse_entries(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::vector<ConfigEntry> entries;
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::size_t hash = line.find_first_of("#;");
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError(path + ":" + std::to_string(lineno) +
                          ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(lineno) +
                        ": expected key = value");
    ConfigEntry e;
    e.section = section;
    e.key = trim(line.substr(0, eq));
    e.value = trim(line.substr(eq + 1));
    e.line = lineno;
    if (e.key.empty())
      throw ConfigError(path + ":" + std::to_string(lineno) + ": empty key");
    entries.push_back(e);
  }
  return entries;
}

}  // namespace detail

inline ExperimentConfig load_config(const std::string& path) {
  using detail::ConfigEntry;
  std::vector<ConfigEntry> entries = detail::parse_entries(path);

  ExperimentConfig cfg;
  auto find = [&](const std::string& section,
                  const std::string& key) -> ConfigEntry* {
    ConfigEntry* hit = nullptr;
    for (auto& e : entries) {
      if (e.section != section || e.key != key) continue;
      if (hit)
        throw ConfigError(detail::where(path, e) + ": duplicate key (first at line " +
                          std::to_string(hit->line) + ")");
      hit = &e;
      e.used = true;
    }
    return hit;
  };
  auto number = [&](const std::string& sec, const std::string& key,
                    double& slot) {
    if (ConfigEntry* e = find(sec, key)) slot = detail::to_double(path, *e, e->value);
  };
  auto positive = [&](const std::string& sec, const std::string& key,
                      double& slot) {
    if (ConfigEntry* e = find(sec, key)) {
      double v = detail::to_double(path, *e, e->value);
      if (!(v > 0.0))
        throw ConfigError(detail::where(path, *e) + ": must be positive");
      slot = v;
    }
  };
  auto count = [&](const std::string& sec, const std::string& key,
                   std::size_t& slot, std::size_t lo) {
    if (ConfigEntry* e = find(sec, key)) {
      std::int64_t v = detail::to_int(path, *e);
      if (v < static_cast<std::int64_t>(lo))
        throw ConfigError(detail::where(path, *e) + ": must be >= " +
                          std::to_string(lo));
      slot = static_cast<std::size_t>(v);
    }
  };

  // [model]
  if (ConfigEntry* e = find("model", "d")) {
    std::int64_t v = detail::to_int(path, *e);
    if (v < 1 || v > 2)
      throw ConfigError(detail::where(path, *e) + ": d must be 1 or 2");
    cfg.d = static_cast<std::size_t>(v);
  }
  std::string kind = "constant";
  if (ConfigEntry* e = find("model", "fitness")) {
    kind = e->value;
    if (kind != "constant" && kind != "payoff")
      throw ConfigError(detail::where(path, *e) +
                        ": fitness must be 'constant' or 'payoff'");
  }
  ConfigEntry* f_entry = find("model", "f");
  ConfigEntry* a_entry = find("model", "A");
  if (kind == "constant") {
    if (a_entry)
      throw ConfigError(detail::where(path, *a_entry) +
                        ": payoff matrix given but fitness = constant");
    if (f_entry) {
      std::vector<double> f = detail::to_doubles(path, *f_entry);
      if (f.size() != cfg.d + 1)
        throw ConfigError(detail::where(path, *f_entry) + ": expected " +
                          std::to_string(cfg.d + 1) + " values");
      try {
        cfg.fitness = FitnessModel::constant(std::move(f));
      } catch (const std::exception& ex) {
        throw ConfigError(detail::where(path, *f_entry) + ": " + ex.what());
      }
    } else if (cfg.d != 1) {
      throw ConfigError(path + ": [model] f is required when d = " +
                        std::to_string(cfg.d));
    }
  } else {
    if (f_entry)
      throw ConfigError(detail::where(path, *f_entry) +
                        ": constant values given but fitness = payoff");
    if (!a_entry)
      throw ConfigError(path + ": [model] A is required when fitness = payoff");
    std::vector<std::vector<double>> a;
    std::istringstream rows(a_entry->value);
    std::string row_text;
    std::vector<double> row;
    std::string tok;
    while (std::getline(rows, row_text, '/')) {
      std::istringstream in(row_text);
      row.clear();
      while (in >> tok) row.push_back(detail::to_double(path, *a_entry, tok));
      a.push_back(row);
    }
    if (a.size() != cfg.d + 1)
      throw ConfigError(detail::where(path, *a_entry) + ": expected " +
                        std::to_string(cfg.d + 1) + " rows separated by '/'");
    try {
      cfg.fitness = FitnessModel::payoff(std::move(a));
    } catch (const std::exception& ex) {
      throw ConfigError(detail::where(path, *a_entry) + ": " + ex.what());
    }
  }
  if (ConfigEntry* e = find("model", "x0")) {
    cfg.x0 = detail::to_doubles(path, *e);
    if (cfg.x0.size() != cfg.d + 1)
      throw ConfigError(detail::where(path, *e) + ": expected " +
                        std::to_string(cfg.d + 1) + " frequencies");
  } else if (cfg.d != 1) {
    cfg.x0.assign(cfg.d + 1, 1.0 / static_cast<double>(cfg.d + 1));
  }

  // [channels]: key `channel`, value "ancestor descendant rate fraction".
  for (auto& e : entries) {
    if (e.section != "channels") continue;
    if (e.key != "channel")
      throw ConfigError(detail::where(path, e) + ": unknown key");
    e.used = true;
    std::vector<double> v = detail::to_doubles(path, e);
    if (v.size() != 4)
      throw ConfigError(detail::where(path, e) +
                        ": expected 'ancestor descendant rate fraction'");
    double ip;
    if (std::modf(v[0], &ip) != 0.0 || std::modf(v[1], &ip) != 0.0 ||
        v[0] < 0.0 || v[1] < 0.0 || v[0] > cfg.d || v[1] > cfg.d)
      throw ConfigError(detail::where(path, e) + ": type indices must be integers in 0.." +
                        std::to_string(cfg.d));
    try {
      cfg.channels.emplace_back(static_cast<std::size_t>(v[0]),
                                static_cast<std::size_t>(v[1]), v[2], v[3]);
    } catch (const std::exception& ex) {
      throw ConfigError(detail::where(path, e) + ": " + ex.what());
    }
  }

  // [solver]
  positive("solver", "dt", cfg.solver.dt);
  if (ConfigEntry* e = find("solver", "t_end")) {
    double v = detail::to_double(path, *e, e->value);
    if (!(v >= 0.0))
      throw ConfigError(detail::where(path, *e) + ": must be >= 0");
    cfg.solver.t_end = v;
  }
  count("solver", "nodes", cfg.nodes, 2);
  positive("solver", "picard_tol", cfg.solver.picard_tol);
  if (ConfigEntry* e = find("solver", "picard_max_iter")) {
    std::int64_t v = detail::to_int(path, *e);
    if (v < 1)
      throw ConfigError(detail::where(path, *e) + ": must be >= 1");
    cfg.solver.picard_max_iter = static_cast<int>(v);
  }

  // [monte_carlo]
  count("monte_carlo", "n_paths", cfg.n_paths, 1);
  if (ConfigEntry* e = find("monte_carlo", "seed")) {
    std::int64_t v = detail::to_int(path, *e);
    if (v < 0)
      throw ConfigError(detail::where(path, *e) + ": seed must be >= 0");
    cfg.seed = static_cast<std::uint64_t>(v);
  }
  if (ConfigEntry* e = find("monte_carlo", "times")) {
    cfg.times = detail::to_doubles(path, *e);
    for (std::size_t i = 0; i < cfg.times.size(); ++i)
      if (cfg.times[i] < 0.0 || (i > 0 && cfg.times[i] < cfg.times[i - 1]))
        throw ConfigError(detail::where(path, *e) +
                          ": times must be nondecreasing and >= 0");
  }

  // [sweep]
  if (ConfigEntry* e = find("sweep", "gammas")) {
    cfg.sweep_gammas = detail::to_doubles(path, *e);
    for (double g : cfg.sweep_gammas)
      if (!(g > 0.0) || g > 1.0)
        throw ConfigError(detail::where(path, *e) +
                          ": fractions must be in (0,1]");
  }
  number("sweep", "x_probe", cfg.x_probe);
  if (cfg.x_probe < 0.0 || cfg.x_probe > 1.0)
    throw ConfigError(path + ": [sweep] x_probe must be in [0,1]");
  positive("sweep", "t_probe", cfg.t_probe);
  if (ConfigEntry* e = find("sweep", "ubar_gammas")) {
    cfg.ubar_gammas = detail::to_doubles(path, *e);
    for (double g : cfg.ubar_gammas)
      if (!(g > 0.0) || g > 1.0)
        throw ConfigError(detail::where(path, *e) +
                          ": fractions must be in (0,1]");
  }
  positive("sweep", "plateau_tol", cfg.plateau_tol);
  positive("sweep", "horizon", cfg.plateau_horizon);

  // [output]
  if (ConfigEntry* e = find("output", "dir")) {
    if (e->value.empty())
      throw ConfigError(detail::where(path, *e) + ": empty directory");
    cfg.output_dir = e->value;
  }

  for (const auto& e : entries)
    if (!e.used)
      throw ConfigError(detail::where(path, e) + ": unknown key");
  return cfg;
}

}  // namespace raremut
