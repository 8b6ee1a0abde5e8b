#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "corrflow/errors.hpp"
#include "corrflow/fockspace.hpp"

namespace corrflow {

enum class ScenarioMode { run, check, search, sweep };

inline const char* to_string(ScenarioMode m) {
  switch (m) {
    case ScenarioMode::run: return "run";
    case ScenarioMode::check: return "check";
    case ScenarioMode::search: return "search";
    default: return "sweep";
  }
}

// A correlation term addressed by occupation labels; resolved to composite
// basis indices once the models are known.
struct ScenarioTerm {
  int bra_occ_a = 0, bra_occ_b = 0;
  int ket_occ_a = 0, ket_occ_b = 0;
  Complex coefficient{0.0, 0.0};  // ignored for shape entries
};

struct ScenarioAxis {
  std::string name;
  std::vector<double> values;
};

// Parsed and schema-validated scenario file.  Flat `key = value` lines with
// dotted section names; unknown keys are rejected with their line number.
struct Scenario {
  ScenarioMode mode = ScenarioMode::run;
  std::vector<Level> levels_a;
  std::vector<Level> levels_b;
  double beta_a = 1.0, mu_a = 0.0;
  double beta_b = 1.0, mu_b = 0.0;
  double coupling = 0.0;
  bool has_coupling = false;
  double t_max = 0.0;
  long samples = 1;

  std::vector<ScenarioTerm> correlation_terms;   // explicit coefficients
  std::vector<ScenarioTerm> correlation_shape;   // unit-coefficient shape
  double alpha_fraction = 0.0;
  double alpha_phase = 0.0;

  std::vector<double> search_alpha_fraction, search_phase, search_g, search_t;
  std::uint64_t search_seed = 0;
  bool search_refine = true;

  std::vector<ScenarioAxis> sweep_axes;  // canonical axis order

  std::string raw_text;  // exact file bytes, for the provenance hash
};

namespace detail {

inline std::string trimmed(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

inline double parse_double(const std::string& text, int line, const std::string& key) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    while (used < text.size() && std::isspace(static_cast<unsigned char>(text[used]))) ++used;
    if (used != text.size()) throw std::invalid_argument(text);
    if (!std::isfinite(v)) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw ParseError("key " + key + ": expected a real number, got '" + text + "'", line);
  }
}

inline long parse_long(const std::string& text, int line, const std::string& key) {
  try {
    std::size_t used = 0;
    const long v = std::stol(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw ParseError("key " + key + ": expected an integer, got '" + text + "'", line);
  }
}

// `re`, `re+imj` or `re-imj`.
inline Complex parse_complex(const std::string& raw, int line, const std::string& key) {
  const std::string text = trimmed(raw);
  if (text.empty()) throw ParseError("key " + key + ": empty complex number", line);
  if (text.back() != 'j') return Complex(parse_double(text, line, key), 0.0);

  const std::string body = text.substr(0, text.size() - 1);
  // Split at the sign that separates real and imaginary parts (skip a
  // leading sign and exponent signs).
  std::size_t split = std::string::npos;
  for (std::size_t i = 1; i < body.size(); ++i) {
    if ((body[i] == '+' || body[i] == '-') &&
        body[i - 1] != 'e' && body[i - 1] != 'E')
      split = i;
  }
  if (split == std::string::npos)
    throw ParseError("key " + key + ": complex numbers use the form re+imj, got '" + text + "'",
                     line);
  const double re = parse_double(body.substr(0, split), line, key);
  const double im = parse_double(body.substr(split), line, key);
  return Complex(re, im);
}

inline std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, sep)) parts.push_back(trimmed(item));
  if (!text.empty() && text.back() == sep) parts.push_back("");
  return parts;
}

// `occ:energy, occ:energy, ...`
inline std::vector<Level> parse_levels(const std::string& text, int line, const std::string& key) {
  std::vector<Level> levels;
  for (const std::string& item : split(text, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos)
      throw ParseError("key " + key + ": levels are occupation:energy pairs, got '" + item + "'",
                       line);
    Level lvl;
    lvl.occupation = static_cast<int>(parse_long(trimmed(item.substr(0, colon)), line, key));
    lvl.energy = parse_double(trimmed(item.substr(colon + 1)), line, key);
    levels.push_back(lvl);
  }
  if (levels.empty()) throw ParseError("key " + key + ": no levels given", line);
  return levels;
}

// Terms separated by ';'; each term `braA braB ketA ketB [coeff]` with
// occupation labels.
inline std::vector<ScenarioTerm> parse_terms(const std::string& text, int line,
                                             const std::string& key, bool with_coefficient) {
  std::vector<ScenarioTerm> terms;
  for (const std::string& chunk : split(text, ';')) {
    if (chunk.empty()) continue;
    std::stringstream ss(chunk);
    std::vector<std::string> tokens;
    std::string tok;
    while (ss >> tok) tokens.push_back(tok);
    const std::size_t expected = with_coefficient ? 5 : 4;
    if (tokens.size() != expected)
      throw ParseError("key " + key + ": each term needs " + std::to_string(expected) +
                           " fields, got '" + chunk + "'",
                       line);
    ScenarioTerm t;
    t.bra_occ_a = static_cast<int>(parse_long(tokens[0], line, key));
    t.bra_occ_b = static_cast<int>(parse_long(tokens[1], line, key));
    t.ket_occ_a = static_cast<int>(parse_long(tokens[2], line, key));
    t.ket_occ_b = static_cast<int>(parse_long(tokens[3], line, key));
    if (with_coefficient) t.coefficient = parse_complex(tokens[4], line, key);
    terms.push_back(t);
  }
  if (terms.empty()) throw ParseError("key " + key + ": no terms given", line);
  return terms;
}

// Comma list of reals, or `linspace:lo:hi:count`.
inline std::vector<double> parse_value_list(const std::string& text, int line,
                                            const std::string& key) {
  if (text.rfind("linspace:", 0) == 0) {
    const auto parts = split(text.substr(9), ':');
    if (parts.size() != 3)
      throw ParseError("key " + key + ": linspace needs lo:hi:count", line);
    const double lo = parse_double(parts[0], line, key);
    const double hi = parse_double(parts[1], line, key);
    const long count = parse_long(parts[2], line, key);
    if (count < 1 || count > 1000000)
      throw ParseError("key " + key + ": linspace count out of range", line);
    std::vector<double> values(count);
    for (long i = 0; i < count; ++i)
      values[i] = count == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) /
                                             static_cast<double>(count - 1);
    return values;
  }
  std::vector<double> values;
  for (const std::string& item : split(text, ','))
    values.push_back(parse_double(item, line, key));
  if (values.empty()) throw ParseError("key " + key + ": empty value list", line);
  return values;
}

struct KeyEntry {
  std::string value;
  int line = 0;
  bool used = false;
};

}  // namespace detail

inline Scenario parse_scenario_text(const std::string& text) {
  using detail::KeyEntry;
  std::map<std::string, KeyEntry> keys;
  {
    std::stringstream in(text);
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
      ++number;
      const std::string t = detail::trimmed(line);
      if (t.empty() || t[0] == '#') continue;
      const auto eq = t.find('=');
      if (eq == std::string::npos)
        throw ParseError("expected 'key = value', got '" + t + "'", number);
      const std::string key = detail::trimmed(t.substr(0, eq));
      const std::string value = detail::trimmed(t.substr(eq + 1));
      if (key.empty()) throw ParseError("empty key", number);
      if (keys.count(key))
        throw ParseError("duplicate key '" + key + "' (first at line " +
                             std::to_string(keys[key].line) + ")",
                         number);
      keys[key] = KeyEntry{value, number, false};
    }
  }

  const auto take = [&](const std::string& key) -> KeyEntry* {
    auto it = keys.find(key);
    if (it == keys.end()) return nullptr;
    it->second.used = true;
    return &it->second;
  };
  const auto require = [&](const std::string& key) -> KeyEntry& {
    KeyEntry* e = take(key);
    if (!e) throw ParseError("missing required key '" + key + "'");
    return *e;
  };

  Scenario sc;
  sc.raw_text = text;

  {
    KeyEntry& mode = require("mode");
    if (mode.value == "run") sc.mode = ScenarioMode::run;
    else if (mode.value == "check") sc.mode = ScenarioMode::check;
    else if (mode.value == "search") sc.mode = ScenarioMode::search;
    else if (mode.value == "sweep") sc.mode = ScenarioMode::sweep;
    else throw ParseError("key mode: must be run, check, search or sweep", mode.line);
  }

  {
    KeyEntry& la = require("model_a.levels");
    sc.levels_a = detail::parse_levels(la.value, la.line, "model_a.levels");
    KeyEntry& lb = require("model_b.levels");
    sc.levels_b = detail::parse_levels(lb.value, lb.line, "model_b.levels");
  }
  {
    KeyEntry& e = require("thermal_a.beta");
    sc.beta_a = detail::parse_double(e.value, e.line, "thermal_a.beta");
  }
  {
    KeyEntry& e = require("thermal_a.mu");
    sc.mu_a = detail::parse_double(e.value, e.line, "thermal_a.mu");
  }
  {
    KeyEntry& e = require("thermal_b.beta");
    sc.beta_b = detail::parse_double(e.value, e.line, "thermal_b.beta");
  }
  {
    KeyEntry& e = require("thermal_b.mu");
    sc.mu_b = detail::parse_double(e.value, e.line, "thermal_b.mu");
  }

  if (KeyEntry* e = take("interaction.g")) {
    sc.coupling = detail::parse_double(e->value, e->line, "interaction.g");
    sc.has_coupling = true;
  }
  bool has_t_max = false;
  if (KeyEntry* e = take("time.t_max")) {
    sc.t_max = detail::parse_double(e->value, e->line, "time.t_max");
    if (sc.t_max < 0.0) throw ParseError("key time.t_max: must be non-negative", e->line);
    has_t_max = true;
  }
  bool has_samples = false;
  if (KeyEntry* e = take("time.samples")) {
    sc.samples = detail::parse_long(e->value, e->line, "time.samples");
    if (sc.samples < 1 || sc.samples > 100000)
      throw ParseError("key time.samples: out of range", e->line);
    has_samples = true;
  }

  if (KeyEntry* e = take("correlation.terms"))
    sc.correlation_terms = detail::parse_terms(e->value, e->line, "correlation.terms", true);
  if (KeyEntry* e = take("correlation.shape"))
    sc.correlation_shape = detail::parse_terms(e->value, e->line, "correlation.shape", false);
  if (KeyEntry* e = take("correlation.alpha_fraction")) {
    sc.alpha_fraction = detail::parse_double(e->value, e->line, "correlation.alpha_fraction");
    if (sc.alpha_fraction < -1.0 || sc.alpha_fraction > 1.0)
      throw ParseError("key correlation.alpha_fraction: must lie in [-1, 1]", e->line);
    if (sc.correlation_shape.empty())
      throw ParseError("correlation.alpha_fraction needs correlation.shape", e->line);
  }
  if (KeyEntry* e = take("correlation.phase")) {
    sc.alpha_phase = detail::parse_double(e->value, e->line, "correlation.phase");
    if (sc.correlation_shape.empty())
      throw ParseError("correlation.phase needs correlation.shape", e->line);
  }
  if (!sc.correlation_terms.empty() && !sc.correlation_shape.empty())
    throw ParseError("correlation.terms and correlation.shape are mutually exclusive");

  if (sc.mode == ScenarioMode::search) {
    {
      KeyEntry& e = require("search.alpha_fraction");
      sc.search_alpha_fraction =
          detail::parse_value_list(e.value, e.line, "search.alpha_fraction");
    }
    {
      KeyEntry& e = require("search.phase");
      sc.search_phase = detail::parse_value_list(e.value, e.line, "search.phase");
    }
    {
      KeyEntry& e = require("search.g");
      sc.search_g = detail::parse_value_list(e.value, e.line, "search.g");
    }
    {
      KeyEntry& e = require("search.t");
      sc.search_t = detail::parse_value_list(e.value, e.line, "search.t");
    }
    if (KeyEntry* e = take("search.seed"))
      sc.search_seed = static_cast<std::uint64_t>(detail::parse_long(e->value, e->line, "search.seed"));
    if (KeyEntry* e = take("search.refine")) {
      if (e->value == "true") sc.search_refine = true;
      else if (e->value == "false") sc.search_refine = false;
      else throw ParseError("key search.refine: must be true or false", e->line);
    }
    if (sc.correlation_shape.empty())
      throw ParseError("search mode needs correlation.shape for the pattern family");
  }

  if (sc.mode == ScenarioMode::sweep) {
    // Canonical axis order fixes the row order of the sweep output.
    const char* axis_names[] = {"beta", "mu_a", "mu_b", "g", "alpha_fraction", "t"};
    for (const char* name : axis_names) {
      if (KeyEntry* e = take(std::string("sweep.") + name)) {
        ScenarioAxis axis;
        axis.name = name;
        axis.values = detail::parse_value_list(e->value, e->line, std::string("sweep.") + name);
        sc.sweep_axes.push_back(std::move(axis));
      }
    }
    if (sc.sweep_axes.empty()) throw ParseError("sweep mode needs at least one sweep.<axis> key");
    for (const auto& axis : sc.sweep_axes)
      if (axis.name == "alpha_fraction" && sc.correlation_shape.empty())
        throw ParseError("sweep.alpha_fraction needs correlation.shape");
  }

  if (sc.mode == ScenarioMode::run) {
    if (!sc.has_coupling) throw ParseError("missing required key 'interaction.g'");
    if (!has_t_max) throw ParseError("missing required key 'time.t_max'");
    if (!has_samples) throw ParseError("missing required key 'time.samples'");
  }
  if (sc.mode == ScenarioMode::sweep) {
    bool sweeps_g = false, sweeps_time = false;
    for (const auto& axis : sc.sweep_axes) {
      sweeps_g |= axis.name == "g";
      sweeps_time |= axis.name == "t";
    }
    if (!sc.has_coupling && !sweeps_g)
      throw ParseError("sweep without a g axis needs interaction.g");
    if (!has_t_max && !sweeps_time)
      throw ParseError("sweep without a time axis needs time.t_max");
  }

  for (const auto& [key, entry] : keys)
    if (!entry.used)
      throw ParseError("unknown key '" + key + "' (not part of the scenario schema)", entry.line);

  return sc;
}

inline Scenario parse_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open scenario file '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_scenario_text(buffer.str());
}

}  // namespace corrflow
