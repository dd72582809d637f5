#include "dollard/expcli/config.hpp"
#include "dollard/adiabatic.hpp"
#include "dollard/errors.hpp"
#include "dollard/moller.hpp"
#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <openssl/evp.h>
#include <set>
#include <sstream>

namespace dollard::expcli {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos)
    return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string &key, std::string_view text) {
  text = trim(text);
  double v = 0.0;
  const auto *end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v))
    throw ConfigError(key + ": expected a finite number, got '" + std::string(text) + "'");
  return v;
}

std::size_t to_size(const std::string &key, std::string_view text) {
  text = trim(text);
  std::size_t v = 0;
  const auto *end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end)
    throw ConfigError(key + ": expected a non-negative integer, got '" + std::string(text) + "'");
  return v;
}

bool to_bool(const std::string &key, std::string_view text) {
  text = trim(text);
  if (text == "true")
    return true;
  if (text == "false")
    return false;
  throw ConfigError(key + ": expected true or false");
}

std::vector<double> to_list(const std::string &key, std::string_view text) {
  std::vector<double> out;
  text = trim(text);
  if (text.empty())
    return out;
  std::size_t start = 0;
  while (true) {
    const auto comma = text.find(',', start);
    out.push_back(to_double(key, text.substr(start, comma - start)));
    if (comma == std::string_view::npos)
      break;
    start = comma + 1;
  }
  return out;
}

std::string join(const std::vector<double> &v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i)
      s += ", ";
    s += format_double(v[i]);
  }
  return s;
}

const char *kind_name(PotentialKind k) {
  return k == PotentialKind::coulomb_reg ? "coulomb_reg" : "short_range_control";
}

bool valid_probe_id(std::string_view id) {
  return !id.empty() && std::all_of(id.begin(), id.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
  });
}

} // namespace

bool ExperimentConfig::operator==(const ExperimentConfig &o) const {
  // Serialisation covers every field, so it doubles as structural equality.
  return serialize(*this) == serialize(o);
}

const std::vector<std::string> &experiment_names() {
  static const std::vector<std::string> names{
      "dollard-vs-free", "short-range-control", "interpolation",   "group-law",
      "asymptotic-observables", "energy-identity", "adiabatic-ir", "switching-shift",
      "time-reversal",   "oracle-crosscheck"};
  return names;
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  (void)ec;
  return std::string(buf, ptr);
}

KeyValues parse_key_values(std::string_view text) {
  KeyValues kv;
  std::size_t line_no = 0, pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos)
      nl = text.size();
    auto line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos)
      line = line.substr(0, hash);
    line = trim(line);
    if (line.empty())
      continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    const std::string key(trim(line.substr(0, eq)));
    if (key.empty())
      throw ConfigError("line " + std::to_string(line_no) + ": empty key");
    if (kv.contains(key))
      throw ConfigError(key + ": duplicate key (line " + std::to_string(line_no) + ")");
    kv[key] = std::string(trim(line.substr(eq + 1)));
  }
  return kv;
}

void apply_override(KeyValues &kv, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos)
    throw ConfigError("override '" + std::string(assignment) + "': expected key=value");
  const std::string key(trim(assignment.substr(0, eq)));
  if (key.empty())
    throw ConfigError("override '" + std::string(assignment) + "': empty key");
  kv[key] = std::string(trim(assignment.substr(eq + 1)));
}

ExperimentConfig build_config(const KeyValues &kv) {
  ExperimentConfig c;
  std::map<std::string, ProbeSpec> probes;
  std::map<std::string, std::set<std::string>> probe_fields;
  for (const auto &[key, value] : kv) {
    if (key == "experiment")
      c.experiment = value;
    else if (key == "grid.n")
      c.grid_n = to_size(key, value);
    else if (key == "grid.box_length")
      c.box_length = to_double(key, value);
    else if (key == "grid.mass")
      c.mass = to_double(key, value);
    else if (key == "potential.kind") {
      if (value == "coulomb_reg")
        c.potential.kind = PotentialKind::coulomb_reg;
      else if (value == "short_range_control")
        c.potential.kind = PotentialKind::short_range_control;
      else
        throw ConfigError(key + ": expected coulomb_reg or short_range_control");
    } else if (key == "potential.alpha")
      c.potential.alpha = to_double(key, value);
    else if (key == "potential.core_width")
      c.potential.core_width = to_double(key, value);
    else if (key == "potential.decay_scale")
      c.potential.decay_scale = to_double(key, value);
    else if (key == "packet.min_momentum")
      c.min_momentum = to_double(key, value);
    else if (key == "schedule.T")
      c.horizons = to_list(key, value);
    else if (key == "schedule.epsilon")
      c.epsilons = to_list(key, value);
    else if (key == "schedule.s")
      c.increments = to_list(key, value);
    else if (key == "schedule.t")
      c.times = to_list(key, value);
    else if (key == "switching.epsilon")
      c.switching.epsilon = to_double(key, value);
    else if (key == "switching.origin_shift")
      c.switching.origin_shift = to_double(key, value);
    else if (key == "stepper.dt")
      c.stepper.dt = to_double(key, value);
    else if (key == "stepper.record_stride")
      c.stepper.record_stride = to_size(key, value);
    else if (key == "stepper.edge_margin")
      c.stepper.edge_margin = to_double(key, value);
    else if (key == "stepper.monitor_support")
      c.stepper.monitor_support = to_bool(key, value);
    else if (key == "stepper.leak_tolerance")
      c.stepper.leak_tolerance = to_double(key, value);
    else if (key == "output.dir")
      c.output_dir = value;
    else if (key.starts_with("probe.")) {
      const auto dot = key.find('.', 6);
      const std::string id = key.substr(6, dot == std::string::npos ? std::string::npos : dot - 6);
      const std::string field = dot == std::string::npos ? "" : key.substr(dot + 1);
      if (!valid_probe_id(id))
        throw ConfigError(key + ": invalid probe id");
      auto &p = probes[id];
      p.id = id;
      if (field == "x0")
        p.packet.x0 = to_double(key, value);
      else if (field == "p0")
        p.packet.p0 = to_double(key, value);
      else if (field == "sigma")
        p.packet.sigma = to_double(key, value);
      else
        throw ConfigError(key + ": unknown probe field (expected x0, p0 or sigma)");
      probe_fields[id].insert(field);
    } else
      throw ConfigError(key + ": unknown key");
  }
  for (const auto &[id, fields] : probe_fields)
    if (fields.size() != 3)
      throw ConfigError("probe." + id + ": x0, p0 and sigma are all required");
  for (auto &[id, p] : probes)
    c.probes.push_back(p);
  return c;
}

ExperimentConfig parse_config(std::string_view text) {
  return build_config(parse_key_values(text));
}

std::string read_text_file(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw ConfigError("cannot read config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

KeyValues to_key_values(const ExperimentConfig &c) {
  KeyValues kv;
  kv["experiment"] = c.experiment;
  kv["grid.n"] = std::to_string(c.grid_n);
  kv["grid.box_length"] = format_double(c.box_length);
  kv["grid.mass"] = format_double(c.mass);
  kv["potential.kind"] = kind_name(c.potential.kind);
  kv["potential.alpha"] = format_double(c.potential.alpha);
  kv["potential.core_width"] = format_double(c.potential.core_width);
  kv["potential.decay_scale"] = format_double(c.potential.decay_scale);
  kv["packet.min_momentum"] = format_double(c.min_momentum);
  for (const auto &p : c.probes) {
    kv["probe." + p.id + ".x0"] = format_double(p.packet.x0);
    kv["probe." + p.id + ".p0"] = format_double(p.packet.p0);
    kv["probe." + p.id + ".sigma"] = format_double(p.packet.sigma);
  }
  kv["schedule.T"] = join(c.horizons);
  kv["schedule.epsilon"] = join(c.epsilons);
  kv["schedule.s"] = join(c.increments);
  kv["schedule.t"] = join(c.times);
  kv["switching.epsilon"] = format_double(c.switching.epsilon);
  kv["switching.origin_shift"] = format_double(c.switching.origin_shift);
  kv["stepper.dt"] = format_double(c.stepper.dt);
  kv["stepper.record_stride"] = std::to_string(c.stepper.record_stride);
  kv["stepper.edge_margin"] = format_double(c.stepper.edge_margin);
  kv["stepper.monitor_support"] = c.stepper.monitor_support ? "true" : "false";
  kv["stepper.leak_tolerance"] = format_double(c.stepper.leak_tolerance);
  kv["output.dir"] = c.output_dir;
  return kv;
}

std::string serialize(const ExperimentConfig &c) {
  std::string out;
  for (const auto &[k, v] : to_key_values(c))
    out += k + " = " + v + "\n";
  return out;
}

std::string config_digest(const ExperimentConfig &c) {
  const auto text = serialize(c);
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(text.data(), text.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("SHA-256 digest failed");
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i)
    hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return hex.str();
}

//------------------------------------------------------------------------------
namespace {

struct Requirements {
  bool horizons = false, epsilons = false, increments = false, times = false;
  std::size_t min_probes = 1;
};

Requirements requirements(const std::string &name) {
  if (name == "dollard-vs-free" || name == "short-range-control")
    return {true, false, false, false, 1};
  if (name == "interpolation")
    return {true, false, true, false, 1};
  if (name == "group-law")
    return {false, false, true, true, 1};
  if (name == "asymptotic-observables")
    return {true, false, false, true, 1};
  if (name == "energy-identity")
    return {true, false, false, false, 1};
  if (name == "adiabatic-ir")
    return {false, true, false, false, 1};
  if (name == "switching-shift")
    return {false, true, false, false, 1};
  if (name == "time-reversal")
    return {true, false, false, false, 4};
  return {true, false, false, false, 1}; // oracle-crosscheck
}

bool increasing(const std::vector<double> &v) {
  return std::adjacent_find(v.begin(), v.end(), std::greater_equal<>()) == v.end();
}

// Signed times the full dynamics carries a probe to, per experiment.
std::vector<double> transport_horizons(const ExperimentConfig &c) {
  auto max_of = [](const std::vector<double> &v) {
    return v.empty() ? 0.0 : *std::max_element(v.begin(), v.end());
  };
  const auto &e = c.experiment;
  double T = max_of(c.horizons);
  if (e == "interpolation") {
    double s = 0.0;
    for (double x : c.increments)
      s = std::max(s, std::abs(x));
    return {2.0 * T + s};
  }
  if (e == "asymptotic-observables")
    return {std::max(T, max_of(c.times))};
  if (e == "adiabatic-ir" || e == "switching-shift") {
    if (c.horizons.empty()) {
      double eps_min = 0.0;
      for (double x : c.epsilons)
        if (x > 0.0)
          eps_min = eps_min == 0.0 ? x : std::min(eps_min, x);
      T = eps_min > 0.0 ? switch_off_horizon(eps_min, c.switching.origin_shift) : 0.0;
    }
    return {-T, T};
  }
  if (e == "time-reversal")
    return {-T, T};
  if (e == "group-law" || e == "oracle-crosscheck")
    return {};
  return {T};
}

} // namespace

std::vector<Diagnostic> validate(const ExperimentConfig &c) {
  std::vector<Diagnostic> out;
  auto add = [&](std::string field, std::string msg) {
    out.push_back({std::move(field), std::move(msg)});
  };
  const auto &names = experiment_names();
  if (std::find(names.begin(), names.end(), c.experiment) == names.end()) {
    add("experiment", "unknown experiment '" + c.experiment + "'");
    return out;
  }

  GridPtr grid;
  try {
    grid = make_grid(c.grid_n, c.box_length, c.mass);
  } catch (const ConfigError &e) {
    add("grid", e.what());
  }
  try {
    c.potential.validate();
  } catch (const ConfigError &e) {
    add("potential", e.what());
  }
  if (!(c.potential.alpha >= 0.0))
    add("potential.alpha", "coupling must be non-negative (repulsive)");
  if (grid) {
    try {
      check_stability(*grid, c.stepper);
    } catch (const ConfigError &e) {
      add("stepper.dt", e.what());
    }
  }
  if (!(c.stepper.leak_tolerance > 0.0))
    add("stepper.leak_tolerance", "must be positive");
  if (!(c.min_momentum > 0.0))
    add("packet.min_momentum", "momentum clearance p_min must be positive");

  const auto req = requirements(c.experiment);
  auto need = [&](bool required, const std::vector<double> &v, const char *field) {
    if (required && v.empty())
      add(field, "schedule must be non-empty for experiment " + c.experiment);
    else if (!increasing(v))
      add(field, "schedule must be strictly increasing");
  };
  need(req.horizons, c.horizons, "schedule.T");
  need(req.increments, c.increments, "schedule.s");
  need(req.times, c.times, "schedule.t");
  if (req.epsilons && c.epsilons.empty())
    add("schedule.epsilon", "schedule must be non-empty for experiment " + c.experiment);
  for (double T : c.horizons)
    if (!(T > 0.0)) {
      add("schedule.T", "horizons must be positive");
      break;
    }
  for (double e : c.epsilons)
    if (!(e > 0.0)) {
      add("schedule.epsilon", "epsilon values must be positive");
      break;
    }
  if (c.experiment == "adiabatic-ir" && c.epsilons.size() < 4)
    add("schedule.epsilon", "IR slope fit needs >= 4 epsilon values");
  if (c.experiment == "adiabatic-ir" &&
      std::adjacent_find(c.epsilons.begin(), c.epsilons.end(), std::less_equal<>()) !=
          c.epsilons.end())
    add("schedule.epsilon", "epsilon schedule must be strictly decreasing");
  if ((c.experiment == "dollard-vs-free" || c.experiment == "short-range-control") &&
      c.horizons.size() < 5)
    add("schedule.T", "log-phase fit needs >= 4 Cauchy pairs (>= 5 horizons)");
  if (c.experiment == "switching-shift" && c.switching.origin_shift == 0.0)
    add("switching.origin_shift", "switching-shift needs a nonzero origin shift");
  if ((c.experiment == "adiabatic-ir" || c.experiment == "switching-shift") &&
      !c.horizons.empty()) {
    if (c.horizons.size() != 1)
      add("schedule.T", "adiabatic experiments take a single fixed horizon (or none)");
    for (double e : c.epsilons)
      if (e > 0.0 && !(std::exp(-e * (c.horizons.back() - std::abs(c.switching.origin_shift))) < 1e-8)) {
        add("schedule.T", "eps T coupling: e^{-eps (T - |t0|)} < 1e-8 violated at eps = " +
                              format_double(e));
        break;
      }
  }
  if (std::abs(c.switching.origin_shift) > 10.0)
    add("switching.origin_shift", "|t0| <= 10 required");
  if (c.experiment == "interpolation")
    for (double s : c.increments)
      if (std::abs(s) > 32.0)
        add("schedule.s", "interpolation increments need |s| <= 32");

  if (c.probes.size() < req.min_probes)
    add("probe", "experiment " + c.experiment + " needs at least " +
                     std::to_string(req.min_probes) + " probes");
  if (!grid)
    return out;
  const auto horizons = transport_horizons(c);
  for (const auto &p : c.probes) {
    const std::string field = "probe." + p.id;
    try {
      require_momentum_clearance(p.packet, c.min_momentum);
    } catch (const ConfigError &e) {
      add(field + ".p0", e.what());
    }
    try {
      const auto psi = gaussian_packet(grid, p.packet);
      if (c.stepper.monitor_support)
        for (double T : horizons)
          if (T != 0.0)
            preflight_transport(psi, T, c.stepper);
    } catch (const ConfigError &e) {
      add(field, e.what());
    }
  }
  return out;
}

} // namespace dollard::expcli
