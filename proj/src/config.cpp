#include "dkspde/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>
#include <sstream>

#include "dkspde/errors.hpp"
#include "dkspde/io.hpp"
#include "dkspde/kinetic.hpp"

namespace dkspde {

std::size_t edit_distance(std::string_view a, std::string_view b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

namespace {

const std::map<std::string, std::vector<std::string>>& known_keys() {
  static const std::map<std::string, std::vector<std::string>> keys = {
      {"", {"seed"}},
      {"model", {"preset", "m", "eps", "gamma", "p", "Phi", "sigma", "nu", "nu_direction", "phi", "lambda"}},
      {"grid", {"d", "n"}},
      {"solver",
       {"dt", "t_end", "alpha", "scheme", "correction", "sigma_mollify_n", "clip", "cfl_safety", "override_cfl"}},
      {"noise",
       {"f_count", "f_amplitude", "f_decay", "f_pairs", "f_wavevectors", "f_amplitudes", "g_count", "g_amplitude",
        "g_decay", "g_pairs", "g_wavevectors", "g_amplitudes"}},
      {"initial",
       {"kind", "level", "amplitude", "shift", "width", "b_kind", "b_level", "b_amplitude", "b_shift", "b_width"}},
      {"experiment", {"kind", "ensemble", "ladder", "schedule"}},
      {"kinetic", {"xi_max", "per_octave", "per_unit", "betas", "Ms"}},
      {"output", {"dir", "snapshot_stride", "write_snapshots"}},
  };
  return keys;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) {
    const std::string t = trim(cur);
    if (!t.empty()) out.push_back(t);
  }
  return out;
}

struct Entry {
  std::string value;
  int line = 0;
};

class Reader {
 public:
  explicit Reader(std::string origin) : origin_(std::move(origin)) {}

  [[noreturn]] void fail(int line, const std::string& msg) const {
    throw ConfigError(origin_ + ":" + std::to_string(line) + ": " + msg);
  }

  void parse(std::string_view text) {
    std::string section;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
      const auto nl = text.find('\n', pos);
      const std::string_view raw = text.substr(pos, nl == std::string_view::npos ? text.size() - pos : nl - pos);
      pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
      ++line_no;
      std::string line(raw);
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      line = trim(line);
      if (line.empty()) continue;
      if (line.front() == '[') {
        if (line.back() != ']') fail(line_no, "malformed section header '" + line + "'");
        section = trim(line.substr(1, line.size() - 2));
        if (!known_keys().count(section) || section.empty()) {
          fail(line_no, "unknown section [" + section + "]" + suggest_section(section));
        }
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos) fail(line_no, "expected 'key = value', got '" + line + "'");
      const std::string key = trim(line.substr(0, eq));
      const std::string value = trim(line.substr(eq + 1));
      if (key.empty()) fail(line_no, "empty key");
      if (!allowed(section, key)) {
        fail(line_no, "unknown key '" + key + "'" + (section.empty() ? "" : " in [" + section + "]") +
                          suggest_key(section, key));
      }
      const std::string full = section.empty() ? key : section + "." + key;
      if (entries_.count(full)) {
        fail(line_no, "duplicate key '" + key + "' (first set on line " + std::to_string(entries_[full].line) + ")");
      }
      entries_[full] = {value, line_no};
    }
  }

  bool has(const std::string& key) const { return entries_.count(key) > 0; }
  std::vector<std::string> keys_with_prefix(const std::string& prefix) const {
    std::vector<std::string> out;
    for (const auto& [k, e] : entries_) {
      if (k.rfind(prefix, 0) == 0) out.push_back(k);
    }
    return out;
  }
  int line(const std::string& key) const { return entries_.at(key).line; }
  const std::string& raw(const std::string& key) const { return entries_.at(key).value; }

  std::string text(const std::string& key, const std::string& fallback) const {
    return has(key) ? raw(key) : fallback;
  }

  double number(const std::string& key, double fallback) const {
    if (!has(key)) return fallback;
    return parse_number(raw(key), key);
  }

  double parse_number(const std::string& s, const std::string& key) const {
    double v = 0.0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size() || !std::isfinite(v)) {
      fail(has(key) ? line(key) : 0, "key '" + key + "' expects a number, got '" + s + "'");
    }
    return v;
  }

  long long integer(const std::string& key, long long fallback) const {
    if (!has(key)) return fallback;
    const std::string& s = raw(key);
    long long v = 0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size()) {
      fail(line(key), "key '" + key + "' expects an integer, got '" + s + "'");
    }
    return v;
  }

  bool flag(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const std::string& s = raw(key);
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    fail(line(key), "key '" + key + "' expects true or false, got '" + s + "'");
  }

  std::vector<double> numbers(const std::string& key) const {
    std::vector<double> out;
    if (!has(key)) return out;
    for (const auto& part : split(raw(key), ',')) out.push_back(parse_number(part, key));
    return out;
  }

  void require(const std::string& key) const {
    if (!has(key)) throw ConfigError(origin_ + ": missing required key '" + key + "'");
  }

  template <class F>
  auto guarded(const std::string& key, F&& f) const {
    try {
      return f();
    } catch (const ConfigError& e) {
      if (has(key)) fail(line(key), e.what());
      throw;
    }
  }

 private:
  bool allowed(const std::string& section, const std::string& key) const {
    const auto& keys = known_keys().at(section);
    if (std::find(keys.begin(), keys.end(), key) != keys.end()) return true;
    return section == "experiment" && key.rfind("threshold.", 0) == 0 && key.size() > 10;
  }

  static std::string suggest_key(const std::string& section, const std::string& key) {
    std::string best;
    std::size_t best_d = 3;
    for (const auto& [sec, keys] : known_keys()) {
      for (const auto& k : keys) {
        const std::size_t d = edit_distance(key, k) + (sec == section ? 0 : 1);
        if (d < best_d || (d == best_d && best.empty())) {
          if (d <= 2) {
            best_d = d;
            best = sec == section || sec.empty() ? k : "[" + sec + "] " + k;
          }
        }
      }
    }
    return best.empty() ? std::string() : "; did you mean '" + best + "'?";
  }

  static std::string suggest_section(const std::string& section) {
    for (const auto& [sec, keys] : known_keys()) {
      if (!sec.empty() && edit_distance(section, sec) <= 2) return "; did you mean [" + sec + "]?";
    }
    return {};
  }

  std::string origin_;
  std::map<std::string, Entry> entries_;
};

SpectralNoiseSpec read_noise(const Reader& r, const std::string& prefix, int d) {
  const std::string base = "noise." + prefix + "_";
  SpectralNoiseSpec spec;
  const bool pairs = r.flag(base + "pairs", true);
  if (r.has(base + "wavevectors")) {
    for (const auto& part : split(r.raw(base + "wavevectors"), ',')) {
      std::array<int, 2> k{0, 0};
      const auto comps = split(part, ':');
      if (comps.empty() || comps.size() > 2 || (d == 1 && comps.size() != 1)) {
        r.fail(r.line(base + "wavevectors"), "malformed wavevector '" + part + "' (use k or k0:k1)");
      }
      for (std::size_t i = 0; i < comps.size(); ++i) {
        int v = 0;
        const auto res = std::from_chars(comps[i].data(), comps[i].data() + comps[i].size(), v);
        if (res.ec != std::errc() || res.ptr != comps[i].data() + comps[i].size()) {
          r.fail(r.line(base + "wavevectors"), "malformed wavevector '" + part + "'");
        }
        k[i] = v;
      }
      spec.wavevectors.push_back(k);
    }
    spec.amplitudes = r.numbers(base + "amplitudes");
    if (spec.amplitudes.size() != spec.wavevectors.size()) {
      r.fail(r.line(base + "wavevectors"), prefix + "_amplitudes must list one amplitude per wavevector");
    }
    spec.includes_cosine_partner = pairs;
    return spec;
  }
  if (r.has(base + "amplitudes")) r.fail(r.line(base + "amplitudes"), prefix + "_amplitudes requires " + prefix + "_wavevectors");
  const long long count = r.integer(base + "count", 0);
  if (count < 0) r.fail(r.line(base + "count"), prefix + "_count must be >= 0");
  if (count == 0) return spec;
  return SpectralNoiseSpec::decaying(int(count), r.number(base + "amplitude", 0.1), r.number(base + "decay", 1.0),
                                     pairs);
}

InitialSpec read_initial(const Reader& r, const std::string& prefix, InitialSpec fallback) {
  InitialSpec s = fallback;
  s.kind = r.text("initial." + prefix + "kind", s.kind);
  s.level = r.number("initial." + prefix + "level", s.level);
  s.amplitude = r.number("initial." + prefix + "amplitude", s.amplitude);
  s.shift = r.number("initial." + prefix + "shift", s.shift);
  s.width = r.number("initial." + prefix + "width", s.width);
  if (s.kind != "sine" && s.kind != "bump" && s.kind != "constant") {
    r.fail(r.line("initial." + prefix + "kind"), "unknown initial kind '" + s.kind + "' (expected sine, bump or constant)");
  }
  return s;
}

std::string join_numbers(const std::vector<double>& xs) {
  std::string out;
  for (double x : xs) out += (out.empty() ? "" : ",") + format_double(x);
  return out;
}

void write_noise(std::ostringstream& os, const std::string& prefix, const SpectralNoiseSpec& s, int d) {
  if (s.empty()) {
    os << prefix << "_count = 0\n";
    return;
  }
  os << prefix << "_wavevectors = ";
  for (std::size_t i = 0; i < s.wavevectors.size(); ++i) {
    os << (i ? "," : "") << s.wavevectors[i][0];
    if (d == 2) os << ':' << s.wavevectors[i][1];
  }
  os << '\n' << prefix << "_amplitudes = " << join_numbers(s.amplitudes) << '\n';
  os << prefix << "_pairs = " << (s.includes_cosine_partner ? "true" : "false") << '\n';
}

void write_initial(std::ostringstream& os, const std::string& prefix, const InitialSpec& s) {
  os << prefix << "kind = " << s.kind << '\n'
     << prefix << "level = " << format_double(s.level) << '\n'
     << prefix << "amplitude = " << format_double(s.amplitude) << '\n'
     << prefix << "shift = " << format_double(s.shift) << '\n'
     << prefix << "width = " << format_double(s.width) << '\n';
}

}  // namespace

RunConfig parse_config_text(std::string_view text, const std::string& origin) {
  Reader r(origin);
  r.parse(text);
  for (const char* key : {"model.preset", "grid.n", "solver.dt", "solver.t_end"}) r.require(key);
  RunConfig cfg;
  cfg.seed = std::uint64_t(r.integer("seed", 0));
  if (r.has("seed") && r.raw("seed").front() == '-') r.fail(r.line("seed"), "seed must be nonnegative");

  cfg.preset = r.raw("model.preset");
  const auto& names = preset_names();
  if (std::find(names.begin(), names.end(), cfg.preset) == names.end()) {
    std::string best;
    for (const auto& n : names) {
      if (edit_distance(n, cfg.preset) <= 3) best = n;
    }
    r.fail(r.line("model.preset"),
           "unknown preset '" + cfg.preset + "'" + (best.empty() ? "" : "; did you mean '" + best + "'?"));
  }
  for (const char* k : {"m", "eps", "gamma"}) {
    if (r.has(std::string("model.") + k)) cfg.params[k] = r.number(std::string("model.") + k, 0.0);
  }
  cfg.p = r.number("model.p", 2.0);
  for (const char* slot : {"Phi", "sigma", "nu", "phi", "lambda"}) {
    const std::string key = std::string("model.") + slot;
    if (r.has(key)) {
      r.guarded(key, [&] { return parse_function(r.raw(key)); });
      cfg.functions[slot] = r.raw(key);
    }
  }
  if (r.has("model.nu_direction")) {
    const auto dir = r.numbers("model.nu_direction");
    if (dir.empty() || dir.size() > 2) r.fail(r.line("model.nu_direction"), "nu_direction expects 1 or 2 numbers");
    cfg.nu_direction = {dir[0], dir.size() > 1 ? dir[1] : 0.0};
  }

  const int d = int(r.integer("grid.d", 1));
  const int n = int(r.integer("grid.n", 0));
  cfg.grid = r.guarded("grid.n", [&] { return GridSpec::make(d, n); });

  SolverConfig& s = cfg.solver;
  s.dt = r.number("solver.dt", s.dt);
  s.t_end = r.number("solver.t_end", s.t_end);
  s.alpha = r.number("solver.alpha", 0.0);
  s.scheme = r.guarded("solver.scheme", [&] { return parse_scheme(r.text("solver.scheme", "ito-euler")); });
  s.correction =
      r.guarded("solver.correction", [&] { return parse_correction(r.text("solver.correction", "coefficient")); });
  if (r.has("solver.sigma_mollify_n")) s.sigma_mollify_n = int(r.integer("solver.sigma_mollify_n", 0));
  s.clip_nonlinearity_args = r.flag("solver.clip", true);
  s.cfl_safety = r.number("solver.cfl_safety", 0.5);
  s.override_cfl = r.flag("solver.override_cfl", false);
  s.diag_p = cfg.p;
  r.guarded("solver.dt", [&] {
    s.validate();
    return 0;
  });

  cfg.noise_F = read_noise(r, "f", d);
  cfg.noise_G = read_noise(r, "g", d);
  cfg.initial_a = read_initial(r, "", cfg.initial_a);
  cfg.initial_b = read_initial(r, "b_", cfg.initial_b);

  cfg.experiment_kind = r.text("experiment.kind", "");
  cfg.ensemble = int(r.integer("experiment.ensemble", cfg.ensemble));
  if (r.has("experiment.ladder")) {
    for (const auto& part : split(r.raw("experiment.ladder"), ',')) {
      const auto c = split(part, ':');
      if (c.size() != 2) r.fail(r.line("experiment.ladder"), "ladder entries are n:dt, got '" + part + "'");
      cfg.ladder.push_back({int(r.parse_number(c[0], "experiment.ladder")), r.parse_number(c[1], "experiment.ladder")});
    }
  }
  if (r.has("experiment.schedule")) {
    for (const auto& part : split(r.raw("experiment.schedule"), ',')) {
      const auto c = split(part, ':');
      if (c.empty() || c.size() > 2) r.fail(r.line("experiment.schedule"), "schedule entries are alpha:n, got '" + part + "'");
      CascadeEntry e;
      e.alpha = r.parse_number(c[0], "experiment.schedule");
      if (c.size() == 2 && c[1] != "none") e.mollify_n = int(r.parse_number(c[1], "experiment.schedule"));
      cfg.schedule.push_back(e);
    }
  }
  for (const auto& key : r.keys_with_prefix("experiment.threshold.")) {
    cfg.thresholds[key.substr(std::string("experiment.threshold.").size())] = r.number(key, 0.0);
  }

  cfg.xi_max = r.number("kinetic.xi_max", cfg.xi_max);
  cfg.per_octave = int(r.integer("kinetic.per_octave", cfg.per_octave));
  cfg.per_unit = int(r.integer("kinetic.per_unit", cfg.per_unit));
  cfg.betas = r.numbers("kinetic.betas");
  cfg.Ms = r.numbers("kinetic.Ms");
  r.guarded("kinetic.xi_max", [&] { return default_xi_edges(cfg.xi_max, cfg.per_octave, cfg.per_unit); });

  cfg.out_dir = r.text("output.dir", "out");
  cfg.snapshot_stride = r.integer("output.snapshot_stride", 0);
  if (cfg.snapshot_stride < 0) r.fail(r.line("output.snapshot_stride"), "snapshot_stride must be >= 0");
  cfg.write_snapshots = r.flag("output.write_snapshots", true);
  cfg.solver.snapshot_stride = cfg.snapshot_stride;

  if (cfg.ensemble < 1) r.fail(r.line("experiment.ensemble"), "ensemble must be >= 1");
  return cfg;
}

RunConfig parse_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_text(path);
  } catch (const ResourceError& e) {
    throw ConfigError(std::string("cannot read config: ") + e.what());
  }
  return parse_config_text(text, path.string());
}

std::string RunConfig::resolved_text() const {
  std::ostringstream os;
  os << "seed = " << seed << "\n\n[model]\npreset = " << preset << '\n';
  for (const auto& [k, v] : params) os << k << " = " << format_double(v) << '\n';
  os << "p = " << format_double(p) << '\n';
  for (const auto& [k, v] : functions) os << k << " = " << v << '\n';
  os << "nu_direction = " << format_double(nu_direction[0]) << ',' << format_double(nu_direction[1]) << '\n';
  os << "\n[grid]\nd = " << grid.d << "\nn = " << grid.n << '\n';
  os << "\n[solver]\ndt = " << format_double(solver.dt) << "\nt_end = " << format_double(solver.t_end)
     << "\nalpha = " << format_double(solver.alpha) << "\nscheme = " << to_string(solver.scheme)
     << "\ncorrection = " << to_string(solver.correction) << '\n';
  if (solver.sigma_mollify_n) os << "sigma_mollify_n = " << *solver.sigma_mollify_n << '\n';
  os << "clip = " << (solver.clip_nonlinearity_args ? "true" : "false")
     << "\ncfl_safety = " << format_double(solver.cfl_safety)
     << "\noverride_cfl = " << (solver.override_cfl ? "true" : "false") << '\n';
  os << "\n[noise]\n";
  write_noise(os, "f", noise_F, grid.d);
  write_noise(os, "g", noise_G, grid.d);
  os << "\n[initial]\n";
  write_initial(os, "", initial_a);
  write_initial(os, "b_", initial_b);
  os << "\n[experiment]\n";
  if (!experiment_kind.empty()) os << "kind = " << experiment_kind << '\n';
  os << "ensemble = " << ensemble << '\n';
  if (!ladder.empty()) {
    os << "ladder = ";
    for (std::size_t i = 0; i < ladder.size(); ++i) os << (i ? "," : "") << ladder[i].n << ':' << format_double(ladder[i].dt);
    os << '\n';
  }
  if (!schedule.empty()) {
    os << "schedule = ";
    for (std::size_t i = 0; i < schedule.size(); ++i) {
      os << (i ? "," : "") << format_double(schedule[i].alpha) << ':'
         << (schedule[i].mollify_n ? std::to_string(*schedule[i].mollify_n) : "none");
    }
    os << '\n';
  }
  for (const auto& [k, v] : thresholds) os << "threshold." << k << " = " << format_double(v) << '\n';
  os << "\n[kinetic]\nxi_max = " << format_double(xi_max) << "\nper_octave = " << per_octave
     << "\nper_unit = " << per_unit << '\n';
  if (!betas.empty()) os << "betas = " << join_numbers(betas) << '\n';
  if (!Ms.empty()) os << "Ms = " << join_numbers(Ms) << '\n';
  os << "\n[output]\ndir = " << out_dir.generic_string() << "\nsnapshot_stride = " << snapshot_stride
     << "\nwrite_snapshots = " << (write_snapshots ? "true" : "false") << '\n';
  return os.str();
}

NonlinearitySet build_nonlinearity(const RunConfig& cfg) {
  NonlinearitySet set = make_model(cfg.preset, cfg.params, cfg.functions);
  set.nu_direction = cfg.nu_direction;
  set.p = cfg.p;
  return set;
}

NoiseField build_noise(const RunConfig& cfg) { return build_spectral_noise(cfg.noise_F, cfg.grid, cfg.noise_G); }

ExperimentSpec build_experiment(const RunConfig& cfg, const std::string& fallback_kind) {
  ExperimentSpec e;
  e.kind = cfg.experiment_kind.empty() ? fallback_kind : cfg.experiment_kind;
  e.label = e.kind;
  e.preset = cfg.preset;
  e.params = cfg.params;
  e.functions = cfg.functions;
  e.d = cfg.grid.d;
  e.ladder = cfg.ladder.empty() ? std::vector<LadderLevel>{{cfg.grid.n, cfg.solver.dt}} : cfg.ladder;
  e.solver = cfg.solver;
  e.noise_F = cfg.noise_F;
  e.noise_G = cfg.noise_G;
  e.initial_a = cfg.initial_a;
  e.initial_b = cfg.initial_b;
  e.ensemble = cfg.ensemble;
  e.seed = cfg.seed;
  e.thresholds = cfg.thresholds;
  e.thresholds.emplace("xi_max", cfg.xi_max);
  e.thresholds.emplace("per_octave", cfg.per_octave);
  e.thresholds.emplace("per_unit", cfg.per_unit);
  e.schedule = cfg.schedule;
  e.p = cfg.p;
  e.betas = cfg.betas;
  e.Ms = cfg.Ms;
  return e;
}

}  // namespace dkspde
