#include "dhd/run_config.hpp"

#include <charconv>
#include <cmath>
#include <string>

#include "dhd/text_io.hpp"

namespace dhd {

std::string_view to_string(StateKind kind) {
  switch (kind) {
    case StateKind::vacuum: return "vacuum";
    case StateKind::coherent: return "coherent";
    case StateKind::squeezed_vacuum: return "squeezed_vacuum";
    case StateKind::thermal_squeezed: return "thermal_squeezed";
  }
  return "?";
}

std::string_view to_string(Compensation mode) {
  return mode == Compensation::unbiased ? "unbiased" : "povm";
}

std::string_view to_string(FitMethod method) {
  return method == FitMethod::moments ? "moments" : "least_squares";
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys{
      "state",  "s_s",       "s_as",     "angle",         "squeeze_db", "alpha_re",
      "alpha_im", "R",       "theta",    "eta",           "clearance_db", "n_samples",
      "seed",   "compensation", "bins",  "range",         "output_dir", "fit",
      "sweep_R", "fwhm_ns",  "dt_ns",    "window",        "segments",   "verify_states",
      "workers"};
  return keys;
}

namespace {

[[noreturn]] void reject(std::string_view key, const std::string& why) {
  throw Error(ErrorKind::config, "key '" + std::string(key) + "': " + why);
}

double number(std::string_view key, std::string_view value) {
  const auto v = parse_number(value);
  if (!v || !std::isfinite(*v)) reject(key, "expected a finite number, got '" + std::string(value) + "'");
  return *v;
}

std::int64_t integer(std::string_view key, std::string_view value) {
  value = trim(value);
  std::int64_t v = 0;
  const auto res = std::from_chars(value.data(), value.data() + value.size(), v);
  if (res.ec != std::errc{} || res.ptr != value.data() + value.size() || value.empty()) {
    reject(key, "expected an integer, got '" + std::string(value) + "'");
  }
  return v;
}

void require(bool ok, std::string_view key, const std::string& why) {
  if (!ok) reject(key, "out of domain: " + why);
}

}  // namespace

void apply_setting(RunConfig& c, std::string_view key, std::string_view raw) {
  const std::string_view value = trim(raw);
  if (key == "state") {
    if (value == "vacuum") c.state = StateKind::vacuum;
    else if (value == "coherent") c.state = StateKind::coherent;
    else if (value == "squeezed_vacuum") c.state = StateKind::squeezed_vacuum;
    else if (value == "thermal_squeezed") c.state = StateKind::thermal_squeezed;
    else reject(key, "expected vacuum|coherent|squeezed_vacuum|thermal_squeezed");
  } else if (key == "s_s") {
    c.s_s = number(key, value);
    require(c.s_s > 0.0, key, "must be positive");
  } else if (key == "s_as") {
    c.s_as = number(key, value);
    require(c.s_as > 0.0, key, "must be positive");
  } else if (key == "angle") {
    c.angle = number(key, value);
  } else if (key == "squeeze_db") {
    c.squeeze_db = number(key, value);
  } else if (key == "alpha_re") {
    c.alpha_re = number(key, value);
  } else if (key == "alpha_im") {
    c.alpha_im = number(key, value);
  } else if (key == "R") {
    c.R = number(key, value);
    require(c.R > 0.0 && c.R < 1.0, key, "reflectivity must lie in (0, 1)");
  } else if (key == "theta") {
    c.theta = number(key, value);
  } else if (key == "eta") {
    c.eta = number(key, value);
    require(c.eta >= 0.0 && c.eta <= 1.0, key, "efficiency must lie in [0, 1]");
  } else if (key == "clearance_db") {
    if (value == "none") {
      c.clearance_db.reset();
    } else {
      c.clearance_db = number(key, value);
      require(*c.clearance_db >= 0.0, key, "clearance must be non-negative");
    }
  } else if (key == "n_samples") {
    c.n_samples = integer(key, value);
    require(c.n_samples >= 1, key, "at least one sample");
  } else if (key == "seed") {
    if (value == "auto") {
      c.seed.reset();
      return;
    }
    std::uint64_t v = 0;
    const auto res = std::from_chars(value.data(), value.data() + value.size(), v);
    if (res.ec != std::errc{} || res.ptr != value.data() + value.size() || value.empty()) {
      reject(key, "expected an unsigned integer or 'auto'");
    }
    c.seed = v;
  } else if (key == "compensation") {
    if (value == "unbiased") c.compensation = Compensation::unbiased;
    else if (value == "povm") c.compensation = Compensation::povm;
    else reject(key, "expected unbiased|povm");
  } else if (key == "bins") {
    const auto v = integer(key, value);
    require(v >= 2 && v <= 100000, key, "bins must lie in [2, 100000]");
    c.bins = static_cast<int>(v);
  } else if (key == "range") {
    c.range = number(key, value);
    require(c.range > 0.0, key, "range must be positive");
  } else if (key == "output_dir") {
    require(!value.empty(), key, "empty path");
    c.output_dir = std::string(value);
  } else if (key == "fit") {
    if (value == "moments") c.fit = FitMethod::moments;
    else if (value == "least_squares") c.fit = FitMethod::least_squares;
    else reject(key, "expected moments|least_squares");
  } else if (key == "sweep_R") {
    std::vector<double> grid;
    for (auto part : split(value, ',')) {
      const double R = number(key, part);
      require(R > 0.0 && R < 1.0, key, "every reflectivity must lie in (0, 1)");
      grid.push_back(R);
    }
    c.sweep_R = std::move(grid);
  } else if (key == "fwhm_ns") {
    c.fwhm_ns = number(key, value);
    require(c.fwhm_ns > 0.0, key, "must be positive");
  } else if (key == "dt_ns") {
    c.dt_ns = number(key, value);
    require(c.dt_ns > 0.0, key, "must be positive");
  } else if (key == "window") {
    const auto v = integer(key, value);
    require(v >= 1 && v <= 1000000, key, "window must lie in [1, 1e6]");
    c.window = static_cast<int>(v);
  } else if (key == "segments") {
    const auto v = integer(key, value);
    require(v >= 2 && v <= 100000000, key, "segments must lie in [2, 1e8]");
    c.segments = static_cast<int>(v);
  } else if (key == "verify_states") {
    const auto v = integer(key, value);
    require(v >= 1 && v <= 100000, key, "verify_states must lie in [1, 1e5]");
    c.verify_states = static_cast<int>(v);
  } else if (key == "workers") {
    const auto v = integer(key, value);
    require(v >= 1 && v <= 256, key, "workers must lie in [1, 256]");
    c.workers = static_cast<int>(v);
  } else {
    throw Error(ErrorKind::config, "unknown key '" + std::string(key) + "'");
  }
}

RunConfig parse_config(std::string_view text) { return parse_config(text, RunConfig{}); }

RunConfig parse_config(std::string_view text, RunConfig config) {
  int line_no = 0;
  for (auto line : split(text, '\n')) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = "line " + std::to_string(line_no) + ": ";
    if (eq == std::string_view::npos) {
      throw Error(ErrorKind::config, where + "expected 'key = value'");
    }
    const auto key = trim(line.substr(0, eq));
    if (key.empty()) throw Error(ErrorKind::config, where + "missing key");
    try {
      apply_setting(config, key, line.substr(eq + 1));
    } catch (const Error& e) {
      throw Error(ErrorKind::config, where + e.what());
    }
  }
  return config;
}

void validate(const RunConfig& config) {
  try {
    (void)make_signal(config);
  } catch (const Error& e) {
    throw Error(ErrorKind::config, std::string("state parameters: ") + e.what());
  }
}

std::string setting_text(const RunConfig& c, std::string_view key) {
  if (key == "state") return std::string(to_string(c.state));
  if (key == "s_s") return format_number(c.s_s);
  if (key == "s_as") return format_number(c.s_as);
  if (key == "angle") return format_number(c.angle);
  if (key == "squeeze_db") return format_number(c.squeeze_db);
  if (key == "alpha_re") return format_number(c.alpha_re);
  if (key == "alpha_im") return format_number(c.alpha_im);
  if (key == "R") return format_number(c.R);
  if (key == "theta") return format_number(c.theta);
  if (key == "eta") return format_number(c.eta);
  if (key == "clearance_db") return c.clearance_db ? format_number(*c.clearance_db) : "none";
  if (key == "n_samples") return std::to_string(c.n_samples);
  if (key == "seed") return c.seed ? std::to_string(*c.seed) : "auto";
  if (key == "compensation") return std::string(to_string(c.compensation));
  if (key == "bins") return std::to_string(c.bins);
  if (key == "range") return format_number(c.range);
  if (key == "output_dir") return c.output_dir;
  if (key == "fit") return std::string(to_string(c.fit));
  if (key == "sweep_R") {
    std::string out;
    for (std::size_t i = 0; i < c.sweep_R.size(); ++i) {
      if (i) out += ',';
      out += format_number(c.sweep_R[i]);
    }
    return out;
  }
  if (key == "fwhm_ns") return format_number(c.fwhm_ns);
  if (key == "dt_ns") return format_number(c.dt_ns);
  if (key == "window") return std::to_string(c.window);
  if (key == "segments") return std::to_string(c.segments);
  if (key == "verify_states") return std::to_string(c.verify_states);
  if (key == "workers") return std::to_string(c.workers);
  throw Error(ErrorKind::config, "unknown key '" + std::string(key) + "'");
}

GaussianState make_signal(const RunConfig& c) {
  switch (c.state) {
    case StateKind::vacuum:
      return make_state<double>(VacuumParams<double>{});
    case StateKind::coherent:
      return make_state<double>(CoherentParams<double>{{c.alpha_re, c.alpha_im}});
    case StateKind::squeezed_vacuum:
      return make_state<double>(SqueezedVacuumParams<double>{c.squeeze_db, c.angle});
    case StateKind::thermal_squeezed:
      return make_state<double>(SqueezedThermalSpec<double>{c.s_s, c.s_as, c.angle});
  }
  throw Error(ErrorKind::config, "unknown state kind");
}

}  // namespace dhd
