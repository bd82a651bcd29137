#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dhd/dhd_model.hpp"

namespace dhd {

enum class StateKind { vacuum, coherent, squeezed_vacuum, thermal_squeezed };
enum class FitMethod { moments, least_squares };

/// Every run parameter. Defaults follow the reference acquisition: 5e4 pairs,
/// 100 bins on [-3, 3], detection efficiency 0.80, no electronic noise.
struct RunConfig {
  StateKind state = StateKind::thermal_squeezed;
  double s_s = 0.75;
  double s_as = 1.82;
  double angle = 0.0;
  double squeeze_db = -3.0;
  double alpha_re = 0.0;
  double alpha_im = 0.0;

  double R = 0.5;
  double theta = 0.0;
  double eta = 0.80;
  std::optional<double> clearance_db;
  std::int64_t n_samples = 50000;
  std::optional<std::uint64_t> seed;  ///< generated and recorded when absent
  Compensation compensation = Compensation::unbiased;
  int bins = 100;
  double range = 3.0;
  std::string output_dir = ".";

  FitMethod fit = FitMethod::moments;
  std::vector<double> sweep_R{0.3, 0.39, 0.46, 0.5, 0.55, 0.6};
  double fwhm_ns = 80.0;
  double dt_ns = 10.0;
  int window = 200;
  int segments = 10000;
  int verify_states = 20;
  int workers = 1;
};

/// Keys accepted by parse_config and apply_setting, in manifest order.
const std::vector<std::string>& config_keys();

/// Sets one key from its textual value; throws ErrorKind::config naming the key.
void apply_setting(RunConfig& config, std::string_view key, std::string_view value);

/// Flat `key = value` document with `#` comments. Unknown keys, malformed
/// lines and out-of-domain values are errors carrying the line number.
RunConfig parse_config(std::string_view text);
RunConfig parse_config(std::string_view text, RunConfig base);

/// Cross-key checks (state physicality) after all settings are applied.
void validate(const RunConfig& config);

/// Textual form of a key's current value, as accepted by apply_setting.
std::string setting_text(const RunConfig& config, std::string_view key);

GaussianState make_signal(const RunConfig& config);

std::string_view to_string(StateKind kind);
std::string_view to_string(Compensation mode);
std::string_view to_string(FitMethod method);

}  // namespace dhd
