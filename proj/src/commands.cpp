#include "dhd/commands.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <system_error>

#include <CLI11.hpp>
#include <json.hpp>

#include "dhd/counter_rng.hpp"
#include "dhd/pulse_pipeline.hpp"
#include "dhd/qfunc_recon.hpp"
#include "dhd/text_io.hpp"

namespace dhd {

using Json = nlohmann::ordered_json;

namespace {

std::uint64_t seed_of(const RunConfig& c) {
  if (!c.seed) throw Error(ErrorKind::config, "seed must be resolved before running");
  return *c.seed;
}

/// Covariance of the signal as it reaches the beamsplitter.
Eigen::Matrix2d detected_cov(const RunConfig& c) {
  return apply_loss(apply_rotation(make_signal(c), c.theta, 0), c.eta, 0).mode_cov(0);
}

DetectionSettings detection(const RunConfig& c, double R) {
  return DetectionSettings{R, c.theta, c.eta, c.clearance_db};
}

Json optional_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

/// Sorted predicted pair in dB; NaN where the relation leaves its domain.
std::pair<double, double> predicted_db(double s_s, double s_as, double R, PredictionMethod m) {
  try {
    const FitPrediction p = predict_fit_params(s_s, s_as, R, m);
    const double lo = std::min(p.s_s, p.s_as);
    const double hi = std::max(p.s_s, p.s_as);
    return {lo > 0 ? 10.0 * std::log10(lo) : NAN, hi > 0 ? 10.0 * std::log10(hi) : NAN};
  } catch (const Error&) {
    return {NAN, NAN};
  }
}

QFit fit_points(const RunConfig& c, const PhasePoints& pts, const Histogram2D& hist) {
  QFit fit = fit_gaussian_moments(pts);
  if (c.fit == FitMethod::least_squares) fit = refine_fit_least_squares(hist, fit);
  return fit;
}

Json fit_record(const QFit& fit) {
  Json j;
  j["center_x"] = fit.center(0);
  j["center_y"] = fit.center(1);
  j["cov_xx"] = fit.cov_q(0, 0);
  j["cov_xy"] = fit.cov_q(0, 1);
  j["cov_yy"] = fit.cov_q(1, 1);
  j["lambda_min"] = fit.lambda_min;
  j["lambda_max"] = fit.lambda_max;
  j["angle"] = fit.angle;
  j["sq_db"] = optional_json(fit.sq_db);
  j["asq_db"] = optional_json(fit.asq_db);
  j["n_used"] = fit.n_used;
  return j;
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

template <typename Write>
std::string render(Write&& write) {
  std::ostringstream os;
  write(os);
  return os.str();
}

}  // namespace

std::string file_tag(double R, std::uint64_t seed) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", R);
  std::string r = buf;
  if (std::abs(std::stod(r) - R) > 1e-12) r = format_number(R);
  return "R" + r + "_seed" + std::to_string(seed);
}

std::vector<std::filesystem::path> write_outputs(const std::vector<Artifact>& artifacts,
                                                 const std::filesystem::path& output_dir) {
  std::error_code ec;
  std::filesystem::create_directories(output_dir, ec);
  if (ec) throw Error(ErrorKind::io, output_dir.string() + ": " + ec.message());
  std::vector<std::filesystem::path> paths;
  for (const auto& a : artifacts) {
    const auto path = output_dir / a.filename;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::io, path.string() + ": cannot open for writing");
    out << a.content;
    out.close();
    if (!out) throw Error(ErrorKind::io, path.string() + ": write failed");
    paths.push_back(path);
  }
  return paths;
}

std::string manifest_json(const std::string& subcommand, const RunConfig& config) {
  Json j;
  j["subcommand"] = subcommand;
  j["version"] = kVersion;
  Json cfg;
  for (const auto& key : config_keys()) cfg[key] = setting_text(config, key);
  j["config"] = cfg;
  return dump(j);
}

PhasePoints read_points(std::istream& in, Compensation compensation) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::io, "points file is empty");
  const auto header = split(trim(line), ',');
  int ix = -1, iy = -1;
  for (std::size_t k = 0; k < header.size(); ++k) {
    if (trim(header[k]) == "x") ix = static_cast<int>(k);
    if (trim(header[k]) == "y") iy = static_cast<int>(k);
  }
  if (ix < 0 || iy < 0) throw Error(ErrorKind::io, "points file header lacks x and y columns");
  std::vector<double> xs, ys;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() != header.size()) {
      throw Error(ErrorKind::io, "points row " + std::to_string(row) + " has the wrong column count");
    }
    const auto x = parse_number(cells[ix]);
    const auto y = parse_number(cells[iy]);
    if (!x || !y) throw Error(ErrorKind::io, "non-numeric point in row " + std::to_string(row));
    xs.push_back(*x);
    ys.push_back(*y);
  }
  PhasePoints pts;
  pts.compensation = compensation;
  pts.points.resize(static_cast<Eigen::Index>(xs.size()), 2);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    pts.points(static_cast<Eigen::Index>(i), 0) = xs[i];
    pts.points(static_cast<Eigen::Index>(i), 1) = ys[i];
  }
  return pts;
}

RunResult run_theory(const RunConfig& c) {
  const std::string tag = file_tag(c.R, seed_of(c));
  const Eigen::Matrix2d v = detected_cov(c);
  const double s_s = v(0, 0);
  const double s_as = v(1, 1);
  RunResult result;

  std::ostringstream table;
  table << "R,r,t,xi,s_db,pred_exact_s_s,pred_exact_s_as,pred_paper_s_s,pred_paper_s_as\n";
  for (int k = 1; k <= 19; ++k) {
    const double R = 0.05 * k;
    const UnbalanceSettings u = unbalance_settings(R);
    const FitPrediction ex = predict_fit_params(s_s, s_as, R, PredictionMethod::exact);
    double pa_s = NAN, pa_as = NAN;
    try {
      const FitPrediction pa = predict_fit_params(s_s, s_as, R, PredictionMethod::paper);
      pa_s = pa.s_s;
      pa_as = pa.s_as;
    } catch (const Error&) {
    }
    table << format_number(R) << ',' << format_number(u.r) << ',' << format_number(u.t) << ','
          << format_number(u.xi) << ',' << format_number(u.s_db) << ',' << format_number(ex.s_s)
          << ',' << format_number(ex.s_as) << ',' << format_number(pa_s) << ','
          << format_number(pa_as) << '\n';
  }
  result.artifacts.push_back({"theory_table_" + tag + ".csv", table.str()});

  const PhaseGrid grid{c.bins, c.range};
  const Eigen::MatrixXd surface = theory_q_grid(s_s, s_as, c.R, grid);
  Histogram2D as_hist;
  as_hist.grid = grid;
  as_hist.density = surface;
  result.artifacts.push_back(
      {"theory_qgrid_" + tag + ".csv", render([&](std::ostream& os) { write_histogram(os, as_hist); })});

  const UnbalanceSettings u = unbalance_settings(c.R);
  Json j;
  j["R"] = u.R;
  j["r"] = u.r;
  j["t"] = u.t;
  j["xi"] = u.xi;
  j["s_db"] = u.s_db;
  j["detected_s_s"] = s_s;
  j["detected_s_as"] = s_as;
  const auto [ex_sq, ex_asq] = predicted_db(s_s, s_as, c.R, PredictionMethod::exact);
  const auto [pa_sq, pa_asq] = predicted_db(s_s, s_as, c.R, PredictionMethod::paper);
  j["pred_exact_sq_db"] = ex_sq;
  j["pred_exact_asq_db"] = ex_asq;
  j["pred_paper_sq_db"] = pa_sq;
  j["pred_paper_asq_db"] = pa_asq;
  try {
    j["unsqueezing_R_exact"] = unsqueezing_reflectivity(s_s, s_as, PredictionMethod::exact);
    j["unsqueezing_R_paper"] = unsqueezing_reflectivity(s_s, s_as, PredictionMethod::paper);
    j["semidifference_db"] = squeezing_semidifference_db(s_s, s_as);
  } catch (const Error&) {
    j["unsqueezing_R_exact"] = nullptr;
    j["unsqueezing_R_paper"] = nullptr;
    j["semidifference_db"] = nullptr;
  }
  j["grid_integral"] = surface.sum() * grid.cell_area();
  result.artifacts.push_back({"theory_" + tag + ".json", dump(j)});
  result.artifacts.push_back({"theory_" + tag + ".manifest.json", manifest_json("theory", c)});
  result.summary = "theory: R=" + format_number(c.R) + " s_db=" + format_number(u.s_db);
  return result;
}

RunResult run_simulate(const RunConfig& c) {
  const std::uint64_t seed = seed_of(c);
  const std::string tag = file_tag(c.R, seed);
  const DhdJoint joint = dhd_joint(make_signal(c), detection(c, c.R));
  const SampleBatch batch = sample_dhd(joint, c.n_samples, seed, c.workers);
  const PhasePoints pts = compensate(batch, c.compensation);

  std::ostringstream csv;
  csv << "q1,p2,x,y\n";
  for (Eigen::Index i = 0; i < batch.pairs.rows(); ++i) {
    csv << format_number(batch.pairs(i, 0)) << ',' << format_number(batch.pairs(i, 1)) << ','
        << format_number(pts.points(i, 0)) << ',' << format_number(pts.points(i, 1)) << '\n';
  }
  RunResult result;
  result.artifacts.push_back({"samples_" + tag + ".csv", csv.str()});
  result.artifacts.push_back({"simulate_" + tag + ".manifest.json", manifest_json("simulate", c)});
  result.summary = "simulate: " + std::to_string(c.n_samples) + " pairs, R=" + format_number(c.R);
  return result;
}

RunResult run_reconstruct(const RunConfig& c, const std::filesystem::path& points_file) {
  std::ifstream in(points_file);
  if (!in) throw Error(ErrorKind::io, points_file.string() + ": cannot open for reading");
  const PhasePoints pts = read_points(in, c.compensation);
  const std::string tag = file_tag(c.R, seed_of(c));
  const Histogram2D hist = histogram2d(pts, c.bins, c.range);
  const QFit fit = fit_points(c, pts, hist);

  Json j = fit_record(fit);
  j["fit_method"] = std::string(to_string(c.fit));
  j["n_total"] = hist.n_total;
  j["n_in_range"] = hist.n_in_range;
  if (c.eta > 0.0 && c.eta < 1.0) {
    // Separate, explicitly labelled estimate; the raw values above are primary.
    auto corrected = [&](double lambda) -> Json {
      try {
        return loss_corrected_db(lambda, c.eta);
      } catch (const Error&) {
        return nullptr;
      }
    };
    j["loss_corrected_eta"] = c.eta;
    j["loss_corrected_sq_db"] = corrected(fit.lambda_min);
    j["loss_corrected_asq_db"] = corrected(fit.lambda_max);
  }
  RunResult result;
  result.artifacts.push_back(
      {"histogram_" + tag + ".csv", render([&](std::ostream& os) { write_histogram(os, hist); })});
  result.artifacts.push_back({"fit_" + tag + ".json", dump(j)});
  result.artifacts.push_back({"reconstruct_" + tag + ".manifest.json", manifest_json("reconstruct", c)});
  std::ostringstream s;
  s << "reconstruct: lambda_min=" << format_number(fit.lambda_min)
    << " lambda_max=" << format_number(fit.lambda_max);
  result.summary = s.str();
  return result;
}

RunResult run_sweep(const RunConfig& c) {
  const std::uint64_t seed = seed_of(c);
  const GaussianState signal = make_signal(c);
  const Eigen::Matrix2d v = detected_cov(c);
  std::ostringstream csv;
  csv << "R,fit_sq_db,fit_asq_db,pred_exact_sq_db,pred_exact_asq_db,pred_paper_sq_db,pred_paper_asq_db\n";
  for (const double R : c.sweep_R) {
    const SampleBatch batch = sample_dhd(dhd_joint(signal, detection(c, R)), c.n_samples, seed, c.workers);
    const PhasePoints pts = compensate(batch, c.compensation);
    const QFit fit = fit_points(c, pts, histogram2d(pts, c.bins, c.range));
    const auto [ex_sq, ex_asq] = predicted_db(v(0, 0), v(1, 1), R, PredictionMethod::exact);
    const auto [pa_sq, pa_asq] = predicted_db(v(0, 0), v(1, 1), R, PredictionMethod::paper);
    csv << format_number(R) << ',' << format_number(fit.sq_db.value_or(NAN)) << ','
        << format_number(fit.asq_db.value_or(NAN)) << ',' << format_number(ex_sq) << ','
        << format_number(ex_asq) << ',' << format_number(pa_sq) << ',' << format_number(pa_asq)
        << '\n';
  }
  RunResult result;
  const std::string tag = "seed" + std::to_string(seed);
  result.artifacts.push_back({"sweep_" + tag + ".csv", csv.str()});
  result.artifacts.push_back({"sweep_" + tag + ".manifest.json", manifest_json("sweep", c)});
  result.summary = "sweep: " + std::to_string(c.sweep_R.size()) + " reflectivities";
  return result;
}

RunResult run_pulses(const RunConfig& c, bool write_trace_file) {
  const std::uint64_t seed = seed_of(c);
  const std::string tag = file_tag(c.R, seed);
  const DhdJoint joint = dhd_joint(make_signal(c), DetectionSettings{c.R, c.theta, c.eta, std::nullopt});
  const Eigen::VectorXd values = sample_dhd(joint, c.segments, seed, c.workers).pairs.col(0);
  const TemporalMode mode = make_temporal_mode(c.fwhm_ns, c.dt_ns, c.window);
  const TraceSet traces = synthesize_traces(values, mode, c.clearance_db, seed);
  const Eigen::VectorXd projected = project_traces(traces, mode);
  const TemporalMode recovered = extract_mode_pca(traces);
  const double overlap = mode_overlap(mode, recovered);

  auto variance = [](const Eigen::VectorXd& x) {
    return (x.array() - x.mean()).square().sum() / static_cast<double>(x.size() - 1);
  };
  Json j;
  j["segments"] = c.segments;
  j["window"] = c.window;
  j["dt_ns"] = c.dt_ns;
  j["fwhm_ns"] = c.fwhm_ns;
  j["clearance_db"] = optional_json(c.clearance_db);
  j["mode_overlap"] = overlap;
  j["var_values"] = variance(values);
  j["var_projected"] = variance(projected);
  j["var_projected_noise"] = variance(projected - values);
  j["expected_noise_variance"] = c.clearance_db ? electronic_noise_variance(*c.clearance_db) : 0.0;

  std::ostringstream modes;
  modes << "t_ns,psi_true,psi_pca\n";
  for (Eigen::Index k = 0; k < mode.size(); ++k) {
    modes << format_number(static_cast<double>(k) * c.dt_ns) << ',' << format_number(mode.psi()(k))
          << ',' << format_number(recovered.psi()(k)) << '\n';
  }
  RunResult result;
  result.artifacts.push_back({"pulses_" + tag + ".json", dump(j)});
  result.artifacts.push_back({"pulses_mode_" + tag + ".csv", modes.str()});
  if (write_trace_file) {
    result.artifacts.push_back(
        {"pulses_traces_" + tag + ".csv", render([&](std::ostream& os) { write_traces(os, traces); })});
  }
  result.artifacts.push_back({"pulses_" + tag + ".manifest.json", manifest_json("pulses", c)});
  result.summary = "pulses: mode overlap " + format_number(overlap);
  return result;
}

RunResult run_verify(const RunConfig& c) {
  const std::uint64_t seed = seed_of(c);
  const std::string tag = file_tag(c.R, seed);
  Json cases = Json::array();
  bool all = true;
  double worst = 0.0;
  for (int k = 0; k < c.verify_states; ++k) {
    const GaussianState state = random_gaussian_state(seed, static_cast<std::uint64_t>(k));
    const PovmCheck check = check_povm_equivalence(state, c.R, c.n_samples,
                                                   mix64(seed + static_cast<std::uint64_t>(k)), 4.0,
                                                   c.workers);
    Json row;
    row["index"] = k;
    row["max_abs_z"] = check.max_abs_z;
    row["z_scores"] = std::vector<double>(check.z_scores.data(), check.z_scores.data() + 5);
    row["passed"] = check.passed;
    cases.push_back(row);
    all = all && check.passed;
    worst = std::max(worst, check.max_abs_z);
  }
  Json j;
  j["R"] = c.R;
  j["n"] = c.n_samples;
  j["states"] = c.verify_states;
  j["z_threshold"] = 4.0;
  j["max_abs_z"] = worst;
  j["passed"] = all;
  j["cases"] = cases;
  RunResult result;
  result.ok = all;
  result.artifacts.push_back({"verify_" + tag + ".json", dump(j)});
  result.artifacts.push_back({"verify_" + tag + ".manifest.json", manifest_json("verify", c)});
  result.summary = std::string("verify: ") + (all ? "pass" : "FAIL") +
                   " (max |z| = " + format_number(worst) + " over " +
                   std::to_string(c.verify_states) + " states)";
  return result;
}

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Unbalanced double homodyne detection: simulation and Q-function reconstruction", "dhd"};
  app.require_subcommand(1, 1);
  app.fallthrough();
  std::string config_path;
  std::string out_dir;
  app.add_option("--config", config_path, "flat key = value configuration file");
  app.add_option("--out", out_dir, "output directory");
  std::map<std::string, std::string> overrides;
  for (const auto& key : config_keys()) {
    if (key == "output_dir") continue;
    const std::string names = key == "R" ? "-R,--R" : "--" + key;
    app.add_option(names, overrides[key], "override '" + key + "'");
  }

  std::string points_file;
  bool write_traces_file = false;
  auto* theory = app.add_subcommand("theory", "unbalance tables and theory Q surfaces");
  auto* simulate = app.add_subcommand("simulate", "sample paired homodyne outcomes");
  auto* reconstruct = app.add_subcommand("reconstruct", "histogram and Gaussian fit of a points file");
  reconstruct->add_option("--input", points_file, "CSV with x,y columns")->required();
  auto* sweep = app.add_subcommand("sweep", "fitted and predicted squeezing across reflectivities");
  auto* pulses = app.add_subcommand("pulses", "temporal-mode synthesis, projection and PCA");
  pulses->add_flag("--traces", write_traces_file, "also write the synthesised trace file");
  auto* verify = app.add_subcommand("verify", "POVM moment-equivalence self-test");

  std::vector<std::string> argv_rev(args.rbegin(), args.rend());
  try {
    app.parse(argv_rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: usage_error: " << e.what() << '\n' << app.help();
    return e.get_exit_code() == 0 ? 1 : e.get_exit_code();
  }

  try {
    RunConfig config;
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) throw Error(ErrorKind::io, config_path + ": cannot open for reading");
      std::stringstream buf;
      buf << in.rdbuf();
      config = parse_config(buf.str());
    }
    for (const auto& key : config_keys()) {
      const auto it = overrides.find(key);
      if (it != overrides.end() && !it->second.empty()) apply_setting(config, key, it->second);
    }
    if (!out_dir.empty()) config.output_dir = out_dir;
    if (!config.seed) config.seed = (std::uint64_t{std::random_device{}()} << 32) | std::random_device{}();
    validate(config);

    RunResult result;
    if (*theory) result = run_theory(config);
    else if (*simulate) result = run_simulate(config);
    else if (*reconstruct) result = run_reconstruct(config, points_file);
    else if (*sweep) result = run_sweep(config);
    else if (*pulses) result = run_pulses(config, write_traces_file);
    else if (*verify) result = run_verify(config);

    for (const auto& path : write_outputs(result.artifacts, config.output_dir)) {
      out << path.string() << '\n';
    }
    out << result.summary << '\n';
    if (!result.ok) {
      err << "error: verification_failed: " << result.summary << '\n';
      return 3;
    }
    return 0;
  } catch (const Error& e) {
    err << "error: " << to_string(e.kind()) << ": " << e.what() << '\n';
    return 2;
  }
}

}  // namespace dhd
