// extremctl: command-line front end for mapping calibration, gain
// calibration, joint simulation, delay studies, latency analysis and the
// streaming pipeline harness.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "extremctl/delay_study.hpp"
#include "extremctl/error.hpp"
#include "extremctl/impedance.hpp"
#include "extremctl/kernels/kernels.hpp"
#include "extremctl/latency.hpp"
#include "extremctl/mapping.hpp"
#include "extremctl/plant.hpp"
#include "extremctl/serialization.hpp"
#include "extremctl/stream.hpp"

namespace {

using nlohmann::json;
using extremctl::Error;
using extremctl::ErrorCode;
namespace fs = std::filesystem;

constexpr const char* kVersion = "1.0.0";
constexpr int kExitOperation = 1;
constexpr int kExitUsage = 2;

enum class LogLevel { kError, kWarn, kInfo, kDebug };

struct Global {
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::string output_dir = ".";
  std::string log_level = "warn";
  std::string format;  // empty: the command's native format
  std::string config_path;
  json config = json::object();
  std::vector<std::string> argv;

  LogLevel level() const {
    if (log_level == "error") return LogLevel::kError;
    if (log_level == "info") return LogLevel::kInfo;
    if (log_level == "debug") return LogLevel::kDebug;
    return LogLevel::kWarn;
  }
};

Global g;

void log(LogLevel level, const std::string& msg) {
  static constexpr const char* kNames[] = {"error", "warn", "info", "debug"};
  if (level <= g.level()) std::cerr << "[" << kNames[static_cast<int>(level)] << "] " << msg << '\n';
}

std::string resolve(const std::string& path) {
  if (path.empty() || path == "-") return path;
  const fs::path p(path);
  if (p.is_absolute() || g.output_dir.empty() || g.output_dir == ".") return path;
  return (fs::path(g.output_dir) / p).string();
}

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

// Timestamps and other run-dependent facts live beside the primary output so
// the primary output itself is reproducible byte for byte.
void write_meta(const std::string& out, const std::string& command) {
  if (out.empty() || out == "-") return;
  json meta{{"command", command},
            {"argv", g.argv},
            {"seed", g.seed},
            {"version", kVersion},
            {"simd", std::string(extremctl::kernels::to_string(extremctl::kernels::active().isa))},
            {"created_utc", utc_now()}};
  extremctl::io::write_json_file(meta, out + ".meta.json");
}

// Writes to the file, or to stdout for "" and "-".
void emit(const std::string& text, const std::string& out, const std::string& command) {
  if (out.empty() || out == "-") {
    std::cout << text;
    return;
  }
  const fs::path parent = fs::path(out).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
  extremctl::io::write_text_file(text, out);
  write_meta(out, command);
  log(LogLevel::kInfo, "wrote " + out);
}

std::string format_or(const std::string& native) {
  if (g.format.empty()) return native;
  if (g.format != "json" && g.format != "csv") throw Error(ErrorCode::kInvalidArgument, "--format must be json or csv");
  return g.format;
}

std::string fmt(double v, int precision = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, v);
  return buf;
}

std::vector<double> parse_list(const std::string& text) {
  if (text.find(':') != std::string::npos) return extremctl::plant::parse_range(text);
  std::vector<double> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw Error(ErrorCode::kParse, "bad number '" + item + "' in list '" + text + "'");
    }
  }
  if (out.empty()) throw Error(ErrorCode::kParse, "empty list");
  return out;
}

// Seeds for independent stochastic stages of one command.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

extremctl::plant::PlantModel load_plant(const std::string& spec) {
  if (spec == "chain4") return extremctl::plant::reference_chain();
  return extremctl::io::parse<extremctl::plant::PlantModel>(extremctl::io::read_json_file(spec), spec);
}

extremctl::plant::TargetTiming parse_timing(const std::string& s) {
  if (s == "mid") return extremctl::plant::TargetTiming::kMidInterval;
  if (s == "lookahead") return extremctl::plant::TargetTiming::kLookahead;
  if (s == "tick") return extremctl::plant::TargetTiming::kAtTick;
  throw Error(ErrorCode::kInvalidArgument, "--timing must be mid, lookahead or tick");
}

// ---------------------------------------------------------------- commands

struct CalibrateMapArgs {
  std::string neutral, robot, out;
};

int cmd_calibrate_map(const CalibrateMapArgs& a) {
  using namespace extremctl;
  const json nj = io::read_json_file(a.neutral);
  const auto neutral = io::parse<mapping::LinkSet>(nj, a.neutral);
  const auto robot = a.robot.empty() ? mapping::reference_robot()
                                     : io::parse<mapping::RobotModel>(io::read_json_file(a.robot), a.robot);
  const auto profile = mapping::calibrate(neutral, robot);
  emit(json(profile).dump(2) + "\n", resolve(a.out), "calibrate-map");
  return 0;
}

struct MapArgs {
  std::string profile, frames, out;
};

int cmd_map(const MapArgs& a) {
  using namespace extremctl;
  const auto profile = io::parse<mapping::CalibrationProfile>(io::read_json_file(a.profile), a.profile);
  std::ifstream in(a.frames);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + a.frames + "'");
  std::string text;
  std::size_t lineno = 0;
  for (std::string line; std::getline(in, line);) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) {
      text += "\n";
      continue;
    }
    io::TimedLinks f;
    try {
      f = io::parse_frame_line(line);
    } catch (const Error& e) {
      throw Error(e.code(), a.frames + ":" + std::to_string(lineno) + ": " + e.what());
    }
    text += io::format_frame_line({f.timestamp_ns, mapping::map_frame(profile, f.links)}) + "\n";
  }
  emit(text, resolve(a.out), "map");
  return 0;
}

struct CalibrateGainsArgs {
  std::string plant = "chain4", gains, out;
  double omega_n = 10.0, zeta = 1.0;
  std::size_t envs = 16, sweeps = 3, threads = 0;
  double tol = 0.02, perturbation = 0.05, window = 10.0;
  std::string sampling = "stratified";
};

int cmd_calibrate_gains(const CalibrateGainsArgs& a) {
  using namespace extremctl;
  const auto plant = load_plant(a.plant);
  impedance::CalibrationConfig cfg;
  cfg.omega_n = a.omega_n;
  cfg.zeta = a.zeta;
  cfg.n_envs = a.envs;
  cfg.sweeps = a.sweeps;
  cfg.threads = a.threads;
  cfg.convergence_tol = a.tol;
  cfg.perturbation = a.perturbation;
  cfg.measure_window = a.window;
  json sampling = {{"sampling", a.sampling}};
  impedance::from_json(sampling, cfg);
  cfg.validate();

  const auto initial = a.gains.empty()
                           ? impedance::random_initial_gains(plant, cfg, derive_seed(g.seed, 0))
                           : io::parse<plant::GainSchedule>(io::read_json_file(a.gains), a.gains);
  log(LogLevel::kInfo, "calibrating " + std::to_string(plant.joint_count()) + " joints with " +
                           std::to_string(cfg.n_envs) + " environments");
  const auto result = impedance::calibrate_chain(plant, cfg, initial, derive_seed(g.seed, 1));
  if (!result.converged) log(LogLevel::kWarn, "calibration did not converge within the sweep budget");

  const std::string out = resolve(a.out);
  if (format_or("json") == "csv") {
    std::string csv = "joint,m_eff_kg_m2,kp_Nm_per_rad,kd_Nms_per_rad\n";
    for (const auto& e : result.estimates) {
      csv += std::to_string(e.joint) + "," + fmt(e.m_eff_mean, 9) + "," + fmt(e.kp, 9) + "," + fmt(e.kd, 9) + "\n";
    }
    emit(csv, out, "calibrate-gains");
  } else {
    json j = result;
    j["config"] = cfg;
    j["initial_gains"] = initial;
    j["seed"] = g.seed;
    emit(j.dump(2) + "\n", out, "calibrate-gains");
  }
  return 0;
}

struct SimulateArgs {
  std::string plant = "chain4", gains, ref = "sin:0.3,3.14", out, timing = "mid";
  double duration = 10.0, control_dt = 0.02, omega_n = 10.0, zeta = 1.0, eta = 0.0;
};

int cmd_simulate(const SimulateArgs& a) {
  using namespace extremctl;
  const auto plant = load_plant(a.plant);
  plant::GainSchedule gains;
  if (!a.gains.empty()) {
    gains = io::parse<plant::GainSchedule>(io::read_json_file(a.gains), a.gains);
  } else {
    const auto m = plant::mass_matrix(plant, plant.home_configuration());
    std::vector<double> diag(plant.joint_count());
    for (std::size_t j = 0; j < diag.size(); ++j) diag[j] = m(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j));
    gains = plant::GainSchedule::from_impedance(diag, a.omega_n, a.zeta, a.eta);
  }
  const auto reference = plant::parse_reference(a.ref, plant.joint_count());
  const auto episode = plant::run_episode(plant, gains, reference, a.duration, a.control_dt,
                                          {parse_timing(a.timing), true});
  const std::string out = resolve(a.out);
  if (out.empty() || out == "-") throw Error(ErrorCode::kInvalidArgument, "simulate needs --out");
  const fs::path parent = fs::path(out).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
  plant::write_episode_csv(episode, out);
  write_meta(out, "simulate");
  return 0;
}

struct DelayCurveArgs {
  std::string etas = "0:1:0.1", out, timing = "mid";
  double omega_n = 10.0, zeta = 1.0, omega = 3.14, amplitude = 0.3, control_dt = 0.02, duration = 12.0;
};

int cmd_delay_curve(const DelayCurveArgs& a) {
  using namespace extremctl;
  plant::DelayStudyConfig cfg;
  cfg.omega_n = a.omega_n;
  cfg.zeta = a.zeta;
  cfg.omega = a.omega;
  cfg.amplitude = a.amplitude;
  cfg.control_dt = a.control_dt;
  cfg.duration = a.duration;
  cfg.timing = parse_timing(a.timing);
  const auto etas = parse_list(a.etas);
  const auto curve = plant::delay_curve(cfg, etas);
  if (format_or("csv") == "json") {
    emit(json(curve).dump(2) + "\n", resolve(a.out), "delay-curve");
    return 0;
  }
  std::string csv = "eta,theory_delay_ms,phase_delay_ms,simulated_delay_ms,confidence,overshoot_rad\n";
  for (const auto& p : curve) {
    csv += fmt(p.eta, 4) + "," + fmt(p.theory_delay * 1e3, 3) + "," + fmt(p.phase_delay * 1e3, 3) + "," +
           fmt(p.simulated_delay * 1e3, 3) + "," + fmt(p.confidence, 6) + "," + fmt(p.overshoot, 9) + "\n";
  }
  emit(csv, resolve(a.out), "delay-curve");
  return 0;
}

struct LatencyArgs {
  std::string frames_a, frames_b, flows_a, flows_b, signal_a, signal_b, region_a, region_b, out;
  double fps = 60.0, max_lag = 1.0;
  std::size_t block = 8, radius = 4;
};

int cmd_latency(const LatencyArgs& a) {
  using namespace extremctl;
  latency::LatencyReport report;
  const int modes = int(!a.frames_a.empty()) + int(!a.flows_a.empty()) + int(!a.signal_a.empty());
  if (modes != 1) {
    throw Error(ErrorCode::kInvalidArgument, "give exactly one of --frames-a, --flows-a or --signal-a");
  }
  if (!a.signal_a.empty()) {
    if (a.signal_b.empty()) throw Error(ErrorCode::kInvalidArgument, "--signal-a needs --signal-b");
    report = latency::analyze_signals(latency::read_signal_csv(a.signal_a), latency::read_signal_csv(a.signal_b),
                                      a.max_lag);
  } else {
    if (a.region_a.empty() || a.region_b.empty()) {
      throw Error(ErrorCode::kInvalidArgument, "frame and flow input need --region-a and --region-b");
    }
    const auto ra = latency::RegionSpec::parse(a.region_a);
    const auto rb = latency::RegionSpec::parse(a.region_b);
    if (!a.frames_a.empty()) {
      if (a.frames_b.empty()) throw Error(ErrorCode::kInvalidArgument, "--frames-a needs --frames-b");
      latency::BlockMatchParams params;
      params.block = a.block;
      params.radius = a.radius;
      const auto fa = latency::load_frames(a.frames_a);
      const auto fb = latency::load_frames(a.frames_b);
      log(LogLevel::kInfo, "block matching " + std::to_string(fa.size() + fb.size()) + " frames");
      report = latency::analyze_frames(fa, fb, ra, rb, a.fps, params, a.max_lag);
    } else {
      if (a.flows_b.empty()) throw Error(ErrorCode::kInvalidArgument, "--flows-a needs --flows-b");
      report = latency::analyze_flows(latency::load_flows(a.flows_a), latency::load_flows(a.flows_b), ra, rb, a.fps,
                                      a.max_lag);
    }
  }
  if (report.lag.low_confidence) {
    log(LogLevel::kWarn, "low confidence: peak correlation " + fmt(report.lag.confidence, 3));
  }
  if (format_or("json") == "csv") {
    std::string csv = "t_s,a_standardized,b_aligned_standardized\n";
    for (std::size_t i = 0; i < report.overlay_t.size(); ++i) {
      csv += fmt(report.overlay_t[i], 6) + "," + fmt(report.overlay_a[i], 6) + "," + fmt(report.overlay_b[i], 6) + "\n";
    }
    emit(csv, resolve(a.out), "latency");
  } else {
    emit(json(report).dump(2) + "\n", resolve(a.out), "latency");
  }
  return 0;
}

struct PipelineArgs {
  std::string eta_sweep = "0,0.2,0.4,0.6,0.8,0.9", out, episode_dir;
  double network_delay = 0.0, jitter = 0.0, drop = 0.0, duration = 12.0, omega_n = 10.0, settle = 2.0;
};

int cmd_pipeline(const PipelineArgs& a, const CLI::App& sub) {
  using namespace extremctl;
  std::vector<stream::LatencyBudget> budgets;
  for (double eta : parse_list(a.eta_sweep)) {
    json cj = g.config;
    cj["eta"] = eta;
    if (!cj.contains("omega_n") || sub.count("--omega-n")) cj["omega_n"] = a.omega_n;
    if (sub.count("--network-delay") || !cj.contains("network_delay")) cj["network_delay"] = a.network_delay;
    if (sub.count("--jitter") || !cj.contains("jitter_std")) cj["jitter_std"] = a.jitter;
    if (sub.count("--drop") || !cj.contains("drop_prob")) cj["drop_prob"] = a.drop;
    if (sub.count("--duration") || !cj.contains("motion") || !cj["motion"].contains("duration")) {
      cj["motion"]["duration"] = a.duration;
    }
    cj["seed"] = g.seed;
    cj.erase("gains");  // the sweep owns eta
    const auto cfg = io::parse<stream::PipelineConfig>(cj, g.config_path.empty() ? "pipeline config" : g.config_path);
    const auto record = stream::run_pipeline(cfg);
    const auto budget = stream::latency_budget(record, cfg.control_rate, eta, a.settle);
    log(LogLevel::kInfo, "eta " + fmt(eta, 2) + ": control " + fmt(budget.control_ms, 1) + " ms, overall " +
                             fmt(budget.overall_ms, 1) + " ms");
    if (!a.episode_dir.empty()) {
      const fs::path dir = resolve(a.episode_dir);
      fs::create_directories(dir);
      const std::string tag = "eta_" + fmt(eta, 2);
      latency::write_signal_csv(record.human_signal(), (dir / (tag + "_human.csv")).string());
      latency::write_signal_csv(record.robot_signal(), (dir / (tag + "_robot.csv")).string());
      latency::write_signal_csv(record.target_signal(), (dir / (tag + "_target.csv")).string());
    }
    budgets.push_back(budget);
  }

  json j;
  j["budgets"] = budgets;
  if (budgets.size() >= 3) {
    j["fit"] = stream::fit_budgets(budgets);
  } else {
    log(LogLevel::kWarn, "fewer than three eta points, no fit");
  }
  if (format_or("json") == "csv") {
    std::string csv = "eta,transport_ms,hold_ms,control_ms,overall_ms,components_ms\n";
    for (const auto& b : budgets) {
      csv += fmt(b.eta, 4) + "," + fmt(b.transport_ms, 3) + "," + fmt(b.hold_ms, 3) + "," + fmt(b.control_ms, 3) + "," +
             fmt(b.overall_ms, 3) + "," + fmt(b.components_ms(), 3) + "\n";
    }
    emit(csv, resolve(a.out), "pipeline");
  } else {
    emit(j.dump(2) + "\n", resolve(a.out), "pipeline");
  }
  return 0;
}

// ---------------------------------------------------------------- config

std::string option_value(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_array()) {
    std::string s;
    for (const auto& e : v) s += (s.empty() ? "" : ",") + option_value(e);
    return s;
  }
  return v.dump();
}

// Turns config keys that name options of `app` into command-line tokens.
std::vector<std::string> config_tokens(const json& obj, const CLI::App& app) {
  std::vector<std::string> tokens;
  if (!obj.is_object()) return tokens;
  for (const auto& [key, value] : obj.items()) {
    std::string name = key;
    std::replace(name.begin(), name.end(), '_', '-');
    if (name == "config" || value.is_object() || value.is_null()) continue;
    const CLI::Option* opt = nullptr;
    try {
      opt = app.get_option_no_throw("--" + name);
    } catch (...) {
    }
    if (!opt) continue;
    if (opt->get_expected_max() == 0) {
      if (value.is_boolean() && value.get<bool>()) tokens.push_back("--" + name);
      continue;
    }
    tokens.push_back("--" + name);
    tokens.push_back(option_value(value));
  }
  return tokens;
}

std::string find_config_path(const std::vector<std::string>& args) {
  for (std::size_t i = 1; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) return args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) return args[i].substr(9);
  }
  return {};
}

void print_error(const Error& e) {
  std::cerr << json{{"error", std::string(extremctl::to_string(e.code()))}, {"message", e.what()}}.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  g.argv.assign(argv, argv + argc);

  CLI::App app{"Extremity-control teleoperation toolkit", "extremctl"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);
  app.fallthrough();  // global options may follow the subcommand
  app.set_version_flag("--version", kVersion);
  app.add_option("--seed", g.seed, "Random seed (falls back to EXTREMCTL_SEED)");
  app.add_option("--output-dir", g.output_dir, "Directory for relative output paths");
  app.add_option("--log-level", g.log_level, "error|warn|info|debug")
      ->check(CLI::IsMember({"error", "warn", "info", "debug"}));
  app.add_option("--format", g.format, "json|csv (default: per command)")->check(CLI::IsMember({"json", "csv"}));
  app.add_option("--config", g.config_path, "JSON file whose keys fill unset flags");

  CalibrateMapArgs cm;
  auto* s_cm = app.add_subcommand("calibrate-map", "One-shot mapping calibration from a neutral pose");
  s_cm->add_option("--neutral", cm.neutral, "Neutral-pose LinkSet JSON")->required();
  s_cm->add_option("--robot", cm.robot, "Robot model JSON (default: reference robot)");
  s_cm->add_option("--out", cm.out, "Profile JSON output");

  MapArgs mp;
  auto* s_map = app.add_subcommand("map", "Map human frames (JSONL) to robot link targets");
  s_map->add_option("--profile", mp.profile, "Calibration profile JSON")->required();
  s_map->add_option("--frames", mp.frames, "Human frames, one JSON LinkSet per line")->required();
  s_map->add_option("--out", mp.out, "Robot targets JSONL (default stdout)");

  CalibrateGainsArgs cg;
  auto* s_cg = app.add_subcommand("calibrate-gains", "Effective-impedance gain calibration");
  s_cg->add_option("--plant", cg.plant, "Plant JSON or 'chain4'");
  s_cg->add_option("--gains", cg.gains, "Initial gain schedule JSON (default: random from --seed)");
  s_cg->add_option("--omega-n", cg.omega_n, "Target natural frequency, rad/s");
  s_cg->add_option("--zeta", cg.zeta, "Target damping ratio");
  s_cg->add_option("--envs", cg.envs, "Parallel environments per joint");
  s_cg->add_option("--sweeps", cg.sweeps, "Sweep budget");
  s_cg->add_option("--tol", cg.tol, "Convergence tolerance on relative kp change");
  s_cg->add_option("--perturbation", cg.perturbation, "Initial displacement, rad");
  s_cg->add_option("--window", cg.window, "Measurement window, s");
  s_cg->add_option("--sampling", cg.sampling, "stratified|independent")
      ->check(CLI::IsMember({"stratified", "independent"}));
  s_cg->add_option("--threads", cg.threads, "Worker threads (0: all cores)");
  s_cg->add_option("--out", cg.out, "Result output");

  SimulateArgs sm;
  auto* s_sim = app.add_subcommand("simulate", "Run a PD + feedforward episode");
  s_sim->add_option("--plant", sm.plant, "Plant JSON or 'chain4'");
  s_sim->add_option("--gains", sm.gains, "Gain schedule JSON (default: from --omega-n/--zeta/--eta)");
  s_sim->add_option("--ref", sm.ref, "sin:A,w | ramp:r | step:v | const:v");
  s_sim->add_option("--duration", sm.duration, "Seconds");
  s_sim->add_option("--control-dt", sm.control_dt, "Control period, s");
  s_sim->add_option("--omega-n", sm.omega_n, "rad/s");
  s_sim->add_option("--zeta", sm.zeta);
  s_sim->add_option("--eta", sm.eta, "Velocity feedforward ratio");
  s_sim->add_option("--timing", sm.timing, "mid|lookahead|tick")->check(CLI::IsMember({"mid", "lookahead", "tick"}));
  s_sim->add_option("--out", sm.out, "Episode CSV")->required();

  DelayCurveArgs dc;
  auto* s_dc = app.add_subcommand("delay-curve", "Theoretical and simulated tracking delay against eta");
  s_dc->add_option("--etas", dc.etas, "start:stop:step (inclusive) or a comma list");
  s_dc->add_option("--omega-n", dc.omega_n, "rad/s");
  s_dc->add_option("--zeta", dc.zeta);
  s_dc->add_option("--omega", dc.omega, "Test sinusoid frequency, rad/s");
  s_dc->add_option("--amplitude", dc.amplitude, "rad");
  s_dc->add_option("--control-dt", dc.control_dt, "s");
  s_dc->add_option("--duration", dc.duration, "s");
  s_dc->add_option("--timing", dc.timing, "mid|lookahead|tick")->check(CLI::IsMember({"mid", "lookahead", "tick"}));
  s_dc->add_option("--out", dc.out, "Output (default stdout)");

  LatencyArgs la;
  auto* s_lat = app.add_subcommand("latency", "Lag between two motion observations");
  s_lat->add_option("--frames-a", la.frames_a, "Directory of numbered PGM frames");
  s_lat->add_option("--frames-b", la.frames_b);
  s_lat->add_option("--flows-a", la.flows_a, "Directory of numbered .flo flow fields");
  s_lat->add_option("--flows-b", la.flows_b);
  s_lat->add_option("--signal-a", la.signal_a, "CSV with t,value");
  s_lat->add_option("--signal-b", la.signal_b);
  s_lat->add_option("--region-a", la.region_a, "x,y,w,h,dx,dy");
  s_lat->add_option("--region-b", la.region_b, "x,y,w,h,dx,dy");
  s_lat->add_option("--fps", la.fps, "Frame rate, Hz");
  s_lat->add_option("--max-lag", la.max_lag, "Largest lag searched, s");
  s_lat->add_option("--block", la.block, "Block size, px");
  s_lat->add_option("--radius", la.radius, "Search radius, px");
  s_lat->add_option("--out", la.out, "Report (default stdout)");

  PipelineArgs pl;
  auto* s_pl = app.add_subcommand("pipeline", "Streaming pipeline harness and latency budget");
  s_pl->add_option("--eta-sweep", pl.eta_sweep, "Comma list or start:stop:step");
  s_pl->add_option("--network-delay", pl.network_delay, "Injected transport delay, s");
  s_pl->add_option("--jitter", pl.jitter, "Transport jitter std, s");
  s_pl->add_option("--drop", pl.drop, "Drop probability");
  s_pl->add_option("--duration", pl.duration, "s");
  s_pl->add_option("--omega-n", pl.omega_n, "rad/s");
  s_pl->add_option("--settle", pl.settle, "Seconds discarded before measuring");
  s_pl->add_option("--episode-dir", pl.episode_dir, "Write human/robot/target signal CSVs here");
  s_pl->add_option("--out", pl.out, "Budget output (default stdout)");

  std::vector<std::string> args(argv, argv + argc);
  try {
    g.config_path = find_config_path(args);
    if (!g.config_path.empty()) g.config = extremctl::io::read_json_file(g.config_path);
  } catch (const Error& e) {
    print_error(e);
    return kExitOperation;
  }

  // Config-derived tokens go first so explicit flags, parsed later, win.
  std::vector<std::string> merged{args[0]};
  const auto global_tokens = config_tokens(g.config, app);
  merged.insert(merged.end(), global_tokens.begin(), global_tokens.end());
  for (std::size_t i = 1; i < args.size(); ++i) {
    merged.push_back(args[i]);
    CLI::App* sub = nullptr;
    try {
      sub = app.get_subcommand_no_throw(args[i]);
    } catch (...) {
    }
    if (sub && !g.config.empty()) {
      auto sub_tokens = config_tokens(g.config, *sub);
      if (g.config.contains(args[i])) {
        const auto nested = config_tokens(g.config[args[i]], *sub);
        sub_tokens.insert(sub_tokens.end(), nested.begin(), nested.end());
      }
      merged.insert(merged.end(), sub_tokens.begin(), sub_tokens.end());
    }
  }

  try {
    std::vector<std::string> reversed(merged.rbegin(), merged.rend() - 1);
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return kExitUsage;
  }

  if (app.count("--seed") == 0) {
    if (const char* env = std::getenv("EXTREMCTL_SEED"); env && *env) {
      try {
        g.seed = std::stoull(env);
      } catch (const std::exception&) {
        print_error(Error(ErrorCode::kInvalidArgument, std::string("EXTREMCTL_SEED is not an integer: ") + env));
        return kExitUsage;
      }
    }
  }

  try {
    if (*s_cm) return cmd_calibrate_map(cm);
    if (*s_map) return cmd_map(mp);
    if (*s_cg) return cmd_calibrate_gains(cg);
    if (*s_sim) return cmd_simulate(sm);
    if (*s_dc) return cmd_delay_curve(dc);
    if (*s_lat) return cmd_latency(la);
    if (*s_pl) return cmd_pipeline(pl, *s_pl);
  } catch (const Error& e) {
    print_error(e);
    return kExitOperation;
  } catch (const std::exception& e) {
    print_error(Error(ErrorCode::kIo, e.what()));
    return kExitOperation;
  }
  return kExitUsage;
}
