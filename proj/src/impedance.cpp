#include "extremctl/impedance.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <numeric>
#include <random>
#include <thread>

#include "extremctl/error.hpp"

namespace extremctl::impedance {
namespace {

constexpr double kTwoPi = 2.0 * M_PI;
constexpr std::size_t kSkipCycles = 1;
constexpr std::size_t kAveragedCycles = 5;

// Runs fn(i) for i in [0, count) on up to `threads` workers. The first
// exception (by index) is rethrown after all workers finish.
template <typename Fn>
void parallel_for(std::size_t count, std::size_t threads, Fn&& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, count);
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace

void CalibrationConfig::validate() const {
  auto require = [](bool ok, const char* msg) {
    if (!ok) throw Error(ErrorCode::kConfigInvalid, msg);
  };
  require(n_envs >= 2, "calibration needs at least two environments");
  require(perturbation > 0.0, "perturbation must be positive");
  require(kp_low > 0.0 && kp_low < kp_high, "kp sample range must satisfy 0 < low < high");
  require(measure_window > 0.0, "measure window must be positive");
  require(sweeps >= 1, "at least one sweep is required");
  require(omega_n >= 0.0 && zeta >= 0.0, "omega_n and zeta must be non-negative");
}

PeriodMeasurement measure_period(const PlantModel& plant, const GainSchedule& gains,
                                 std::size_t joint, double perturbation, double window) {
  const std::size_t n = plant.joint_count();
  if (joint >= n) throw Error(ErrorCode::kInvalidArgument, "joint index out of range");

  GainSchedule local = gains;
  local.joints[joint].kd = 0.0;

  const std::vector<double> home = plant.home_configuration();
  std::vector<plant::JointState> states = plant::initial_states(plant, home);
  states[joint].q += perturbation;
  states[joint].filtered_q = states[joint].q;
  const plant::ControlTargets targets{home, std::vector<double>(n, 0.0), plant.physics_dt};

  const double dt = plant.physics_dt;
  const auto steps = static_cast<std::size_t>(std::ceil(window / dt));
  const std::size_t wanted = kSkipCycles + kAveragedCycles + 1;

  PeriodMeasurement out;
  double prev = states[joint].q - home[joint];
  for (std::size_t i = 1; i <= steps; ++i) {
    plant::step_in_place(plant, states, targets, local);
    const double cur = states[joint].q - home[joint];
    if ((prev > 0.0) != (cur > 0.0)) {
      ++out.crossings;
      if (prev > 0.0) {
        const double frac = prev / (prev - cur);
        out.down_crossings.push_back((static_cast<double>(i - 1) + frac) * dt);
        if (out.down_crossings.size() >= wanted) break;
      }
    }
    prev = cur;
  }

  if (out.crossings < 3 || out.down_crossings.size() < 2) {
    throw Error(ErrorCode::kNoOscillation,
                "joint " + std::to_string(joint) + " produced " + std::to_string(out.crossings) +
                    " zero crossings in " + std::to_string(window) + " s");
  }
  const auto& c = out.down_crossings;
  const std::size_t first = c.size() > kSkipCycles + 1 ? kSkipCycles : 0;
  out.period = (c.back() - c[first]) / static_cast<double>(c.size() - 1 - first);
  return out;
}

double estimate_meff(double kp, double period) {
  if (!(period > 0.0)) throw Error(ErrorCode::kInvalidArgument, "period must be positive");
  return kp * period * period / (kTwoPi * kTwoPi);
}

PdGains update_gains(double m_eff, double omega_n, double zeta) {
  return {m_eff * omega_n * omega_n, 2.0 * zeta * m_eff * omega_n};
}

std::vector<std::size_t> sweep_order(const PlantModel& plant) {
  const std::size_t n = plant.joint_count();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  if (plant.kind == plant::PlantKind::kPlanarChain) {
    // Depth of joint i in a serial chain is i + 1.
    std::reverse(order.begin(), order.end());
  }
  return order;
}

GainSchedule random_initial_gains(const PlantModel& plant, const CalibrationConfig& config,
                                  std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> log_scale(std::log(0.2), std::log(5.0));
  std::uniform_real_distribution<double> damping(0.5, 1.5);
  const Eigen::MatrixXd mass = plant::mass_matrix(plant, plant.home_configuration());
  const double wn = config.omega_n > 0.0 ? config.omega_n : 10.0;
  GainSchedule out;
  for (std::size_t j = 0; j < plant.joint_count(); ++j) {
    const double m = mass(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j));
    const double kp = m * wn * wn * std::exp(log_scale(rng));
    const double kd = 2.0 * damping(rng) * std::sqrt(kp * m);
    out.joints.push_back({kp, kd, 0.0, wn, config.zeta, true});
  }
  return out;
}

ImpedanceResult calibrate_chain(const PlantModel& plant, const CalibrationConfig& config,
                                const GainSchedule& initial, std::uint64_t seed) {
  plant.validate();
  config.validate();
  const std::size_t n = plant.joint_count();
  if (initial.size() != n) {
    throw Error(ErrorCode::kConfigInvalid, "initial gain count does not match plant");
  }
  for (const auto& g : initial.joints) {
    if (!(g.kp > 0.0)) throw Error(ErrorCode::kConfigInvalid, "initial gains must be positive");
  }

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::size_t envs = config.n_envs;
  const double span = config.kp_high - config.kp_low;

  ImpedanceResult result;
  result.gains = initial;
  result.estimates.resize(n);
  const std::vector<std::size_t> order = sweep_order(plant);

  for (std::size_t sweep = 0; sweep < config.sweeps; ++sweep) {
    const std::vector<double> kp_before = [&] {
      std::vector<double> v;
      for (const auto& g : result.gains.joints) v.push_back(g.kp);
      return v;
    }();

    for (std::size_t joint : order) {
      const double kp_nominal = result.gains.joints[joint].kp;
      std::vector<double> fractions(envs);
      if (config.sampling == Sampling::kStratified) {
        std::vector<std::size_t> strata(envs);
        std::iota(strata.begin(), strata.end(), 0);
        std::shuffle(strata.begin(), strata.end(), rng);
        for (std::size_t e = 0; e < envs; ++e) {
          fractions[e] = (static_cast<double>(strata[e]) + unit(rng)) / static_cast<double>(envs);
        }
      } else {
        for (double& f : fractions) f = unit(rng);
      }

      JointEstimate est;
      est.joint = joint;
      est.kp_samples.resize(envs);
      est.periods.resize(envs);
      est.m_eff_samples.resize(envs);
      for (std::size_t e = 0; e < envs; ++e) {
        est.kp_samples[e] = kp_nominal * (config.kp_low + span * fractions[e]);
      }

      parallel_for(envs, config.threads, [&](std::size_t e) {
        GainSchedule env_gains = result.gains;
        env_gains.joints[joint].kp = est.kp_samples[e];
        const PeriodMeasurement m =
            measure_period(plant, env_gains, joint, config.perturbation, config.measure_window);
        est.periods[e] = m.period;
        est.m_eff_samples[e] = estimate_meff(est.kp_samples[e], m.period);
      });

      // Fixed-order reduction keeps the mean independent of completion order.
      est.m_eff_mean = std::accumulate(est.m_eff_samples.begin(), est.m_eff_samples.end(), 0.0) /
                       static_cast<double>(envs);
      const PdGains pd = update_gains(est.m_eff_mean, config.omega_n, config.zeta);
      est.kp = pd.kp;
      est.kd = pd.kd;
      result.gains.joints[joint].kp = pd.kp;
      result.gains.joints[joint].kd = pd.kd;
      result.gains.joints[joint].omega_n = config.omega_n;
      result.gains.joints[joint].zeta = config.zeta;
      result.estimates[joint] = std::move(est);
    }

    SweepRecord record;
    record.sweep = sweep;
    for (std::size_t j = 0; j < n; ++j) {
      record.kp.push_back(result.gains.joints[j].kp);
      record.kd.push_back(result.gains.joints[j].kd);
      record.m_eff.push_back(result.estimates[j].m_eff_mean);
      const double change = std::abs(record.kp[j] - kp_before[j]) / kp_before[j];
      record.max_relative_change = std::max(record.max_relative_change, change);
    }
    const bool settled = record.max_relative_change < config.convergence_tol;
    result.history.push_back(std::move(record));
    if (settled) {
      result.converged = true;
      break;
    }
  }
  return result;
}

}  // namespace extremctl::impedance
