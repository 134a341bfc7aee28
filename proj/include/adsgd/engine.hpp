#pragma once

#include <limits>
#include <vector>

#include "adsgd/channel.hpp"
#include "adsgd/compute.hpp"
#include "adsgd/mixing.hpp"
#include "adsgd/topology.hpp"

namespace adsgd {

enum class SchedulerMode { Async, Sync, SyncBarrier };
enum class EtaSchedule { Derived, Explicit };
enum class InitMode { Zeros, Random };

struct RunConfig {
    int device_count = 0;
    int dim = 0;
    int iterations = 0;
    double zeta = 1.0;  // consensus step size, in (0, 1]
    SchedulerMode scheduler = SchedulerMode::Async;
    double t_max = std::numeric_limits<double>::infinity();  // sync-barrier budget
    double round_period = 1.0;  // async round length, seconds
    EtaSchedule eta_schedule = EtaSchedule::Explicit;
    double eta = 0.01;  // explicit schedule: same eta for all devices
    InitMode init = InitMode::Zeros;
    double init_scale = 1.0;
    Seed seed = 0;
    bool record_gamma_trace = false;
};

struct MetricsRecord {
    int t = 0;
    double wall_clock_s = 0.0;
    double consensus_dist = 0.0;  // sum_i ||theta_i - theta_bar||^2
    double grad_norm_sq = 0.0;    // ||grad f(theta_bar)||^2, post consensus
    double loss = 0.0;            // f(theta_bar)
    double accuracy = 0.0;
    int stragglers = 0;
    bool connected = false;
    // staleness-fit scalars, recorded pre-update when enabled
    double gamma_lhs = 0.0;
    double gamma_grad_norm_sq = 0.0;
    double gamma_consensus_term = 0.0;
};

struct RunResult {
    std::vector<MetricsRecord> records;
    std::vector<Eigen::VectorXd> final_models;
    std::vector<double> max_noise_var;  // per device, per-coordinate, max over rounds
    std::vector<double> eta;            // per-device learning rates actually used
    double zeta = 0.0;
    double max_grad_sq_applied = 0.0;   // measured G^2 over applied gradients
    double initial_loss = 0.0;          // f(theta_bar(0))
};

// Full asynchronous decentralized SGD loop: local stale updates, per-round
// graph realization + Metropolis-Hastings mixing, AirComp/broadcast phase,
// consensus step. Baselines share the loop with scheduler-specific timing.
RunResult run(const RunConfig& config, const LossTask& task,
              const BaseTopology& topology, const LinkFailureModel& failure,
              const ChannelConfig& channel, const StragglerModel& straggler,
              const GradientOracle& oracle);

RunResult run_baseline_sync(RunConfig config, const LossTask& task,
                            const BaseTopology& topology,
                            const LinkFailureModel& failure,
                            const ChannelConfig& channel,
                            const StragglerModel& straggler,
                            const GradientOracle& oracle);

RunResult run_baseline_barrier(RunConfig config, const LossTask& task,
                               const BaseTopology& topology,
                               const LinkFailureModel& failure,
                               const ChannelConfig& channel,
                               const StragglerModel& straggler,
                               const GradientOracle& oracle);

}  // namespace adsgd
