#include "adsgd/engine.hpp"

#include <cmath>
#include <stdexcept>

namespace adsgd {

namespace {

constexpr std::uint64_t kGraphStream = 0x6172u;
constexpr std::uint64_t kChanStream = 0xc4a17u;
constexpr std::uint64_t kOracleStream = 0x06ac1eu;
constexpr std::uint64_t kStraggleStream = 0x57a6u;
constexpr std::uint64_t kInitStream = 0x1217u;

void validate(const RunConfig& c, const LossTask& task,
              const StragglerModel& straggler) {
    if (c.device_count < 1 || c.dim < 1 || c.iterations < 1) {
        throw std::invalid_argument("run config needs positive m, d, T");
    }
    if (c.zeta <= 0.0 || c.zeta > 1.0) {
        throw std::invalid_argument("zeta must lie in (0, 1]");
    }
    if (task.device_count != c.device_count || task.dim != c.dim) {
        throw std::invalid_argument("task dimensions do not match run config");
    }
    if (static_cast<int>(straggler.rho.size()) != c.device_count) {
        throw std::invalid_argument("straggler rho vector size must equal m");
    }
    if (c.scheduler == SchedulerMode::SyncBarrier && c.t_max <= straggler.t_min) {
        throw std::invalid_argument(
            "sync-barrier requires t_max > t_min; every device would be discarded");
    }
}

}  // namespace

RunResult run(const RunConfig& config, const LossTask& task,
              const BaseTopology& topology, const LinkFailureModel& failure,
              const ChannelConfig& channel, const StragglerModel& straggler,
              const GradientOracle& oracle) {
    validate(config, task, straggler);
    const int m = config.device_count;
    const int d = config.dim;
    const int T = config.iterations;
    const Seed seed = config.seed;

    RunConfig cfg = config;
    std::vector<double> eta(m, cfg.eta);
    if (cfg.eta_schedule == EtaSchedule::Derived) {
        eta = equalized_learning_rates(straggler.rho, task.smoothness, T);
        cfg.zeta = 1.0 / std::pow(double(T), 3.0 / 8.0);
    }

    const auto base_graph = build_base(topology);
    if (base_graph.node_count != m) {
        throw std::invalid_argument("topology node count does not match m");
    }

    std::vector<DeviceState> states(m);
    {
        auto rng = make_rng(seed, kInitStream);
        std::normal_distribution<double> gauss(0.0, 1.0);
        for (auto& s : states) {
            s.model = Eigen::VectorXd::Zero(d);
            if (cfg.init == InitMode::Random) {
                for (int k = 0; k < d; ++k) s.model(k) = cfg.init_scale * gauss(rng);
            }
        }
    }

    auto launch = [&](int i, int issue_iteration) {
        PendingGradient p;
        p.eval_point = states[i].model;
        auto rng = make_rng(mix_seed(seed, kOracleStream, issue_iteration), i);
        p.grad = gradient(oracle, i, p.eval_point, rng);
        p.issue_iteration = issue_iteration;
        p.compute_time =
            sample_straggle(straggler, i, issue_iteration,
                            mix_seed(seed, kStraggleStream))
                .compute_time;
        states[i].pending = std::move(p);
    };
    for (int i = 0; i < m; ++i) launch(i, 0);

    // async timing mode: compute time left on the pending job
    std::vector<double> remaining(m, 0.0);
    if (cfg.scheduler == SchedulerMode::Async &&
        straggler.mode == StragglerMode::TimingDerived) {
        for (int i = 0; i < m; ++i) remaining[i] = states[i].pending->compute_time;
    }

    RunResult out;
    out.eta = eta;
    out.zeta = cfg.zeta;
    out.max_noise_var.assign(m, 0.0);
    {
        Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
        for (const auto& s : states) mean += s.model;
        mean /= m;
        out.initial_loss = task.network_loss(mean);
    }
    out.records.reserve(T);

    double wall = 0.0;
    for (int t = 0; t < T; ++t) {
        MetricsRecord rec;
        rec.t = t;

        // straggle decisions and round timing
        std::vector<char> is_straggler(m, 0);
        std::vector<double> times(m, 0.0);
        for (int i = 0; i < m; ++i) {
            const auto draw = sample_straggle(straggler, i, t,
                                              mix_seed(seed, kStraggleStream),
                                              cfg.t_max);
            times[i] = draw.compute_time;
            switch (cfg.scheduler) {
                case SchedulerMode::Sync:
                    is_straggler[i] = 0;
                    break;
                case SchedulerMode::SyncBarrier:
                    is_straggler[i] = draw.compute_time > cfg.t_max;
                    break;
                case SchedulerMode::Async:
                    if (straggler.mode == StragglerMode::Bernoulli) {
                        is_straggler[i] = draw.is_straggler;
                    } else {
                        is_straggler[i] = remaining[i] > cfg.round_period;
                        remaining[i] -= cfg.round_period;
                    }
                    break;
            }
            if (is_straggler[i]) ++rec.stragglers;
        }
        switch (cfg.scheduler) {
            case SchedulerMode::Sync:
                wall += *std::max_element(times.begin(), times.end());
                break;
            case SchedulerMode::SyncBarrier:
                wall += std::min(*std::max_element(times.begin(), times.end()),
                                 cfg.t_max);
                break;
            case SchedulerMode::Async:
                wall += cfg.round_period;
                break;
        }

        if (cfg.record_gamma_trace) {
            Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
            for (const auto& s : states) mean += s.model;
            mean /= m;
            const Eigen::VectorXd grad_mean = task.network_grad(mean);
            Eigen::VectorXd stale_avg = Eigen::VectorXd::Zero(d);
            double cons = 0.0;
            for (int i = 0; i < m; ++i) {
                stale_avg += task.device_grad(i, states[i].pending->eval_point);
                cons += (states[i].model - mean).squaredNorm();
            }
            stale_avg /= m;
            rec.gamma_lhs = (grad_mean - stale_avg).squaredNorm();
            rec.gamma_grad_norm_sq = grad_mean.squaredNorm();
            rec.gamma_consensus_term =
                task.smoothness * task.smoothness * cons / m;
        }

        // local updates with possibly stale gradients
        for (int i = 0; i < m; ++i) {
            if (!is_straggler[i]) {
                out.max_grad_sq_applied = std::max(
                    out.max_grad_sq_applied, states[i].pending->grad.squaredNorm());
                local_update(states[i], false, t, eta[i]);
            } else if (cfg.scheduler == SchedulerMode::SyncBarrier) {
                states[i].pending.reset();  // barrier discards the computation
            }
        }

        // graph realization, mixing matrix, communication phase
        auto g = realize_graph(base_graph, failure, mix_seed(seed, kGraphStream, t));
        rec.connected = is_connected(g);
        auto w = metropolis_hastings(g);
        auto schedule = build_schedule(g, channel.schedule_mode);
        std::vector<Eigen::VectorXd> models(m);
        for (int i = 0; i < m; ++i) models[i] = states[i].model;
        auto phase = run_phase(models, w, schedule, channel,
                               mix_seed(seed, kChanStream, t));

        // noisy consensus step
        for (int i = 0; i < m; ++i) {
            states[i].model =
                (1.0 - cfg.zeta) * models[i] +
                cfg.zeta * (phase.effective_w(i, i) * models[i] +
                            phase.neighbor_aggregate[i]);
            out.max_noise_var[i] =
                std::max(out.max_noise_var[i], phase.noise_var[i]);
        }

        // relaunch computations on the post-consensus model
        for (int i = 0; i < m; ++i) {
            if (!states[i].pending) {
                launch(i, t + 1);
                if (cfg.scheduler == SchedulerMode::Async &&
                    straggler.mode == StragglerMode::TimingDerived) {
                    remaining[i] = states[i].pending->compute_time;
                }
            }
        }

        // metrics on the post-consensus average
        Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
        for (const auto& s : states) mean += s.model;
        mean /= m;
        rec.wall_clock_s = wall;
        for (const auto& s : states) {
            rec.consensus_dist += (s.model - mean).squaredNorm();
        }
        rec.grad_norm_sq = task.network_grad(mean).squaredNorm();
        rec.loss = task.network_loss(mean);
        rec.accuracy = task.has_test ? task.test_accuracy(mean) : 0.0;
        out.records.push_back(rec);
    }

    out.final_models.reserve(m);
    for (auto& s : states) out.final_models.push_back(std::move(s.model));
    return out;
}

RunResult run_baseline_sync(RunConfig config, const LossTask& task,
                            const BaseTopology& topology,
                            const LinkFailureModel& failure,
                            const ChannelConfig& channel,
                            const StragglerModel& straggler,
                            const GradientOracle& oracle) {
    config.scheduler = SchedulerMode::Sync;
    return run(config, task, topology, failure, channel, straggler, oracle);
}

RunResult run_baseline_barrier(RunConfig config, const LossTask& task,
                               const BaseTopology& topology,
                               const LinkFailureModel& failure,
                               const ChannelConfig& channel,
                               const StragglerModel& straggler,
                               const GradientOracle& oracle) {
    config.scheduler = SchedulerMode::SyncBarrier;
    return run(config, task, topology, failure, channel, straggler, oracle);
}

}  // namespace adsgd
