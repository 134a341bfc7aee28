#include "adsgd/channel.hpp"

#include <cmath>
#include <stdexcept>

namespace adsgd {

std::uint64_t ChannelRealization::key(int i, int j) {
    const auto [a, b] = std::minmax(i, j);
    return (std::uint64_t(std::uint32_t(a)) << 32) | std::uint32_t(b);
}

std::complex<double> ChannelRealization::gain(int slot, int i, int j) const {
    const auto& m = gains.at(slot);
    auto it = m.find(key(i, j));
    if (it == m.end()) {
        throw std::invalid_argument("no channel gain drawn for requested link");
    }
    return it->second;
}

SlotSchedule build_schedule(const ConnectivityGraph& g, ScheduleMode mode) {
    SlotSchedule sched;
    sched.mode = mode;
    const int m = g.node_count;
    if (mode == ScheduleMode::Sequential) {
        for (int i = 0; i < m; ++i) sched.pair_centers.push_back({i});
        return sched;
    }
    // Greedy packing of star centers with disjoint closed neighborhoods.
    auto adj = g.adjacency();
    std::vector<std::vector<char>> group_blocked;  // nodes covered per group
    for (int i = 0; i < m; ++i) {
        std::vector<int> closed = adj[i];
        closed.push_back(i);
        bool placed = false;
        for (std::size_t gi = 0; gi < sched.pair_centers.size() && !placed; ++gi) {
            bool ok = true;
            for (int v : closed) {
                if (group_blocked[gi][v]) {
                    ok = false;
                    break;
                }
            }
            if (ok) {
                sched.pair_centers[gi].push_back(i);
                for (int v : closed) group_blocked[gi][v] = 1;
                placed = true;
            }
        }
        if (!placed) {
            sched.pair_centers.push_back({i});
            group_blocked.emplace_back(m, 0);
            for (int v : closed) group_blocked.back()[v] = 1;
        }
    }
    return sched;
}

ChannelRealization draw_channels(const ConnectivityGraph& g,
                                 const SlotSchedule& schedule, double sigma_w,
                                 Seed seed) {
    ChannelRealization chan;
    chan.slot_count = schedule.slot_count();
    chan.noise_std = sigma_w;
    chan.gains.resize(chan.slot_count);
    auto rng = make_rng(seed);
    std::normal_distribution<double> gauss(0.0, M_SQRT1_2);  // CN(0,1) components
    for (int s = 0; s < chan.slot_count; ++s) {
        for (const auto& [i, j] : g.edges) {
            chan.gains[s][ChannelRealization::key(i, j)] = {gauss(rng), gauss(rng)};
        }
    }
    return chan;
}

namespace {

double gamma_for_star(int star, const std::vector<int>& surviving,
                      const std::vector<Eigen::VectorXd>& models,
                      const Eigen::VectorXd& w_row, const ChannelRealization& chan,
                      const PowerConfig& power, int slot) {
    if (power.alignment == AlignmentMode::FixedGamma) {
        if (power.fixed_gamma <= 0.0) {
            throw std::invalid_argument("fixed gamma must be positive");
        }
        return power.fixed_gamma;
    }
    if (surviving.empty()) return 1.0;
    double min_h2 = std::numeric_limits<double>::infinity();
    double max_signal = 0.0;
    for (int j : surviving) {
        min_h2 = std::min(min_h2, std::norm(chan.gain(slot, star, j)));
        const double amp = std::abs(w_row(j)) * models[j].lpNorm<Eigen::Infinity>();
        max_signal = std::max(max_signal, amp * amp);
    }
    return power.max_power * min_h2 / std::max(max_signal, 1e-12);
}

double alpha_for_transmitter(const Eigen::VectorXd& model, const PowerConfig& power) {
    if (power.alignment == AlignmentMode::FixedGamma) {
        if (power.fixed_gamma <= 0.0) {
            throw std::invalid_argument("fixed alpha must be positive");
        }
        return power.fixed_gamma;
    }
    const double peak = model.lpNorm<Eigen::Infinity>();
    return power.max_power / std::max(peak * peak, 1e-12);
}

// Phase bookkeeping shared by run_phase and the variance reporter:
// deep-fade drops with symmetric repair, fallback marking, per-device
// effective noise variance.
struct PhasePlan {
    Eigen::MatrixXd w_eff;
    std::vector<char> fallback;
    std::vector<double> noise_var;
    std::vector<double> gamma;           // per device, for its own AirComp slot
    std::vector<int> aircomp_slot_of;    // slot index of the device's star slot
    std::vector<int> broadcast_slot_of;  // slot index where the device transmits
    int dropped_links = 0;
};

PhasePlan make_plan(const std::vector<Eigen::VectorXd>& models,
                    const MixingMatrix& w, const SlotSchedule& schedule,
                    const ChannelRealization& chan, const PowerConfig& power,
                    double sigma_w, double inversion_floor) {
    const int m = w.size();
    PhasePlan plan;
    plan.w_eff = w.weights;
    plan.fallback.assign(m, 0);
    plan.noise_var.assign(m, 0.0);
    plan.gamma.assign(m, 1.0);
    plan.aircomp_slot_of.assign(m, -1);
    plan.broadcast_slot_of.assign(m, -1);
    for (int k = 0; k < schedule.pair_count(); ++k) {
        for (int c : schedule.pair_centers[k]) {
            plan.aircomp_slot_of[c] = 2 * k;
            plan.broadcast_slot_of[c] = 2 * k + 1;
        }
    }

    // Deep-fade sweep over AirComp slots. A star losing every link keeps
    // its row and falls back to broadcast reception; otherwise lost links
    // are zeroed symmetrically with the mass returned to the diagonals.
    for (int i = 0; i < m; ++i) {
        const int slot = plan.aircomp_slot_of[i];
        if (slot < 0) continue;
        std::vector<int> neighbors, dropped;
        for (int j = 0; j < m; ++j) {
            if (j != i && w.weights(i, j) > 0.0) neighbors.push_back(j);
        }
        for (int j : neighbors) {
            if (std::abs(chan.gain(slot, i, j)) < inversion_floor) {
                dropped.push_back(j);
            }
        }
        if (!neighbors.empty() && dropped.size() == neighbors.size()) {
            plan.fallback[i] = 1;
            continue;
        }
        for (int j : dropped) {
            if (plan.w_eff(i, j) > 0.0) {
                const double wij = plan.w_eff(i, j);
                plan.w_eff(i, j) = plan.w_eff(j, i) = 0.0;
                plan.w_eff(i, i) += wij;
                plan.w_eff(j, j) += wij;
                ++plan.dropped_links;
            }
        }
    }

    // Per-device noise variance for the estimates actually consumed.
    for (int i = 0; i < m; ++i) {
        if (plan.fallback[i]) {
            double var = 0.0;
            for (int j = 0; j < m; ++j) {
                if (j == i || plan.w_eff(i, j) <= 0.0) continue;
                const int bslot = plan.broadcast_slot_of[j];
                const auto h = chan.gain(bslot, i, j);
                if (std::abs(h) < inversion_floor) continue;  // missing reception
                const double alpha = alpha_for_transmitter(models[j], power);
                const double wij = plan.w_eff(i, j);
                var += wij * wij * sigma_w * sigma_w / (alpha * std::norm(h));
            }
            plan.noise_var[i] = var;
            continue;
        }
        std::vector<int> surviving;
        for (int j = 0; j < m; ++j) {
            if (j != i && plan.w_eff(i, j) > 0.0) surviving.push_back(j);
        }
        if (surviving.empty()) continue;  // isolated: nothing received
        plan.gamma[i] =
            gamma_for_star(i, surviving, models, plan.w_eff.row(i), chan, power,
                           plan.aircomp_slot_of[i]);
        plan.noise_var[i] = sigma_w * sigma_w / plan.gamma[i];
    }
    return plan;
}

}  // namespace

AircompResult aircomp_slot(int star, const std::vector<int>& neighbors,
                           const std::vector<Eigen::VectorXd>& models,
                           const Eigen::VectorXd& w_row,
                           const ChannelRealization& chan,
                           const PowerConfig& power, int slot,
                           double inversion_floor, std::mt19937_64& rng) {
    const int d = static_cast<int>(models.at(star).size());
    AircompResult out;
    out.estimate = Eigen::VectorXd::Zero(d);
    std::vector<int> surviving;
    for (int j : neighbors) {
        if (std::abs(chan.gain(slot, star, j)) < inversion_floor) {
            out.dropped.push_back(j);
        } else {
            surviving.push_back(j);
        }
    }
    for (int j : surviving) out.estimate += w_row(j) * models[j];
    if (chan.noise_std > 0.0 && !surviving.empty()) {
        const double gamma =
            gamma_for_star(star, surviving, models, w_row, chan, power, slot);
        const double scale = chan.noise_std / std::sqrt(gamma);
        std::normal_distribution<double> gauss(0.0, 1.0);
        for (int c = 0; c < d; ++c) out.estimate(c) += scale * gauss(rng);
        out.noise_var = scale * scale;
    }
    return out;
}

std::vector<BroadcastEstimate> broadcast_slot(
    int transmitter, const Eigen::VectorXd& model,
    const std::vector<int>& receivers, const Eigen::VectorXd& w_col,
    const ChannelRealization& chan, const PowerConfig& power, int slot,
    double inversion_floor, std::mt19937_64& rng) {
    const int d = static_cast<int>(model.size());
    const double alpha = alpha_for_transmitter(model, power);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<BroadcastEstimate> out;
    out.reserve(receivers.size());
    for (int j : receivers) {
        BroadcastEstimate est;
        const auto h = chan.gain(slot, j, transmitter);
        if (std::abs(h) < inversion_floor) {
            est.missing = true;
            est.value = Eigen::VectorXd::Zero(d);
            out.push_back(std::move(est));
            continue;
        }
        const double wji = w_col(j);
        const double scale = chan.noise_std / (std::sqrt(alpha) * std::abs(h));
        est.value = wji * model;
        if (chan.noise_std > 0.0) {
            for (int c = 0; c < d; ++c) est.value(c) += wji * scale * gauss(rng);
        }
        est.noise_var = wji * wji * scale * scale;
        out.push_back(std::move(est));
    }
    return out;
}

double effective_consensus_noise_variance(
    int device, const SlotSchedule& schedule, const ChannelRealization& chan,
    const PowerConfig& power, const MixingMatrix& w,
    const std::vector<Eigen::VectorXd>& models, double inversion_floor) {
    auto plan = make_plan(models, w, schedule, chan, power, chan.noise_std,
                          inversion_floor);
    return plan.noise_var.at(device);
}

PhaseResult run_phase(const std::vector<Eigen::VectorXd>& models,
                      const MixingMatrix& w, const SlotSchedule& schedule,
                      const ChannelConfig& cfg, Seed seed) {
    const int m = w.size();
    if (static_cast<int>(models.size()) != m) {
        throw std::invalid_argument("model count does not match mixing matrix size");
    }
    const int d = m > 0 ? static_cast<int>(models[0].size()) : 0;
    auto chan = draw_channels(w.source_graph, schedule, cfg.sigma_w,
                              mix_seed(seed, 0xc4a2u));
    auto plan = make_plan(models, w, schedule, chan, cfg.power, cfg.sigma_w,
                          cfg.inversion_floor);

    PhaseResult out;
    out.effective_w = plan.w_eff;
    out.noise_var = plan.noise_var;
    out.dropped_links = plan.dropped_links;
    out.neighbor_aggregate.assign(m, Eigen::VectorXd::Zero(d));
    std::normal_distribution<double> gauss(0.0, 1.0);

    for (int i = 0; i < m; ++i) {
        auto rng = make_rng(seed, 0x71000u + std::uint64_t(i));
        Eigen::VectorXd est = Eigen::VectorXd::Zero(d);
        if (plan.fallback[i]) {
            // Reassemble the aggregate from the neighbors' broadcast slots.
            for (int j = 0; j < m; ++j) {
                if (j == i || plan.w_eff(i, j) <= 0.0) continue;
                const int bslot = plan.broadcast_slot_of[j];
                const auto h = chan.gain(bslot, i, j);
                const double wij = plan.w_eff(i, j);
                if (std::abs(h) < cfg.inversion_floor) {
                    est += wij * models[i];  // reception missing; hold own model
                    continue;
                }
                est += wij * models[j];
                if (cfg.sigma_w > 0.0) {
                    const double alpha = alpha_for_transmitter(models[j], cfg.power);
                    const double scale =
                        cfg.sigma_w / (std::sqrt(alpha) * std::abs(h));
                    for (int c = 0; c < d; ++c) est(c) += wij * scale * gauss(rng);
                }
            }
        } else {
            for (int j = 0; j < m; ++j) {
                if (j != i && plan.w_eff(i, j) > 0.0) est += plan.w_eff(i, j) * models[j];
            }
            if (cfg.sigma_w > 0.0 && plan.noise_var[i] > 0.0) {
                const double scale = std::sqrt(plan.noise_var[i]);
                for (int c = 0; c < d; ++c) est(c) += scale * gauss(rng);
            }
        }
        out.neighbor_aggregate[i] = std::move(est);
    }
    return out;
}

}  // namespace adsgd
