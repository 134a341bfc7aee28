#pragma once

#include <Eigen/Dense>
#include <complex>
#include <optional>
#include <unordered_map>
#include <vector>

#include "adsgd/mixing.hpp"
#include "adsgd/topology.hpp"

namespace adsgd {

enum class ScheduleMode { Sequential, Coloring };
enum class AlignmentMode { FixedGamma, PowerConstrained };

struct PowerConfig {
    double max_power = 1.0;
    AlignmentMode alignment = AlignmentMode::FixedGamma;
    double fixed_gamma = 1.0;  // used for gamma and alpha in fixed-gamma mode
};

// Ordered AirComp/broadcast slot pairs. Pair k occupies slots 2k (AirComp)
// and 2k+1 (broadcast); the same center set is scheduled in both.
struct SlotSchedule {
    std::vector<std::vector<int>> pair_centers;
    ScheduleMode mode = ScheduleMode::Sequential;

    int pair_count() const { return static_cast<int>(pair_centers.size()); }
    int slot_count() const { return 2 * pair_count(); }
};

// Immutable per-phase fading draws: one complex scalar per (slot, link),
// reciprocal within a slot.
struct ChannelRealization {
    int slot_count = 0;
    double noise_std = 0.0;  // sigma_w, per-coordinate
    std::vector<std::unordered_map<std::uint64_t, std::complex<double>>> gains;

    static std::uint64_t key(int i, int j);
    std::complex<double> gain(int slot, int i, int j) const;
};

struct ChannelConfig {
    double sigma_w = 0.0;
    PowerConfig power;
    ScheduleMode schedule_mode = ScheduleMode::Sequential;
    double inversion_floor = 1e-3;
};

SlotSchedule build_schedule(const ConnectivityGraph& g, ScheduleMode mode);

ChannelRealization draw_channels(const ConnectivityGraph& g,
                                 const SlotSchedule& schedule, double sigma_w,
                                 Seed seed);

struct AircompResult {
    Eigen::VectorXd estimate;     // sum over surviving neighbors of w_ij theta_j + noise
    double noise_var = 0.0;       // per-coordinate variance of the noise term
    std::vector<int> dropped;     // neighbors below the inversion floor
};

// AirComp aggregation at a star center: neighbors invert their
// own gains, the center rescales by 1/sqrt(gamma).
AircompResult aircomp_slot(int star, const std::vector<int>& neighbors,
                           const std::vector<Eigen::VectorXd>& models,
                           const Eigen::VectorXd& w_row,
                           const ChannelRealization& chan,
                           const PowerConfig& power, int slot,
                           double inversion_floor, std::mt19937_64& rng);

struct BroadcastEstimate {
    Eigen::VectorXd value;   // w_ji (theta_i + scaled noise)
    double noise_var = 0.0;  // per-coordinate
    bool missing = false;    // receiver gain below the inversion floor
};

std::vector<BroadcastEstimate> broadcast_slot(
    int transmitter, const Eigen::VectorXd& model,
    const std::vector<int>& receivers, const Eigen::VectorXd& w_col,
    const ChannelRealization& chan, const PowerConfig& power, int slot,
    double inversion_floor, std::mt19937_64& rng);

// Per-coordinate variance of device i's total estimation noise for one
// communication phase, given which estimates it consumes.
double effective_consensus_noise_variance(
    int device, const SlotSchedule& schedule, const ChannelRealization& chan,
    const PowerConfig& power, const MixingMatrix& w,
    const std::vector<Eigen::VectorXd>& models, double inversion_floor);

struct PhaseResult {
    // Per device: estimate of sum_{j != i} w_ij theta_j after the phase.
    std::vector<Eigen::VectorXd> neighbor_aggregate;
    // Mixing matrix after symmetric deep-fade repair; still doubly stochastic.
    Eigen::MatrixXd effective_w;
    std::vector<double> noise_var;   // per-coordinate, per device
    int dropped_links = 0;
};

// Full communication phase: slot pairs in order, deep-fade drops repaired
// symmetrically, broadcast estimates consumed only by devices whose
// AirComp slot was lost entirely.
PhaseResult run_phase(const std::vector<Eigen::VectorXd>& models,
                      const MixingMatrix& w, const SlotSchedule& schedule,
                      const ChannelConfig& cfg, Seed seed);

}  // namespace adsgd
