#pragma once

#include <string>
#include <utility>
#include <vector>

#include "adsgd/rng.hpp"

namespace adsgd {

// Undirected graph over device indices [0, m). Edges are stored as
// canonical (min, max) pairs, sorted, without duplicates.
struct ConnectivityGraph {
    int node_count = 0;
    std::vector<std::pair<int, int>> edges;

    bool has_edge(int i, int j) const;
    std::vector<int> degrees() const;
    std::vector<std::vector<int>> adjacency() const;
};

enum class TopologyKind { CompleteMesh, Ring, Torus2d };

struct BaseTopology {
    TopologyKind kind = TopologyKind::Ring;
    int node_count = 0;
};

enum class FailureKind { GainThreshold, DelayTolerance, AlwaysOn };

// Per-iteration link failure model. Only the parameters of the selected
// kind are consulted.
struct LinkFailureModel {
    FailureKind kind = FailureKind::AlwaysOn;
    double h_min = 0.0;            // gain-threshold: keep edge iff |h| >= h_min
    double delay_tolerance = 1.0;  // delay-tolerance: keep edge iff Exp(rate) <= tolerance
    double link_time_rate = 1.0;

    static LinkFailureModel always_on() { return {}; }
    static LinkFailureModel gain_threshold(double h_min);
    static LinkFailureModel delay_tolerance_model(double tolerance, double rate = 1.0);
};

const char* to_string(TopologyKind k);
const char* to_string(FailureKind k);

ConnectivityGraph build_base(const BaseTopology& topology);

// Independent per-edge survival draws; deterministic given seed.
// Gain-threshold draws |h| with h ~ CN(0, 1) (Rayleigh magnitude,
// E|h|^2 = 1), matching the channel fading model.
ConnectivityGraph realize_graph(const ConnectivityGraph& base,
                                const LinkFailureModel& failure, Seed seed);

bool is_connected(const ConnectivityGraph& g);

// Monte-Carlo estimate of P(realized graph is connected).
double estimate_connectivity_probability(const ConnectivityGraph& base,
                                         const LinkFailureModel& failure,
                                         int num_samples, Seed seed);

namespace reference {
// Serial reference kept for testing against the parallel kernel.
double estimate_connectivity_probability(const ConnectivityGraph& base,
                                         const LinkFailureModel& failure,
                                         int num_samples, Seed seed);
}  // namespace reference

}  // namespace adsgd
