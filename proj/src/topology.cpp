#include "adsgd/topology.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <stdexcept>

namespace adsgd {

bool ConnectivityGraph::has_edge(int i, int j) const {
    if (i == j) return false;
    auto e = std::minmax(i, j);
    return std::binary_search(edges.begin(), edges.end(),
                              std::make_pair(e.first, e.second));
}

std::vector<int> ConnectivityGraph::degrees() const {
    std::vector<int> deg(node_count, 0);
    for (const auto& [i, j] : edges) {
        ++deg[i];
        ++deg[j];
    }
    return deg;
}

std::vector<std::vector<int>> ConnectivityGraph::adjacency() const {
    std::vector<std::vector<int>> adj(node_count);
    for (const auto& [i, j] : edges) {
        adj[i].push_back(j);
        adj[j].push_back(i);
    }
    return adj;
}

LinkFailureModel LinkFailureModel::gain_threshold(double h_min) {
    LinkFailureModel m;
    m.kind = FailureKind::GainThreshold;
    m.h_min = h_min;
    return m;
}

LinkFailureModel LinkFailureModel::delay_tolerance_model(double tolerance, double rate) {
    LinkFailureModel m;
    m.kind = FailureKind::DelayTolerance;
    m.delay_tolerance = tolerance;
    m.link_time_rate = rate;
    return m;
}

const char* to_string(TopologyKind k) {
    switch (k) {
        case TopologyKind::CompleteMesh: return "complete-mesh";
        case TopologyKind::Ring: return "ring";
        case TopologyKind::Torus2d: return "torus-2d";
    }
    return "?";
}

const char* to_string(FailureKind k) {
    switch (k) {
        case FailureKind::GainThreshold: return "gain-threshold";
        case FailureKind::DelayTolerance: return "delay-tolerance";
        case FailureKind::AlwaysOn: return "always-on";
    }
    return "?";
}

namespace {

void add_edge(std::vector<std::pair<int, int>>& edges, int i, int j) {
    auto e = std::minmax(i, j);
    edges.emplace_back(e.first, e.second);
}

void canonicalize(ConnectivityGraph& g) {
    std::sort(g.edges.begin(), g.edges.end());
    g.edges.erase(std::unique(g.edges.begin(), g.edges.end()), g.edges.end());
}

}  // namespace

ConnectivityGraph build_base(const BaseTopology& topology) {
    const int m = topology.node_count;
    if (m < 1) {
        throw std::invalid_argument("base topology requires node_count >= 1, got " +
                                    std::to_string(m));
    }
    if (m < 2 && topology.kind != TopologyKind::CompleteMesh) {
        throw std::invalid_argument(
            "ring and torus topologies require node_count >= 2, got " +
            std::to_string(m));
    }
    ConnectivityGraph g;
    g.node_count = m;
    switch (topology.kind) {
        case TopologyKind::CompleteMesh:
            for (int i = 0; i < m; ++i)
                for (int j = i + 1; j < m; ++j) add_edge(g.edges, i, j);
            break;
        case TopologyKind::Ring:
            for (int i = 0; i < m; ++i) add_edge(g.edges, i, (i + 1) % m);
            break;
        case TopologyKind::Torus2d: {
            const int side = static_cast<int>(std::lround(std::sqrt(double(m))));
            if (side * side != m) {
                throw std::invalid_argument(
                    "torus-2d requires a perfect-square node_count, got " +
                    std::to_string(m));
            }
            auto id = [side](int r, int c) {
                return ((r + side) % side) * side + (c + side) % side;
            };
            for (int r = 0; r < side; ++r) {
                for (int c = 0; c < side; ++c) {
                    add_edge(g.edges, id(r, c), id(r + 1, c));
                    add_edge(g.edges, id(r, c), id(r, c + 1));
                }
            }
            break;
        }
    }
    canonicalize(g);
    return g;
}

ConnectivityGraph realize_graph(const ConnectivityGraph& base,
                                const LinkFailureModel& failure, Seed seed) {
    if (failure.kind == FailureKind::AlwaysOn) return base;

    ConnectivityGraph g;
    g.node_count = base.node_count;
    auto rng = make_rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::exponential_distribution<double> expo(failure.link_time_rate);
    for (const auto& e : base.edges) {
        bool keep = false;
        switch (failure.kind) {
            case FailureKind::GainThreshold: {
                // |h| with h ~ CN(0,1): components N(0, 1/2).
                const double re = gauss(rng) * M_SQRT1_2;
                const double im = gauss(rng) * M_SQRT1_2;
                keep = std::hypot(re, im) >= failure.h_min;
                break;
            }
            case FailureKind::DelayTolerance:
                keep = expo(rng) <= failure.delay_tolerance;
                break;
            case FailureKind::AlwaysOn:
                keep = true;
                break;
        }
        if (keep) g.edges.push_back(e);
    }
    return g;
}

bool is_connected(const ConnectivityGraph& g) {
    if (g.node_count <= 0) return false;
    if (g.node_count == 1) return true;
    auto adj = g.adjacency();
    std::vector<char> seen(g.node_count, 0);
    std::queue<int> frontier;
    frontier.push(0);
    seen[0] = 1;
    int visited = 1;
    while (!frontier.empty()) {
        int u = frontier.front();
        frontier.pop();
        for (int v : adj[u]) {
            if (!seen[v]) {
                seen[v] = 1;
                ++visited;
                frontier.push(v);
            }
        }
    }
    return visited == g.node_count;
}

double estimate_connectivity_probability(const ConnectivityGraph& base,
                                         const LinkFailureModel& failure,
                                         int num_samples, Seed seed) {
    if (num_samples < 1) throw std::invalid_argument("num_samples must be >= 1");
    long connected = 0;
#pragma omp parallel for reduction(+ : connected) schedule(static)
    for (int k = 0; k < num_samples; ++k) {
        if (is_connected(realize_graph(base, failure, mix_seed(seed, k))))
            ++connected;
    }
    return double(connected) / double(num_samples);
}

namespace reference {

double estimate_connectivity_probability(const ConnectivityGraph& base,
                                         const LinkFailureModel& failure,
                                         int num_samples, Seed seed) {
    if (num_samples < 1) throw std::invalid_argument("num_samples must be >= 1");
    long connected = 0;
    for (int k = 0; k < num_samples; ++k) {
        if (is_connected(realize_graph(base, failure, mix_seed(seed, k))))
            ++connected;
    }
    return double(connected) / double(num_samples);
}

}  // namespace reference

}  // namespace adsgd
