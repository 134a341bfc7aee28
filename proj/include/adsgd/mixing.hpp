#pragma once

#include <Eigen/Dense>

#include "adsgd/topology.hpp"

namespace adsgd {

// Symmetric doubly stochastic averaging matrix built from a connectivity
// graph with Metropolis-Hastings weights.
struct MixingMatrix {
    Eigen::MatrixXd weights;
    ConnectivityGraph source_graph;

    int size() const { return static_cast<int>(weights.rows()); }
};

struct ConsensusRateEstimate {
    double p_hat = 0.0;      // expected consensus rate over all realizations
    int num_samples = 0;
    double q_hat = 0.0;      // fraction of connected realizations
    double delta_hat = 0.0;  // consensus rate conditional on connectivity
    double p_stderr = 0.0;   // Monte-Carlo standard error of the limiting ratio
};

// w_ij = 1/(1 + max(deg i, deg j)) on edges, diagonal absorbs the rest.
MixingMatrix metropolis_hastings(const ConnectivityGraph& g);

// 1 - max(|lambda_2|, |lambda_m|) of the symmetric matrix.
double spectral_gap(const MixingMatrix& w);

struct AverageGapResult {
    double mean = 0.0;
    double std_err = 0.0;
};

AverageGapResult average_spectral_gap(const BaseTopology& base,
                                      const LinkFailureModel& failure,
                                      int num_samples, Seed seed);

ConsensusRateEstimate estimate_consensus_rate(const BaseTopology& base,
                                              const LinkFailureModel& failure,
                                              int num_samples, int probe_count,
                                              Seed seed);

namespace reference {
// Serial reference implementations kept for testing the parallel kernels.
AverageGapResult average_spectral_gap(const BaseTopology& base,
                                      const LinkFailureModel& failure,
                                      int num_samples, Seed seed);
}  // namespace reference

}  // namespace adsgd
