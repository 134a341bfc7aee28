#pragma once

#include <vector>

#include "adsgd/engine.hpp"

namespace adsgd {

struct BoundInputs {
    double p = 1.0;           // expected consensus rate, in (0, 1]
    double zeta = 1.0;
    double eta = 0.0;         // constant learning rate
    int m = 1;
    double g2 = 0.0;          // G^2
    double sigma2 = 0.0;      // gradient-oracle variance
    std::vector<double> sigma2_w;  // per device, max_t E||n_i||^2
    double smoothness = 1.0;  // L
    double gamma = 0.0;       // staleness constant, <= 1
    std::vector<double> rho;
    int iterations = 1;       // T
    double f0 = 0.0;          // f(theta_bar(0))
    double f_star = 0.0;
};

// Steady-state consensus error bound: eta^2 12 m G^2 / (p zeta)^2 + zeta (2/p) sum sigma2_w.
double consensus_error_bound(const BoundInputs& in);

// Four-term stationarity bound with the derived step-size schedules baked into the
// exponents of T.
double stationarity_bound(const BoundInputs& in);

// Smallest gamma satisfying the staleness inequality over a recorded trace.
struct StalenessGammaResult {
    double gamma_hat = 0.0;
    int used_iterations = 0;
    int skipped_iterations = 0;  // denominator below 1e-12
};

StalenessGammaResult estimate_staleness_gamma(
    const std::vector<MetricsRecord>& trace);

struct ConsensusBoundReport {
    bool holds = false;
    double empirical = 0.0;   // mean final consensus distance across seeds
    double bound = 0.0;
    double std_err = 0.0;
    double margin = 0.0;      // bound + 3 stderr - empirical
};

// Compares the mean final consensus distance of >= 30 seeds to the bound.
ConsensusBoundReport check_consensus_bound(const std::vector<double>& final_consensus_dists,
                           const BoundInputs& in);

}  // namespace adsgd
