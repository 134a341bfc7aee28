#include "adsgd/mixing.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace adsgd {

MixingMatrix metropolis_hastings(const ConnectivityGraph& g) {
    const int m = g.node_count;
    auto deg = g.degrees();
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(m, m);
    for (const auto& [i, j] : g.edges) {
        const double wij = 1.0 / (1.0 + std::max(deg[i], deg[j]));
        w(i, j) = wij;
        w(j, i) = wij;
    }
    for (int i = 0; i < m; ++i) {
        w(i, i) = 1.0 - w.row(i).sum();
    }
    return MixingMatrix{std::move(w), g};
}

double spectral_gap(const MixingMatrix& w) {
    const int m = w.size();
    if (m <= 1) return 1.0;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(w.weights,
                                                          Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) {
        throw std::runtime_error("symmetric eigensolver failed to converge");
    }
    const auto& ev = solver.eigenvalues();  // ascending
    const double slem = std::max(std::abs(ev(m - 2)), std::abs(ev(0)));
    return 1.0 - slem;
}

namespace {

struct GapAccumulator {
    double sum = 0.0;
    double sum_sq = 0.0;

    void add(double g) {
        sum += g;
        sum_sq += g * g;
    }
    AverageGapResult finish(int n) const {
        const double mean = sum / n;
        const double var = std::max(0.0, sum_sq / n - mean * mean);
        return {mean, n > 1 ? std::sqrt(var / (n - 1)) : 0.0};
    }
};

double sample_gap(const ConnectivityGraph& base, const LinkFailureModel& failure,
                  Seed seed, int k) {
    return spectral_gap(metropolis_hastings(realize_graph(base, failure, mix_seed(seed, k))));
}

}  // namespace

AverageGapResult average_spectral_gap(const BaseTopology& base,
                                      const LinkFailureModel& failure,
                                      int num_samples, Seed seed) {
    if (num_samples < 1) throw std::invalid_argument("num_samples must be >= 1");
    const auto base_graph = build_base(base);
    GapAccumulator acc;
#pragma omp parallel
    {
        GapAccumulator local;
#pragma omp for schedule(static) nowait
        for (int k = 0; k < num_samples; ++k) {
            local.add(sample_gap(base_graph, failure, seed, k));
        }
#pragma omp critical
        {
            acc.sum += local.sum;
            acc.sum_sq += local.sum_sq;
        }
    }
    return acc.finish(num_samples);
}

namespace reference {

AverageGapResult average_spectral_gap(const BaseTopology& base,
                                      const LinkFailureModel& failure,
                                      int num_samples, Seed seed) {
    if (num_samples < 1) throw std::invalid_argument("num_samples must be >= 1");
    const auto base_graph = build_base(base);
    GapAccumulator acc;
    for (int k = 0; k < num_samples; ++k) {
        acc.add(sample_gap(base_graph, failure, seed, k));
    }
    return acc.finish(num_samples);
}

}  // namespace reference

ConsensusRateEstimate estimate_consensus_rate(const BaseTopology& base,
                                              const LinkFailureModel& failure,
                                              int num_samples, int probe_count,
                                              Seed seed) {
    if (num_samples < 1) throw std::invalid_argument("num_samples must be >= 1");
    if (probe_count < 1) throw std::invalid_argument("probe_count must be >= 1");
    const auto base_graph = build_base(base);
    const int m = base_graph.node_count;

    // Pass 1: accumulate E[W^T W] (= E[W^2], W symmetric) and connectivity.
    Eigen::MatrixXd second_moment = Eigen::MatrixXd::Zero(m, m);
    int connected_count = 0;
    std::vector<char> connected(num_samples, 0);
#pragma omp parallel
    {
        Eigen::MatrixXd local = Eigen::MatrixXd::Zero(m, m);
        int local_connected = 0;
#pragma omp for schedule(static) nowait
        for (int k = 0; k < num_samples; ++k) {
            auto g = realize_graph(base_graph, failure, mix_seed(seed, k));
            auto w = metropolis_hastings(g);
            local.noalias() += w.weights * w.weights;
            if (is_connected(g)) {
                connected[k] = 1;
                ++local_connected;
            }
        }
#pragma omp critical
        {
            second_moment += local;
            connected_count += local_connected;
        }
    }
    second_moment /= double(num_samples);

    // Probes: random centered m x d matrices plus the dominant deviation
    // direction of E[W^T W] (its top eigenvector orthogonal to 1).
    const int probe_dim = std::min(8, m);
    std::vector<Eigen::MatrixXd> probes;
    auto rng = make_rng(seed, 0x9e0bu);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int r = 0; r < probe_count; ++r) {
        Eigen::MatrixXd x(m, probe_dim);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < probe_dim; ++j) x(i, j) = gauss(rng);
        x.rowwise() -= x.colwise().mean();
        probes.push_back(std::move(x));
    }
    {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(second_moment);
        if (solver.info() != Eigen::Success) {
            throw std::runtime_error("symmetric eigensolver failed to converge");
        }
        // Eigenvector of the second-largest eigenvalue; 1 is the top one.
        Eigen::VectorXd v = solver.eigenvectors().col(std::max(0, m - 2));
        v.array() -= v.mean();
        if (v.norm() > 1e-12) probes.push_back(v);
    }

    std::vector<double> sq_norms;
    std::vector<const Eigen::MatrixXd*> valid;
    for (const auto& x : probes) {
        const double n2 = x.squaredNorm();
        if (n2 > 1e-24) {
            valid.push_back(&x);
            sq_norms.push_back(n2);
        }
    }
    if (valid.empty()) {
        throw std::invalid_argument(
            "all consensus-rate probes are constant; non-constant probes required");
    }

    // Pass 2: per-sample contraction ratios for every probe.
    const int np = static_cast<int>(valid.size());
    std::vector<double> ratio_sum(np, 0.0), ratio_sum_sq(np, 0.0);
    std::vector<double> ratio_sum_conn(np, 0.0);
#pragma omp parallel
    {
        std::vector<double> ls(np, 0.0), lss(np, 0.0), lsc(np, 0.0);
#pragma omp for schedule(static) nowait
        for (int k = 0; k < num_samples; ++k) {
            auto w = metropolis_hastings(
                realize_graph(base_graph, failure, mix_seed(seed, k)));
            for (int pi = 0; pi < np; ++pi) {
                const double r = (w.weights * (*valid[pi])).squaredNorm() / sq_norms[pi];
                ls[pi] += r;
                lss[pi] += r * r;
                if (connected[k]) lsc[pi] += r;
            }
        }
#pragma omp critical
        for (int pi = 0; pi < np; ++pi) {
            ratio_sum[pi] += ls[pi];
            ratio_sum_sq[pi] += lss[pi];
            ratio_sum_conn[pi] += lsc[pi];
        }
    }

    int worst = 0;
    for (int pi = 1; pi < np; ++pi) {
        if (ratio_sum[pi] > ratio_sum[worst]) worst = pi;
    }
    const double mean_ratio = ratio_sum[worst] / num_samples;
    const double var = std::max(
        0.0, ratio_sum_sq[worst] / num_samples - mean_ratio * mean_ratio);

    ConsensusRateEstimate est;
    est.num_samples = num_samples;
    est.p_hat = std::clamp(1.0 - mean_ratio, 0.0, 1.0);
    est.p_stderr = num_samples > 1 ? std::sqrt(var / (num_samples - 1)) : 0.0;
    est.q_hat = double(connected_count) / num_samples;
    if (connected_count > 0) {
        double worst_conn = 0.0;
        for (int pi = 0; pi < np; ++pi) {
            worst_conn = std::max(worst_conn, ratio_sum_conn[pi] / connected_count);
        }
        est.delta_hat = std::clamp(1.0 - worst_conn, 0.0, 1.0);
    }
    return est;
}

}  // namespace adsgd
