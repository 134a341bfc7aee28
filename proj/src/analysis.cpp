#include "adsgd/analysis.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace adsgd {

double consensus_error_bound(const BoundInputs& in) {
    if (in.p <= 0.0) throw std::invalid_argument("bound undefined for p = 0");
    if (in.zeta <= 0.0 || in.zeta > 1.0) {
        throw std::invalid_argument("zeta must lie in (0, 1]");
    }
    const double sum_sigma_w =
        std::accumulate(in.sigma2_w.begin(), in.sigma2_w.end(), 0.0);
    const double first =
        in.eta * in.eta * 12.0 * in.m * in.g2 / (in.p * in.zeta * in.p * in.zeta);
    const double second = in.zeta * (2.0 / in.p) * sum_sigma_w;
    return first + second;
}

double stationarity_bound(const BoundInputs& in) {
    if (in.gamma >= 1.0) {
        throw std::invalid_argument("bound vacuous for gamma >= 1");
    }
    if (in.p <= 0.0) throw std::invalid_argument("bound undefined for p = 0");
    if (in.iterations < 1) throw std::invalid_argument("T must be >= 1");
    double rho_min = 1.0;  // min_j (1 - rho_j)
    for (double r : in.rho) {
        if (r >= 1.0) throw std::invalid_argument("rho_i must be < 1");
        rho_min = std::min(rho_min, 1.0 - r);
    }
    const double T = in.iterations;
    const double L = in.smoothness;
    const double gamma_prime = 1.0 - in.gamma;
    const double term1 = 8.0 * std::sqrt(L) * (in.f0 - in.f_star) /
                         (gamma_prime * rho_min * std::sqrt(T));
    const double term2 =
        3.0 * in.g2 * L / (std::pow(T, 0.25) * in.p * in.p * gamma_prime);
    const double term3 = std::sqrt(L / (4.0 * T)) * in.sigma2 /
                         (in.m * gamma_prime * rho_min);
    double term4 = 0.0;
    for (double s2 : in.sigma2_w) {
        term4 += (s2 / (in.m * gamma_prime)) *
                 (2.0 * L * L * in.gamma / (in.p * std::pow(T, 3.0 / 8.0)) +
                  4.0 * L * std::sqrt(L) / (in.m * std::pow(T, 0.25) * rho_min));
    }
    return term1 + term2 + term3 + term4;
}

StalenessGammaResult estimate_staleness_gamma(
    const std::vector<MetricsRecord>& trace) {
    StalenessGammaResult out;
    for (const auto& rec : trace) {
        if (rec.gamma_grad_norm_sq < 1e-12) {
            ++out.skipped_iterations;
            continue;
        }
        const double ratio =
            (rec.gamma_lhs - rec.gamma_consensus_term) / rec.gamma_grad_norm_sq;
        out.gamma_hat = std::max(out.gamma_hat, ratio);
        ++out.used_iterations;
    }
    if (out.used_iterations == 0) {
        throw std::runtime_error(
            "staleness gamma: every iteration skipped, gradient signal too small");
    }
    out.gamma_hat = std::max(0.0, out.gamma_hat);
    return out;
}

ConsensusBoundReport check_consensus_bound(const std::vector<double>& final_consensus_dists,
                           const BoundInputs& in) {
    const int n = static_cast<int>(final_consensus_dists.size());
    if (n < 30) {
        throw std::invalid_argument("consensus bound check needs >= 30 seeds");
    }
    ConsensusBoundReport rep;
    double sum = 0.0, sum_sq = 0.0;
    for (double v : final_consensus_dists) {
        sum += v;
        sum_sq += v * v;
    }
    rep.empirical = sum / n;
    const double var = std::max(0.0, sum_sq / n - rep.empirical * rep.empirical);
    rep.std_err = std::sqrt(var / (n - 1));
    rep.bound = consensus_error_bound(in);
    rep.margin = rep.bound + 3.0 * rep.std_err - rep.empirical;
    rep.holds = rep.margin >= 0.0;
    return rep;
}

}  // namespace adsgd
