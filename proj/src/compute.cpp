#include "adsgd/compute.hpp"

#include <cmath>
#include <stdexcept>

namespace adsgd {

namespace {

double logistic_loss(double margin) {
    // log(1 + exp(-margin)) without overflow
    if (margin > 0) return std::log1p(std::exp(-margin));
    return -margin + std::log1p(std::exp(margin));
}

double logistic_weight(double margin) {
    // dl/dmargin = -1/(1+exp(margin))
    return -1.0 / (1.0 + std::exp(margin));
}

struct MlpView {
    Eigen::Map<const Eigen::MatrixXd> w1;
    Eigen::Map<const Eigen::VectorXd> b1;
    Eigen::Map<const Eigen::VectorXd> w2;
    double b2;
};

MlpView mlp_view(const LossTask& t, const Eigen::VectorXd& theta) {
    const int h = t.mlp_hidden, in = t.input_dim;
    const double* p = theta.data();
    return MlpView{{p, h, in}, {p + h * in, h}, {p + h * in + h, h}, p[h * in + 2 * h]};
}

double mlp_output(const LossTask& t, const Eigen::VectorXd& theta,
                  const Eigen::VectorXd& x) {
    auto v = mlp_view(t, theta);
    Eigen::VectorXd hidden = (v.w1 * x + v.b1).array().tanh();
    return v.w2.dot(hidden) + v.b2;
}

void mlp_sample_grad(const LossTask& t, const Eigen::VectorXd& theta,
                     const Eigen::VectorXd& x, double y, Eigen::VectorXd& out) {
    auto v = mlp_view(t, theta);
    const int h = t.mlp_hidden, in = t.input_dim;
    Eigen::VectorXd hidden = (v.w1 * x + v.b1).array().tanh();
    const double z = v.w2.dot(hidden) + v.b2;
    const double p = y * logistic_weight(y * z);  // dl/dz
    Eigen::VectorXd dz0 =
        (p * v.w2.array() * (1.0 - hidden.array().square())).matrix();
    Eigen::Map<Eigen::MatrixXd>(out.data(), h, in) += dz0 * x.transpose();
    Eigen::Map<Eigen::VectorXd>(out.data() + h * in, h) += dz0;
    Eigen::Map<Eigen::VectorXd>(out.data() + h * in + h, h) += p * hidden;
    out(h * in + 2 * h) += p;
}

}  // namespace

double LossTask::device_loss(int device, const Eigen::VectorXd& theta) const {
    if (theta.size() != dim) throw std::invalid_argument("theta dimension mismatch");
    switch (kind) {
        case TaskKind::Quadratic:
            return 0.5 * theta.dot(quad_a[device] * theta) - quad_b[device].dot(theta);
        case TaskKind::Logistic: {
            const auto& dd = data[device];
            double loss = 0.0;
            Eigen::VectorXd margins = (dd.X * theta).cwiseProduct(dd.y);
            for (int k = 0; k < margins.size(); ++k) loss += logistic_loss(margins(k));
            return loss / double(dd.X.rows()) + 0.5 * l2_reg * theta.squaredNorm();
        }
        case TaskKind::TinyMlp: {
            const auto& dd = data[device];
            double loss = 0.0;
            for (int k = 0; k < dd.X.rows(); ++k) {
                loss += logistic_loss(dd.y(k) * mlp_output(*this, theta, dd.X.row(k).transpose()));
            }
            return loss / double(dd.X.rows()) + 0.5 * l2_reg * theta.squaredNorm();
        }
    }
    return 0.0;
}

Eigen::VectorXd LossTask::device_grad(int device, const Eigen::VectorXd& theta) const {
    if (theta.size() != dim) throw std::invalid_argument("theta dimension mismatch");
    switch (kind) {
        case TaskKind::Quadratic:
            return quad_a[device] * theta - quad_b[device];
        case TaskKind::Logistic: {
            const auto& dd = data[device];
            Eigen::VectorXd margins = (dd.X * theta).cwiseProduct(dd.y);
            Eigen::VectorXd coef(margins.size());
            for (int k = 0; k < margins.size(); ++k) {
                coef(k) = dd.y(k) * logistic_weight(margins(k));
            }
            return dd.X.transpose() * coef / double(dd.X.rows()) + l2_reg * theta;
        }
        case TaskKind::TinyMlp: {
            const auto& dd = data[device];
            Eigen::VectorXd g = Eigen::VectorXd::Zero(dim);
            for (int k = 0; k < dd.X.rows(); ++k) {
                mlp_sample_grad(*this, theta, dd.X.row(k).transpose(), dd.y(k), g);
            }
            return g / double(dd.X.rows()) + l2_reg * theta;
        }
    }
    return Eigen::VectorXd::Zero(dim);
}

double LossTask::network_loss(const Eigen::VectorXd& theta) const {
    double total = 0.0;
    for (int i = 0; i < device_count; ++i) total += device_loss(i, theta);
    return total / double(device_count);
}

Eigen::VectorXd LossTask::network_grad(const Eigen::VectorXd& theta) const {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(dim);
    for (int i = 0; i < device_count; ++i) g += device_grad(i, theta);
    return g / double(device_count);
}

double LossTask::test_accuracy(const Eigen::VectorXd& theta) const {
    if (!has_test) return 0.0;
    int correct = 0;
    for (int k = 0; k < test.X.rows(); ++k) {
        const double out = kind == TaskKind::TinyMlp
                               ? mlp_output(*this, theta, test.X.row(k).transpose())
                               : test.X.row(k).dot(theta);
        if ((out >= 0 ? 1.0 : -1.0) == test.y(k)) ++correct;
    }
    return double(correct) / double(test.X.rows());
}

LossTask make_quadratic_task(int device_count, int dim, Seed seed,
                             double target_smoothness, double heterogeneity) {
    if (device_count < 1 || dim < 1) {
        throw std::invalid_argument("quadratic task needs device_count, dim >= 1");
    }
    LossTask t;
    t.kind = TaskKind::Quadratic;
    t.dim = dim;
    t.device_count = device_count;
    auto rng = make_rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.3, target_smoothness);
    double max_eig = 0.0;
    for (int i = 0; i < device_count; ++i) {
        Eigen::MatrixXd g(dim, dim);
        for (int r = 0; r < dim; ++r)
            for (int c = 0; c < dim; ++c) g(r, c) = gauss(rng);
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
        Eigen::MatrixXd q = qr.householderQ();
        Eigen::VectorXd eigs(dim);
        for (int k = 0; k < dim; ++k) eigs(k) = unif(rng);
        max_eig = std::max(max_eig, eigs.maxCoeff());
        t.quad_a.push_back(q * eigs.asDiagonal() * q.transpose());
        Eigen::VectorXd b(dim);
        for (int k = 0; k < dim; ++k) b(k) = heterogeneity * gauss(rng);
        t.quad_b.push_back(b);
    }
    t.smoothness = max_eig;
    // f* from the exact minimizer of the averaged quadratic
    Eigen::MatrixXd a_bar = Eigen::MatrixXd::Zero(dim, dim);
    Eigen::VectorXd b_bar = Eigen::VectorXd::Zero(dim);
    for (int i = 0; i < device_count; ++i) {
        a_bar += t.quad_a[i];
        b_bar += t.quad_b[i];
    }
    a_bar /= device_count;
    b_bar /= device_count;
    Eigen::VectorXd theta_star = a_bar.ldlt().solve(b_bar);
    t.f_star = 0.5 * theta_star.dot(a_bar * theta_star) - b_bar.dot(theta_star);
    t.has_f_star = true;
    return t;
}

namespace {

DeviceData sample_mixture(int n, int dim, double shift, double condition,
                          std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::bernoulli_distribution coin(0.5);
    Eigen::VectorXd mean(dim);
    for (int k = 0; k < dim; ++k) mean(k) = (k % 2 == 0 ? 1.0 : -1.0) * 0.8;
    // per-coordinate noise scales from 1 up to the condition number
    Eigen::VectorXd scale(dim);
    for (int k = 0; k < dim; ++k) {
        scale(k) = dim > 1 ? std::pow(condition, double(k) / (dim - 1)) : 1.0;
    }
    DeviceData d;
    d.X.resize(n, dim);
    d.y.resize(n);
    for (int r = 0; r < n; ++r) {
        const double label = coin(rng) ? 1.0 : -1.0;
        for (int c = 0; c < dim; ++c) {
            d.X(r, c) = label * mean(c) + shift + scale(c) * gauss(rng);
        }
        d.y(r) = label;
    }
    return d;
}

double logistic_smoothness(const LossTask& t) {
    double worst = 0.0;
    for (const auto& dd : t.data) {
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(dd.X);
        const double s = svd.singularValues()(0);
        worst = std::max(worst, s * s / (4.0 * double(dd.X.rows())));
    }
    return worst + t.l2_reg;
}

// Newton on the network logistic objective; d is small.
double solve_logistic_fstar(const LossTask& t) {
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(t.dim);
    for (int it = 0; it < 100; ++it) {
        Eigen::VectorXd g = t.network_grad(theta);
        if (g.norm() < 1e-12) break;
        Eigen::MatrixXd h = Eigen::MatrixXd::Zero(t.dim, t.dim);
        for (const auto& dd : t.data) {
            Eigen::VectorXd margins = (dd.X * theta).cwiseProduct(dd.y);
            for (int k = 0; k < margins.size(); ++k) {
                const double s = 1.0 / (1.0 + std::exp(-margins(k)));
                h.noalias() +=
                    (s * (1.0 - s) / double(dd.X.rows())) *
                    (dd.X.row(k).transpose() * dd.X.row(k));
            }
        }
        h /= double(t.data.size());
        h.diagonal().array() += t.l2_reg;
        theta -= h.ldlt().solve(g);
    }
    return t.network_loss(theta);
}

}  // namespace

LossTask make_logistic_task(int device_count, int dim, int samples_per_device,
                            Seed seed, double l2_reg, int test_samples,
                            double condition_number) {
    if (condition_number < 1.0) {
        throw std::invalid_argument("condition_number must be >= 1");
    }
    if (device_count < 1 || dim < 1 || samples_per_device < 1) {
        throw std::invalid_argument("logistic task needs positive sizes");
    }
    LossTask t;
    t.kind = TaskKind::Logistic;
    t.dim = dim;
    t.device_count = device_count;
    t.l2_reg = l2_reg;
    auto rng = make_rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int i = 0; i < device_count; ++i) {
        const double shift = 0.3 * gauss(rng);  // device heterogeneity
        t.data.push_back(
            sample_mixture(samples_per_device, dim, shift, condition_number, rng));
    }
    t.test = sample_mixture(test_samples, dim, 0.0, condition_number, rng);
    t.has_test = true;
    t.smoothness = logistic_smoothness(t);
    t.f_star = solve_logistic_fstar(t);
    t.has_f_star = true;
    return t;
}

LossTask make_tiny_mlp_task(int device_count, int input_dim, int hidden,
                            int samples_per_device, Seed seed, double l2_reg,
                            int test_samples) {
    if (device_count < 1 || input_dim < 1 || hidden < 1 || samples_per_device < 1) {
        throw std::invalid_argument("tiny-mlp task needs positive sizes");
    }
    LossTask t;
    t.kind = TaskKind::TinyMlp;
    t.device_count = device_count;
    t.input_dim = input_dim;
    t.mlp_hidden = hidden;
    t.dim = hidden * input_dim + 2 * hidden + 1;
    t.l2_reg = l2_reg;
    auto rng = make_rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int i = 0; i < device_count; ++i) {
        const double shift = 0.3 * gauss(rng);
        t.data.push_back(
            sample_mixture(samples_per_device, input_dim, shift, 1.0, rng));
    }
    t.test = sample_mixture(test_samples, input_dim, 0.0, 1.0, rng);
    t.has_test = true;
    t.smoothness = 10.0;  // nonconvex; config-level constant, not derived
    return t;
}

Eigen::VectorXd gradient(const GradientOracle& oracle, int device,
                         const Eigen::VectorXd& theta, std::mt19937_64& rng) {
    const LossTask& t = *oracle.task;
    if (theta.size() != t.dim) throw std::invalid_argument("theta dimension mismatch");
    Eigen::VectorXd g;
    if (t.kind == TaskKind::Quadratic) {
        g = t.device_grad(device, theta);
        if (oracle.noise_std > 0.0) {
            std::normal_distribution<double> gauss(0.0, oracle.noise_std);
            for (int k = 0; k < g.size(); ++k) g(k) += gauss(rng);
        }
    } else {
        const auto& dd = t.data[device];
        const int n = static_cast<int>(dd.X.rows());
        const int batch = std::min(oracle.batch_size, n);
        std::uniform_int_distribution<int> pick(0, n - 1);
        if (t.kind == TaskKind::Logistic) {
            g = Eigen::VectorXd::Zero(t.dim);
            for (int b = 0; b < batch; ++b) {
                const int k = pick(rng);
                const double margin = dd.y(k) * dd.X.row(k).dot(theta);
                g += dd.y(k) * logistic_weight(margin) * dd.X.row(k).transpose();
            }
            g /= double(batch);
            g += t.l2_reg * theta;
        } else {
            g = Eigen::VectorXd::Zero(t.dim);
            for (int b = 0; b < batch; ++b) {
                const int k = pick(rng);
                mlp_sample_grad(t, theta, dd.X.row(k).transpose(), dd.y(k), g);
            }
            g /= double(batch);
            g += t.l2_reg * theta;
        }
    }
    if (oracle.clip_bound) {
        const double norm = g.norm();
        if (norm > *oracle.clip_bound) g *= *oracle.clip_bound / norm;
    }
    return g;
}

Eigen::VectorXd gradient(const GradientOracle& oracle, int device,
                         const Eigen::VectorXd& theta, Seed seed) {
    auto rng = make_rng(seed);
    return gradient(oracle, device, theta, rng);
}

OracleConstants measure_oracle_constants(
    const GradientOracle& oracle, const std::vector<Eigen::VectorXd>& probe_points,
    int num_samples, Seed seed) {
    if (probe_points.empty()) {
        throw std::invalid_argument("at least one probe point required");
    }
    const LossTask& t = *oracle.task;
    OracleConstants out;
    for (std::size_t pi = 0; pi < probe_points.size(); ++pi) {
        for (int i = 0; i < t.device_count; ++i) {
            const Eigen::VectorXd exact = t.device_grad(i, probe_points[pi]);
            auto rng = make_rng(seed, pi * 1000003ULL + std::uint64_t(i));
            double var_sum = 0.0;
            for (int s = 0; s < num_samples; ++s) {
                Eigen::VectorXd g = gradient(oracle, i, probe_points[pi], rng);
                var_sum += (g - exact).squaredNorm();
                out.g2_hat = std::max(out.g2_hat, g.squaredNorm());
            }
            out.sigma2_hat = std::max(out.sigma2_hat, var_sum / num_samples);
        }
    }
    return out;
}

StraggleDraw sample_straggle(const StragglerModel& model, int device,
                             int iteration, Seed seed, double barrier) {
    auto rng = make_rng(mix_seed(seed, std::uint64_t(iteration)),
                        std::uint64_t(device));
    std::exponential_distribution<double> expo(model.mu);
    StraggleDraw draw;
    draw.compute_time = model.t_min + expo(rng);
    if (model.mode == StragglerMode::Bernoulli) {
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        draw.is_straggler = unif(rng) < model.rho.at(device);
    } else {
        draw.is_straggler = draw.compute_time > barrier;
    }
    return draw;
}

void local_update(DeviceState& state, bool is_straggler, int current_iteration,
                  double eta) {
    if (is_straggler) return;  // model and pending gradient untouched
    if (!state.pending) {
        throw std::logic_error("non-straggler has no pending gradient to apply");
    }
    if (eta <= 0.0) throw std::invalid_argument("eta must be positive");
    state.model -= eta * state.pending->grad;
    state.staleness = current_iteration - state.pending->issue_iteration;
    state.completed_compute_time = state.pending->compute_time;
    state.pending.reset();
}

std::vector<double> equalized_learning_rates(const std::vector<double>& rho,
                                             double smoothness, int iterations) {
    if (smoothness <= 0.0 || iterations <= 0) {
        throw std::invalid_argument("smoothness and iteration count must be positive");
    }
    double rho_min = 1.0;  // min_j (1 - rho_j)
    for (double r : rho) {
        if (r < 0.0 || r >= 1.0) {
            throw std::invalid_argument("straggle probabilities must lie in [0, 1)");
        }
        rho_min = std::min(rho_min, 1.0 - r);
    }
    const double base = std::sqrt(4.0 * smoothness * iterations);
    std::vector<double> eta(rho.size());
    for (std::size_t i = 0; i < rho.size(); ++i) {
        eta[i] = rho_min / (base * (1.0 - rho[i]));
    }
    return eta;
}

}  // namespace adsgd
