#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "adsgd/rng.hpp"

namespace adsgd {

enum class TaskKind { Quadratic, Logistic, TinyMlp };

struct DeviceData {
    Eigen::MatrixXd X;  // rows are samples
    Eigen::VectorXd y;  // labels in {-1, +1}
};

// Network objective f = (1/m) sum_i f_i with exact per-device gradients.
struct LossTask {
    TaskKind kind = TaskKind::Quadratic;
    int dim = 0;
    int device_count = 0;

    // quadratic: f_i = 0.5 theta' A_i theta - b_i' theta
    std::vector<Eigen::MatrixXd> quad_a;
    std::vector<Eigen::VectorXd> quad_b;

    // logistic / tiny-mlp
    std::vector<DeviceData> data;
    DeviceData test;
    double l2_reg = 0.0;
    int input_dim = 0;
    int mlp_hidden = 0;

    double smoothness = 1.0;  // L
    double f_star = 0.0;
    bool has_f_star = false;
    bool has_test = false;

    double device_loss(int device, const Eigen::VectorXd& theta) const;
    Eigen::VectorXd device_grad(int device, const Eigen::VectorXd& theta) const;
    double network_loss(const Eigen::VectorXd& theta) const;
    Eigen::VectorXd network_grad(const Eigen::VectorXd& theta) const;
    double test_accuracy(const Eigen::VectorXd& theta) const;
};

LossTask make_quadratic_task(int device_count, int dim, Seed seed,
                             double target_smoothness = 4.0,
                             double heterogeneity = 1.0);
// condition_number > 1 stretches the feature noise across coordinates,
// tilting the Bayes direction away from the class-mean direction so test
// accuracy improves gradually instead of after one step.
LossTask make_logistic_task(int device_count, int dim, int samples_per_device,
                            Seed seed, double l2_reg = 1e-2,
                            int test_samples = 500,
                            double condition_number = 1.0);
LossTask make_tiny_mlp_task(int device_count, int input_dim, int hidden,
                            int samples_per_device, Seed seed,
                            double l2_reg = 1e-3, int test_samples = 500);

// Minibatch oracle; quadratic tasks use the exact gradient plus optional
// additive N(0, noise_std^2 I) noise.
struct GradientOracle {
    const LossTask* task = nullptr;
    int batch_size = 16;
    std::optional<double> clip_bound;  // G: rescale to norm <= G when set
    double noise_std = 0.0;
};

Eigen::VectorXd gradient(const GradientOracle& oracle, int device,
                         const Eigen::VectorXd& theta, std::mt19937_64& rng);
Eigen::VectorXd gradient(const GradientOracle& oracle, int device,
                         const Eigen::VectorXd& theta, Seed seed);

struct OracleConstants {
    double sigma2_hat = 0.0;  // max empirical gradient-noise variance
    double g2_hat = 0.0;      // max empirical squared gradient norm
};

OracleConstants measure_oracle_constants(
    const GradientOracle& oracle, const std::vector<Eigen::VectorXd>& probe_points,
    int num_samples, Seed seed);

enum class StragglerMode { Bernoulli, TimingDerived };

struct StragglerModel {
    std::vector<double> rho;  // per-device straggle probabilities, each < 1
    double t_min = 0.25;      // shifted-exponential compute time
    double mu = 1.0;
    StragglerMode mode = StragglerMode::Bernoulli;
};

struct StraggleDraw {
    bool is_straggler = false;
    double compute_time = 0.0;
};

// barrier: time budget consulted in timing-derived mode only.
StraggleDraw sample_straggle(const StragglerModel& model, int device,
                             int iteration, Seed seed,
                             double barrier = std::numeric_limits<double>::infinity());

struct PendingGradient {
    Eigen::VectorXd grad;
    int issue_iteration = 0;
    double compute_time = 0.0;
    Eigen::VectorXd eval_point;  // model the gradient was evaluated at
};

struct DeviceState {
    Eigen::VectorXd model;
    std::optional<PendingGradient> pending;
    int staleness = 0;  // tau of the most recently applied gradient
    double completed_compute_time = 0.0;
};

// Local step: stragglers keep model and pending gradient,
// others apply the (possibly stale) pending gradient and clear it.
void local_update(DeviceState& state, bool is_straggler, int current_iteration,
                  double eta);

// eta_i = min_j(1-rho_j) / (sqrt(4 L T) (1-rho_i)).
std::vector<double> equalized_learning_rates(const std::vector<double>& rho,
                                             double smoothness, int iterations);

}  // namespace adsgd
