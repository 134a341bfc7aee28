#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "adsgd/channel.hpp"
#include "adsgd/compute.hpp"
#include "adsgd/engine.hpp"
#include "adsgd/topology.hpp"

namespace adsgd {

struct TopologySection {
    BaseTopology base{TopologyKind::Ring, 9};
    LinkFailureModel failure;
};

struct ComputeSection {
    TaskKind task = TaskKind::Quadratic;
    int dim = 5;
    int samples_per_device = 200;
    Seed data_seed = 7;
    int batch_size = 16;
    double noise_std = 0.0;
    std::optional<double> clip_bound;
    std::vector<double> rho;  // empty = all zero
    double t_min = 0.25;
    double mu = 1.0;
    StragglerMode straggler_mode = StragglerMode::Bernoulli;
    int mlp_hidden = 8;
    double l2_reg = 1e-2;
    double target_smoothness = 4.0;
    double condition_number = 1.0;
};

struct EngineSection {
    int iterations = 100;
    double zeta = 1.0;
    SchedulerMode scheduler = SchedulerMode::Async;
    double t_max = 1.25;
    double round_period = 1.0;
    EtaSchedule eta_schedule = EtaSchedule::Explicit;
    double eta = 0.01;
    InitMode init = InitMode::Zeros;
    double init_scale = 1.0;
    bool record_gamma = false;
};

struct AnalysisSection {
    int consensus_rate_samples = 2000;
    int probes = 16;
    bool verify = false;
};

enum class ExperimentMode { Train, SpectralGap };

struct ExperimentSpec {
    std::string name = "experiment";
    ExperimentMode mode = ExperimentMode::Train;
    std::vector<Seed> seeds{1};
    std::string output;  // empty = ADSGD_OUT or ./out
    TopologySection topology;
    ChannelConfig channel;
    ComputeSection compute;
    EngineSection engine;
    AnalysisSection analysis;
    // sweep key ("section.field" or "section.sub.field") -> value list
    std::map<std::string, std::vector<nlohmann::json>> sweep;
};

ExperimentSpec parse_spec(const nlohmann::json& j);
ExperimentSpec parse_config(const std::string& path);
nlohmann::json to_json(const ExperimentSpec& spec);

// Materialized helpers derived from the spec.
LossTask build_task(const ComputeSection& c, int device_count);
StragglerModel build_straggler(const ComputeSection& c, int device_count);
GradientOracle build_oracle(const ComputeSection& c, const LossTask& task);
RunConfig build_run_config(const ExperimentSpec& spec, const LossTask& task,
                           Seed seed);

// Cross product of sweep assignments applied to the spec's JSON form.
// Each entry: (tag like "zeta=0.5,...", fully parsed spec).
std::vector<std::pair<std::string, ExperimentSpec>> expand_sweep(
    const ExperimentSpec& spec);

}  // namespace adsgd
