#include "adsgd/config.hpp"

#include <fstream>
#include <stdexcept>

namespace adsgd {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
    throw std::invalid_argument("config error at '" + path + "': " + msg);
}

void check_keys(const json& j, const std::string& path,
                std::initializer_list<const char*> allowed) {
    if (!j.is_object()) fail(path, "expected an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool known = false;
        for (const char* k : allowed) {
            if (it.key() == k) {
                known = true;
                break;
            }
        }
        if (!known) fail(path + "." + it.key(), "unknown key");
    }
}

double get_num(const json& j, const std::string& path, const char* key,
               double def) {
    if (!j.contains(key)) return def;
    if (!j[key].is_number()) fail(path + "." + key, "expected a number");
    return j[key].get<double>();
}

int get_int(const json& j, const std::string& path, const char* key, int def) {
    if (!j.contains(key)) return def;
    if (!j[key].is_number_integer()) fail(path + "." + key, "expected an integer");
    return j[key].get<int>();
}

bool get_bool(const json& j, const std::string& path, const char* key, bool def) {
    if (!j.contains(key)) return def;
    if (!j[key].is_boolean()) fail(path + "." + key, "expected a boolean");
    return j[key].get<bool>();
}

std::string get_str(const json& j, const std::string& path, const char* key,
                    const std::string& def) {
    if (!j.contains(key)) return def;
    if (!j[key].is_string()) fail(path + "." + key, "expected a string");
    return j[key].get<std::string>();
}

TopologyKind parse_topology_kind(const std::string& s, const std::string& path) {
    if (s == "complete-mesh") return TopologyKind::CompleteMesh;
    if (s == "ring") return TopologyKind::Ring;
    if (s == "torus-2d") return TopologyKind::Torus2d;
    fail(path, "unknown topology kind '" + s + "'");
}

FailureKind parse_failure_kind(const std::string& s, const std::string& path) {
    if (s == "gain-threshold") return FailureKind::GainThreshold;
    if (s == "delay-tolerance") return FailureKind::DelayTolerance;
    if (s == "always-on") return FailureKind::AlwaysOn;
    fail(path, "unknown failure kind '" + s + "'");
}

TaskKind parse_task_kind(const std::string& s, const std::string& path) {
    if (s == "quadratic") return TaskKind::Quadratic;
    if (s == "logistic") return TaskKind::Logistic;
    if (s == "tiny-mlp") return TaskKind::TinyMlp;
    fail(path, "unknown task kind '" + s + "'");
}

SchedulerMode parse_scheduler(const std::string& s, const std::string& path) {
    if (s == "async") return SchedulerMode::Async;
    if (s == "sync") return SchedulerMode::Sync;
    if (s == "sync-barrier") return SchedulerMode::SyncBarrier;
    fail(path, "unknown scheduler '" + s + "'");
}

TopologySection parse_topology(const json& j) {
    TopologySection s;
    if (j.is_null()) return s;
    check_keys(j, "topology", {"kind", "nodes", "failure"});
    s.base.kind = parse_topology_kind(get_str(j, "topology", "kind", "ring"),
                                      "topology.kind");
    s.base.node_count = get_int(j, "topology", "nodes", 9);
    if (j.contains("failure")) {
        const auto& f = j["failure"];
        check_keys(f, "topology.failure",
                   {"kind", "h_min", "delay_tolerance", "link_time_rate"});
        s.failure.kind = parse_failure_kind(
            get_str(f, "topology.failure", "kind", "always-on"),
            "topology.failure.kind");
        s.failure.h_min = get_num(f, "topology.failure", "h_min", 0.0);
        s.failure.delay_tolerance =
            get_num(f, "topology.failure", "delay_tolerance", 1.0);
        s.failure.link_time_rate =
            get_num(f, "topology.failure", "link_time_rate", 1.0);
    }
    return s;
}

ChannelConfig parse_channel(const json& j) {
    ChannelConfig c;
    if (j.is_null()) return c;
    check_keys(j, "channel",
               {"sigma_w", "max_power", "alignment", "gamma", "schedule",
                "inversion_floor"});
    c.sigma_w = get_num(j, "channel", "sigma_w", 0.0);
    c.power.max_power = get_num(j, "channel", "max_power", 1.0);
    const std::string a = get_str(j, "channel", "alignment", "fixed-gamma");
    if (a == "fixed-gamma") {
        c.power.alignment = AlignmentMode::FixedGamma;
    } else if (a == "power-constrained") {
        c.power.alignment = AlignmentMode::PowerConstrained;
    } else {
        fail("channel.alignment", "unknown alignment '" + a + "'");
    }
    c.power.fixed_gamma = get_num(j, "channel", "gamma", 1.0);
    const std::string sched = get_str(j, "channel", "schedule", "sequential");
    if (sched == "sequential") {
        c.schedule_mode = ScheduleMode::Sequential;
    } else if (sched == "coloring") {
        c.schedule_mode = ScheduleMode::Coloring;
    } else {
        fail("channel.schedule", "unknown schedule '" + sched + "'");
    }
    c.inversion_floor = get_num(j, "channel", "inversion_floor", 1e-3);
    return c;
}

ComputeSection parse_compute(const json& j) {
    ComputeSection c;
    if (j.is_null()) return c;
    check_keys(j, "compute",
               {"task", "dim", "samples_per_device", "data_seed", "batch_size",
                "noise_std", "clip_bound", "rho", "t_min", "mu",
                "straggler_mode", "mlp_hidden", "l2_reg", "target_smoothness",
                "condition_number"});
    c.task = parse_task_kind(get_str(j, "compute", "task", "quadratic"),
                             "compute.task");
    c.dim = get_int(j, "compute", "dim", 5);
    c.samples_per_device = get_int(j, "compute", "samples_per_device", 200);
    c.data_seed = Seed(get_num(j, "compute", "data_seed", 7));
    c.batch_size = get_int(j, "compute", "batch_size", 16);
    c.noise_std = get_num(j, "compute", "noise_std", 0.0);
    if (j.contains("clip_bound") && !j["clip_bound"].is_null()) {
        if (!j["clip_bound"].is_number()) fail("compute.clip_bound", "expected a number or null");
        c.clip_bound = j["clip_bound"].get<double>();
    }
    if (j.contains("rho")) {
        const auto& r = j["rho"];
        if (r.is_number()) {
            c.rho.assign(1, r.get<double>());  // broadcast to m later
        } else if (r.is_array()) {
            for (const auto& v : r) {
                if (!v.is_number()) fail("compute.rho", "expected numbers");
                c.rho.push_back(v.get<double>());
            }
        } else {
            fail("compute.rho", "expected a number or array");
        }
    }
    c.t_min = get_num(j, "compute", "t_min", 0.25);
    c.mu = get_num(j, "compute", "mu", 1.0);
    const std::string sm = get_str(j, "compute", "straggler_mode", "bernoulli");
    if (sm == "bernoulli") {
        c.straggler_mode = StragglerMode::Bernoulli;
    } else if (sm == "timing") {
        c.straggler_mode = StragglerMode::TimingDerived;
    } else {
        fail("compute.straggler_mode", "unknown mode '" + sm + "'");
    }
    c.mlp_hidden = get_int(j, "compute", "mlp_hidden", 8);
    c.l2_reg = get_num(j, "compute", "l2_reg", 1e-2);
    c.target_smoothness = get_num(j, "compute", "target_smoothness", 4.0);
    c.condition_number = get_num(j, "compute", "condition_number", 1.0);
    return c;
}

EngineSection parse_engine(const json& j) {
    EngineSection e;
    if (j.is_null()) return e;
    check_keys(j, "engine",
               {"iterations", "zeta", "scheduler", "t_max", "round_period",
                "eta", "init", "init_scale", "record_gamma"});
    e.iterations = get_int(j, "engine", "iterations", 100);
    e.zeta = get_num(j, "engine", "zeta", 1.0);
    e.scheduler = parse_scheduler(get_str(j, "engine", "scheduler", "async"),
                                  "engine.scheduler");
    e.t_max = get_num(j, "engine", "t_max", 1.25);
    e.round_period = get_num(j, "engine", "round_period", 1.0);
    if (j.contains("eta")) {
        if (j["eta"].is_string()) {
            if (j["eta"].get<std::string>() != "derived") {
                fail("engine.eta", "expected a number or \"derived\"");
            }
            e.eta_schedule = EtaSchedule::Derived;
        } else if (j["eta"].is_number()) {
            e.eta_schedule = EtaSchedule::Explicit;
            e.eta = j["eta"].get<double>();
        } else {
            fail("engine.eta", "expected a number or \"derived\"");
        }
    }
    const std::string init = get_str(j, "engine", "init", "zeros");
    if (init == "zeros") {
        e.init = InitMode::Zeros;
    } else if (init == "random") {
        e.init = InitMode::Random;
    } else {
        fail("engine.init", "unknown init '" + init + "'");
    }
    e.init_scale = get_num(j, "engine", "init_scale", 1.0);
    e.record_gamma = get_bool(j, "engine", "record_gamma", false);
    return e;
}

AnalysisSection parse_analysis(const json& j) {
    AnalysisSection a;
    if (j.is_null()) return a;
    check_keys(j, "analysis", {"consensus_rate_samples", "probes", "verify"});
    a.consensus_rate_samples = get_int(j, "analysis", "consensus_rate_samples", 2000);
    a.probes = get_int(j, "analysis", "probes", 16);
    a.verify = get_bool(j, "analysis", "verify", false);
    return a;
}

const char* scheduler_name(SchedulerMode s) {
    switch (s) {
        case SchedulerMode::Async: return "async";
        case SchedulerMode::Sync: return "sync";
        case SchedulerMode::SyncBarrier: return "sync-barrier";
    }
    return "?";
}

const char* task_name(TaskKind k) {
    switch (k) {
        case TaskKind::Quadratic: return "quadratic";
        case TaskKind::Logistic: return "logistic";
        case TaskKind::TinyMlp: return "tiny-mlp";
    }
    return "?";
}

}  // namespace

ExperimentSpec parse_spec(const nlohmann::json& j) {
    check_keys(j, "<root>",
               {"name", "mode", "seeds", "output", "topology", "channel",
                "compute", "engine", "analysis", "sweep"});
    ExperimentSpec spec;
    spec.name = get_str(j, "<root>", "name", "experiment");
    const std::string mode = get_str(j, "<root>", "mode", "train");
    if (mode == "train") {
        spec.mode = ExperimentMode::Train;
    } else if (mode == "spectral-gap") {
        spec.mode = ExperimentMode::SpectralGap;
    } else {
        fail("mode", "unknown mode '" + mode + "'");
    }
    if (j.contains("seeds")) {
        if (!j["seeds"].is_array() || j["seeds"].empty()) {
            fail("seeds", "expected a non-empty array of integers");
        }
        spec.seeds.clear();
        for (const auto& v : j["seeds"]) {
            if (!v.is_number_integer()) fail("seeds", "expected integers");
            spec.seeds.push_back(v.get<Seed>());
        }
    }
    spec.output = get_str(j, "<root>", "output", "");
    spec.topology = parse_topology(j.value("topology", json()));
    spec.channel = parse_channel(j.value("channel", json()));
    spec.compute = parse_compute(j.value("compute", json()));
    spec.engine = parse_engine(j.value("engine", json()));
    spec.analysis = parse_analysis(j.value("analysis", json()));
    if (j.contains("sweep")) {
        if (!j["sweep"].is_object()) fail("sweep", "expected an object");
        for (auto it = j["sweep"].begin(); it != j["sweep"].end(); ++it) {
            if (!it.value().is_array() || it.value().empty()) {
                fail("sweep." + it.key(), "expected a non-empty array");
            }
            std::vector<json> vals(it.value().begin(), it.value().end());
            spec.sweep[it.key()] = std::move(vals);
        }
    }
    // sweep keys must address existing config fields
    const json base = to_json(spec);
    for (const auto& [key, vals] : spec.sweep) {
        std::string ptr = "/" + key;
        for (auto& c : ptr) {
            if (c == '.') c = '/';
        }
        if (!base.contains(json::json_pointer(ptr))) {
            fail("sweep." + key, "does not address an existing config field");
        }
    }
    return spec;
}

ExperimentSpec parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::invalid_argument("config file not found: " + path);
    }
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw std::invalid_argument("config is not valid JSON (" + path +
                                    "): " + e.what());
    }
    return parse_spec(j);
}

nlohmann::json to_json(const ExperimentSpec& spec) {
    json j;
    j["name"] = spec.name;
    j["mode"] = spec.mode == ExperimentMode::Train ? "train" : "spectral-gap";
    j["seeds"] = spec.seeds;
    j["output"] = spec.output;
    j["topology"] = {
        {"kind", to_string(spec.topology.base.kind)},
        {"nodes", spec.topology.base.node_count},
        {"failure",
         {{"kind", to_string(spec.topology.failure.kind)},
          {"h_min", spec.topology.failure.h_min},
          {"delay_tolerance", spec.topology.failure.delay_tolerance},
          {"link_time_rate", spec.topology.failure.link_time_rate}}}};
    j["channel"] = {
        {"sigma_w", spec.channel.sigma_w},
        {"max_power", spec.channel.power.max_power},
        {"alignment", spec.channel.power.alignment == AlignmentMode::FixedGamma
                          ? "fixed-gamma"
                          : "power-constrained"},
        {"gamma", spec.channel.power.fixed_gamma},
        {"schedule", spec.channel.schedule_mode == ScheduleMode::Sequential
                         ? "sequential"
                         : "coloring"},
        {"inversion_floor", spec.channel.inversion_floor}};
    j["compute"] = {
        {"task", task_name(spec.compute.task)},
        {"dim", spec.compute.dim},
        {"samples_per_device", spec.compute.samples_per_device},
        {"data_seed", spec.compute.data_seed},
        {"batch_size", spec.compute.batch_size},
        {"noise_std", spec.compute.noise_std},
        {"clip_bound",
         spec.compute.clip_bound ? json(*spec.compute.clip_bound) : json()},
        {"rho", spec.compute.rho},
        {"t_min", spec.compute.t_min},
        {"mu", spec.compute.mu},
        {"straggler_mode",
         spec.compute.straggler_mode == StragglerMode::Bernoulli ? "bernoulli"
                                                                 : "timing"},
        {"mlp_hidden", spec.compute.mlp_hidden},
        {"l2_reg", spec.compute.l2_reg},
        {"target_smoothness", spec.compute.target_smoothness},
        {"condition_number", spec.compute.condition_number}};
    j["engine"] = {
        {"iterations", spec.engine.iterations},
        {"zeta", spec.engine.zeta},
        {"scheduler", scheduler_name(spec.engine.scheduler)},
        {"t_max", spec.engine.t_max},
        {"round_period", spec.engine.round_period},
        {"eta", spec.engine.eta_schedule == EtaSchedule::Derived
                    ? json("derived")
                    : json(spec.engine.eta)},
        {"init", spec.engine.init == InitMode::Zeros ? "zeros" : "random"},
        {"init_scale", spec.engine.init_scale},
        {"record_gamma", spec.engine.record_gamma}};
    j["analysis"] = {{"consensus_rate_samples", spec.analysis.consensus_rate_samples},
                     {"probes", spec.analysis.probes},
                     {"verify", spec.analysis.verify}};
    if (!spec.sweep.empty()) {
        json s = json::object();
        for (const auto& [k, vals] : spec.sweep) s[k] = vals;
        j["sweep"] = s;
    }
    return j;
}

LossTask build_task(const ComputeSection& c, int device_count) {
    switch (c.task) {
        case TaskKind::Quadratic:
            return make_quadratic_task(device_count, c.dim, c.data_seed,
                                       c.target_smoothness);
        case TaskKind::Logistic:
            return make_logistic_task(device_count, c.dim, c.samples_per_device,
                                      c.data_seed, c.l2_reg, 500,
                                      c.condition_number);
        case TaskKind::TinyMlp:
            return make_tiny_mlp_task(device_count, c.dim, c.mlp_hidden,
                                      c.samples_per_device, c.data_seed, c.l2_reg);
    }
    throw std::logic_error("unreachable task kind");
}

StragglerModel build_straggler(const ComputeSection& c, int device_count) {
    StragglerModel s;
    s.t_min = c.t_min;
    s.mu = c.mu;
    s.mode = c.straggler_mode;
    if (c.rho.empty()) {
        s.rho.assign(device_count, 0.0);
    } else if (c.rho.size() == 1) {
        s.rho.assign(device_count, c.rho[0]);
    } else if (static_cast<int>(c.rho.size()) == device_count) {
        s.rho = c.rho;
    } else {
        throw std::invalid_argument(
            "compute.rho must be a scalar or have one entry per device");
    }
    return s;
}

GradientOracle build_oracle(const ComputeSection& c, const LossTask& task) {
    GradientOracle o;
    o.task = &task;
    o.batch_size = c.batch_size;
    o.clip_bound = c.clip_bound;
    o.noise_std = c.noise_std;
    return o;
}

RunConfig build_run_config(const ExperimentSpec& spec, const LossTask& task,
                           Seed seed) {
    RunConfig r;
    r.device_count = spec.topology.base.node_count;
    r.dim = task.dim;
    r.iterations = spec.engine.iterations;
    r.zeta = spec.engine.zeta;
    r.scheduler = spec.engine.scheduler;
    r.t_max = spec.engine.t_max;
    // round_period <= 0 means "match the delay barrier"
    r.round_period = spec.engine.round_period > 0.0 ? spec.engine.round_period
                                                    : spec.engine.t_max;
    r.eta_schedule = spec.engine.eta_schedule;
    r.eta = spec.engine.eta;
    r.init = spec.engine.init;
    r.init_scale = spec.engine.init_scale;
    r.record_gamma_trace = spec.engine.record_gamma;
    r.seed = seed;
    return r;
}

std::vector<std::pair<std::string, ExperimentSpec>> expand_sweep(
    const ExperimentSpec& spec) {
    std::vector<std::pair<std::string, ExperimentSpec>> out;
    if (spec.sweep.empty()) {
        out.emplace_back("base", spec);
        return out;
    }
    nlohmann::json base = to_json(spec);
    base.erase("sweep");
    std::vector<std::pair<std::string, std::vector<nlohmann::json>>> axes(
        spec.sweep.begin(), spec.sweep.end());
    std::vector<std::size_t> idx(axes.size(), 0);
    while (true) {
        nlohmann::json variant = base;
        std::string tag;
        for (std::size_t a = 0; a < axes.size(); ++a) {
            std::string ptr = "/" + axes[a].first;
            for (auto& c : ptr) {
                if (c == '.') c = '/';
            }
            const auto& val = axes[a].second[idx[a]];
            variant[nlohmann::json::json_pointer(ptr)] = val;
            if (!tag.empty()) tag += ",";
            const auto dot = axes[a].first.rfind('.');
            tag += axes[a].first.substr(dot == std::string::npos ? 0 : dot + 1) +
                   "=" + (val.is_string() ? val.get<std::string>() : val.dump());
        }
        out.emplace_back(tag, parse_spec(variant));
        std::size_t a = 0;
        for (; a < axes.size(); ++a) {
            if (++idx[a] < axes[a].second.size()) break;
            idx[a] = 0;
        }
        if (a == axes.size()) break;
    }
    return out;
}

}  // namespace adsgd
