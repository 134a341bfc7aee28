#include "adsgd/experiment.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace adsgd {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

std::string sanitize(const std::string& tag) {
    std::string s = tag;
    for (auto& c : s) {
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '=' && c != '.' &&
            c != '-' && c != '+') {
            c = '_';
        }
    }
    return s;
}

void write_trace_csv(const std::string& path, const RunResult& result) {
    std::ofstream out(path);
    out << "t,wall_clock_s,consensus_dist,grad_norm_sq,loss,acc,stragglers,connected\n";
    for (const auto& r : result.records) {
        out << r.t << ',' << fmt(r.wall_clock_s) << ',' << fmt(r.consensus_dist)
            << ',' << fmt(r.grad_norm_sq) << ',' << fmt(r.loss) << ','
            << fmt(r.accuracy) << ',' << r.stragglers << ','
            << (r.connected ? 1 : 0) << '\n';
    }
}

struct CompletedRun {
    std::string tag;
    Seed seed;
    RunResult result;
};

std::string prepare_dir(const ExperimentSpec& spec, const ExperimentOptions& opt) {
    const std::string root =
        !opt.out_root.empty()
            ? opt.out_root
            : (!spec.output.empty() ? spec.output : default_output_root());
    const fs::path dir = fs::path(root) / spec.name;
    if (fs::exists(dir / "summary.json") && !opt.force) {
        throw std::runtime_error("experiment output already exists at " +
                                 dir.string() + "; pass --force to overwrite");
    }
    fs::create_directories(dir / "runs");
    return dir.string();
}

std::string run_spectral_gap(const ExperimentSpec& spec,
                             const ExperimentOptions& opt) {
    const std::string dir = prepare_dir(spec, opt);
    auto variants = expand_sweep(spec);
    std::ofstream out(fs::path(dir) / "aggregate.csv");
    out << "topology,delay_tolerance,mean_gap,stderr\n";
    for (const auto& [tag, vspec] : variants) {
        const auto res = average_spectral_gap(
            vspec.topology.base, vspec.topology.failure,
            vspec.analysis.consensus_rate_samples,
            vspec.seeds.front() + opt.seed_offset);
        out << to_string(vspec.topology.base.kind) << ','
            << fmt(vspec.topology.failure.delay_tolerance) << ','
            << fmt(res.mean) << ',' << fmt(res.std_err) << '\n';
    }
    json summary;
    summary["config"] = to_json(spec);
    summary["variants"] = variants.size();
    std::ofstream(fs::path(dir) / "summary.json") << summary.dump(2) << '\n';
    return dir;
}

}  // namespace

std::string default_output_root() {
    if (const char* env = std::getenv("ADSGD_OUT")) return env;
    return "out";
}

std::string run_experiment(const ExperimentSpec& spec,
                           const ExperimentOptions& opt) {
    if (spec.mode == ExperimentMode::SpectralGap) {
        return run_spectral_gap(spec, opt);
    }
    const std::string dir = prepare_dir(spec, opt);
    auto variants = expand_sweep(spec);

    struct Job {
        const ExperimentSpec* spec;
        std::string tag;
        Seed seed;
    };
    std::vector<Job> jobs;
    for (auto& [tag, vspec] : variants) {
        for (Seed s : vspec.seeds) jobs.push_back(Job{&vspec, tag, s + opt.seed_offset});
    }

    std::vector<CompletedRun> completed(jobs.size());
    std::string failure_msg;
#pragma omp parallel for schedule(dynamic) num_threads( \
        opt.workers > 0 ? opt.workers : 1) shared(failure_msg)
    for (std::size_t k = 0; k < jobs.size(); ++k) {
        const Job& job = jobs[k];
        try {
            const ExperimentSpec& vs = *job.spec;
            LossTask task = build_task(vs.compute, vs.topology.base.node_count);
            auto straggler = build_straggler(vs.compute, vs.topology.base.node_count);
            auto oracle = build_oracle(vs.compute, task);
            auto cfg = build_run_config(vs, task, job.seed);
            completed[k] = CompletedRun{
                job.tag, job.seed,
                run(cfg, task, vs.topology.base, vs.topology.failure, vs.channel,
                    straggler, oracle)};
        } catch (const std::exception& e) {
#pragma omp critical
            if (failure_msg.empty()) {
                failure_msg = std::string(e.what()) + " [variant " + job.tag +
                              ", seed " + std::to_string(job.seed) + "]";
            }
        }
    }
    if (!failure_msg.empty()) {
        throw std::runtime_error("run failed: " + failure_msg +
                                 "\nconfig: " + to_json(spec).dump(2));
    }

    std::ofstream agg(fs::path(dir) / "aggregate.csv");
    agg << "tag,seed,iterations,final_wall_clock_s,final_consensus_dist,"
           "final_grad_norm_sq,final_loss,final_acc,mean_grad_norm_sq\n";
    json runs_summary = json::array();
    for (const auto& c : completed) {
        const std::string file =
            "runs/" + sanitize(c.tag) + "__s" + std::to_string(c.seed) + ".csv";
        write_trace_csv((fs::path(dir) / file).string(), c.result);
        const auto& last = c.result.records.back();
        double mean_gns = 0.0;
        for (const auto& r : c.result.records) mean_gns += r.grad_norm_sq;
        mean_gns /= double(c.result.records.size());
        agg << c.tag << ',' << c.seed << ',' << c.result.records.size() << ','
            << fmt(last.wall_clock_s) << ',' << fmt(last.consensus_dist) << ','
            << fmt(last.grad_norm_sq) << ',' << fmt(last.loss) << ','
            << fmt(last.accuracy) << ',' << fmt(mean_gns) << '\n';
        json r;
        r["tag"] = c.tag;
        r["seed"] = c.seed;
        r["trace"] = file;
        r["final_loss"] = last.loss;
        r["final_consensus_dist"] = last.consensus_dist;
        r["mean_grad_norm_sq"] = mean_gns;
        r["max_grad_sq_applied"] = c.result.max_grad_sq_applied;
        r["max_noise_var"] = c.result.max_noise_var;
        r["eta"] = c.result.eta;
        r["zeta"] = c.result.zeta;
        runs_summary.push_back(std::move(r));
    }
    json summary;
    summary["config"] = to_json(spec);
    summary["runs"] = std::move(runs_summary);
    std::ofstream(fs::path(dir) / "summary.json") << summary.dump(2) << '\n';
    return dir;
}

nlohmann::json verify_bounds(const ExperimentSpec& spec,
                             const ExperimentOptions& opt) {
    ExperimentSpec vs = spec;
    vs.engine.record_gamma = true;
    const int m = vs.topology.base.node_count;
    LossTask task = build_task(vs.compute, m);
    auto straggler = build_straggler(vs.compute, m);
    auto oracle = build_oracle(vs.compute, task);

    const auto rate = estimate_consensus_rate(
        vs.topology.base, vs.topology.failure, vs.analysis.consensus_rate_samples,
        vs.analysis.probes, vs.seeds.front() + opt.seed_offset);

    std::vector<double> final_consensus;
    std::vector<double> trace_avg_grad;
    double g2 = 0.0, gamma_hat = 0.0, f0 = 0.0;
    std::vector<double> sigma2_w(m, 0.0);
    double zeta_used = vs.engine.zeta;
    double eta_used = vs.engine.eta;
    for (Seed s : vs.seeds) {
        auto cfg = build_run_config(vs, task, s + opt.seed_offset);
        auto res = run(cfg, task, vs.topology.base, vs.topology.failure, vs.channel,
                       straggler, oracle);
        final_consensus.push_back(res.records.back().consensus_dist);
        double mean_gns = 0.0;
        for (const auto& r : res.records) mean_gns += r.grad_norm_sq;
        trace_avg_grad.push_back(mean_gns / double(res.records.size()));
        g2 = std::max(g2, res.max_grad_sq_applied);
        for (int i = 0; i < m; ++i) {
            sigma2_w[i] = std::max(sigma2_w[i], task.dim * res.max_noise_var[i]);
        }
        gamma_hat = std::max(gamma_hat, estimate_staleness_gamma(res.records).gamma_hat);
        f0 = res.initial_loss;
        zeta_used = res.zeta;
        eta_used = *std::max_element(res.eta.begin(), res.eta.end());
    }

    std::vector<Eigen::VectorXd> probes{Eigen::VectorXd::Zero(task.dim),
                                        Eigen::VectorXd::Ones(task.dim)};
    const auto oc = measure_oracle_constants(oracle, probes, 200,
                                             vs.seeds.front() + opt.seed_offset);

    BoundInputs in;
    in.p = rate.p_hat;
    in.zeta = zeta_used;
    in.eta = eta_used;
    in.m = m;
    in.g2 = g2;
    in.sigma2 = oc.sigma2_hat;
    in.sigma2_w = sigma2_w;
    in.smoothness = task.smoothness;
    in.gamma = gamma_hat;
    in.rho = straggler.rho;
    in.iterations = vs.engine.iterations;
    in.f0 = f0;
    in.f_star = task.has_f_star ? task.f_star : 0.0;

    json report;
    report["measured"] = {{"p_hat", rate.p_hat},
                          {"q_hat", rate.q_hat},
                          {"delta_hat", rate.delta_hat},
                          {"g2_hat", g2},
                          {"sigma2_hat", oc.sigma2_hat},
                          {"sigma2_w", sigma2_w},
                          {"gamma_hat", gamma_hat},
                          {"smoothness", task.smoothness},
                          {"f0", f0},
                          {"f_star", in.f_star}};
    if (static_cast<int>(final_consensus.size()) >= 30) {
        const auto rep = check_consensus_bound(final_consensus, in);
        report["consensus_bound"] = {{"holds", rep.holds},
                                     {"empirical", rep.empirical},
                                     {"bound", rep.bound},
                                     {"stderr", rep.std_err},
                                     {"margin", rep.margin}};
    } else {
        report["consensus_bound"] = {
            {"skipped", "needs >= 30 seeds, got " +
                            std::to_string(final_consensus.size())}};
    }
    if (in.gamma < 1.0) {
        double mean_avg = 0.0, mean_sq = 0.0;
        for (double v : trace_avg_grad) {
            mean_avg += v;
            mean_sq += v * v;
        }
        mean_avg /= double(trace_avg_grad.size());
        const double var =
            std::max(0.0, mean_sq / trace_avg_grad.size() - mean_avg * mean_avg);
        const double se =
            trace_avg_grad.size() > 1
                ? std::sqrt(var / (trace_avg_grad.size() - 1))
                : 0.0;
        const double bound = stationarity_bound(in);
        report["stationarity"] = {{"trace_avg_grad_norm_sq", mean_avg},
                             {"stderr", se},
                             {"bound", bound},
                             {"holds", mean_avg <= bound + 3.0 * se}};
    } else {
        report["stationarity"] = {{"skipped", "measured gamma >= 1, bound vacuous"}};
    }

    const std::string root =
        !opt.out_root.empty()
            ? opt.out_root
            : (!spec.output.empty() ? spec.output : default_output_root());
    const fs::path dir = fs::path(root) / spec.name;
    fs::create_directories(dir);
    std::ofstream(dir / "bounds.json") << report.dump(2) << '\n';
    return report;
}

std::vector<std::string> preset_names() { return {"fig2", "fig3", "fig4"}; }

nlohmann::json preset_config(const std::string& name) {
    if (name == "fig2") {
        return json{
            {"name", "fig2"},
            {"mode", "spectral-gap"},
            {"seeds", {101}},
            {"topology",
             {{"kind", "ring"},
              {"nodes", 9},
              {"failure",
               {{"kind", "delay-tolerance"},
                {"delay_tolerance", 1.0},
                {"link_time_rate", 1.0}}}}},
            {"analysis", {{"consensus_rate_samples", 2000}}},
            {"sweep",
             {{"topology.kind", {"complete-mesh", "torus-2d", "ring"}},
              {"topology.failure.delay_tolerance", {0.25, 0.5, 1.0, 2.0, 4.0, 8.0}}}}};
    }
    if (name == "fig3") {
        return json{
            {"name", "fig3"},
            {"seeds", {1, 2, 3, 4, 5, 6, 7, 8, 9, 10}},
            {"topology",
             {{"kind", "ring"},
              {"nodes", 15},
              {"failure", {{"kind", "gain-threshold"}, {"h_min", 0.3}}}}},
            {"channel", {{"sigma_w", 0.01}}},
            {"compute",
             {{"task", "logistic"},
              {"dim", 12},
              {"samples_per_device", 64},
              {"condition_number", 40.0},
              {"batch_size", 16},
              {"straggler_mode", "timing"}}},
            {"engine",
             {{"iterations", 1400},
              {"zeta", 0.5},
              {"scheduler", "async"},
              {"eta", 0.002},
              {"round_period", 1.0}}},
            {"sweep", {{"topology.failure.h_min", {0.3, 0.9, 1.3}}}}};
    }
    if (name == "fig4") {
        return json{
            {"name", "fig4"},
            {"seeds", {1, 2, 3, 4, 5, 6, 7, 8, 9, 10}},
            {"topology", {{"kind", "complete-mesh"}, {"nodes", 15}}},
            {"channel", {{"sigma_w", 0.01}}},
            {"compute",
             {{"task", "logistic"},
              {"dim", 12},
              {"samples_per_device", 64},
              {"condition_number", 40.0},
              {"batch_size", 16},
              {"straggler_mode", "timing"},
              {"t_min", 0.25},
              {"mu", 1.0}}},
            {"engine",
             {{"iterations", 1400},
              {"zeta", 0.5},
              {"scheduler", "async"},
              {"eta", 0.002},
              {"t_max", 1.0},
              {"round_period", 0.0}}},
            {"sweep",
             {{"engine.scheduler", {"async", "sync", "sync-barrier"}},
              {"engine.t_max", {1.0, 1.25}}}}};
    }
    throw std::invalid_argument("unknown preset '" + name +
                                "'; available: fig2, fig3, fig4");
}

namespace {

std::vector<std::vector<std::string>> read_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("missing file: " + path.string());
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        rows.push_back(std::move(cells));
    }
    return rows;
}

}  // namespace

void emit_plotdata(const std::string& experiment_dir, const std::string& figure,
                   const std::string& out_csv) {
    const fs::path dir(experiment_dir);
    std::ofstream out(out_csv);
    if (figure == "fig2") {
        auto rows = read_csv(dir / "aggregate.csv");
        out << "series,x,y,y_err\n";
        for (std::size_t r = 1; r < rows.size(); ++r) {
            out << rows[r][0] << ',' << rows[r][1] << ',' << rows[r][2] << ','
                << rows[r][3] << '\n';
        }
        return;
    }
    if (figure != "fig3" && figure != "fig4") {
        throw std::invalid_argument("unknown figure '" + figure + "'");
    }
    // accuracy-vs-time: group per-run traces by sweep tag, average per
    // iteration index across seeds
    const fs::path runs = dir / "runs";
    if (!fs::exists(runs)) {
        throw std::runtime_error("no completed runs found under " + runs.string());
    }
    std::map<std::string, std::vector<fs::path>> by_tag;
    for (const auto& entry : fs::directory_iterator(runs)) {
        const std::string stem = entry.path().stem().string();
        const auto sep = stem.rfind("__s");
        if (sep == std::string::npos) continue;
        by_tag[stem.substr(0, sep)].push_back(entry.path());
    }
    if (by_tag.empty()) {
        throw std::runtime_error("zero completed runs in " + runs.string());
    }
    out << "series,x,y,y_err\n";
    for (auto& [tag, files] : by_tag) {
        std::sort(files.begin(), files.end());
        std::vector<std::vector<std::vector<std::string>>> traces;
        std::size_t rows_count = std::string::npos;
        for (const auto& f : files) {
            traces.push_back(read_csv(f));
            rows_count = std::min(rows_count, traces.back().size());
        }
        for (std::size_t r = 1; r < rows_count; ++r) {
            double wall = 0.0, acc = 0.0, acc_sq = 0.0;
            for (const auto& tr : traces) {
                wall += std::stod(tr[r][1]);
                const double a = std::stod(tr[r][5]);
                acc += a;
                acc_sq += a * a;
            }
            const double n = double(traces.size());
            const double mean = acc / n;
            const double var = std::max(0.0, acc_sq / n - mean * mean);
            out << tag << ',' << fmt(wall / n) << ',' << fmt(mean) << ','
                << fmt(n > 1 ? std::sqrt(var / (n - 1)) : 0.0) << '\n';
        }
    }
}

}  // namespace adsgd
