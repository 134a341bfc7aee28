#include <CLI11.hpp>
#include <iostream>

#include "adsgd/experiment.hpp"

namespace {

adsgd::ExperimentSpec load_spec(const std::string& config_path,
                                const std::string& preset) {
    if (!preset.empty()) {
        return adsgd::parse_spec(adsgd::preset_config(preset));
    }
    if (config_path.empty()) {
        throw std::invalid_argument("either --config or --preset is required");
    }
    return adsgd::parse_config(config_path);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Asynchronous decentralized SGD simulator over unreliable "
                 "wireless networks"};
    app.require_subcommand(1);

    std::string config_path, preset, out_dir, exp_dir, figure, plot_out;
    adsgd::ExperimentOptions opt;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "experiment config (JSON)");
        cmd->add_option("--preset", preset, "built-in preset (fig2/fig3/fig4)");
        cmd->add_option("--out", out_dir, "output root (default $ADSGD_OUT or ./out)");
        cmd->add_option("--seed-offset", opt.seed_offset, "offset added to every seed");
        cmd->add_option("--workers", opt.workers, "parallel run workers");
        cmd->add_flag("--force", opt.force, "overwrite existing outputs");
    };

    auto* run_cmd = app.add_subcommand("run", "execute an experiment");
    add_common(run_cmd);
    auto* sweep_cmd = app.add_subcommand("sweep", "execute an experiment sweep");
    add_common(sweep_cmd);
    auto* verify_cmd =
        app.add_subcommand("verify", "run the analysis bound checks");
    add_common(verify_cmd);

    auto* plot_cmd = app.add_subcommand("plotdata", "emit plot-ready CSV");
    plot_cmd->add_option("--dir", exp_dir, "experiment output directory")->required();
    plot_cmd->add_option("--figure", figure, "figure id (fig2/fig3/fig4)")->required();
    plot_cmd->add_option("--out", plot_out, "output CSV path");

    auto* presets_cmd = app.add_subcommand("presets", "list built-in presets");

    CLI11_PARSE(app, argc, argv);

    try {
        opt.out_root = out_dir;
        if (presets_cmd->parsed()) {
            for (const auto& name : adsgd::preset_names()) {
                std::cout << name << '\n';
            }
            return 0;
        }
        if (plot_cmd->parsed()) {
            if (plot_out.empty()) plot_out = exp_dir + "/" + figure + "_plot.csv";
            adsgd::emit_plotdata(exp_dir, figure, plot_out);
            std::cout << "wrote " << plot_out << '\n';
            return 0;
        }
        auto spec = load_spec(config_path, preset);
        if (run_cmd->parsed() || sweep_cmd->parsed()) {
            const auto variants = adsgd::expand_sweep(spec);
            std::cout << "experiment '" << spec.name << "': " << variants.size()
                      << " variant(s) x " << spec.seeds.size() << " seed(s) = "
                      << variants.size() * spec.seeds.size() << " run(s)\n";
            const auto dir = adsgd::run_experiment(spec, opt);
            std::cout << "results in " << dir << '\n';
            if (spec.analysis.verify) {
                adsgd::verify_bounds(spec, opt);
                std::cout << "bound report: " << dir << "/bounds.json\n";
            }
            return 0;
        }
        if (verify_cmd->parsed()) {
            const auto report = adsgd::verify_bounds(spec, opt);
            std::cout << report.dump(2) << '\n';
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
