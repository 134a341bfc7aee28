#pragma once

#include <string>
#include <vector>

#include "adsgd/analysis.hpp"
#include "adsgd/config.hpp"

namespace adsgd {

struct ExperimentOptions {
    std::string out_root;  // empty: $ADSGD_OUT or ./out
    int workers = 0;       // 0: library default
    bool force = false;
    std::uint64_t seed_offset = 0;
};

// Executes every (sweep variant x seed) run of the spec, writing per-run
// CSV traces, an aggregate CSV and a JSON summary under
// <out_root>/<spec.name>/. Returns the experiment directory.
std::string run_experiment(const ExperimentSpec& spec,
                           const ExperimentOptions& opt);

// Runs the bound checks for the spec's configuration and writes
// bounds.json into the experiment directory.
nlohmann::json verify_bounds(const ExperimentSpec& spec,
                             const ExperimentOptions& opt);

std::vector<std::string> preset_names();
nlohmann::json preset_config(const std::string& name);

// Tidy per-figure CSV with columns (series, x, y, y_err).
void emit_plotdata(const std::string& experiment_dir, const std::string& figure,
                   const std::string& out_csv);

std::string default_output_root();

}  // namespace adsgd
