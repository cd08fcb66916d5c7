#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "profs/groupseq.hpp"
#include "profs/profs.hpp"
#include "profs/simulation.hpp"
#include "profs/winstat.hpp"

// File formats: the dataset CSV, scenario and design config files
// (key=value or JSON), and the result documents the CLI emits.

namespace profs::io {

// Malformed input file; the message carries row/column diagnostics.
class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid or incomplete configuration.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Dataset CSV: header `id,arm,stratum,time_1,censored_1,...`, arm and
// censored in {0,1}, empty stratum field = none.
TrialDataset read_dataset_csv(const std::string& path);
void write_dataset_csv(const TrialDataset& data, const std::string& path);

// Scenario file, key=value lines or a JSON object. Either the full hazard
// keys or `preset = <catalog id>` plus overrides.
sim::ScenarioConfig read_scenario_config(const std::string& path);

// Group-sequential design file: looks, per_arm_increment, stop_probs,
// draws, seed, and a schedule given as explicit times or as a quantile
// examination count with a horizon.
gs::GsDesign read_design_config(const std::string& path);

// Provenance sidecar: identifies the exact run. The hash covers the
// command, input file bytes, normalized options, seed and version;
// timestamps are excluded so result files stay byte-identical.
struct RunManifest {
    std::string command;
    std::vector<std::string> inputs;
    std::vector<std::pair<std::string, std::string>> options;
    std::uint64_t seed = 0;
    std::string version;
    std::string started;
    std::string finished;
    std::vector<std::string> outputs;

    std::uint64_t hash() const;
    static std::string hash_hex(std::uint64_t h);
    void write(const std::string& path) const;
};

std::string iso_utc_now();

struct ResultContext {
    std::string manifest_hash;
    std::uint64_t seed = 0;
    bool stratified = false;
};

void write_profs_result_json(const std::string& path, const ProfsResult& result,
                             const ExaminationSchedule& schedule,
                             const TrialDataset& data, const ResultContext& ctx);

void write_results_csv(const std::string& path,
                       const std::vector<sim::OperatingCharacteristics>& runs,
                       const std::string& manifest_hash);

// One row per scenario x test: family (scenario id without the _S suffix),
// Kendall's W, follow-up S, test name, power.
struct PlotRow {
    std::string family;
    double kendall_w = 0.0;
    double follow_up = 0.0;
    std::string test;
    double power = 0.0;
};
void write_plot_data_csv(const std::string& path, const std::vector<PlotRow>& rows,
                         const std::string& manifest_hash);

void write_gs_trace_json(const std::string& path, const gs::GsDesign& design,
                         const gs::GsRunState& state, const ResultContext& ctx);

}  // namespace profs::io
