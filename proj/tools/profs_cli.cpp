#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"

#include "profs/groupseq.hpp"
#include "profs/io.hpp"
#include "profs/profs.hpp"
#include "profs/simulation.hpp"
#include "profs/version.hpp"
#include "profs/winstat.hpp"

namespace {

namespace fs = std::filesystem;

int default_threads() {
    const unsigned n = std::thread::hardware_concurrency();
    return n == 0 ? 1 : static_cast<int>(n);
}

std::string fmt(double x, const char* spec = "%.4f") {
    char buf[64];
    std::snprintf(buf, sizeof(buf), spec, x);
    return buf;
}

struct TestArgs {
    std::string dataset;
    std::string schedule;
    int quantile = 0;
    double horizon = 0.0;
    bool horizon_set = false;
    double s_inf = 0.0;
    bool stratified = false;
    double accuracy = profs::mvn::kDefaultAccuracy;
    std::uint64_t seed = 0;
    int threads = default_threads();
    std::string out;
};

struct SimArgs {
    std::string scenario;
    std::string tests = "fs,profs4";
    std::string out;
    bool paper_table2 = false;
    int replicates = 0;      // 0 = keep scenario value
    int n_total = 0;         // 0 = keep scenario value
    double mvn_accuracy = 5e-4;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int threads = default_threads();
};

struct GsArgs {
    std::string design;
    std::vector<std::string> cohorts;
    std::string out;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int threads = default_threads();
};

std::vector<double> parse_schedule_times(const std::string& text) {
    std::vector<double> times;
    std::string cur;
    auto flush = [&]() {
        if (cur.empty()) return;
        char* end = nullptr;
        const double v = std::strtod(cur.c_str(), &end);
        if (end != cur.c_str() + cur.size()) {
            throw profs::io::ConfigError("invalid schedule time: \"" + cur + "\"");
        }
        times.push_back(v);
        cur.clear();
    };
    for (char c : text) {
        if (c == ',') {
            flush();
        } else if (!std::isspace(static_cast<unsigned char>(c))) {
            cur += c;
        }
    }
    flush();
    if (times.empty()) throw profs::io::ConfigError("empty schedule");
    return times;
}

// ---- test ---------------------------------------------------------------

int run_test(const TestArgs& a) {
    const profs::TrialDataset data = profs::io::read_dataset_csv(a.dataset);

    if ((a.schedule.empty() && a.quantile == 0) ||
        (!a.schedule.empty() && a.quantile != 0)) {
        std::cerr << "error: usage: give exactly one of --schedule or --quantile\n";
        return 2;
    }

    auto make_schedule = [&]() -> profs::ExaminationSchedule {
        if (a.quantile != 0) {
            if (!a.horizon_set) {
                throw profs::io::ConfigError("--quantile requires --horizon");
            }
            return profs::quantile_schedule(a.horizon, a.quantile, a.s_inf);
        }
        std::vector<double> times = parse_schedule_times(a.schedule);
        const double horizon = a.horizon_set ? a.horizon : times.back();
        return profs::ExaminationSchedule(std::move(times), horizon, a.s_inf);
    };
    const profs::ExaminationSchedule schedule = make_schedule();

    const profs::ProfsResult res = profs::profs_test(
        data, schedule, a.accuracy, a.seed, a.stratified, a.threads);

    const int p = schedule.count();
    std::string head_time = "Examination time ";
    std::string head_r = "R_k              ";
    for (int k = 0; k < p; ++k) {
        head_time += fmt(schedule.times()[k], "%10.6g");
        head_r += fmt(res.r_vec[k], "%10.4f");
    }

    const bool last_kept = res.sigma.dim() > 0 && res.sigma(p - 1, p - 1) > 0.0;
    const double r_final = last_kept ? res.r_vec[p - 1] : 0.0;
    const double p_final =
        last_kept
            ? 1.0 - (2.0 * profs::mvn::standard_normal_cdf(std::fabs(r_final)) - 1.0)
            : 1.0;

    std::cout << "Test             ProFS (max over " << p << " examinations)"
              << (last_kept ? "   FS (final examination)" : "") << "\n";
    std::cout << "Test statistic   Z_MAX = " << fmt(res.z_max);
    if (res.argmax_examination >= 0) {
        std::cout << " (examination " << res.argmax_examination + 1 << ")";
    }
    if (last_kept) std::cout << "   R = " << fmt(r_final);
    std::cout << "\n";
    std::cout << "p-value          " << fmt(res.p_value, "%.4g");
    if (last_kept) std::cout << "   " << fmt(p_final, "%.4g") << " (FS)";
    std::cout << "\n" << head_time << "\n" << head_r << "\n";
    if (!res.dropped.empty()) {
        std::cout << "Dropped (zero-variance) examinations:";
        for (int k : res.dropped) std::cout << " " << k + 1;
        std::cout << "\n";
    }
    if (res.degenerate) {
        std::cout << "All examinations degenerate; p-value fixed at 1.\n";
    }
    std::cout << "MVN accuracy     " << fmt(res.mvn.error_estimate, "%.2e")
              << " (" << res.mvn.samples_used << " points"
              << (res.mvn.converged ? "" : ", accuracy target not reached") << ")\n";

    if (!a.out.empty()) {
        profs::io::RunManifest manifest;
        manifest.command = "test";
        manifest.inputs = {a.dataset};
        manifest.options = {
            {"schedule", a.schedule},
            {"quantile", std::to_string(a.quantile)},
            {"horizon", a.horizon_set ? fmt(a.horizon, "%.10g") : ""},
            {"s_inf", fmt(a.s_inf, "%.10g")},
            {"stratified", a.stratified ? "1" : "0"},
            {"accuracy", fmt(a.accuracy, "%.10g")},
        };
        manifest.seed = a.seed;
        manifest.version = profs::kVersion;
        manifest.started = profs::io::iso_utc_now();

        profs::io::ResultContext ctx;
        ctx.manifest_hash = profs::io::RunManifest::hash_hex(manifest.hash());
        ctx.seed = a.seed;
        ctx.stratified = a.stratified;
        profs::io::write_profs_result_json(a.out, res, schedule, data, ctx);

        manifest.finished = profs::io::iso_utc_now();
        manifest.outputs = {a.out};
        manifest.write(a.out + ".manifest.json");
    }
    return 0;
}

// ---- simulate -----------------------------------------------------------

std::vector<profs::sim::ScenarioConfig> table2_scenarios() {
    static const double pairs[][2] = {
        {0.0, 0.0}, {0.0, 0.3}, {0.1, 0.2}, {0.3, 0.0}, {0.2, 0.1}};
    std::vector<profs::sim::ScenarioConfig> out;
    for (const auto& pr : pairs) {
        const bool null_case = pr[0] == 0.0 && pr[1] == 0.0;
        for (double w : (null_case ? std::vector<double>{0.0, 0.5}
                                   : std::vector<double>{0.5, 0.0})) {
            for (double s : {500.0, 1000.0, 1500.0}) {
                char id[96];
                std::snprintf(id, sizeof(id), "const_aD%g_aH%g_W%g_S%g", pr[0],
                              pr[1], w, s);
                out.push_back(profs::sim::paper_scenario(id));
            }
        }
    }
    return out;
}

std::string family_of(const profs::sim::ScenarioConfig& cfg) {
    char suffix[32];
    std::snprintf(suffix, sizeof(suffix), "_S%g", cfg.follow_up);
    const std::string id = cfg.id;
    const std::string suf = suffix;
    if (id.size() > suf.size() &&
        id.compare(id.size() - suf.size(), suf.size(), suf) == 0) {
        return id.substr(0, id.size() - suf.size());
    }
    return id;
}

void write_table2_csv(const std::string& path,
                      const std::vector<profs::sim::OperatingCharacteristics>& runs,
                      const std::vector<profs::sim::ScenarioConfig>& scenarios,
                      const std::string& hash) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error(path + ": cannot open for writing");
    out << "# manifest " << hash << "\n";
    out << "aD,aH,W,S,ProFS-2,ProFS-4,ProFS-5,ProFS-10\n";
    for (std::size_t i = 0; i < runs.size(); ++i) {
        const auto& cfg = scenarios[i];
        double ad = 0.0, ah = 0.0, w = 0.0;
        std::sscanf(cfg.id.c_str(), "const_aD%lf_aH%lf_W%lf", &ad, &ah, &w);
        out << fmt(ad, "%g") << "," << fmt(ah, "%g") << "," << fmt(w, "%g") << ","
            << fmt(cfg.follow_up, "%g");
        for (const auto& t : runs[i].tests) out << "," << fmt(100.0 * t.rate, "%.2f");
        out << "\n";
    }
}

int run_simulate(const SimArgs& a) {
    if (a.scenario.empty() && !a.paper_table2) {
        std::cerr << "error: usage: give a scenario file or --paper-table2\n";
        return 2;
    }

    std::vector<profs::sim::ScenarioConfig> scenarios;
    std::vector<profs::sim::TestSpec> tests;
    if (a.paper_table2) {
        scenarios = table2_scenarios();
        for (const char* name : {"profs2", "profs4", "profs5", "profs10"}) {
            tests.push_back(profs::sim::parse_test_spec(name));
        }
    } else {
        scenarios.push_back(profs::io::read_scenario_config(a.scenario));
        std::string cur;
        for (char c : a.tests + ",") {
            if (c == ',') {
                if (!cur.empty()) tests.push_back(profs::sim::parse_test_spec(cur));
                cur.clear();
            } else if (!std::isspace(static_cast<unsigned char>(c))) {
                cur += c;
            }
        }
        if (tests.empty()) {
            std::cerr << "error: usage: --tests must name at least one test\n";
            return 2;
        }
    }

    for (auto& cfg : scenarios) {
        if (a.replicates > 0) cfg.replicates = a.replicates;
        if (a.n_total > 0) cfg.n_total = a.n_total;
        if (a.seed_set) cfg.seed = a.seed;
        cfg.validate();
    }

    fs::create_directories(a.out);

    profs::io::RunManifest manifest;
    manifest.command = "simulate";
    if (!a.scenario.empty()) manifest.inputs = {a.scenario};
    manifest.options = {
        {"tests", a.tests},
        {"paper_table2", a.paper_table2 ? "1" : "0"},
        {"replicates", std::to_string(a.replicates)},
        {"n_total", std::to_string(a.n_total)},
        {"mvn_accuracy", fmt(a.mvn_accuracy, "%.10g")},
    };
    manifest.seed = a.seed_set ? a.seed : scenarios.front().seed;
    manifest.version = profs::kVersion;
    manifest.started = profs::io::iso_utc_now();
    const std::string hash = profs::io::RunManifest::hash_hex(manifest.hash());

    std::vector<profs::sim::OperatingCharacteristics> runs;
    std::vector<profs::io::PlotRow> plot;
    for (const auto& cfg : scenarios) {
        runs.push_back(profs::sim::estimate_operating_characteristics(
            cfg, tests, false, a.threads, a.mvn_accuracy));
        for (const auto& t : runs.back().tests) {
            plot.push_back({family_of(cfg), cfg.control.kendall_w(), cfg.follow_up,
                            t.test, t.rate});
        }
        std::cout << cfg.id;
        for (const auto& t : runs.back().tests) {
            std::cout << "  " << t.test << "=" << fmt(100.0 * t.rate, "%.2f") << "%";
        }
        std::cout << "\n";
    }

    const std::string results_path = (fs::path(a.out) / "results.csv").string();
    const std::string plot_path = (fs::path(a.out) / "plot_data.csv").string();
    profs::io::write_results_csv(results_path, runs, hash);
    profs::io::write_plot_data_csv(plot_path, plot, hash);
    manifest.outputs = {results_path, plot_path};
    if (a.paper_table2) {
        const std::string table_path = (fs::path(a.out) / "table2.csv").string();
        write_table2_csv(table_path, runs, scenarios, hash);
        manifest.outputs.push_back(table_path);
    }
    manifest.finished = profs::io::iso_utc_now();
    manifest.write((fs::path(a.out) / "manifest.json").string());
    return 0;
}

// ---- groupseq -----------------------------------------------------------

int run_groupseq(const GsArgs& a) {
    profs::gs::GsDesign design = profs::io::read_design_config(a.design);
    if (a.seed_set) design.seed = a.seed;

    if (static_cast<int>(a.cohorts.size()) != design.looks) {
        std::cerr << "error: config: design has " << design.looks
                  << " looks but " << a.cohorts.size() << " cohort files given\n";
        return 2;
    }
    std::vector<profs::TrialDataset> cohorts;
    for (const auto& path : a.cohorts) {
        profs::TrialDataset cohort = profs::io::read_dataset_csv(path);
        if (cohort.treated_count() == 0 || cohort.treated_count() == cohort.n()) {
            std::cerr << "error: data: cohort " << path << " has a single arm\n";
            return 2;
        }
        cohorts.push_back(std::move(cohort));
    }

    const profs::gs::GsRunState state =
        profs::gs::gs_boundaries_and_decide(design, cohorts, a.threads);

    std::cout << "look  cumulative_n  observed_max  boundary  decision\n";
    for (const auto& rec : state.looks) {
        std::cout << fmt(rec.look, "%4.0f") << "  " << fmt(rec.cumulative_n, "%12.0f")
                  << "  " << fmt(rec.observed_max, "%12.4f") << "  "
                  << fmt(rec.boundary, "%8.4f") << "  "
                  << profs::gs::to_string(rec.decision) << "\n";
    }
    std::cout << "decision: " << profs::gs::to_string(state.final_decision) << "\n";

    if (!a.out.empty()) {
        profs::io::RunManifest manifest;
        manifest.command = "groupseq";
        manifest.inputs.push_back(a.design);
        for (const auto& c : a.cohorts) manifest.inputs.push_back(c);
        manifest.seed = design.seed;
        manifest.version = profs::kVersion;
        manifest.started = profs::io::iso_utc_now();

        profs::io::ResultContext ctx;
        ctx.manifest_hash = profs::io::RunManifest::hash_hex(manifest.hash());
        ctx.seed = design.seed;
        profs::io::write_gs_trace_json(a.out, design, state, ctx);

        manifest.finished = profs::io::iso_utc_now();
        manifest.outputs = {a.out};
        manifest.write(a.out + ".manifest.json");
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hierarchical composite-endpoint tests with progressive follow-up"};
    app.set_version_flag("--version", profs::kVersion);
    app.require_subcommand(1);

    TestArgs ta;
    auto* test_cmd = app.add_subcommand("test", "Run the test on a dataset CSV");
    test_cmd->add_option("dataset", ta.dataset, "dataset CSV")->required();
    test_cmd->add_option("--schedule", ta.schedule, "comma-separated examination times");
    test_cmd->add_option("--quantile", ta.quantile, "number of quantile examinations");
    auto* horizon_opt =
        test_cmd->add_option("--horizon", ta.horizon, "maximal follow-up S");
    test_cmd->add_option("--s-inf", ta.s_inf, "earliest informative follow-up");
    test_cmd->add_flag("--stratified", ta.stratified, "within-stratum comparisons only");
    test_cmd->add_option("--accuracy", ta.accuracy, "MVN accuracy target");
    test_cmd->add_option("--seed", ta.seed, "RNG seed")->envname("PROFS_SEED");
    test_cmd->add_option("--threads", ta.threads, "worker threads");
    test_cmd->add_option("--out", ta.out, "result JSON path");

    SimArgs sa;
    auto* sim_cmd = app.add_subcommand("simulate", "Estimate operating characteristics");
    sim_cmd->add_option("scenario", sa.scenario, "scenario config file");
    sim_cmd->add_option("--tests", sa.tests, "comma-separated test names");
    sim_cmd->add_option("--out", sa.out, "output directory")->required();
    sim_cmd->add_flag("--paper-table2", sa.paper_table2,
                      "run the examination-count study grid");
    sim_cmd->add_option("--replicates", sa.replicates, "override replicate count");
    sim_cmd->add_option("--n", sa.n_total, "override sample size");
    sim_cmd->add_option("--mvn-accuracy", sa.mvn_accuracy, "MVN accuracy target");
    auto* sim_seed = sim_cmd->add_option("--seed", sa.seed, "RNG seed");
    sim_seed->envname("PROFS_SEED");
    sim_cmd->add_option("--threads", sa.threads, "worker threads");

    GsArgs ga;
    auto* gs_cmd = app.add_subcommand("groupseq", "Group-sequential run over cohorts");
    gs_cmd->add_option("design", ga.design, "design config file")->required();
    gs_cmd->add_option("cohorts", ga.cohorts, "cohort dataset CSVs, one per look")
        ->required();
    gs_cmd->add_option("--out", ga.out, "trace JSON path");
    auto* gs_seed = gs_cmd->add_option("--seed", ga.seed, "RNG seed");
    gs_seed->envname("PROFS_SEED");
    gs_cmd->add_option("--threads", ga.threads, "worker threads");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: usage: " << e.what() << "\n";
        return 2;
    }
    ta.horizon_set = horizon_opt->count() > 0;
    sa.seed_set = sim_seed->count() > 0 || std::getenv("PROFS_SEED") != nullptr;
    ga.seed_set = gs_seed->count() > 0 || std::getenv("PROFS_SEED") != nullptr;

    try {
        if (test_cmd->parsed()) return run_test(ta);
        if (sim_cmd->parsed()) return run_simulate(sa);
        if (gs_cmd->parsed()) return run_groupseq(ga);
    } catch (const profs::io::ParseError& e) {
        std::cerr << "error: csv: " << e.what() << "\n";
        return 2;
    } catch (const profs::io::ConfigError& e) {
        std::cerr << "error: config: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: data: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: internal: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
