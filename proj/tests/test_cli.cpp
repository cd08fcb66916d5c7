#include "doctest.h"

#include <sys/wait.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include "json.hpp"
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "profs/groupseq.hpp"
#include "profs/io.hpp"
#include "profs/mvn.hpp"
#include "profs/profs.hpp"
#include "profs/version.hpp"
#include "profs/winstat.hpp"

// End-to-end tests that drive the installed binary through a shell, pinning
// exit codes, diagnostics, stdout layout, and the JSON/CSV artifacts against
// the same computations done in-process.

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch_dir() {
    const fs::path dir = fs::temp_directory_path() / "profs_cli_tests";
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::string write_file(const std::string& name, const std::string& content) {
    const fs::path p = scratch_dir() / name;
    std::ofstream out(p, std::ios::binary);
    out << content;
    return p.string();
}

bool contains(const std::string& hay, const std::string& needle) {
    return hay.find(needle) != std::string::npos;
}

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : text) {
        if (c == '\n') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

struct CliRun {
    int status = -1;
    std::string out;
    std::string err;
};

// Runs a full shell command line, capturing stdout/stderr separately.
CliRun run_raw(const std::string& command) {
    static int counter = 0;
    const fs::path o = scratch_dir() / ("stdout_" + std::to_string(counter) + ".txt");
    const fs::path e = scratch_dir() / ("stderr_" + std::to_string(counter) + ".txt");
    ++counter;
    const std::string full =
        command + " > " + o.string() + " 2> " + e.string();
    const int rc = std::system(full.c_str());
    REQUIRE(rc != -1);
    REQUIRE(WIFEXITED(rc));
    return {WEXITSTATUS(rc), slurp(o), slurp(e)};
}

CliRun run_cli(const std::string& args) {
    return run_raw("\"" PROFS_CLI_PATH "\" " + args);
}

std::string fmt4(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.4f", x);
    return buf;
}

// Deterministic two-arm dataset with death and hospitalization layers,
// administratively censored at 1000 days. Treated subjects come first.
profs::TrialDataset two_layer_dataset(std::uint64_t seed, int per_arm) {
    std::mt19937_64 rng(seed);
    std::vector<profs::SubjectRecord> subjects;
    auto observe = [](double t, double cap) -> profs::LayerObservation {
        if (t >= cap) return {cap, true};
        return {t, false};
    };
    for (int arm : {1, 0}) {
        std::exponential_distribution<double> death(arm == 1 ? 0.0006 : 0.0011);
        std::exponential_distribution<double> hosp(arm == 1 ? 0.0012 : 0.0020);
        for (int i = 0; i < per_arm; ++i) {
            profs::SubjectRecord s;
            s.arm = arm;
            s.layers = {observe(death(rng), 1000.0), observe(hosp(rng), 1000.0)};
            subjects.push_back(std::move(s));
        }
    }
    return profs::TrialDataset(std::move(subjects), 2);
}

// Single-layer dataset split into two strata whose treatment effects point in
// opposite directions, so stratified and plain statistics disagree.
profs::TrialDataset stratified_dataset(std::uint64_t seed, int per_cell) {
    std::mt19937_64 rng(seed);
    std::vector<profs::SubjectRecord> subjects;
    auto observe = [](double t) -> profs::LayerObservation {
        if (t >= 800.0) return {800.0, true};
        return {t, false};
    };
    for (const char* label : {"A", "B"}) {
        const bool flip = label[0] == 'B';
        for (int arm : {1, 0}) {
            const bool fast = (arm == 1) == flip;
            std::exponential_distribution<double> dist(fast ? 0.004 : 0.001);
            for (int i = 0; i < per_cell; ++i) {
                profs::SubjectRecord s;
                s.arm = arm;
                s.stratum = label;
                s.layers = {observe(dist(rng))};
                subjects.push_back(std::move(s));
            }
        }
    }
    return profs::TrialDataset(std::move(subjects), 1);
}

// Balanced single-layer cohort with exponential event times, censored at
// `follow_up`. Treated subjects come first.
profs::TrialDataset exp_cohort(std::uint64_t seed, int per_arm,
                               double rate_control, double rate_treated,
                               double follow_up) {
    std::mt19937_64 rng(seed);
    std::vector<profs::SubjectRecord> subjects;
    for (int arm : {1, 0}) {
        std::exponential_distribution<double> dist(arm == 1 ? rate_treated
                                                            : rate_control);
        for (int i = 0; i < per_arm; ++i) {
            const double t = dist(rng);
            profs::SubjectRecord s;
            s.arm = arm;
            if (t >= follow_up) {
                s.layers = {{follow_up, true}};
            } else {
                s.layers = {{t, false}};
            }
            subjects.push_back(std::move(s));
        }
    }
    return profs::TrialDataset(std::move(subjects), 1);
}

std::string write_dataset(const profs::TrialDataset& data, const std::string& name) {
    const std::string path = (scratch_dir() / name).string();
    profs::io::write_dataset_csv(data, path);
    return path;
}

}  // namespace

TEST_CASE("test subcommand reports the max statistic and writes matching json") {
    const std::string csv = write_dataset(two_layer_dataset(101, 30), "main.csv");
    const std::string out = (scratch_dir() / "main_result.json").string();

    const CliRun r = run_cli("test " + csv +
                             " --quantile 4 --horizon 1000 --seed 3 --threads 2 --out " +
                             out);
    REQUIRE(r.status == 0);
    CHECK(r.err.empty());

    // Same computation in-process, reading the dataset back through the same
    // parser the binary uses.
    const profs::TrialDataset data = profs::io::read_dataset_csv(csv);
    const profs::ExaminationSchedule schedule = profs::quantile_schedule(1000.0, 4);
    const profs::ProfsResult want =
        profs::profs_test(data, schedule, profs::mvn::kDefaultAccuracy, 3, false, 2);

    CHECK(contains(r.out, "Test             ProFS (max over 4 examinations)"));
    CHECK(contains(r.out, "Test statistic   Z_MAX = " + fmt4(want.z_max)));
    CHECK(contains(r.out, "p-value          "));
    CHECK(contains(r.out, "Examination time "));
    CHECK(contains(r.out, "R_k              "));
    CHECK(contains(r.out, "MVN accuracy     "));

    const json j = json::parse(slurp(out));
    CHECK(j.at("n").get<int>() == 60);
    CHECK(j.at("m").get<int>() == 30);
    CHECK(j.at("layer_count").get<int>() == 2);
    CHECK(j.at("stratified").get<bool>() == false);
    CHECK(j.at("seed").get<std::uint64_t>() == 3);
    CHECK(j.at("schedule").at("times").get<std::vector<double>>() ==
          std::vector<double>{250.0, 500.0, 750.0, 1000.0});
    CHECK(j.at("schedule").at("horizon").get<double>() == 1000.0);

    CHECK(j.at("z").get<std::vector<double>>() == want.z_vec);
    CHECK(j.at("r").get<std::vector<double>>() == want.r_vec);
    CHECK(j.at("z_max").get<double>() == want.z_max);
    CHECK(j.at("argmax_examination").get<int>() == want.argmax_examination);
    CHECK(j.at("p_value").get<double>() == want.p_value);
    CHECK(j.at("degenerate").get<bool>() == want.degenerate);

    // The manifest sidecar carries the same hash the result file embeds.
    const json m = json::parse(slurp(out + ".manifest.json"));
    CHECK(m.at("command").get<std::string>() == "test");
    CHECK(m.at("seed").get<std::uint64_t>() == 3);
    CHECK(m.at("manifest").get<std::string>() == j.at("manifest").get<std::string>());
    CHECK(m.at("outputs").get<std::vector<std::string>>() ==
          std::vector<std::string>{out});
    CHECK(m.at("version").get<std::string>() == profs::kVersion);
}

TEST_CASE("single-examination schedule also reports the final-examination test") {
    const std::string csv = write_dataset(two_layer_dataset(102, 25), "single.csv");
    const std::string out = (scratch_dir() / "single_result.json").string();

    const CliRun r = run_cli("test " + csv + " --schedule 1000 --seed 3 --out " + out);
    REQUIRE(r.status == 0);
    CHECK(contains(r.out, "(max over 1 examinations)"));
    CHECK(contains(r.out, "FS (final examination)"));
    CHECK(contains(r.out, "   R = "));
    CHECK(contains(r.out, " (FS)"));

    const json j = json::parse(slurp(out));
    const auto rvec = j.at("r").get<std::vector<double>>();
    REQUIRE(rvec.size() == 1);
    // With one examination the max test collapses to the two-sided normal test.
    const double two_sided =
        2.0 * (1.0 - profs::mvn::standard_normal_cdf(std::fabs(rvec[0])));
    CHECK(std::fabs(j.at("p_value").get<double>() - two_sided) <= 1e-12);
}

TEST_CASE("stratified flag restricts comparisons to within-stratum pairs") {
    const std::string csv = write_dataset(stratified_dataset(7, 12), "strata.csv");
    const std::string out = (scratch_dir() / "strata_result.json").string();

    const profs::TrialDataset data = profs::io::read_dataset_csv(csv);
    const profs::ExaminationSchedule schedule({400.0, 800.0}, 800.0);
    const profs::ProfsResult strat =
        profs::profs_test(data, schedule, profs::mvn::kDefaultAccuracy, 5, true);
    const profs::ProfsResult plain =
        profs::profs_test(data, schedule, profs::mvn::kDefaultAccuracy, 5, false);
    REQUIRE(strat.z_vec != plain.z_vec);  // fixture must distinguish the modes

    const CliRun r = run_cli("test " + csv +
                             " --schedule 400,800 --stratified --seed 5 --out " + out);
    REQUIRE(r.status == 0);

    const json j = json::parse(slurp(out));
    CHECK(j.at("stratified").get<bool>() == true);
    CHECK(j.at("z").get<std::vector<double>>() == strat.z_vec);
    CHECK(j.at("p_value").get<double>() == strat.p_value);
}

TEST_CASE("all-tie dataset reports the degenerate fallback") {
    std::vector<profs::SubjectRecord> subjects;
    for (int arm : {1, 1, 0, 0}) {
        profs::SubjectRecord s;
        s.arm = arm;
        s.layers = {{50.0, false}};
        subjects.push_back(std::move(s));
    }
    const std::string csv =
        write_dataset(profs::TrialDataset(std::move(subjects), 1), "ties.csv");

    const CliRun r = run_cli("test " + csv + " --schedule 100");
    REQUIRE(r.status == 0);
    CHECK(contains(r.out, "All examinations degenerate; p-value fixed at 1."));
    CHECK(contains(r.out, "Dropped (zero-variance) examinations: 1"));
    CHECK(contains(r.out, "p-value          1"));
    CHECK(!contains(r.out, "FS (final examination)"));
}

TEST_CASE("usage and config errors exit with code 2") {
    const std::string csv = write_dataset(two_layer_dataset(103, 6), "small.csv");

    SUBCASE("schedule and quantile together") {
        const CliRun r = run_cli("test " + csv + " --schedule 300 --quantile 4 --horizon 300");
        CHECK(r.status == 2);
        CHECK(r.err == "error: usage: give exactly one of --schedule or --quantile\n");
    }
    SUBCASE("neither schedule nor quantile") {
        const CliRun r = run_cli("test " + csv);
        CHECK(r.status == 2);
        CHECK(r.err == "error: usage: give exactly one of --schedule or --quantile\n");
    }
    SUBCASE("quantile without horizon") {
        const CliRun r = run_cli("test " + csv + " --quantile 4");
        CHECK(r.status == 2);
        CHECK(contains(r.err, "error: config: "));
        CHECK(contains(r.err, "--quantile requires --horizon"));
    }
    SUBCASE("unknown flag") {
        const CliRun r = run_cli("test " + csv + " --schedule 300 --bogus");
        CHECK(r.status == 2);
        CHECK(contains(r.err, "error: usage: "));
    }
    SUBCASE("missing subcommand") {
        const CliRun r = run_cli("");
        CHECK(r.status == 2);
        CHECK(contains(r.err, "error: usage: "));
    }
    SUBCASE("help exits zero") {
        const CliRun r = run_cli("--help");
        CHECK(r.status == 0);
        CHECK(contains(r.out, "test"));
        CHECK(contains(r.out, "simulate"));
        CHECK(contains(r.out, "groupseq"));
    }
    SUBCASE("version exits zero") {
        const CliRun r = run_cli("--version");
        CHECK(r.status == 0);
        CHECK(contains(r.out, profs::kVersion));
    }
}

TEST_CASE("malformed csv is reported with row and column") {
    const std::string path = write_file(
        "bad_arm.csv",
        "id,arm,stratum,time_1,censored_1\n"
        "S1,0,,100,0\n"
        "S2,7,,200,0\n");
    const CliRun r = run_cli("test " + path + " --schedule 300");
    CHECK(r.status == 2);
    CHECK(r.err == "error: csv: " + path +
                       ": row 3, column 2: arm must be 0 or 1, found \"7\"\n");
}

TEST_CASE("simulate is deterministic and seed-sensitive") {
    const std::string scen = write_file(
        "scenario.ini",
        "id = demo\n"
        "control_death_rates = 0.0008\n"
        "control_hosp_rates = 0.0013\n"
        "treatment_death_rates = 0.0005\n"
        "treatment_hosp_rates = 0.0009\n"
        "kendall_w = 0.5\n"
        "n_total = 60\n"
        "follow_up = 500\n"
        "replicates = 40\n"
        "alpha = 0.05\n"
        "seed = 4242\n");
    const std::string out_a = (scratch_dir() / "sim_a").string();
    const std::string out_b = (scratch_dir() / "sim_b").string();
    const std::string out_c = (scratch_dir() / "sim_c").string();
    const std::string out_d = (scratch_dir() / "sim_d").string();

    const CliRun a = run_cli("simulate " + scen + " --tests fs,profs2 --out " + out_a);
    REQUIRE(a.status == 0);
    CHECK(contains(a.out, "demo  fs="));
    CHECK(contains(a.out, "  profs2="));
    CHECK(contains(a.out, "%"));

    const CliRun b = run_cli("simulate " + scen + " --tests fs,profs2 --out " + out_b);
    REQUIRE(b.status == 0);

    const std::string results_a = slurp(fs::path(out_a) / "results.csv");
    REQUIRE(!results_a.empty());
    CHECK(results_a == slurp(fs::path(out_b) / "results.csv"));
    CHECK(slurp(fs::path(out_a) / "plot_data.csv") ==
          slurp(fs::path(out_b) / "plot_data.csv"));

    const auto rows = lines_of(results_a);
    REQUIRE(rows.size() == 4);
    CHECK(rows[0].rfind("# manifest ", 0) == 0);
    CHECK(rows[1] == "scenario_id,test_name,rejections,replicates,rate,ci_lo,ci_hi");
    CHECK(rows[2].rfind("demo,fs,", 0) == 0);
    CHECK(rows[3].rfind("demo,profs2,", 0) == 0);
    CHECK(contains(rows[2], ",40,"));

    const json m = json::parse(slurp(fs::path(out_a) / "manifest.json"));
    CHECK(m.at("command").get<std::string>() == "simulate");
    CHECK(m.at("seed").get<std::uint64_t>() == 4242);
    CHECK(m.at("outputs").get<std::vector<std::string>>().size() == 2);

    // A different seed changes the run; the seed can also come from the
    // environment and must behave exactly like the flag.
    const CliRun c =
        run_cli("simulate " + scen + " --tests fs,profs2 --seed 77 --out " + out_c);
    REQUIRE(c.status == 0);
    const std::string results_c = slurp(fs::path(out_c) / "results.csv");
    CHECK(results_c != results_a);

    const CliRun d = run_raw("PROFS_SEED=77 \"" PROFS_CLI_PATH "\" simulate " + scen +
                             " --tests fs,profs2 --out " + out_d);
    REQUIRE(d.status == 0);
    CHECK(slurp(fs::path(out_d) / "results.csv") == results_c);
}

TEST_CASE("simulate rejects bad scenarios and bad test lists") {
    const std::string scen = write_file(
        "scenario_small.ini",
        "control_death_rates = 0.001\n"
        "control_hosp_rates = 0.002\n"
        "treatment_death_rates = 0.001\n"
        "treatment_hosp_rates = 0.002\n"
        "beta = 1\n"
        "n_total = 20\n"
        "follow_up = 300\n"
        "replicates = 5\n"
        "seed = 1\n");

    SUBCASE("no scenario and no grid flag") {
        const CliRun r = run_cli("simulate --out " + (scratch_dir() / "sim_x").string());
        CHECK(r.status == 2);
        CHECK(r.err == "error: usage: give a scenario file or --paper-table2\n");
    }
    SUBCASE("empty test list") {
        const CliRun r = run_cli("simulate " + scen + " --tests , --out " +
                                 (scratch_dir() / "sim_x").string());
        CHECK(r.status == 2);
        CHECK(r.err == "error: usage: --tests must name at least one test\n");
    }
    SUBCASE("unknown test name") {
        const CliRun r = run_cli("simulate " + scen + " --tests banana --out " +
                                 (scratch_dir() / "sim_x").string());
        CHECK(r.status == 2);
        CHECK(r.err == "error: data: unknown test name: banana\n");
    }
    SUBCASE("invalid replicate count in the scenario file") {
        const std::string bad = write_file(
            "scenario_bad.ini",
            "control_death_rates = 0.001\n"
            "control_hosp_rates = 0.002\n"
            "treatment_death_rates = 0.001\n"
            "treatment_hosp_rates = 0.002\n"
            "beta = 1\n"
            "replicates = 0\n");
        const CliRun r = run_cli("simulate " + bad + " --out " +
                                 (scratch_dir() / "sim_x").string());
        CHECK(r.status == 2);
        CHECK(contains(r.err, "error: config: "));
        CHECK(contains(r.err, "replicates must be >= 1"));
    }
}

TEST_CASE("examination-count study grid emits the full table") {
    const std::string out = (scratch_dir() / "table2_run").string();
    const CliRun r = run_cli(
        "simulate --paper-table2 --replicates 4 --n 120 --mvn-accuracy 2e-3 "
        "--seed 9 --out " + out);
    REQUIRE(r.status == 0);

    // 5 hazard-reduction pairs x 2 copula weights x 3 follow-ups.
    const auto stdout_lines = lines_of(r.out);
    REQUIRE(stdout_lines.size() == 30);
    for (const auto& line : stdout_lines) CHECK(contains(line, "profs4="));

    const auto table = lines_of(slurp(fs::path(out) / "table2.csv"));
    REQUIRE(table.size() == 32);
    CHECK(table[0].rfind("# manifest ", 0) == 0);
    CHECK(table[1] == "aD,aH,W,S,ProFS-2,ProFS-4,ProFS-5,ProFS-10");
    CHECK(table[2].rfind("0,0,0,500,", 0) == 0);
    CHECK(table[5].rfind("0,0,0.5,500,", 0) == 0);
    CHECK(table[8].rfind("0,0.3,0.5,500,", 0) == 0);
    CHECK(table[31].rfind("0.2,0.1,0,1500,", 0) == 0);
    for (std::size_t i = 2; i < table.size(); ++i) {
        CHECK(std::count(table[i].begin(), table[i].end(), ',') == 7);
    }

    const auto results = lines_of(slurp(fs::path(out) / "results.csv"));
    CHECK(results.size() == 2 + 30 * 4);
    const auto plot = lines_of(slurp(fs::path(out) / "plot_data.csv"));
    REQUIRE(plot.size() == 2 + 30 * 4);
    CHECK(plot[1] == "family,kendall_w,follow_up,test_name,power");
    CHECK(plot[2].rfind("const_aD0_aH0_W0,0,500,profs2,", 0) == 0);
}

TEST_CASE("groupseq run matches the library and writes a matching trace") {
    const std::string design = write_file(
        "design.ini",
        "schedule = 300, 600\n"
        "looks = 2\n"
        "per_arm_increment = 25\n"
        "stop_probs = 0.05, 0.05\n"
        "draws = 2000\n"
        "seed = 11\n");
    const std::string c1 =
        write_dataset(exp_cohort(21, 25, 0.0030, 0.0012, 600.0), "cohort1.csv");
    const std::string c2 =
        write_dataset(exp_cohort(22, 25, 0.0030, 0.0012, 600.0), "cohort2.csv");
    const std::string trace = (scratch_dir() / "trace.json").string();

    const CliRun r = run_cli("groupseq " + design + " " + c1 + " " + c2 +
                             " --threads 3 --out " + trace);
    REQUIRE(r.status == 0);
    const auto out_lines = lines_of(r.out);
    REQUIRE(out_lines.size() >= 2);
    CHECK(out_lines[0] == "look  cumulative_n  observed_max  boundary  decision");
    CHECK(out_lines.back().rfind("decision: ", 0) == 0);

    // Single-threaded in-process run; the result must not depend on threads.
    const profs::gs::GsDesign want_design = profs::io::read_design_config(design);
    const std::vector<profs::TrialDataset> cohorts = {
        profs::io::read_dataset_csv(c1), profs::io::read_dataset_csv(c2)};
    const profs::gs::GsRunState want =
        profs::gs::gs_boundaries_and_decide(want_design, cohorts, 1);

    const json j = json::parse(slurp(trace));
    CHECK(j.at("final_decision").get<std::string>() ==
          profs::gs::to_string(want.final_decision));
    CHECK(j.at("stopped_at").get<int>() == want.stopped_at);
    CHECK(j.at("design").at("looks").get<int>() == 2);
    CHECK(j.at("design").at("per_arm_increment").get<int>() == 25);
    CHECK(j.at("design").at("schedule").at("horizon").get<double>() == 600.0);
    const auto looks = j.at("looks");
    REQUIRE(looks.size() == want.looks.size());
    for (std::size_t q = 0; q < want.looks.size(); ++q) {
        CHECK(looks[q].at("look").get<double>() == want.looks[q].look);
        CHECK(looks[q].at("cumulative_n").get<double>() == want.looks[q].cumulative_n);
        CHECK(looks[q].at("observed_max").get<double>() == want.looks[q].observed_max);
        CHECK(looks[q].at("boundary").get<double>() == want.looks[q].boundary);
        CHECK(looks[q].at("decision").get<std::string>() ==
              profs::gs::to_string(want.looks[q].decision));
    }
}

TEST_CASE("groupseq config and data errors exit with code 2") {
    const std::string design2 = write_file(
        "design_two.ini",
        "schedule = 300, 600\n"
        "looks = 2\n"
        "per_arm_increment = 25\n"
        "stop_probs = 0.05, 0.05\n"
        "draws = 500\n"
        "seed = 11\n");
    const std::string design1 = write_file(
        "design_one.ini",
        "schedule = 300, 600\n"
        "looks = 1\n"
        "per_arm_increment = 25\n"
        "stop_probs = 0.05\n"
        "draws = 500\n"
        "seed = 11\n");
    const std::string balanced =
        write_dataset(exp_cohort(31, 25, 0.0030, 0.0012, 600.0), "cohort_ok.csv");

    SUBCASE("cohort count must match the number of looks") {
        const CliRun r = run_cli("groupseq " + design2 + " " + balanced);
        CHECK(r.status == 2);
        CHECK(r.err == "error: config: design has 2 looks but 1 cohort files given\n");
    }
    SUBCASE("single-arm cohort") {
        std::vector<profs::SubjectRecord> subjects;
        for (int i = 0; i < 50; ++i) {
            profs::SubjectRecord s;
            s.arm = 0;
            s.layers = {{100.0 + i, false}};
            subjects.push_back(std::move(s));
        }
        // Bypass dataset validation: write the rows directly.
        std::string text = "id,arm,stratum,time_1,censored_1\n";
        for (int i = 0; i < 50; ++i) {
            text += "S" + std::to_string(i + 1) + ",0,," +
                    std::to_string(100 + i) + ",0\n";
        }
        const std::string path = write_file("cohort_one_arm.csv", text);
        const CliRun r = run_cli("groupseq " + design1 + " " + path);
        CHECK(r.status == 2);
        CHECK(r.err == "error: data: cohort " + path + " has a single arm\n");
    }
    SUBCASE("unbalanced cohort") {
        std::vector<profs::SubjectRecord> subjects;
        for (int i = 0; i < 50; ++i) {
            profs::SubjectRecord s;
            s.arm = i < 26 ? 1 : 0;  // 26 treated, 24 control
            s.layers = {{100.0 + i, false}};
            subjects.push_back(std::move(s));
        }
        const std::string path = write_dataset(
            profs::TrialDataset(std::move(subjects), 1), "cohort_unbalanced.csv");
        const CliRun r = run_cli("groupseq " + design1 + " " + path);
        CHECK(r.status == 2);
        CHECK(r.err == "error: data: look 1: cohort must have 25 subjects per arm\n");
    }
    SUBCASE("design with too few draws") {
        const std::string bad = write_file(
            "design_bad.ini",
            "schedule = 300, 600\n"
            "looks = 1\n"
            "per_arm_increment = 25\n"
            "stop_probs = 0.05\n"
            "draws = 50\n");
        const CliRun r = run_cli("groupseq " + bad + " " + balanced);
        CHECK(r.status == 2);
        CHECK(contains(r.err, "error: config: "));
        CHECK(contains(r.err, "boundary simulation needs >= 100 draws"));
    }
}

TEST_CASE("an early stop is reported as a clean exit") {
    const std::string design = write_file(
        "design_stop.ini",
        "schedule = 250, 500\n"
        "looks = 2\n"
        "per_arm_increment = 25\n"
        "stop_probs = 0.01, 0.05\n"
        "draws = 500\n"
        "seed = 5\n");

    // Treated subjects all survive past follow-up; controls all die early.
    std::vector<profs::SubjectRecord> subjects;
    for (int i = 0; i < 50; ++i) {
        profs::SubjectRecord s;
        s.arm = i < 25 ? 1 : 0;
        if (s.arm == 1) {
            s.layers = {{500.0, true}};
        } else {
            s.layers = {{10.0 + i, false}};
        }
        subjects.push_back(std::move(s));
    }
    const std::string extreme = write_dataset(
        profs::TrialDataset(std::move(subjects), 1), "cohort_extreme.csv");
    const std::string later =
        write_dataset(exp_cohort(41, 25, 0.0030, 0.0030, 500.0), "cohort_later.csv");
    const std::string trace = (scratch_dir() / "trace_stop.json").string();

    const CliRun r =
        run_cli("groupseq " + design + " " + extreme + " " + later + " --out " + trace);
    REQUIRE(r.status == 0);
    CHECK(contains(r.out, "stop-efficacy"));
    CHECK(contains(r.out, "decision: stop-efficacy"));

    const json j = json::parse(slurp(trace));
    CHECK(j.at("stopped_at").get<int>() == 1);
    CHECK(j.at("final_decision").get<std::string>() == "stop-efficacy");
    REQUIRE(j.at("looks").size() == 1);
    CHECK(j.at("looks")[0].at("cumulative_n").get<double>() == 50.0);
}
