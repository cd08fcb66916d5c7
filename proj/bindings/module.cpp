#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "profs/io.hpp"
#include "profs/mvn.hpp"
#include "profs/profs.hpp"
#include "profs/simulation.hpp"
#include "profs/version.hpp"
#include "profs/winstat.hpp"

namespace py = pybind11;

namespace {

profs::TrialDataset make_dataset(
    const std::vector<int>& arms, const std::vector<std::vector<double>>& times,
    const std::vector<std::vector<bool>>& censored,
    const std::optional<std::vector<std::string>>& strata) {
    const std::size_t n = arms.size();
    if (times.size() != n || censored.size() != n) {
        throw std::invalid_argument("arms, times and censored must have equal length");
    }
    if (strata && strata->size() != n) {
        throw std::invalid_argument("strata must match the subject count");
    }
    if (n == 0) throw std::invalid_argument("empty dataset");
    const std::size_t layers = times[0].size();
    std::vector<profs::SubjectRecord> subjects(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (times[i].size() != layers || censored[i].size() != layers) {
            throw std::invalid_argument("ragged layer lists");
        }
        subjects[i].arm = arms[i];
        if (strata) subjects[i].stratum = (*strata)[i];
        subjects[i].layers.resize(layers);
        for (std::size_t k = 0; k < layers; ++k) {
            subjects[i].layers[k] = {times[i][k], censored[i][k]};
        }
    }
    return profs::TrialDataset(std::move(subjects), static_cast<int>(layers));
}

py::list matrix_to_list(const profs::detail::Matrix& m) {
    py::list rows;
    for (int i = 0; i < m.dim(); ++i) {
        py::list row;
        for (int j = 0; j < m.dim(); ++j) row.append(m(i, j));
        rows.append(row);
    }
    return rows;
}

py::dict result_to_dict(const profs::ProfsResult& res) {
    py::dict d;
    d["z"] = res.z_vec;
    d["r"] = res.r_vec;
    d["sigma"] = matrix_to_list(res.sigma);
    d["omega"] = matrix_to_list(res.omega);
    d["dropped"] = res.dropped;
    d["z_max"] = res.z_max;
    d["p_value"] = res.p_value;
    d["argmax_examination"] = res.argmax_examination;
    d["degenerate"] = res.degenerate;
    d["mvn_error"] = res.mvn.error_estimate;
    d["mvn_converged"] = res.mvn.converged;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Hierarchical composite-endpoint tests with progressive follow-up";
    m.attr("__version__") = profs::kVersion;

    m.def(
        "fs_test",
        [](const std::vector<int>& arms, const std::vector<std::vector<double>>& times,
           const std::vector<std::vector<bool>>& censored, double horizon,
           const std::optional<std::vector<std::string>>& strata, bool stratified) {
            const auto data = make_dataset(arms, times, censored, strata);
            const profs::FsResult res = stratified
                                            ? profs::fs_statistic_stratified(data, horizon)
                                            : profs::fs_statistic(data, horizon);
            py::dict d;
            d["z"] = res.z;
            d["variance"] = res.variance;
            d["r"] = res.r;
            d["degenerate"] = res.degenerate;
            d["scores"] = res.score_table.scores;
            return d;
        },
        py::arg("arms"), py::arg("times"), py::arg("censored"), py::arg("horizon"),
        py::arg("strata") = std::nullopt, py::arg("stratified") = false,
        "Finkelstein-Schoenfeld statistic at one horizon.");

    m.def(
        "profs_test",
        [](const std::vector<int>& arms, const std::vector<std::vector<double>>& times,
           const std::vector<std::vector<bool>>& censored,
           const std::vector<double>& schedule, double horizon, double s_inf,
           double accuracy, std::uint64_t seed,
           const std::optional<std::vector<std::string>>& strata, bool stratified) {
            const auto data = make_dataset(arms, times, censored, strata);
            const profs::ExaminationSchedule sched(schedule, horizon, s_inf);
            return result_to_dict(
                profs::profs_test(data, sched, accuracy, seed, stratified));
        },
        py::arg("arms"), py::arg("times"), py::arg("censored"), py::arg("schedule"),
        py::arg("horizon"), py::arg("s_inf") = 0.0, py::arg("accuracy") = 1e-4,
        py::arg("seed") = 0, py::arg("strata") = std::nullopt,
        py::arg("stratified") = false,
        "Max-type test over several examination times.");

    m.def(
        "quantile_schedule",
        [](double horizon, int p, double s_inf) {
            return profs::quantile_schedule(horizon, p, s_inf).times();
        },
        py::arg("horizon"), py::arg("p"), py::arg("s_inf") = 0.0,
        "Equally spaced quantile examination times.");

    m.def(
        "mvn_rectangle",
        [](const std::vector<std::vector<double>>& omega, double z, double accuracy,
           std::uint64_t seed) {
            const int p = static_cast<int>(omega.size());
            profs::detail::Matrix m_(p);
            for (int i = 0; i < p; ++i) {
                if (static_cast<int>(omega[i].size()) != p) {
                    throw std::invalid_argument("omega must be square");
                }
                for (int j = 0; j < p; ++j) m_(i, j) = omega[i][j];
            }
            const profs::mvn::CorrelationMatrix corr(m_);
            const auto est =
                profs::mvn::symmetric_rectangle_probability(corr, z, accuracy, seed);
            return py::make_tuple(est.value, est.error_estimate);
        },
        py::arg("omega"), py::arg("z"), py::arg("accuracy") = 1e-4,
        py::arg("seed") = 0,
        "P(-z <= X_k <= z for all k) under a standard MVN with correlation omega.");

    m.def(
        "read_dataset",
        [](const std::string& path) {
            const auto data = profs::io::read_dataset_csv(path);
            py::list arms, times, censored, strata;
            bool any_strata = false;
            for (const auto& s : data.subjects()) {
                arms.append(s.arm);
                py::list t, c;
                for (const auto& layer : s.layers) {
                    t.append(layer.time);
                    c.append(layer.censored);
                }
                times.append(t);
                censored.append(c);
                strata.append(s.stratum ? py::cast(*s.stratum) : py::none());
                any_strata = any_strata || s.stratum.has_value();
            }
            py::dict d;
            d["arms"] = arms;
            d["times"] = times;
            d["censored"] = censored;
            d["strata"] = any_strata ? strata : py::list();
            return d;
        },
        py::arg("path"), "Read a dataset CSV into plain lists.");

    m.def(
        "simulate_scenario",
        [](const std::string& preset, const std::vector<std::string>& tests,
           int replicates, int n_total, std::uint64_t seed, double mvn_accuracy) {
            profs::sim::ScenarioConfig cfg = profs::sim::paper_scenario(preset);
            if (replicates > 0) cfg.replicates = replicates;
            if (n_total > 0) cfg.n_total = n_total;
            cfg.seed = seed;
            std::vector<profs::sim::TestSpec> specs;
            for (const auto& t : tests) specs.push_back(profs::sim::parse_test_spec(t));
            const auto oc = profs::sim::estimate_operating_characteristics(
                cfg, specs, false, 1, mvn_accuracy);
            py::dict d;
            for (const auto& t : oc.tests) {
                py::dict row;
                row["rejections"] = t.rejections;
                row["replicates"] = t.replicates;
                row["rate"] = t.rate;
                row["ci_lo"] = t.ci_lo;
                row["ci_hi"] = t.ci_hi;
                d[py::cast(t.test)] = row;
            }
            return d;
        },
        py::arg("preset"), py::arg("tests"), py::arg("replicates") = 0,
        py::arg("n_total") = 0, py::arg("seed") = 0, py::arg("mvn_accuracy") = 5e-4,
        "Monte Carlo rejection rates for a named catalog scenario.");

    m.def("scenario_ids", []() {
        std::vector<std::string> ids;
        for (const auto& cfg : profs::sim::build_paper_scenarios()) ids.push_back(cfg.id);
        return ids;
    });
}
