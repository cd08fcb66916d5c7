#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "profs/detail/rng.hpp"
#include "profs/profs.hpp"

// Trial simulation: Gumbel-Hougaard-coupled event-time pairs with
// piecewise-exponential marginals, and the replication harness estimating
// rejection rates for FS and the progressive follow-up tests.

namespace profs::sim {

// Interval-constant hazard; the last interval is open-ended. The cumulative
// hazard is continuous, piecewise linear and strictly increasing wherever
// the rate is positive.
class PiecewiseHazard {
public:
    PiecewiseHazard(std::vector<double> cut_points, std::vector<double> rates);

    static PiecewiseHazard constant(double rate) { return {{}, {rate}}; }

    double cumulative(double t) const;
    // Smallest t with cumulative(t) = h; +inf when h is never reached.
    double inverse_cumulative(double h) const;
    double survival(double t) const;

    // Same breakpoints with every rate multiplied by `factor`.
    PiecewiseHazard scaled(double factor) const;

    const std::vector<double>& cut_points() const { return cuts_; }
    const std::vector<double>& rates() const { return rates_; }

private:
    std::vector<double> cuts_;
    std::vector<double> rates_;
};

// Inverse cumulative-hazard transform: t with Lambda(t) = -ln(1 - u).
double sample_piecewise_exponential(const PiecewiseHazard& hazard, double u);

// One arm's joint event-time model: Gumbel-Hougaard dependence (beta >= 1,
// Kendall's W = 1 - 1/beta) with the two marginal hazards.
struct CopulaSpec {
    CopulaSpec(double beta_in, PiecewiseHazard death, PiecewiseHazard hosp);

    double beta;
    PiecewiseHazard death_hazard;
    PiecewiseHazard hosp_hazard;

    double kendall_w() const { return 1.0 - 1.0 / beta; }
};

// One latent pair (death time, hospitalization time) before administrative
// censoring. beta = 1 degenerates to independent marginal draws.
std::pair<double, double> sample_copula_pair(const CopulaSpec& spec,
                                             detail::CounterRng& rng);

struct ScenarioConfig {
    ScenarioConfig(CopulaSpec control_arm, CopulaSpec treatment_arm)
        : control(std::move(control_arm)), treatment(std::move(treatment_arm)) {}

    std::string id;
    int n_total = 2000;
    double treated_fraction = 0.5;
    double follow_up = 1000.0;           // S
    CopulaSpec control;
    CopulaSpec treatment;
    double schedule_floor = 0.0;         // S_inf
    int replicates = 2000;
    double alpha = 0.05;
    std::uint64_t seed = 0;

    void validate() const;
};

// n subjects, treated first, each drawn from their arm's copula spec and
// administratively censored at the follow-up horizon. Layer 1 is death,
// layer 2 hospitalization. Deterministic given (seed, replicate_index):
// subject draws are keyed by (seed, replicate_index, subject).
TrialDataset generate_trial(const ScenarioConfig& config, int replicate_index);

// A named test: "fs" is the single examination at the horizon,
// "profs<p>" uses p quantile examinations.
struct TestSpec {
    std::string name;
    int examinations = 1;
};

// Parses "fs" or "profs<p>"; throws on anything else.
TestSpec parse_test_spec(const std::string& name);

struct TestOutcome {
    std::string test;
    int rejections = 0;
    int replicates = 0;
    double rate = 0.0;
    double ci_lo = 0.0;   // exact binomial 95% interval
    double ci_hi = 0.0;
};

struct OperatingCharacteristics {
    std::string scenario_id;
    std::vector<TestOutcome> tests;
    // Per test, per replicate; filled only when requested.
    std::vector<std::vector<double>> p_values;
};

// Runs every replicate once, scoring at the union of all requested
// examination times, then forms each test's statistics from its own subset.
OperatingCharacteristics estimate_operating_characteristics(
    const ScenarioConfig& config, const std::vector<TestSpec>& tests,
    bool keep_p_values = false, int n_threads = 1,
    double mvn_accuracy = 5e-4);

// Exact (Clopper-Pearson) binomial confidence interval for a proportion.
struct BinomialInterval {
    double lo = 0.0;
    double hi = 1.0;
};
BinomialInterval clopper_pearson(int successes, int trials, double level = 0.95);

// Central acceptance band for a binomial count at the given rate:
// lo = largest k with P(X <= k) <= (1-level)/2, hi = smallest k with
// P(X <= k) >= 1-(1-level)/2, both reported as proportions of n.
struct BinomialBand {
    int lo_count = 0;
    int hi_count = 0;
    double lo = 0.0;
    double hi = 1.0;
};
BinomialBand binomial_acceptance_band(double rate, int trials, double level = 0.99);

// Regularized incomplete beta function I_x(a, b).
double incomplete_beta(double a, double b, double x);

// The simulation-study catalog: constant-effect scenarios
// const_aD{..}_aH{..}_W{..}_S{..} over effect sizes {0,0.1,0.2,0.3},
// dependence W in {0,0.5} and S in {500,1000,1500}, plus short-term-effect
// scenarios stdeath_* / sthosp_* over S in {300,800,1500}.
std::vector<ScenarioConfig> build_paper_scenarios();

// Single catalog entry by id; throws when unknown.
ScenarioConfig paper_scenario(const std::string& id);

}  // namespace profs::sim
