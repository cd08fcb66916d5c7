#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "profs/profs.hpp"

// Group-sequential operation of the progressive follow-up test: looks are
// strata, boundaries come from pooling the observed max statistic with
// draws simulated from the estimated null distribution.

namespace profs::gs {

struct GsDesign {
    explicit GsDesign(ExaminationSchedule s) : schedule(std::move(s)) {}

    int looks = 1;                   // Q
    int per_arm_increment = 0;       // l; each look adds 2l subjects
    std::vector<double> stop_probs;  // tau_1 <= ... <= tau_Q, each in (0,1)
    int draws = 10000;               // V; pooled set size, >= 100
    ExaminationSchedule schedule;
    std::uint64_t seed = 0;

    void validate() const;
};

enum class LookDecision { kContinue, kStopEfficacy, kFinalReject, kFinalAccept };

const char* to_string(LookDecision d);

struct LookRecord {
    int look = 0;                 // 1-based
    int cumulative_n = 0;
    std::vector<double> z_vec;    // cumulative Z^{q(k)}
    std::vector<double> r_vec;    // standardized by the cumulative diagonal
    detail::Matrix sigma;         // cumulative covariance
    double observed_max = 0.0;
    double boundary = 0.0;
    LookDecision decision = LookDecision::kContinue;
};

struct GsRunState {
    std::vector<LookRecord> looks;
    LookDecision final_decision = LookDecision::kFinalAccept;
    int stopped_at = -1;                  // 1-based look of an efficacy stop
    std::vector<std::vector<double>> retained_draws;  // (V-1) x p cumulative
};

// Cumulative statistics over looks 1..q with each cohort as its own
// stratum: Z sums cohort scores, the covariance sums per-cohort
// cross-products with factor l^2 / (2l(2l-1)).
ProfsStatistics gs_look_statistics(const std::vector<TrialDataset>& cohorts,
                                   const ExaminationSchedule& schedule,
                                   int n_threads = 1);

// Runs the full design over the arriving cohorts: at each look V-1
// simulated increments are drawn from the cohort's estimated covariance,
// accumulated across looks, standardized by the cumulative diagonal, and
// pooled with the observed max; the boundary is the ceil(V(1-tau_q))-th
// smallest of the pooled set. Stops at the first crossing.
GsRunState gs_boundaries_and_decide(const GsDesign& design,
                                    const std::vector<TrialDataset>& cohorts,
                                    int n_threads = 1);

}  // namespace profs::gs
