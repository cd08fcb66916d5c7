#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "profs/detail/linalg.hpp"
#include "profs/mvn.hpp"
#include "profs/winstat.hpp"

// Progressive follow-up testing: FS statistics at several examination times,
// their joint covariance, and the max-type test with a multivariate-normal
// p-value.

namespace profs {

// Ordered examination times S^(1) < ... < S^(p) within (floor, horizon].
class ExaminationSchedule {
public:
    ExaminationSchedule(std::vector<double> times, double horizon, double floor = 0.0);

    const std::vector<double>& times() const { return times_; }
    double horizon() const { return horizon_; }
    double floor() const { return floor_; }
    int count() const { return static_cast<int>(times_.size()); }

private:
    std::vector<double> times_;
    double horizon_;
    double floor_;
};

struct ProfsStatistics {
    std::vector<double> z;   // Z^(k)
    detail::Matrix sigma;    // estimated covariance of Z
};

struct ProfsResult {
    std::vector<double> z_vec;
    detail::Matrix sigma;
    detail::Matrix omega;              // correlation of the retained examinations
    std::vector<double> r_vec;         // standardized statistics, all examinations
    std::vector<int> dropped;          // zero-variance examination indices
    double z_max = 0.0;
    double p_value = 1.0;
    int argmax_examination = -1;       // index into the schedule, -1 if none
    bool degenerate = false;           // every examination had zero variance
    mvn::MvnEstimate mvn;
};

// Administrative censoring at t: times are capped at t and observations
// beyond t become censored. Events at exactly t are kept. Idempotent.
TrialDataset restrict_to_horizon(const TrialDataset& data, double t);

// Equally spaced quantile examination times: (S/p, 2S/p, ..., S) when
// S/p >= floor, otherwise p points from the floor to S. p = 1 always
// yields the single time S.
ExaminationSchedule quantile_schedule(double horizon, int p, double floor = 0.0);

// Smallest pooled event time t on `layer` with cumulative event fraction
// >= rate; nullopt when the rate is never reached. Intended for post-hoc
// analyses; primary analyses should fix the floor at the design stage.
std::optional<double> event_rate_threshold_time(const TrialDataset& data,
                                                int layer, double rate);

// Z^(k) on the data restricted to each examination time, plus the
// closed-form covariance (diagonal and cross terms share the factor
// M(N-M)/(N(N-1)); the stratified form sums per-stratum contributions).
ProfsStatistics profs_statistics(const TrialDataset& data,
                                 const ExaminationSchedule& schedule,
                                 bool stratified = false, int n_threads = 1);

// The max test evaluated from already-computed statistics: standardizes,
// drops zero-variance examinations, forms the correlation and the
// multivariate-normal p-value.
ProfsResult max_test_from_statistics(const ProfsStatistics& stats,
                                     double accuracy = mvn::kDefaultAccuracy,
                                     std::uint64_t seed = 0);

// The max test: Z_MAX = max_k |R_k| with p-value
// 1 - P(-Z_MAX <= X <= Z_MAX) under the estimated correlation.
// Zero-variance examinations are dropped from the max and the correlation.
ProfsResult profs_test(const TrialDataset& data,
                       const ExaminationSchedule& schedule,
                       double accuracy = mvn::kDefaultAccuracy,
                       std::uint64_t seed = 0, bool stratified = false,
                       int n_threads = 1);

// p-value of an observed max statistic against a given correlation matrix.
mvn::MvnEstimate max_test_p_value(const mvn::CorrelationMatrix& omega,
                                  double z_max, double accuracy,
                                  std::uint64_t seed);

}  // namespace profs
