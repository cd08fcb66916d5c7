#include "profs/groupseq.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "profs/detail/rng.hpp"

namespace profs::gs {

void GsDesign::validate() const {
    if (looks < 1) throw std::invalid_argument("design needs at least one look");
    if (per_arm_increment < 1)
        throw std::invalid_argument("per-arm increment must be positive");
    if (static_cast<int>(stop_probs.size()) != looks)
        throw std::invalid_argument("need one stopping probability per look");
    double prev = 0.0;
    for (double tau : stop_probs) {
        if (!(tau > 0.0 && tau < 1.0))
            throw std::invalid_argument("stopping probabilities must lie in (0, 1)");
        if (tau < prev)
            throw std::invalid_argument("stopping probabilities must be nondecreasing");
        prev = tau;
    }
    if (draws < 100) throw std::invalid_argument("boundary simulation needs >= 100 draws");
}

const char* to_string(LookDecision d) {
    switch (d) {
        case LookDecision::kContinue: return "continue";
        case LookDecision::kStopEfficacy: return "stop-efficacy";
        case LookDecision::kFinalReject: return "reject";
        case LookDecision::kFinalAccept: return "accept";
    }
    return "?";
}

ProfsStatistics gs_look_statistics(const std::vector<TrialDataset>& cohorts,
                                   const ExaminationSchedule& schedule,
                                   int n_threads) {
    if (cohorts.empty()) throw std::invalid_argument("no cohorts");
    const int p = schedule.count();
    ProfsStatistics total;
    total.z.assign(p, 0.0);
    total.sigma = detail::Matrix(p);
    for (const auto& cohort : cohorts) {
        ProfsStatistics part = profs_statistics(cohort, schedule, false, n_threads);
        for (int k = 0; k < p; ++k) total.z[k] += part.z[k];
        for (int a = 0; a < p; ++a)
            for (int b = 0; b < p; ++b) total.sigma(a, b) += part.sigma(a, b);
    }
    return total;
}

namespace {

double pooled_rank_boundary(std::vector<double>& pooled, double tau) {
    const int v = static_cast<int>(pooled.size());
    int rank = static_cast<int>(std::ceil(v * (1.0 - tau) - 1e-9));
    rank = std::clamp(rank, 1, v);
    std::nth_element(pooled.begin(), pooled.begin() + (rank - 1), pooled.end());
    return pooled[rank - 1];
}

}  // namespace

GsRunState gs_boundaries_and_decide(const GsDesign& design,
                                    const std::vector<TrialDataset>& cohorts,
                                    int n_threads) {
    design.validate();
    if (static_cast<int>(cohorts.size()) != design.looks)
        throw std::invalid_argument("need one cohort per look");
    for (int q = 1; q <= design.looks; ++q) {
        const auto& c = cohorts[q - 1];
        if (c.n() != 2 * design.per_arm_increment ||
            c.treated_count() != design.per_arm_increment) {
            throw std::invalid_argument(
                "look " + std::to_string(q) + ": cohort must have " +
                std::to_string(design.per_arm_increment) + " subjects per arm");
        }
    }
    const int p = design.schedule.count();
    const int v = design.draws;

    GsRunState state;
    state.retained_draws.assign(v - 1, std::vector<double>(p, 0.0));

    std::vector<double> z_cum(p, 0.0);
    detail::Matrix sigma_cum(p);
    int n_cum = 0;

    for (int q = 1; q <= design.looks; ++q) {
        const TrialDataset& cohort = cohorts[q - 1];
        ProfsStatistics inc = profs_statistics(cohort, design.schedule, false, n_threads);
        n_cum += cohort.n();
        for (int k = 0; k < p; ++k) z_cum[k] += inc.z[k];
        for (int a = 0; a < p; ++a)
            for (int b = 0; b < p; ++b) sigma_cum(a, b) += inc.sigma(a, b);

        detail::Matrix inc_lower;
        if (!cholesky_psd(inc.sigma, inc_lower))
            throw std::runtime_error("cohort covariance is not positive semidefinite");

        std::vector<double> sd_cum(p, 0.0);
        for (int k = 0; k < p; ++k) sd_cum[k] = std::sqrt(std::max(sigma_cum(k, k), 0.0));

        std::vector<double> g(p), step(p);
        std::vector<double> pooled;
        pooled.reserve(v);
        for (int d = 0; d < v - 1; ++d) {
            detail::CounterRng rng(design.seed, 0x67730000u + static_cast<std::uint64_t>(q),
                                   static_cast<std::uint64_t>(d));
            for (int k = 0; k < p; ++k) g[k] = rng.next_normal();
            lower_tri_multiply(inc_lower, g.data(), step.data());
            auto& cum = state.retained_draws[d];
            double m = 0.0;
            for (int k = 0; k < p; ++k) {
                cum[k] += step[k];
                double r = sd_cum[k] > 0.0 ? cum[k] / sd_cum[k] : 0.0;
                m = std::max(m, std::fabs(r));
            }
            pooled.push_back(m);
        }

        LookRecord rec;
        rec.look = q;
        rec.cumulative_n = n_cum;
        rec.z_vec = z_cum;
        rec.sigma = sigma_cum;
        rec.r_vec.assign(p, 0.0);
        double obs = 0.0;
        for (int k = 0; k < p; ++k) {
            rec.r_vec[k] = sd_cum[k] > 0.0 ? z_cum[k] / sd_cum[k] : 0.0;
            obs = std::max(obs, std::fabs(rec.r_vec[k]));
        }
        rec.observed_max = obs;
        pooled.push_back(obs);
        rec.boundary = pooled_rank_boundary(pooled, design.stop_probs[q - 1]);

        bool cross = obs > rec.boundary;
        if (cross) {
            rec.decision = q < design.looks ? LookDecision::kStopEfficacy
                                            : LookDecision::kFinalReject;
            state.looks.push_back(std::move(rec));
            state.final_decision = state.looks.back().decision;
            state.stopped_at = q;
            return state;
        }
        rec.decision = q < design.looks ? LookDecision::kContinue
                                        : LookDecision::kFinalAccept;
        state.looks.push_back(std::move(rec));
    }
    state.final_decision = LookDecision::kFinalAccept;
    return state;
}

}  // namespace profs::gs
