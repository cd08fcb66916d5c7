#include "profs/profs.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace profs {

ExaminationSchedule::ExaminationSchedule(std::vector<double> times, double horizon,
                                         double floor)
    : times_(std::move(times)), horizon_(horizon), floor_(floor) {
    if (times_.empty()) {
        throw std::invalid_argument("schedule: needs at least one examination");
    }
    if (!(times_.front() > 0.0)) {
        throw std::invalid_argument("schedule: times must be positive");
    }
    for (std::size_t i = 1; i < times_.size(); ++i) {
        if (!(times_[i] > times_[i - 1])) {
            throw std::invalid_argument("schedule: times must be strictly increasing");
        }
    }
    if (times_.back() > horizon_ + 1e-9 * horizon_) {
        throw std::invalid_argument("schedule: last time exceeds the horizon");
    }
    if (floor_ < 0.0) {
        throw std::invalid_argument("schedule: floor must be >= 0");
    }
    if (times_.front() < floor_ - 1e-9 * std::max(floor_, 1.0)) {
        throw std::invalid_argument("schedule: first time below the floor");
    }
}

TrialDataset restrict_to_horizon(const TrialDataset& data, double t) {
    if (!(t > 0.0)) {
        throw std::invalid_argument("restrict_to_horizon: t must be positive");
    }
    std::vector<SubjectRecord> subjects = data.subjects();
    for (auto& s : subjects) {
        for (auto& layer : s.layers) {
            if (layer.time > t) {
                layer.time = t;
                layer.censored = true;
            }
        }
    }
    return TrialDataset(std::move(subjects), data.layer_count());
}

ExaminationSchedule quantile_schedule(double horizon, int p, double floor) {
    if (p < 1) throw std::invalid_argument("quantile_schedule: p must be >= 1");
    if (!(horizon > 0.0)) {
        throw std::invalid_argument("quantile_schedule: horizon must be positive");
    }
    if (!(floor < horizon) || floor < 0.0) {
        throw std::invalid_argument("quantile_schedule: need 0 <= floor < horizon");
    }
    std::vector<double> times(p);
    if (p == 1 || horizon / p >= floor) {
        for (int i = 1; i <= p; ++i) {
            times[i - 1] = horizon * static_cast<double>(i) / p;
        }
    } else {
        for (int i = 0; i < p; ++i) {
            times[i] = floor + (horizon - floor) * static_cast<double>(i) / (p - 1);
        }
    }
    times.back() = horizon;  // exact, no accumulated division error
    return ExaminationSchedule(std::move(times), horizon, floor);
}

std::optional<double> event_rate_threshold_time(const TrialDataset& data,
                                                int layer, double rate) {
    if (layer < 0 || layer >= data.layer_count()) {
        throw std::invalid_argument("event_rate_threshold_time: invalid layer index");
    }
    if (!(rate > 0.0 && rate < 1.0)) {
        throw std::invalid_argument("event_rate_threshold_time: rate must be in (0,1)");
    }
    std::vector<double> event_times;
    for (const auto& s : data.subjects()) {
        if (!s.layers[layer].censored) event_times.push_back(s.layers[layer].time);
    }
    std::sort(event_times.begin(), event_times.end());
    const double n = static_cast<double>(data.n());
    for (std::size_t k = 0; k < event_times.size(); ++k) {
        if (static_cast<double>(k + 1) / n >= rate) return event_times[k];
    }
    return std::nullopt;
}

ProfsStatistics profs_statistics(const TrialDataset& data,
                                 const ExaminationSchedule& schedule,
                                 bool stratified, int n_threads) {
    if (data.n() < 2) {
        throw std::invalid_argument("profs_statistics: need at least two subjects");
    }
    const int m = data.treated_count();
    if (m == 0 || m == data.n()) {
        throw std::invalid_argument("profs_statistics: both arms must be nonempty");
    }
    const int n = data.n();
    const int p = schedule.count();

    std::vector<int> strata;
    std::vector<std::string> labels;
    if (stratified) {
        strata = detail::stratum_ids(data, &labels);
    }
    const auto ms = detail::hierarchical_scores(
        data, schedule.times(), stratified ? &strata : nullptr, n_threads);

    ProfsStatistics out;
    out.z.assign(p, 0.0);
    out.sigma = detail::Matrix(p, 0.0);

    const int n_strata =
        stratified ? (*std::max_element(strata.begin(), strata.end()) + 1) : 1;
    std::vector<int> n_s(n_strata, 0), m_s(n_strata, 0);
    for (int i = 0; i < n; ++i) {
        const int s = stratified ? strata[i] : 0;
        ++n_s[s];
        m_s[s] += data.subjects()[i].arm;
    }
    for (int s = 0; s < n_strata; ++s) {
        if (m_s[s] == 0 || m_s[s] == n_s[s]) {
            throw std::invalid_argument(
                "profs_statistics: stratum \"" +
                (stratified ? labels[s] : std::string("all")) + "\" has a single arm");
        }
    }

    // cross-products accumulated exactly in integers, per stratum
    std::vector<std::int64_t> cross(static_cast<std::size_t>(n_strata) * p * p, 0);
    std::vector<std::int64_t> z_int(p, 0);
    for (int i = 0; i < n; ++i) {
        const int s = stratified ? strata[i] : 0;
        const std::int64_t* u = ms.u.data() + static_cast<std::size_t>(i) * p;
        std::int64_t* c = cross.data() + static_cast<std::size_t>(s) * p * p;
        const bool treated = data.subjects()[i].arm == 1;
        for (int k1 = 0; k1 < p; ++k1) {
            if (treated) z_int[k1] += u[k1];
            for (int k2 = k1; k2 < p; ++k2) {
                c[k1 * p + k2] += u[k1] * u[k2];
            }
        }
    }
    for (int k = 0; k < p; ++k) out.z[k] = static_cast<double>(z_int[k]);
    for (int s = 0; s < n_strata; ++s) {
        const double factor = static_cast<double>(m_s[s]) * (n_s[s] - m_s[s]) /
                              (static_cast<double>(n_s[s]) * (n_s[s] - 1));
        const std::int64_t* c = cross.data() + static_cast<std::size_t>(s) * p * p;
        for (int k1 = 0; k1 < p; ++k1) {
            for (int k2 = k1; k2 < p; ++k2) {
                const double v = factor * static_cast<double>(c[k1 * p + k2]);
                out.sigma(k1, k2) += v;
                if (k2 != k1) out.sigma(k2, k1) += v;
            }
        }
    }
    return out;
}

mvn::MvnEstimate max_test_p_value(const mvn::CorrelationMatrix& omega,
                                  double z_max, double accuracy,
                                  std::uint64_t seed) {
    return mvn::symmetric_rectangle_probability(omega, z_max, accuracy, seed);
}

ProfsResult max_test_from_statistics(const ProfsStatistics& stats,
                                     double accuracy, std::uint64_t seed) {
    const int p = static_cast<int>(stats.z.size());

    ProfsResult res;
    res.z_vec = stats.z;
    res.sigma = stats.sigma;
    res.r_vec.assign(p, 0.0);

    std::vector<int> kept;
    for (int k = 0; k < p; ++k) {
        const double var = stats.sigma(k, k);
        if (var > 0.0) {
            res.r_vec[k] = stats.z[k] / std::sqrt(var);
            kept.push_back(k);
        } else {
            res.dropped.push_back(k);
        }
    }

    if (kept.empty()) {
        res.degenerate = true;
        res.z_max = 0.0;
        res.p_value = 1.0;
        res.omega = detail::Matrix(0);
        return res;
    }

    double z_max = -1.0;
    for (int k : kept) {
        const double a = std::abs(res.r_vec[k]);
        if (a > z_max) {
            z_max = a;
            res.argmax_examination = k;
        }
    }
    res.z_max = z_max;

    const int q = static_cast<int>(kept.size());
    detail::Matrix omega(q, 0.0);
    for (int a = 0; a < q; ++a) {
        for (int b = 0; b < q; ++b) {
            const int ka = kept[a], kb = kept[b];
            omega(a, b) = (a == b) ? 1.0
                                   : stats.sigma(ka, kb) /
                                         std::sqrt(stats.sigma(ka, ka) *
                                                   stats.sigma(kb, kb));
        }
    }
    const mvn::CorrelationMatrix corr(omega);
    res.omega = corr.matrix();
    res.mvn = max_test_p_value(corr, z_max, accuracy, seed);
    res.p_value = std::clamp(1.0 - res.mvn.value, 0.0, 1.0);
    return res;
}

ProfsResult profs_test(const TrialDataset& data,
                       const ExaminationSchedule& schedule, double accuracy,
                       std::uint64_t seed, bool stratified, int n_threads) {
    return max_test_from_statistics(
        profs_statistics(data, schedule, stratified, n_threads), accuracy, seed);
}

}  // namespace profs
