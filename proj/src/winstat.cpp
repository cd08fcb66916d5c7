#include "profs/winstat.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <thread>

namespace profs {

TrialDataset::TrialDataset(std::vector<SubjectRecord> subjects, int layer_count)
    : subjects_(std::move(subjects)), layer_count_(layer_count) {
    if (layer_count_ < 1) {
        throw std::invalid_argument("layer_count must be >= 1");
    }
    if (subjects_.empty()) {
        throw std::invalid_argument("dataset has no subjects");
    }
    for (std::size_t i = 0; i < subjects_.size(); ++i) {
        const auto& s = subjects_[i];
        if (static_cast<int>(s.layers.size()) != layer_count_) {
            throw std::invalid_argument("subject " + std::to_string(i) +
                                        " has wrong layer count");
        }
        if (s.arm != 0 && s.arm != 1) {
            throw std::invalid_argument("subject " + std::to_string(i) +
                                        " has arm outside {0,1}");
        }
        for (const auto& layer : s.layers) {
            if (!(layer.time >= 0.0) || !std::isfinite(layer.time)) {
                throw std::invalid_argument("subject " + std::to_string(i) +
                                            " has a negative or non-finite time");
            }
        }
        treated_ += s.arm;
        if (!s.stratum.has_value()) all_have_stratum_ = false;
    }
}

int pairwise_score(const SubjectRecord& a, const SubjectRecord& b, double horizon) {
    if (a.layers.size() != b.layers.size()) {
        throw std::invalid_argument("pairwise_score: layer count mismatch");
    }
    if (!(horizon > 0.0)) {
        throw std::invalid_argument("pairwise_score: horizon must be positive");
    }
    // Equivalent to restricting both records to the horizon and then
    // comparing: after restriction b's event survives iff b.time < horizon
    // (events at exactly the horizon stay events but a's restricted time
    // cannot strictly exceed them).
    for (std::size_t l = 0; l < a.layers.size(); ++l) {
        const auto& la = a.layers[l];
        const auto& lb = b.layers[l];
        if (!lb.censored && lb.time < horizon && la.time > lb.time) return +1;
        if (!la.censored && la.time < horizon && lb.time > la.time) return -1;
    }
    return 0;
}

namespace detail {

namespace {

// Subject data flattened for the O(N^2) loop: layer-major contiguous arrays.
struct ScoringView {
    int n = 0;
    int layers = 0;
    std::vector<double> time;      // layers x n
    std::vector<unsigned char> event;  // layers x n, 1 = observed event

    explicit ScoringView(const TrialDataset& data)
        : n(data.n()), layers(data.layer_count()) {
        time.resize(static_cast<std::size_t>(layers) * n);
        event.resize(static_cast<std::size_t>(layers) * n);
        for (int i = 0; i < n; ++i) {
            const auto& s = data.subjects()[i];
            for (int l = 0; l < layers; ++l) {
                time[static_cast<std::size_t>(l) * n + i] = s.layers[l].time;
                event[static_cast<std::size_t>(l) * n + i] =
                    s.layers[l].censored ? 0 : 1;
            }
        }
    }
};

// Score of pair (i, j) at each horizon, accumulated into u and the
// informative-pair counters. Horizons are unsorted and evaluated
// independently: the first layer whose outcome is determinate at that
// horizon decides.
inline void score_pair(const ScoringView& v, int i, int j,
                       const std::vector<double>& horizons,
                       std::int64_t* u_i, std::int64_t* u_j,
                       std::int64_t* informative) {
    const int p = static_cast<int>(horizons.size());
    for (int k = 0; k < p; ++k) {
        const double t = horizons[k];
        int s = 0;
        for (int l = 0; l < v.layers; ++l) {
            const std::size_t base = static_cast<std::size_t>(l) * v.n;
            const double ti = v.time[base + i];
            const double tj = v.time[base + j];
            if (v.event[base + j] && tj < t && ti > tj) { s = +1; break; }
            if (v.event[base + i] && ti < t && tj > ti) { s = -1; break; }
        }
        if (s != 0) {
            u_i[k] += s;
            u_j[k] -= s;
            ++informative[k];
        }
    }
}

}  // namespace

std::vector<int> stratum_ids(const TrialDataset& data,
                             std::vector<std::string>* labels) {
    std::vector<int> ids(data.n());
    std::map<std::string, int> index;
    std::vector<std::string> ordered;
    for (int i = 0; i < data.n(); ++i) {
        const auto& s = data.subjects()[i].stratum;
        if (!s.has_value()) {
            throw std::invalid_argument("subject " + std::to_string(i) +
                                        " has no stratum label");
        }
        auto [it, inserted] = index.emplace(*s, static_cast<int>(ordered.size()));
        if (inserted) ordered.push_back(*s);
        ids[i] = it->second;
    }
    if (labels) *labels = std::move(ordered);
    return ids;
}

MultiScore hierarchical_scores(const TrialDataset& data,
                               const std::vector<double>& horizons,
                               const std::vector<int>* strata, int n_threads) {
    for (double t : horizons) {
        if (!(t > 0.0)) {
            throw std::invalid_argument("horizon must be positive");
        }
    }
    const ScoringView view(data);
    const int n = view.n;
    const int p = static_cast<int>(horizons.size());

    MultiScore out;
    out.n_horizons = p;
    out.u.assign(static_cast<std::size_t>(n) * p, 0);
    out.informative_pairs.assign(p, 0);

    auto scan_rows = [&](int row_begin, int row_end, std::int64_t* u,
                         std::int64_t* informative) {
        for (int i = row_begin; i < row_end; ++i) {
            for (int j = i + 1; j < n; ++j) {
                if (strata && (*strata)[i] != (*strata)[j]) continue;
                score_pair(view, i, j, horizons,
                           u + static_cast<std::size_t>(i) * p,
                           u + static_cast<std::size_t>(j) * p, informative);
            }
        }
    };

    if (n_threads <= 1 || n < 64) {
        scan_rows(0, n, out.u.data(), out.informative_pairs.data());
        return out;
    }

    // Each worker accumulates into its own copy; integer sums commute, so
    // the merged result is identical for any partition.
    const int workers = std::min<int>(n_threads, n);
    std::vector<std::vector<std::int64_t>> u_parts(
        workers, std::vector<std::int64_t>(out.u.size(), 0));
    std::vector<std::vector<std::int64_t>> inf_parts(
        workers, std::vector<std::int64_t>(p, 0));
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            // Strided rows balance the triangular loop.
            for (int i = w; i < n; i += workers) {
                for (int j = i + 1; j < n; ++j) {
                    if (strata && (*strata)[i] != (*strata)[j]) continue;
                    score_pair(view, i, j, horizons,
                               u_parts[w].data() + static_cast<std::size_t>(i) * p,
                               u_parts[w].data() + static_cast<std::size_t>(j) * p,
                               inf_parts[w].data());
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    for (int w = 0; w < workers; ++w) {
        for (std::size_t idx = 0; idx < out.u.size(); ++idx) {
            out.u[idx] += u_parts[w][idx];
        }
        for (int k = 0; k < p; ++k) {
            out.informative_pairs[k] += inf_parts[w][k];
        }
    }
    return out;
}

}  // namespace detail

namespace {

FsResult assemble_fs(const TrialDataset& data, const detail::MultiScore& ms,
                     const std::vector<int>* strata,
                     const std::vector<std::string>* labels) {
    const int n = data.n();
    FsResult res;
    res.score_table.scores.assign(ms.u.begin(), ms.u.end());
    res.score_table.pair_count = ms.informative_pairs[0];

    if (!strata) {
        const int m = data.treated_count();
        std::int64_t z_int = 0;
        std::int64_t sum_u2 = 0;
        for (int i = 0; i < n; ++i) {
            const std::int64_t u = ms.u[i];
            if (data.subjects()[i].arm == 1) z_int += u;
            sum_u2 += u * u;
        }
        const double factor = static_cast<double>(m) * (n - m) /
                              (static_cast<double>(n) * (n - 1));
        res.z = static_cast<double>(z_int);
        res.variance = factor * static_cast<double>(sum_u2);
    } else {
        const int n_strata = *std::max_element(strata->begin(), strata->end()) + 1;
        std::vector<std::int64_t> z_s(n_strata, 0), u2_s(n_strata, 0);
        std::vector<int> n_s(n_strata, 0), m_s(n_strata, 0);
        for (int i = 0; i < n; ++i) {
            const int s = (*strata)[i];
            const std::int64_t u = ms.u[i];
            if (data.subjects()[i].arm == 1) {
                z_s[s] += u;
                ++m_s[s];
            }
            u2_s[s] += u * u;
            ++n_s[s];
        }
        res.per_stratum.emplace();
        double z = 0.0, var = 0.0;
        for (int s = 0; s < n_strata; ++s) {
            if (m_s[s] == 0 || m_s[s] == n_s[s]) {
                throw std::invalid_argument("stratum \"" + (*labels)[s] +
                                            "\" has a single arm");
            }
            const double factor = static_cast<double>(m_s[s]) * (n_s[s] - m_s[s]) /
                                  (static_cast<double>(n_s[s]) * (n_s[s] - 1));
            StratumResult sr;
            sr.label = (*labels)[s];
            sr.z = static_cast<double>(z_s[s]);
            sr.variance = factor * static_cast<double>(u2_s[s]);
            sr.n = n_s[s];
            sr.treated = m_s[s];
            res.per_stratum->push_back(sr);
            z += sr.z;
            var += sr.variance;
        }
        res.z = z;
        res.variance = var;
    }

    if (res.variance > 0.0) {
        res.r = res.z / std::sqrt(res.variance);
    } else {
        res.r = 0.0;
        res.degenerate = true;
    }
    return res;
}

}  // namespace

FsResult fs_statistic(const TrialDataset& data, double horizon, int n_threads) {
    if (data.n() < 2) {
        throw std::invalid_argument("fs_statistic: need at least two subjects");
    }
    const int m = data.treated_count();
    if (m == 0 || m == data.n()) {
        throw std::invalid_argument("fs_statistic: both arms must be nonempty");
    }
    const auto ms =
        detail::hierarchical_scores(data, {horizon}, nullptr, n_threads);
    return assemble_fs(data, ms, nullptr, nullptr);
}

FsResult fs_statistic_stratified(const TrialDataset& data, double horizon,
                                 int n_threads) {
    if (data.n() < 2) {
        throw std::invalid_argument("fs_statistic: need at least two subjects");
    }
    std::vector<std::string> labels;
    const auto strata = detail::stratum_ids(data, &labels);
    const auto ms =
        detail::hierarchical_scores(data, {horizon}, &strata, n_threads);
    return assemble_fs(data, ms, &strata, &labels);
}

}  // namespace profs
