#include "profs/simulation.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <stdexcept>

namespace profs::sim {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

PiecewiseHazard::PiecewiseHazard(std::vector<double> cut_points,
                                 std::vector<double> rates)
    : cuts_(std::move(cut_points)), rates_(std::move(rates)) {
    if (rates_.size() != cuts_.size() + 1) {
        throw std::invalid_argument("hazard: need one rate per interval");
    }
    double prev = 0.0;
    for (double c : cuts_) {
        if (!(c > prev) || !std::isfinite(c)) {
            throw std::invalid_argument("hazard: cut points must be ascending and positive");
        }
        prev = c;
    }
    for (double r : rates_) {
        if (!(r > 0.0) || !std::isfinite(r)) {
            throw std::invalid_argument("hazard: rates must be positive");
        }
    }
}

double PiecewiseHazard::cumulative(double t) const {
    if (t <= 0.0) return 0.0;
    double total = 0.0;
    double left = 0.0;
    for (std::size_t i = 0; i < cuts_.size(); ++i) {
        if (t <= cuts_[i]) return total + rates_[i] * (t - left);
        total += rates_[i] * (cuts_[i] - left);
        left = cuts_[i];
    }
    return total + rates_.back() * (t - left);
}

double PiecewiseHazard::inverse_cumulative(double h) const {
    if (h < 0.0) throw std::invalid_argument("hazard: cumulative value must be >= 0");
    if (h == 0.0) return 0.0;
    double total = 0.0;
    double left = 0.0;
    for (std::size_t i = 0; i < cuts_.size(); ++i) {
        const double seg = rates_[i] * (cuts_[i] - left);
        if (h <= total + seg) return left + (h - total) / rates_[i];
        total += seg;
        left = cuts_[i];
    }
    return left + (h - total) / rates_.back();
}

double PiecewiseHazard::survival(double t) const { return std::exp(-cumulative(t)); }

PiecewiseHazard PiecewiseHazard::scaled(double factor) const {
    if (!(factor > 0.0)) throw std::invalid_argument("hazard: scale factor must be > 0");
    std::vector<double> r = rates_;
    for (double& x : r) x *= factor;
    return {cuts_, std::move(r)};
}

double sample_piecewise_exponential(const PiecewiseHazard& hazard, double u) {
    if (!(u > 0.0 && u < 1.0)) {
        throw std::invalid_argument("sample_piecewise_exponential: u must be in (0,1)");
    }
    return hazard.inverse_cumulative(-std::log1p(-u));
}

CopulaSpec::CopulaSpec(double beta_in, PiecewiseHazard death, PiecewiseHazard hosp)
    : beta(beta_in),
      death_hazard(std::move(death)),
      hosp_hazard(std::move(hosp)) {
    if (!(beta >= 1.0) || !std::isfinite(beta)) {
        throw std::invalid_argument("copula: beta must be >= 1");
    }
}

std::pair<double, double> sample_copula_pair(const CopulaSpec& spec,
                                             detail::CounterRng& rng) {
    double wd, wh;
    if (spec.beta == 1.0) {
        wd = rng.next_exponential();
        wh = rng.next_exponential();
    } else {
        // positive stable(a) mixture, Kanter's representation, in log space
        const double a = 1.0 / spec.beta;
        const double th = rng.next_uniform() * kPi;
        const double w = rng.next_exponential();
        const double log_a_u = (a / (1.0 - a)) * std::log(std::sin(a * th)) +
                               std::log(std::sin((1.0 - a) * th)) -
                               (1.0 / (1.0 - a)) * std::log(std::sin(th));
        const double a_log_s = (1.0 - a) * (log_a_u - std::log(w));
        wd = std::exp(a * std::log(rng.next_exponential()) - a_log_s);
        wh = std::exp(a * std::log(rng.next_exponential()) - a_log_s);
    }
    return {spec.death_hazard.inverse_cumulative(wd),
            spec.hosp_hazard.inverse_cumulative(wh)};
}

void ScenarioConfig::validate() const {
    if (n_total < 2) throw std::invalid_argument("scenario: need at least two subjects");
    if (!(treated_fraction > 0.0 && treated_fraction < 1.0)) {
        throw std::invalid_argument("scenario: treated fraction must be in (0,1)");
    }
    const int m = static_cast<int>(std::llround(n_total * treated_fraction));
    if (m < 1 || m > n_total - 1) {
        throw std::invalid_argument("scenario: both arms must be nonempty");
    }
    if (!(follow_up > 0.0) || !std::isfinite(follow_up)) {
        throw std::invalid_argument("scenario: follow-up must be positive");
    }
    if (schedule_floor < 0.0 || !(schedule_floor < follow_up)) {
        throw std::invalid_argument("scenario: need 0 <= floor < follow-up");
    }
    if (replicates < 1) throw std::invalid_argument("scenario: replicates must be >= 1");
    if (!(alpha > 0.0 && alpha <= 1.0)) {
        throw std::invalid_argument("scenario: alpha must be in (0,1]");
    }
}

TrialDataset generate_trial(const ScenarioConfig& config, int replicate_index) {
    config.validate();
    if (replicate_index < 0) {
        throw std::invalid_argument("generate_trial: replicate index must be >= 0");
    }
    const int n = config.n_total;
    const int m = static_cast<int>(std::llround(n * config.treated_fraction));
    std::vector<SubjectRecord> subjects(n);
    for (int i = 0; i < n; ++i) {
        const bool treated = i < m;
        detail::CounterRng rng(config.seed,
                               static_cast<std::uint64_t>(replicate_index),
                               static_cast<std::uint64_t>(i));
        const auto [d, h] =
            sample_copula_pair(treated ? config.treatment : config.control, rng);
        subjects[i].arm = treated ? 1 : 0;
        subjects[i].layers = {{d, false}, {h, false}};
    }
    return restrict_to_horizon(TrialDataset(std::move(subjects), 2),
                               config.follow_up);
}

TestSpec parse_test_spec(const std::string& name) {
    if (name == "fs") return {"fs", 1};
    if (name.rfind("profs", 0) == 0 && name.size() > 5) {
        const std::string digits = name.substr(5);
        for (char c : digits) {
            if (!std::isdigit(static_cast<unsigned char>(c))) {
                throw std::invalid_argument("unknown test name: " + name);
            }
        }
        const long p = std::strtol(digits.c_str(), nullptr, 10);
        if (p < 1 || p > 64) throw std::invalid_argument("unknown test name: " + name);
        return {name, static_cast<int>(p)};
    }
    throw std::invalid_argument("unknown test name: " + name);
}

namespace {

// Z and covariance for a subset of the union examination columns.
ProfsStatistics stats_from_columns(const detail::MultiScore& ms,
                                   const TrialDataset& data,
                                   const std::vector<int>& cols) {
    const int n = data.n();
    const int m = data.treated_count();
    const int p = static_cast<int>(cols.size());
    const int stride = ms.n_horizons;

    std::vector<std::int64_t> z_int(p, 0);
    std::vector<std::int64_t> cross(static_cast<std::size_t>(p) * p, 0);
    for (int i = 0; i < n; ++i) {
        const std::int64_t* u = ms.u.data() + static_cast<std::size_t>(i) * stride;
        const bool treated = data.subjects()[i].arm == 1;
        for (int k1 = 0; k1 < p; ++k1) {
            const std::int64_t v1 = u[cols[k1]];
            if (treated) z_int[k1] += v1;
            for (int k2 = k1; k2 < p; ++k2) {
                cross[static_cast<std::size_t>(k1) * p + k2] += v1 * u[cols[k2]];
            }
        }
    }

    ProfsStatistics st;
    st.z.assign(p, 0.0);
    st.sigma = detail::Matrix(p, 0.0);
    const double factor = static_cast<double>(m) * (n - m) /
                          (static_cast<double>(n) * (n - 1));
    for (int k = 0; k < p; ++k) st.z[k] = static_cast<double>(z_int[k]);
    for (int k1 = 0; k1 < p; ++k1) {
        for (int k2 = k1; k2 < p; ++k2) {
            const double v =
                factor * static_cast<double>(cross[static_cast<std::size_t>(k1) * p + k2]);
            st.sigma(k1, k2) = v;
            st.sigma(k2, k1) = v;
        }
    }
    return st;
}

}  // namespace

OperatingCharacteristics estimate_operating_characteristics(
    const ScenarioConfig& config, const std::vector<TestSpec>& tests,
    bool keep_p_values, int n_threads, double mvn_accuracy) {
    config.validate();
    if (tests.empty()) {
        throw std::invalid_argument("estimate_operating_characteristics: no tests");
    }

    std::vector<ExaminationSchedule> schedules;
    schedules.reserve(tests.size());
    for (const auto& t : tests) {
        if (t.examinations < 1) {
            throw std::invalid_argument("test needs at least one examination: " + t.name);
        }
        schedules.push_back(quantile_schedule(config.follow_up, t.examinations,
                                              config.schedule_floor));
    }

    std::vector<double> union_times;
    for (const auto& s : schedules) {
        union_times.insert(union_times.end(), s.times().begin(), s.times().end());
    }
    std::sort(union_times.begin(), union_times.end());
    union_times.erase(std::unique(union_times.begin(), union_times.end()),
                      union_times.end());

    std::vector<std::vector<int>> columns(tests.size());
    for (std::size_t t = 0; t < tests.size(); ++t) {
        for (double time : schedules[t].times()) {
            const auto it =
                std::lower_bound(union_times.begin(), union_times.end(), time);
            columns[t].push_back(static_cast<int>(it - union_times.begin()));
        }
    }

    OperatingCharacteristics out;
    out.scenario_id = config.id;
    out.tests.resize(tests.size());
    for (std::size_t t = 0; t < tests.size(); ++t) {
        out.tests[t].test = tests[t].name;
        out.tests[t].replicates = config.replicates;
    }
    if (keep_p_values) {
        out.p_values.assign(tests.size(),
                            std::vector<double>(config.replicates, 1.0));
    }

    for (int r = 0; r < config.replicates; ++r) {
        const TrialDataset trial = generate_trial(config, r);
        const auto ms =
            detail::hierarchical_scores(trial, union_times, nullptr, n_threads);
        for (std::size_t t = 0; t < tests.size(); ++t) {
            const ProfsStatistics st = stats_from_columns(ms, trial, columns[t]);
            const std::uint64_t sub_seed =
                detail::CounterRng(config.seed, 0x70766Cull,
                                   static_cast<std::uint64_t>(r),
                                   static_cast<std::uint64_t>(t))
                    .next_u64();
            const ProfsResult res =
                max_test_from_statistics(st, mvn_accuracy, sub_seed);
            // <= so that alpha = 1 rejects even the p = 1 atoms (Z exactly 0,
            // or a fully degenerate replicate); for alpha < 1 the boundary
            // carries no probability
            if (res.p_value <= config.alpha) ++out.tests[t].rejections;
            if (keep_p_values) out.p_values[t][r] = res.p_value;
        }
    }

    for (auto& t : out.tests) {
        t.rate = static_cast<double>(t.rejections) / t.replicates;
        const BinomialInterval ci = clopper_pearson(t.rejections, t.replicates);
        t.ci_lo = ci.lo;
        t.ci_hi = ci.hi;
    }
    return out;
}

namespace {

double betacf(double a, double b, double x) {
    constexpr int kMaxIter = 300;
    constexpr double kEps = 3e-14;
    constexpr double kFpMin = 1e-300;
    const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < kEps) break;
    }
    return h;
}

double incomplete_beta_inv(double a, double b, double p) {
    double lo = 0.0, hi = 1.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (incomplete_beta(a, b, mid) < p) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
    if (!(a > 0.0 && b > 0.0)) {
        throw std::invalid_argument("incomplete_beta: a, b must be > 0");
    }
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double bt = std::exp(std::lgamma(a + b) - std::lgamma(a) -
                               std::lgamma(b) + a * std::log(x) +
                               b * std::log1p(-x));
    if (x < (a + 1.0) / (a + b + 2.0)) return bt * betacf(a, b, x) / a;
    return 1.0 - bt * betacf(b, a, 1.0 - x) / b;
}

BinomialInterval clopper_pearson(int successes, int trials, double level) {
    if (trials < 1 || successes < 0 || successes > trials) {
        throw std::invalid_argument("clopper_pearson: need 0 <= successes <= trials");
    }
    if (!(level > 0.0 && level < 1.0)) {
        throw std::invalid_argument("clopper_pearson: level must be in (0,1)");
    }
    const double tail = (1.0 - level) / 2.0;
    BinomialInterval ci;
    ci.lo = successes == 0
                ? 0.0
                : incomplete_beta_inv(successes, trials - successes + 1.0, tail);
    ci.hi = successes == trials
                ? 1.0
                : incomplete_beta_inv(successes + 1.0, trials - successes,
                                      1.0 - tail);
    return ci;
}

BinomialBand binomial_acceptance_band(double rate, int trials, double level) {
    if (trials < 1) throw std::invalid_argument("binomial band: trials must be >= 1");
    if (!(rate > 0.0 && rate < 1.0)) {
        throw std::invalid_argument("binomial band: rate must be in (0,1)");
    }
    if (!(level > 0.0 && level < 1.0)) {
        throw std::invalid_argument("binomial band: level must be in (0,1)");
    }
    const double eps = (1.0 - level) / 2.0;
    const double lg_n = std::lgamma(trials + 1.0);
    double cdf = 0.0;
    int lo = 0, hi = trials;
    bool lo_found = false;
    for (int k = 0; k <= trials; ++k) {
        const double lp = lg_n - std::lgamma(k + 1.0) - std::lgamma(trials - k + 1.0) +
                          k * std::log(rate) + (trials - k) * std::log1p(-rate);
        cdf += std::exp(lp);
        if (cdf <= eps) {
            lo = k;
            lo_found = true;
        }
        if (cdf >= 1.0 - eps) {
            hi = k;
            break;
        }
    }
    BinomialBand band;
    band.lo_count = lo_found ? lo : 0;
    band.hi_count = hi;
    band.lo = static_cast<double>(band.lo_count) / trials;
    band.hi = static_cast<double>(band.hi_count) / trials;
    return band;
}

namespace {

std::string format_number(double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", x);
    return buf;
}

ScenarioConfig constant_effect_scenario(double effect_death, double effect_hosp,
                                        double kendall_w, double horizon) {
    const double lambda_death = 0.0008;
    const double lambda_hosp = 0.0022;
    const double beta = 1.0 / (1.0 - kendall_w);
    CopulaSpec control(beta, PiecewiseHazard::constant(lambda_death),
                       PiecewiseHazard::constant(lambda_hosp));
    CopulaSpec treatment(
        beta, PiecewiseHazard::constant(lambda_death * std::exp(-effect_death)),
        PiecewiseHazard::constant(lambda_hosp * std::exp(-effect_hosp)));
    ScenarioConfig cfg(std::move(control), std::move(treatment));
    cfg.id = "const_aD" + format_number(effect_death) + "_aH" +
             format_number(effect_hosp) + "_W" + format_number(kendall_w) + "_S" +
             format_number(horizon);
    cfg.follow_up = horizon;
    cfg.replicates = (effect_death == 0.0 && effect_hosp == 0.0) ? 5000 : 2000;
    return cfg;
}

ScenarioConfig short_term_scenario(bool effect_on_death, double kendall_w,
                                   double horizon) {
    const double beta = 1.0 / (1.0 - kendall_w);
    CopulaSpec control =
        effect_on_death
            ? CopulaSpec(beta,
                         PiecewiseHazard({300.0, 700.0}, {0.0008, 0.0003, 0.0008}),
                         PiecewiseHazard::constant(0.0022))
            : CopulaSpec(beta, PiecewiseHazard::constant(0.0008),
                         PiecewiseHazard({100.0, 200.0}, {0.00085, 0.0022, 0.00085}));
    CopulaSpec treatment =
        effect_on_death
            ? CopulaSpec(beta, PiecewiseHazard({500.0}, {0.0004, 0.0008}),
                         PiecewiseHazard::constant(0.0022))
            : CopulaSpec(beta, PiecewiseHazard::constant(0.0008),
                         PiecewiseHazard({150.0}, {0.0013, 0.0022}));
    ScenarioConfig cfg(std::move(control), std::move(treatment));
    cfg.id = std::string(effect_on_death ? "stdeath" : "sthosp") + "_W" +
             format_number(kendall_w) + "_S" + format_number(horizon);
    cfg.follow_up = horizon;
    cfg.replicates = 2000;
    return cfg;
}

}  // namespace

std::vector<ScenarioConfig> build_paper_scenarios() {
    const double effects[] = {0.0, 0.1, 0.2, 0.3};
    const double ws[] = {0.0, 0.5};
    const double horizons[] = {500.0, 1000.0, 1500.0};
    const double short_horizons[] = {300.0, 800.0, 1500.0};

    std::vector<ScenarioConfig> out;
    for (double ad : effects)
        for (double ah : effects)
            for (double w : ws)
                for (double s : horizons)
                    out.push_back(constant_effect_scenario(ad, ah, w, s));
    for (int death = 1; death >= 0; --death)
        for (double w : ws)
            for (double s : short_horizons)
                out.push_back(short_term_scenario(death == 1, w, s));
    return out;
}

ScenarioConfig paper_scenario(const std::string& id) {
    for (auto& cfg : build_paper_scenarios()) {
        if (cfg.id == id) return cfg;
    }
    throw std::invalid_argument("unknown scenario id: " + id);
}

}  // namespace profs::sim
