#include "profs/mvn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "profs/detail/rng.hpp"

namespace profs::mvn {

double standard_normal_cdf(double x) {
    // erfc keeps full relative accuracy in the lower tail.
    return 0.5 * std::erfc(-x * 0.7071067811865475244);
}

namespace {

double standard_normal_pdf(double x) {
    return 0.3989422804014326779 * std::exp(-0.5 * x * x);
}

}  // namespace

// Rational approximation in Wichura's PPND16 layout, polished by two Newton
// steps against the erfc-based cdf. The seed is evaluated in the lower tail,
// where the cdf keeps full relative accuracy (and 1 - u is exact for
// u >= 1/2), so the refined result is good to ~1e-13 relative.
double standard_normal_quantile(double u) {
    if (!(u > 0.0 && u < 1.0)) {
        throw std::invalid_argument("standard_normal_quantile: u must be in (0,1)");
    }
    const bool upper = u > 0.5;
    const double t = upper ? 1.0 - u : u;

    double x;
    const double q = t - 0.5;
    if (q >= -0.425) {
        const double r = 0.180625 - q * q;
        x = q *
            (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r +
                  6.7265770927008700853e4) * r + 4.5921953931549871457e4) * r +
                1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r +
              1.3314166789178437745e2) * r + 3.3871328727963666080e0) /
            (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r +
                  3.9307895800092710610e4) * r + 2.1213794301586595867e4) * r +
                5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r +
              4.2313330701600911252e1) * r + 1.0);
    } else {
        double r = std::sqrt(-std::log(t));
        if (r <= 5.0) {
            r -= 1.6;
            x = -(((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                       2.41780725177450611770e-1) * r + 1.27045825245236838258e0) * r +
                     3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r +
                   4.63033784615654529590e0) * r + 1.42343711074968357734e0) /
                (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                      1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
                    6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r +
                  2.05319162663775882187e0) * r + 1.0);
        } else {
            r -= 5.0;
            x = -(((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                       1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
                     2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r +
                   5.46378491116411436990e0) * r + 6.65790464350110377720e0) /
                (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                      1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
                    1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
                  5.99832206555887937690e-1) * r + 1.0);
        }
    }

    for (int i = 0; i < 2; ++i) {
        const double pdf = standard_normal_pdf(x);
        if (!(pdf > 0.0)) break;
        const double step = (standard_normal_cdf(x) - t) / pdf;
        if (!std::isfinite(step)) break;
        x -= step;
    }
    return upper ? -x : x;
}

CorrelationMatrix::CorrelationMatrix(const std::vector<std::vector<double>>& entries) {
    const int p = static_cast<int>(entries.size());
    if (p < 1) throw std::invalid_argument("correlation matrix: dimension must be >= 1");
    matrix_ = detail::Matrix(p);
    for (int i = 0; i < p; ++i) {
        if (static_cast<int>(entries[i].size()) != p) {
            throw std::invalid_argument("correlation matrix: not square");
        }
        for (int j = 0; j < p; ++j) matrix_(i, j) = entries[i][j];
    }
    validate_and_repair();
}

CorrelationMatrix::CorrelationMatrix(const detail::Matrix& entries)
    : matrix_(entries) {
    if (matrix_.dim() < 1) {
        throw std::invalid_argument("correlation matrix: dimension must be >= 1");
    }
    validate_and_repair();
}

void CorrelationMatrix::validate_and_repair() {
    const int p = matrix_.dim();
    for (int i = 0; i < p; ++i) {
        if (std::abs(matrix_(i, i) - 1.0) > 1e-12) {
            throw std::invalid_argument("correlation matrix: diagonal must be 1");
        }
        matrix_(i, i) = 1.0;
        for (int j = i + 1; j < p; ++j) {
            if (std::abs(matrix_(i, j) - matrix_(j, i)) > 1e-10) {
                throw std::invalid_argument("correlation matrix: not symmetric");
            }
            double v = 0.5 * (matrix_(i, j) + matrix_(j, i));
            if (std::abs(v) > 1.0 + 1e-12) {
                throw std::invalid_argument(
                    "correlation matrix: off-diagonal outside [-1, 1]");
            }
            v = std::clamp(v, -1.0, 1.0);
            matrix_(i, j) = matrix_(j, i) = v;
        }
    }

    detail::Matrix lower;
    if (detail::cholesky_psd(matrix_, lower, 1e-10)) return;

    // Indefinite beyond round-off: clip the spectrum at 1e-10 and rescale
    // the diagonal back to 1. Rejected only if an eigenvalue is genuinely
    // negative.
    std::vector<double> values;
    detail::Matrix vectors;
    detail::symmetric_eigen(matrix_, values, vectors);
    if (values.front() < -1e-10 * p) {
        throw std::runtime_error("correlation matrix: not positive semi-definite");
    }
    for (double& v : values) v = std::max(v, 1e-10);
    detail::Matrix repaired(p, 0.0);
    for (int i = 0; i < p; ++i) {
        for (int j = i; j < p; ++j) {
            double s = 0.0;
            for (int k = 0; k < p; ++k) {
                s += vectors(i, k) * values[k] * vectors(j, k);
            }
            repaired(i, j) = repaired(j, i) = s;
        }
    }
    for (int i = 0; i < p; ++i) {
        const double d = std::sqrt(repaired(i, i));
        for (int j = 0; j < p; ++j) {
            repaired(i, j) /= d;
            repaired(j, i) /= d;
        }
    }
    for (int i = 0; i < p; ++i) repaired(i, i) = 1.0;
    matrix_ = std::move(repaired);
    adjusted_ = true;
}

namespace {

constexpr double kTiny = 1e-15;  // clamp for Phi^{-1} arguments

// Square roots of the first primes drive the Kronecker lattice.
const double* kronecker_generators(int count) {
    static const std::vector<double> roots = [] {
        std::vector<int> primes;
        for (int cand = 2; static_cast<int>(primes.size()) < 64; ++cand) {
            bool is_prime = true;
            for (int d : primes) {
                if (d * d > cand) break;
                if (cand % d == 0) { is_prime = false; break; }
            }
            if (is_prime) primes.push_back(cand);
        }
        std::vector<double> r(primes.size());
        for (std::size_t i = 0; i < primes.size(); ++i) {
            double s = std::sqrt(static_cast<double>(primes[i]));
            r[i] = s - std::floor(s);
        }
        return r;
    }();
    if (count > static_cast<int>(roots.size())) {
        throw std::invalid_argument("rectangle probability: dimension too large");
    }
    return roots.data();
}

// Genz reordering + Cholesky for the symmetric box [-z, z]^p: at each step
// the remaining variable with the smallest conditional interval probability
// is pivoted next, and the truncated-normal mean feeds the later bounds.
detail::Matrix reordered_cholesky(const detail::Matrix& omega, double z) {
    const int p = omega.dim();
    detail::Matrix c = omega;
    detail::Matrix lower(p, 0.0);
    std::vector<double> y(p, 0.0);

    for (int i = 0; i < p; ++i) {
        int best = -1;
        double best_prob = std::numeric_limits<double>::infinity();
        for (int j = i; j < p; ++j) {
            double var = c(j, j);
            double mean = 0.0;
            for (int m = 0; m < i; ++m) {
                var -= lower(j, m) * lower(j, m);
                mean += lower(j, m) * y[m];
            }
            if (var < 1e-20) var = 1e-20;
            const double sd = std::sqrt(var);
            const double prob = standard_normal_cdf((z - mean) / sd) -
                                standard_normal_cdf((-z - mean) / sd);
            if (prob < best_prob) {
                best_prob = prob;
                best = j;
            }
        }
        if (best != i) {
            for (int k = 0; k < p; ++k) std::swap(c(i, k), c(best, k));
            for (int k = 0; k < p; ++k) std::swap(c(k, i), c(k, best));
            for (int k = 0; k < i; ++k) std::swap(lower(i, k), lower(best, k));
        }

        double d = c(i, i);
        double mean = 0.0;
        for (int m = 0; m < i; ++m) {
            d -= lower(i, m) * lower(i, m);
            mean += lower(i, m) * y[m];
        }
        if (d < 1e-20) d = 1e-20;
        const double lii = std::sqrt(d);
        lower(i, i) = lii;
        for (int j = i + 1; j < p; ++j) {
            double s = c(j, i);
            for (int m = 0; m < i; ++m) s -= lower(i, m) * lower(j, m);
            lower(j, i) = s / lii;
        }

        // conditional truncated-normal mean used by the ordering heuristic
        const double lo = (-z - mean) / lii;
        const double hi = (z - mean) / lii;
        const double plo = standard_normal_cdf(lo);
        const double phi = standard_normal_cdf(hi);
        const double denom = std::max(phi - plo, kTiny);
        y[i] = (standard_normal_pdf(lo) - standard_normal_pdf(hi)) / denom;
    }
    return lower;
}

// One integrand evaluation of the sequential conditional transform at the
// (p-1)-dimensional cube point w.
double transformed_density(const detail::Matrix& lower, double z, const double* w) {
    const int p = lower.dim();
    double d = standard_normal_cdf(-z / lower(0, 0));
    double e = standard_normal_cdf(z / lower(0, 0));
    double f = e - d;
    if (p == 1) return f;

    double y[64];
    for (int i = 1; i < p; ++i) {
        double u = d + w[i - 1] * (e - d);
        u = std::clamp(u, kTiny, 1.0 - kTiny);
        y[i - 1] = standard_normal_quantile(u);
        double s = 0.0;
        for (int m = 0; m < i; ++m) s += lower(i, m) * y[m];
        const double lii = lower(i, i);
        d = standard_normal_cdf((-z - s) / lii);
        e = standard_normal_cdf((z - s) / lii);
        f *= (e - d);
    }
    return f;
}

}  // namespace

MvnEstimate symmetric_rectangle_probability(const CorrelationMatrix& omega,
                                            double z, double accuracy,
                                            std::uint64_t seed) {
    if (!(z >= 0.0)) {
        throw std::invalid_argument("rectangle probability: z must be >= 0");
    }
    if (!(accuracy > 0.0)) {
        throw std::invalid_argument("rectangle probability: accuracy must be > 0");
    }
    const int p = omega.dim();

    MvnEstimate est;
    est.correlation_adjusted = omega.adjusted();
    if (p == 1 || z == 0.0) {
        est.value = std::max(2.0 * standard_normal_cdf(z) - 1.0, 0.0);
        est.error_estimate = 0.0;
        est.samples_used = 0;
        return est;
    }

    const detail::Matrix lower = reordered_cholesky(omega.matrix(), z);
    const int dims = p - 1;
    const double* gen = kronecker_generators(dims);

    const int n_rand = kRandomizations;
    std::vector<std::vector<double>> shifts(n_rand, std::vector<double>(dims));
    for (int r = 0; r < n_rand; ++r) {
        detail::CounterRng rng(seed, 0x6D766E /* stream tag */, static_cast<std::uint64_t>(r));
        for (int j = 0; j < dims; ++j) shifts[r][j] = rng.next_uniform();
    }

    std::vector<double> sums(n_rand, 0.0);
    std::int64_t n_per_rand = 0;
    std::int64_t target = std::max<std::int64_t>(64, 8 * dims);
    const std::int64_t cap_per_rand = kSampleCap / n_rand;

    double value = 0.0, error = 0.0;
    while (true) {
        for (int r = 0; r < n_rand; ++r) {
            double local = 0.0;
            double w[64];
            for (std::int64_t k = n_per_rand + 1; k <= target; ++k) {
                for (int j = 0; j < dims; ++j) {
                    double x = std::fma(static_cast<double>(k), gen[j], shifts[r][j]);
                    x -= std::floor(x);
                    // tent transform improves the lattice's uniformity
                    w[j] = std::abs(2.0 * x - 1.0);
                }
                local += transformed_density(lower, z, w);
            }
            sums[r] += local;
        }
        n_per_rand = target;

        double mean = 0.0;
        for (int r = 0; r < n_rand; ++r) mean += sums[r] / static_cast<double>(n_per_rand);
        mean /= n_rand;
        double var = 0.0;
        for (int r = 0; r < n_rand; ++r) {
            const double d = sums[r] / static_cast<double>(n_per_rand) - mean;
            var += d * d;
        }
        var /= (n_rand - 1);
        value = mean;
        error = 3.0 * std::sqrt(var / n_rand);

        if (error <= accuracy) break;
        if (n_per_rand >= cap_per_rand) {
            est.converged = false;
            break;
        }
        target = std::min<std::int64_t>(2 * n_per_rand, cap_per_rand);
    }

    est.value = std::clamp(value, 0.0, 1.0);
    est.error_estimate = error;
    est.samples_used = n_per_rand * n_rand;
    return est;
}

}  // namespace profs::mvn
