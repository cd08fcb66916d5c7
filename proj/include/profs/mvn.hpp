#pragma once

#include <cstdint>
#include <vector>

#include "profs/detail/linalg.hpp"

// Centered multivariate-normal rectangle probabilities
// P(-z <= X_k <= z for all k), X ~ N(0, Omega), evaluated with a
// reordered-Cholesky sequential transform and randomized quasi-Monte Carlo
// integration (randomly shifted Kronecker lattice with a tent transform).

namespace profs::mvn {

// Symmetric correlation matrix with unit diagonal, PSD within tolerance.
// Construction validates shape and symmetry; near-singular inputs are
// repaired by clipping eigenvalues at 1e-10 (flagged via `adjusted()`),
// matrices indefinite beyond the tolerance are rejected.
class CorrelationMatrix {
public:
    explicit CorrelationMatrix(const std::vector<std::vector<double>>& entries);
    explicit CorrelationMatrix(const detail::Matrix& entries);

    int dim() const { return matrix_.dim(); }
    const detail::Matrix& matrix() const { return matrix_; }
    bool adjusted() const { return adjusted_; }

private:
    void validate_and_repair();

    detail::Matrix matrix_;
    bool adjusted_ = false;
};

struct MvnEstimate {
    double value = 0.0;           // probability in [0, 1]
    double error_estimate = 0.0;  // 3 x standard error over randomizations
    std::int64_t samples_used = 0;
    bool converged = true;        // false when the sample cap was hit first
    bool correlation_adjusted = false;
};

inline constexpr double kDefaultAccuracy = 1e-4;
inline constexpr int kRandomizations = 12;
inline constexpr std::int64_t kSampleCap = std::int64_t{1} << 22;

// P(-z <= X_k <= z, k = 1..p). Deterministic in (omega, z, accuracy, seed).
// Sample size doubles until 3x the standard error across the randomizations
// drops below `accuracy` or the total point cap is reached.
MvnEstimate symmetric_rectangle_probability(const CorrelationMatrix& omega,
                                            double z,
                                            double accuracy = kDefaultAccuracy,
                                            std::uint64_t seed = 0);

// Phi(x), absolute error well below 1e-12; saturates to 0/1 in the tails.
double standard_normal_cdf(double x);

// Phi^{-1}(u) for u in (0,1); relative error <= 1e-9.
double standard_normal_quantile(double u);

}  // namespace profs::mvn
