#include "profs/detail/linalg.hpp"

#include <algorithm>
#include <cmath>

namespace profs::detail {

bool cholesky_psd(const Matrix& a, Matrix& lower, double tol) {
    const int n = a.dim();
    lower = Matrix(n, 0.0);
    double max_diag = 0.0;
    for (int i = 0; i < n; ++i) max_diag = std::max(max_diag, std::abs(a(i, i)));
    const double cutoff = tol * std::max(max_diag, 1.0);

    for (int j = 0; j < n; ++j) {
        double d = a(j, j);
        for (int k = 0; k < j; ++k) d -= lower(j, k) * lower(j, k);
        if (d <= cutoff) {
            if (d < -cutoff) return false;
            // singular direction: column is identically zero
            continue;
        }
        const double ljj = std::sqrt(d);
        lower(j, j) = ljj;
        for (int i = j + 1; i < n; ++i) {
            double s = a(i, j);
            for (int k = 0; k < j; ++k) s -= lower(i, k) * lower(j, k);
            lower(i, j) = s / ljj;
        }
    }
    return true;
}

void symmetric_eigen(const Matrix& a, std::vector<double>& values, Matrix& vectors) {
    const int n = a.dim();
    Matrix m = a;
    vectors = Matrix(n, 0.0);
    for (int i = 0; i < n; ++i) vectors(i, i) = 1.0;

    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) off += m(i, j) * m(i, j);
        if (off < 1e-30) break;

        for (int p = 0; p < n - 1; ++p) {
            for (int q = p + 1; q < n; ++q) {
                const double apq = m(p, q);
                if (std::abs(apq) < 1e-300) continue;
                const double theta = (m(q, q) - m(p, p)) / (2.0 * apq);
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (int k = 0; k < n; ++k) {
                    const double mkp = m(k, p), mkq = m(k, q);
                    m(k, p) = c * mkp - s * mkq;
                    m(k, q) = s * mkp + c * mkq;
                }
                for (int k = 0; k < n; ++k) {
                    const double mpk = m(p, k), mqk = m(q, k);
                    m(p, k) = c * mpk - s * mqk;
                    m(q, k) = s * mpk + c * mqk;
                }
                for (int k = 0; k < n; ++k) {
                    const double vkp = vectors(k, p), vkq = vectors(k, q);
                    vectors(k, p) = c * vkp - s * vkq;
                    vectors(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }

    values.resize(n);
    for (int i = 0; i < n; ++i) values[i] = m(i, i);

    // sort ascending, carrying eigenvector columns along
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](int x, int y) { return values[x] < values[y]; });
    std::vector<double> sorted_vals(n);
    Matrix sorted_vecs(n, 0.0);
    for (int c = 0; c < n; ++c) {
        sorted_vals[c] = values[order[c]];
        for (int r = 0; r < n; ++r) sorted_vecs(r, c) = vectors(r, order[c]);
    }
    values = std::move(sorted_vals);
    vectors = std::move(sorted_vecs);
}

void lower_tri_multiply(const Matrix& lower, const double* x, double* y) {
    const int n = lower.dim();
    for (int i = 0; i < n; ++i) {
        double s = 0.0;
        for (int j = 0; j <= i; ++j) s += lower(i, j) * x[j];
        y[i] = s;
    }
}

}  // namespace profs::detail
