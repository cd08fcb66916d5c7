#pragma once

#include <cstddef>
#include <vector>

// Minimal dense symmetric-matrix helpers for the small (p <= ~50) matrices
// used by the joint test and the boundary simulation.

namespace profs::detail {

// Row-major square matrix.
class Matrix {
public:
    Matrix() = default;
    Matrix(int dim, double fill = 0.0)
        : dim_(dim), data_(static_cast<std::size_t>(dim) * dim, fill) {}

    int dim() const { return dim_; }
    double& operator()(int i, int j) { return data_[static_cast<std::size_t>(i) * dim_ + j]; }
    double operator()(int i, int j) const { return data_[static_cast<std::size_t>(i) * dim_ + j]; }
    const std::vector<double>& data() const { return data_; }
    std::vector<double>& data() { return data_; }

private:
    int dim_ = 0;
    std::vector<double> data_;
};

// Lower-triangular Cholesky factor of a PSD matrix; pivots whose residual
// falls below tol * max_diag are treated as exactly zero (the factor column
// is zeroed), so exactly singular PSD inputs are accepted. Returns false if
// a residual is negative beyond the tolerance.
bool cholesky_psd(const Matrix& a, Matrix& lower, double tol = 1e-10);

// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
// Eigenvalues ascending; columns of vectors are the eigenvectors.
void symmetric_eigen(const Matrix& a, std::vector<double>& values, Matrix& vectors);

// y = L * x for lower-triangular L.
void lower_tri_multiply(const Matrix& lower, const double* x, double* y);

}  // namespace profs::detail
