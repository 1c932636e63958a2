#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "ppg2ecg/errors.hpp"

namespace ppg2ecg {

/// Dense row-major matrix of doubles. Sized for this pipeline's shapes
/// (hundreds of rows/columns), so plain triple loops are fine.
class Matrix {
public:
    Matrix() = default;

    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool empty() const noexcept { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    std::vector<double>& data() noexcept { return data_; }
    const std::vector<double>& data() const noexcept { return data_; }

    bool all_finite() const {
        for (double v : data_)
            if (!std::isfinite(v)) return false;
        return true;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

inline Matrix transpose(const Matrix& a) {
    Matrix t(a.cols(), a.rows());
    for (std::size_t r = 0; r < a.rows(); ++r)
        for (std::size_t c = 0; c < a.cols(); ++c) t(c, r) = a(r, c);
    return t;
}

inline Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows())
        raise(ErrorCode::DimensionMismatch, "matmul: inner dimensions differ");
    Matrix out(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += aik * b(k, j);
        }
    }
    return out;
}

/// XᵀX without forming the transpose.
inline Matrix gram(const Matrix& x) {
    Matrix g(x.cols(), x.cols());
    for (std::size_t r = 0; r < x.rows(); ++r) {
        const auto row = x.row(r);
        for (std::size_t i = 0; i < x.cols(); ++i) {
            const double xi = row[i];
            if (xi == 0.0) continue;
            for (std::size_t j = i; j < x.cols(); ++j) g(i, j) += xi * row[j];
        }
    }
    for (std::size_t i = 0; i < g.rows(); ++i)
        for (std::size_t j = 0; j < i; ++j) g(i, j) = g(j, i);
    return g;
}

/// XᵀY without forming the transpose.
inline Matrix cross_product(const Matrix& x, const Matrix& y) {
    if (x.rows() != y.rows())
        raise(ErrorCode::DimensionMismatch, "cross_product: row counts differ");
    Matrix c(x.cols(), y.cols());
    for (std::size_t r = 0; r < x.rows(); ++r) {
        const auto xr = x.row(r);
        const auto yr = y.row(r);
        for (std::size_t i = 0; i < x.cols(); ++i) {
            const double xi = xr[i];
            if (xi == 0.0) continue;
            for (std::size_t j = 0; j < y.cols(); ++j) c(i, j) += xi * yr[j];
        }
    }
    return c;
}

inline double frobenius_norm(const Matrix& a) {
    double s = 0.0;
    for (double v : a.data()) s += v * v;
    return std::sqrt(s);
}

/// In-place lower Cholesky of a symmetric positive-definite matrix.
/// Returns the (min, max) diagonal of the factor for condition estimates.
/// Throws SingularSystem when a pivot collapses.
inline std::pair<double, double> cholesky_factor(Matrix& a) {
    const std::size_t n = a.rows();
    if (n != a.cols()) raise(ErrorCode::DimensionMismatch, "cholesky_factor: matrix not square");
    double scale = 0.0;
    for (std::size_t i = 0; i < n; ++i) scale = std::max(scale, std::fabs(a(i, i)));
    double lo = 0.0, hi = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        double d = a(j, j);
        for (std::size_t k = 0; k < j; ++k) d -= a(j, k) * a(j, k);
        if (!(d > scale * 1e-300) || !std::isfinite(d))
            raise(ErrorCode::SingularSystem, "cholesky_factor: non-positive pivot at column "
                                             + std::to_string(j));
        const double ljj = std::sqrt(d);
        a(j, j) = ljj;
        lo = (j == 0) ? ljj : std::min(lo, ljj);
        hi = std::max(hi, ljj);
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = a(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= a(i, k) * a(j, k);
            a(i, j) = s / ljj;
        }
        for (std::size_t i = 0; i < j; ++i) a(i, j) = 0.0;
    }
    return {lo, hi};
}

/// Solves A X = B for symmetric positive-definite A via Cholesky.
inline Matrix cholesky_solve(Matrix a, const Matrix& b) {
    if (a.rows() != b.rows())
        raise(ErrorCode::DimensionMismatch, "cholesky_solve: shape mismatch");
    cholesky_factor(a);
    const std::size_t n = a.rows();
    Matrix x = b;
    // L z = B
    for (std::size_t c = 0; c < x.cols(); ++c) {
        for (std::size_t i = 0; i < n; ++i) {
            double s = x(i, c);
            for (std::size_t k = 0; k < i; ++k) s -= a(i, k) * x(k, c);
            x(i, c) = s / a(i, i);
        }
        // Lᵀ x = z
        for (std::size_t ii = n; ii-- > 0;) {
            double s = x(ii, c);
            for (std::size_t k = ii + 1; k < n; ++k) s -= a(k, ii) * x(k, c);
            x(ii, c) = s / a(ii, ii);
        }
    }
    return x;
}

/// Symmetric pentadiagonal system stored by bands: d is the diagonal,
/// e1/e2 the first/second subdiagonals (e1[i] pairs rows i and i+1).
struct PentaBands {
    std::vector<double> d;
    std::vector<double> e1;
    std::vector<double> e2;

    std::size_t size() const noexcept { return d.size(); }
};

/// Solves a symmetric positive-definite pentadiagonal system by banded
/// Cholesky (L has bandwidth 2), O(n) time and memory.
inline std::vector<double> penta_cholesky_solve(const PentaBands& a, std::span<const double> b) {
    const std::size_t n = a.size();
    if (b.size() != n || a.e1.size() + 1 != n || a.e2.size() + 2 != n)
        raise(ErrorCode::DimensionMismatch, "penta_cholesky_solve: band sizes inconsistent");
    std::vector<double> l0(n), l1(n, 0.0), l2(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        if (i >= 2) l2[i] = a.e2[i - 2] / l0[i - 2];
        if (i >= 1) {
            double s = a.e1[i - 1];
            if (i >= 2) s -= l2[i] * l1[i - 1];
            l1[i] = s / l0[i - 1];
        }
        double d = a.d[i] - l1[i] * l1[i] - l2[i] * l2[i];
        if (!(d > 0.0) || !std::isfinite(d))
            raise(ErrorCode::SingularSystem, "penta_cholesky_solve: non-positive pivot");
        l0[i] = std::sqrt(d);
    }
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = b[i];
        if (i >= 1) s -= l1[i] * x[i - 1];
        if (i >= 2) s -= l2[i] * x[i - 2];
        x[i] = s / l0[i];
    }
    for (std::size_t i = n; i-- > 0;) {
        double s = x[i];
        if (i + 1 < n) s -= l1[i + 1] * x[i + 1];
        if (i + 2 < n) s -= l2[i + 2] * x[i + 2];
        x[i] = s / l0[i];
    }
    return x;
}

}  // namespace ppg2ecg
