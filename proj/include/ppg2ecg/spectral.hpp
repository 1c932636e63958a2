#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "ppg2ecg/errors.hpp"
#include "ppg2ecg/matrix.hpp"

namespace ppg2ecg {

/// Orthonormal DCT-II of a fixed length: B[k][n] = s(k) cos(pi (2n+1) k / 2L)
/// with s(0)=sqrt(1/L), s(k>0)=sqrt(2/L). Inverse equals transpose, so the
/// transform is an isometry (Parseval holds exactly up to rounding).
/// Direct O(L^2) evaluation; L is a few hundred here so this is cheap.
class DctPlan {
public:
    explicit DctPlan(std::size_t L) : L_(L), basis_(L, L) {
        if (L == 0) raise(ErrorCode::InvalidConfig, "DctPlan: L must be positive");
        const double pi = 3.14159265358979323846264338327950288;
        const double s0 = std::sqrt(1.0 / static_cast<double>(L));
        const double sk = std::sqrt(2.0 / static_cast<double>(L));
        for (std::size_t k = 0; k < L; ++k) {
            const double scale = (k == 0) ? s0 : sk;
            for (std::size_t n = 0; n < L; ++n) {
                basis_(k, n) = scale * std::cos(pi * (2.0 * n + 1.0) * k / (2.0 * L));
            }
        }
    }

    std::size_t length() const noexcept { return L_; }
    const Matrix& basis() const noexcept { return basis_; }

    std::vector<double> forward(std::span<const double> x) const {
        if (x.size() != L_) raise(ErrorCode::LengthMismatch, "dct_forward: bad input length");
        std::vector<double> out(L_, 0.0);
        for (std::size_t k = 0; k < L_; ++k) {
            const auto row = basis_.row(k);
            double acc = 0.0;
            for (std::size_t n = 0; n < L_; ++n) acc += row[n] * x[n];
            out[k] = acc;
        }
        return out;
    }

    std::vector<double> inverse(std::span<const double> coeffs) const {
        if (coeffs.size() != L_) raise(ErrorCode::LengthMismatch, "dct_inverse: bad input length");
        std::vector<double> out(L_, 0.0);
        for (std::size_t k = 0; k < L_; ++k) {
            const double ck = coeffs[k];
            if (ck == 0.0) continue;
            const auto row = basis_.row(k);
            for (std::size_t n = 0; n < L_; ++n) out[n] += ck * row[n];
        }
        return out;
    }

    /// Row-wise forward transform of an N x L matrix.
    Matrix forward_rows(const Matrix& m) const {
        if (m.cols() != L_) raise(ErrorCode::LengthMismatch, "forward_rows: bad row length");
        Matrix out(m.rows(), L_);
        for (std::size_t r = 0; r < m.rows(); ++r) {
            const auto coeffs = forward(m.row(r));
            std::copy(coeffs.begin(), coeffs.end(), out.row(r).begin());
        }
        return out;
    }

    Matrix inverse_rows(const Matrix& m) const {
        if (m.cols() != L_) raise(ErrorCode::LengthMismatch, "inverse_rows: bad row length");
        Matrix out(m.rows(), L_);
        for (std::size_t r = 0; r < m.rows(); ++r) {
            const auto x = inverse(m.row(r));
            std::copy(x.begin(), x.end(), out.row(r).begin());
        }
        return out;
    }

private:
    std::size_t L_;
    Matrix basis_;
};

/// Keeps the first m columns (the low-order DCT coefficients).
inline Matrix truncate(const Matrix& coeffs, std::size_t m) {
    if (m < 1 || m > coeffs.cols())
        raise(ErrorCode::BadCount, "truncate: need 1 <= m <= column count");
    Matrix out(coeffs.rows(), m);
    for (std::size_t r = 0; r < coeffs.rows(); ++r)
        for (std::size_t c = 0; c < m; ++c) out(r, c) = coeffs(r, c);
    return out;
}

/// Pads columns m..L-1 with zeros.
inline Matrix zero_pad(const Matrix& coeffs, std::size_t L) {
    if (coeffs.cols() > L) raise(ErrorCode::BadCount, "zero_pad: target length too small");
    Matrix out(coeffs.rows(), L);
    for (std::size_t r = 0; r < coeffs.rows(); ++r)
        for (std::size_t c = 0; c < coeffs.cols(); ++c) out(r, c) = coeffs(r, c);
    return out;
}

}  // namespace ppg2ecg
