#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "ppg2ecg/errors.hpp"
#include "ppg2ecg/regression.hpp"
#include "ppg2ecg/types.hpp"

namespace ppg2ecg {

/// ||y - y_hat||_2 / ||y||_2.
inline double rrmse(std::span<const double> y, std::span<const double> y_hat) {
    if (y.size() != y_hat.size() || y.empty())
        raise(ErrorCode::LengthMismatch, "rrmse: length mismatch or empty input");
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double d = y[i] - y_hat[i];
        num += d * d;
        den += y[i] * y[i];
    }
    if (den <= 0.0) raise(ErrorCode::ZeroReference, "rrmse: reference has zero norm");
    return std::sqrt(num / den);
}

/// Pearson correlation, clamped into [-1, 1] against rounding.
inline double pearson(std::span<const double> y, std::span<const double> y_hat) {
    const std::size_t n = y.size();
    if (n != y_hat.size() || n < 2)
        raise(ErrorCode::LengthMismatch, "pearson: need equal lengths >= 2");
    double my = 0.0, mh = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        my += y[i];
        mh += y_hat[i];
    }
    my /= static_cast<double>(n);
    mh /= static_cast<double>(n);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double a = y[i] - my, b = y_hat[i] - mh;
        sxy += a * b;
        sxx += a * a;
        syy += b * b;
    }
    if (sxx <= 0.0 || syy <= 0.0) raise(ErrorCode::ConstantInput, "pearson: constant input");
    const double r = sxy / std::sqrt(sxx * syy);
    return std::min(1.0, std::max(-1.0, r));
}

struct AggregateStats {
    double mean_rrmse = 0.0, std_rrmse = 0.0;
    double mean_rho = 0.0, std_rho = 0.0;
    std::size_t n = 0;
};

/// Sample mean and sample (n-1) standard deviation across sessions.
inline AggregateStats aggregate(const std::vector<SessionMetrics>& metrics) {
    const std::size_t n = metrics.size();
    if (n < 2) raise(ErrorCode::TooFewSessions, "aggregate needs >= 2 sessions");
    AggregateStats out;
    out.n = n;
    for (const auto& m : metrics) {
        out.mean_rrmse += m.rrmse;
        out.mean_rho += m.rho;
    }
    out.mean_rrmse /= static_cast<double>(n);
    out.mean_rho /= static_cast<double>(n);
    double vr = 0.0, vp = 0.0;
    for (const auto& m : metrics) {
        vr += (m.rrmse - out.mean_rrmse) * (m.rrmse - out.mean_rrmse);
        vp += (m.rho - out.mean_rho) * (m.rho - out.mean_rho);
    }
    out.std_rrmse = std::sqrt(vr / static_cast<double>(n - 1));
    out.std_rho = std::sqrt(vp / static_cast<double>(n - 1));
    return out;
}

inline SessionMetrics metrics_of(const SubjectRun& run, Scheme scheme, std::size_t l_x,
                                 const std::string& session_id = "") {
    SessionMetrics m;
    m.rrmse = rrmse(run.reference, run.reconstruction);
    m.rho = pearson(run.reference, run.reconstruction);
    m.n_test_cycles = run.n_test;
    m.scheme = scheme;
    m.l_x = l_x;
    m.session_id = session_id;
    return m;
}

/// Re-runs the regression stage at each grid L_x, reusing one preprocessing
/// pass and one full-spectrum DCT of the session.
inline std::vector<SessionMetrics> sweep_lx(const SessionSpectra& spectra,
                                            const std::vector<std::size_t>& grid,
                                            PipelineConfig cfg, const std::string& id = "") {
    std::vector<SessionMetrics> out;
    for (std::size_t g : grid) {
        if (g < 1 || g > cfg.L) raise(ErrorCode::BadCount, "sweep grid value outside [1, L]");
        cfg.l_x = g;
        out.push_back(metrics_of(run_from_spectra(spectra, cfg), cfg.scheme, g, id));
    }
    return out;
}

inline std::vector<SessionMetrics> sweep_lx(const Session& s,
                                            const std::vector<std::size_t>& grid,
                                            const PipelineConfig& cfg) {
    return sweep_lx(SessionSpectra(preprocess_session(s, cfg), cfg.L), grid, cfg, s.id);
}

inline double log_beta(double a, double b) {
    return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

namespace detail {

/// Continued fraction for the regularized incomplete beta, evaluated with the
/// modified Lentz scheme.
inline double beta_cf(double a, double b, double x) {
    constexpr double tiny = 1e-300;
    constexpr double eps = 1e-15;
    const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= 400; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < eps) break;
    }
    return h;
}

}  // namespace detail

/// I_x(a, b), absolute error well under 1e-10 for the shapes used here.
inline double regularized_incomplete_beta(double a, double b, double x) {
    if (!(a > 0.0) || !(b > 0.0))
        raise(ErrorCode::InvalidConfig, "incomplete beta needs a, b > 0");
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double front = std::exp(a * std::log(x) + b * std::log1p(-x) - log_beta(a, b));
    double v;
    if (x < (a + 1.0) / (a + b + 2.0))
        v = front * detail::beta_cf(a, b, x) / a;
    else
        v = 1.0 - front * detail::beta_cf(b, a, 1.0 - x) / b;
    return std::min(1.0, std::max(0.0, v));
}

/// Upper-tail probability of an F(d1, d2) variable.
inline double f_upper_tail(double f, double d1, double d2) {
    if (f <= 0.0) return 1.0;
    return regularized_incomplete_beta(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * f));
}

struct ProfileRow {
    double age = 0.0;
    double weight = 0.0;
    double metric = 0.0;
};

/// OLS of metric on [1, age, weight, age*weight] with the overall F-test
/// F = (R^2/3) / ((1-R^2)/(n-4)) against F(3, n-4).
inline ProfileRegressionResult profile_regression(const std::vector<ProfileRow>& rows) {
    const std::size_t n = rows.size();
    if (n < 5) raise(ErrorCode::TooFewSessions, "profile regression needs >= 5 sessions");
    Matrix x(n, 4), y(n, 1);
    for (std::size_t i = 0; i < n; ++i) {
        x(i, 0) = 1.0;
        x(i, 1) = rows[i].age;
        x(i, 2) = rows[i].weight;
        x(i, 3) = rows[i].age * rows[i].weight;
        y(i, 0) = rows[i].metric;
    }
    Matrix a = gram(x);
    Matrix beta;
    try {
        Matrix probe = a;
        const auto [lo, hi] = cholesky_factor(probe);
        if ((hi / lo) * (hi / lo) >= 1e12)
            raise(ErrorCode::RankDeficientDesign, "profile design nearly rank deficient");
        beta = cholesky_solve(std::move(a), cross_product(x, y));
    } catch (const Error& e) {
        if (e.code() == ErrorCode::SingularSystem)
            raise(ErrorCode::RankDeficientDesign, "profile design rank deficient");
        throw;
    }

    ProfileRegressionResult res;
    res.n = n;
    for (std::size_t j = 0; j < 4; ++j) res.coefficients[j] = beta(j, 0);

    double mean = 0.0;
    for (const auto& r : rows) mean += r.metric;
    mean /= static_cast<double>(n);
    double ss_tot = 0.0, ss_res = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double fit = 0.0;
        for (std::size_t j = 0; j < 4; ++j) fit += x(i, j) * beta(j, 0);
        ss_res += (y(i, 0) - fit) * (y(i, 0) - fit);
        ss_tot += (y(i, 0) - mean) * (y(i, 0) - mean);
    }
    if (ss_tot <= 0.0) {  // constant metric: no explainable variance
        res.r_squared = 0.0;
        res.f_statistic = 0.0;
        res.p_value = 1.0;
        return res;
    }
    res.r_squared = std::min(1.0, std::max(0.0, 1.0 - ss_res / ss_tot));
    const double d2 = static_cast<double>(n) - 4.0;
    if (1.0 - res.r_squared < 1e-12) {  // numerically perfect fit
        res.f_statistic = std::numeric_limits<double>::infinity();
        res.p_value = 0.0;
        return res;
    }
    res.f_statistic = (res.r_squared / 3.0) / ((1.0 - res.r_squared) / d2);
    res.p_value = f_upper_tail(res.f_statistic, 3.0, d2);
    return res;
}

}  // namespace ppg2ecg
