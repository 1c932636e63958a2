#pragma once

#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "ppg2ecg/config.hpp"
#include "ppg2ecg/errors.hpp"
#include "ppg2ecg/matrix.hpp"
#include "ppg2ecg/preprocess.hpp"
#include "ppg2ecg/spectral.hpp"
#include "ppg2ecg/types.hpp"

namespace ppg2ecg {

struct SplitSpec {
    double train_fraction = 0.8;  // chronological prefix goes to training
};

inline std::size_t split_point(std::size_t n, double train_fraction) {
    if (n < 2) raise(ErrorCode::TooFewCycles, "need at least 2 cycles to split");
    const auto n_train =
        static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(n)));
    if (n_train < 1 || n_train >= n)
        raise(ErrorCode::TooFewCycles, "split leaves an empty train or test set");
    return n_train;
}

inline std::pair<CoefficientSet, CoefficientSet> split(const CoefficientSet& cs,
                                                       const SplitSpec& spec) {
    const std::size_t n = cs.x_trunc.rows();
    const std::size_t n_train = split_point(n, spec.train_fraction);
    auto take = [&](std::size_t lo, std::size_t hi) {
        CoefficientSet part;
        part.L = cs.L;
        part.l_x = cs.l_x;
        part.l_y = cs.l_y;
        part.x_trunc = Matrix(hi - lo, cs.l_x);
        part.y_trunc = Matrix(hi - lo, cs.l_y);
        for (std::size_t r = lo; r < hi; ++r) {
            for (std::size_t c = 0; c < cs.l_x; ++c) part.x_trunc(r - lo, c) = cs.x_trunc(r, c);
            for (std::size_t c = 0; c < cs.l_y; ++c) part.y_trunc(r - lo, c) = cs.y_trunc(r, c);
        }
        return part;
    };
    return {take(0, n_train), take(n_train, n)};
}

/// Ridge solution of min ||XF - Y||^2 + gamma ||F||^2 via the normal
/// equations (X'X + gamma I) F = X'Y, solved with a symmetric
/// positive-definite factorization (no explicit inverse).
inline TransformModel train_ridge(const Matrix& x, const Matrix& y, double gamma) {
    if (x.rows() != y.rows() || x.rows() < 1)
        raise(ErrorCode::DimensionMismatch, "train_ridge: row counts differ or empty");
    if (gamma < 0.0) raise(ErrorCode::InvalidConfig, "gamma must be >= 0");
    Matrix a = gram(x);
    if (gamma == 0.0) {
        Matrix probe = a;
        const auto [lo, hi] = cholesky_factor(probe);  // throws SingularSystem if not SPD
        if ((hi / lo) * (hi / lo) >= 1e12)
            raise(ErrorCode::SingularSystem, "gamma=0 with ill-conditioned design");
    }
    for (std::size_t i = 0; i < a.rows(); ++i) a(i, i) += gamma;
    TransformModel model;
    model.f_star = cholesky_solve(std::move(a), cross_product(x, y));
    model.gamma = gamma;
    model.l_x = x.cols();
    model.l_y = y.cols();
    return model;
}

inline Matrix predict(const TransformModel& model, const Matrix& x_test) {
    if (x_test.cols() != model.l_x)
        raise(ErrorCode::DimensionMismatch, "predict: column count != model L_x");
    return matmul(x_test, model.f_star);
}

/// Zero-pads predicted coefficient rows to L, inverse-transforms each row
/// and concatenates the rows in cycle order.
inline std::vector<double> reconstruct_waveform(const TransformModel& model,
                                                const Matrix& coeffs_pred, const DctPlan& plan) {
    if (coeffs_pred.cols() != model.l_y || model.l_y > model.L || plan.length() != model.L)
        raise(ErrorCode::DimensionMismatch, "reconstruct: coefficient shape mismatch");
    const Matrix padded = zero_pad(coeffs_pred, model.L);
    std::vector<double> out;
    out.reserve(coeffs_pred.rows() * model.L);
    for (std::size_t r = 0; r < padded.rows(); ++r) {
        const auto cycle = plan.inverse(padded.row(r));
        out.insert(out.end(), cycle.begin(), cycle.end());
    }
    return out;
}

inline std::vector<double> reconstruct_waveform(const TransformModel& model,
                                                const Matrix& coeffs_pred) {
    return reconstruct_waveform(model, coeffs_pred, DctPlan(model.L));
}

/// Preprocessed session with its full (untruncated) cycle spectra cached so
/// repeated runs at different L_x reuse the expensive front end.
struct SessionSpectra {
    CyclePairSet cycles;
    DctPlan plan;
    Matrix cx_full;  // N x L
    Matrix cy_full;  // N x L

    SessionSpectra(CyclePairSet cs, std::size_t L)
        : cycles(std::move(cs)),
          plan(L),
          cx_full(plan.forward_rows(cycles.c_x)),
          cy_full(plan.forward_rows(cycles.c_y)) {}
};

struct SubjectRun {
    TransformModel model;
    std::vector<double> reconstruction;  // concatenated reconstructed test cycles
    std::vector<double> reference;       // concatenated normalized test ECG cycles
    std::size_t n_train = 0;
    std::size_t n_test = 0;
};

inline SubjectRun run_from_spectra(const SessionSpectra& sp, const PipelineConfig& cfg) {
    cfg.validate();
    const std::size_t n = sp.cycles.cycle_count();
    const std::size_t n_train = split_point(n, cfg.train_fraction);

    CoefficientSet cs;
    cs.L = cfg.L;
    cs.l_x = cfg.l_x;
    cs.l_y = cfg.l_y;
    cs.x_trunc = truncate(sp.cx_full, cfg.l_x);
    cs.y_trunc = truncate(sp.cy_full, cfg.l_y);
    auto [train, test] = split(cs, SplitSpec{cfg.train_fraction});

    SubjectRun run;
    run.model = train_ridge(train.x_trunc, train.y_trunc, cfg.gamma);
    run.model.L = cfg.L;
    run.model.scheme = sp.cycles.scheme;
    run.model.lambda_detrend = cfg.lambda_detrend;
    run.model.train_fraction = cfg.train_fraction;
    run.n_train = n_train;
    run.n_test = n - n_train;

    const Matrix y_hat = predict(run.model, test.x_trunc);
    run.reconstruction = reconstruct_waveform(run.model, y_hat, sp.plan);
    run.reference.reserve(run.n_test * cfg.L);
    for (std::size_t r = n_train; r < n; ++r) {
        const auto row = sp.cycles.c_y.row(r);
        run.reference.insert(run.reference.end(), row.begin(), row.end());
    }
    return run;
}

/// Full subject-dependent pipeline on one session:
/// preprocess -> DCT -> truncate -> split -> ridge -> predict -> reconstruct.
inline SubjectRun run_subject_dependent(const Session& s, const PipelineConfig& cfg) {
    return run_from_spectra(SessionSpectra(preprocess_session(s, cfg), cfg.L), cfg);
}

/// Applies an already-trained model: same split as training, but the
/// coefficients come from the model instead of a fresh fit.
inline SubjectRun run_with_model(const SessionSpectra& sp, const TransformModel& model) {
    if (sp.plan.length() != model.L)
        raise(ErrorCode::DimensionMismatch, "run_with_model: cycle length != model L");
    const std::size_t n = sp.cycles.cycle_count();
    const std::size_t n_train = split_point(n, model.train_fraction);

    SubjectRun run;
    run.model = model;
    run.n_train = n_train;
    run.n_test = n - n_train;

    Matrix x_test(run.n_test, model.l_x);
    for (std::size_t r = n_train; r < n; ++r)
        for (std::size_t c = 0; c < model.l_x; ++c) x_test(r - n_train, c) = sp.cx_full(r, c);
    const Matrix y_hat = predict(model, x_test);
    run.reconstruction = reconstruct_waveform(model, y_hat, sp.plan);
    run.reference.reserve(run.n_test * model.L);
    for (std::size_t r = n_train; r < n; ++r) {
        const auto row = sp.cycles.c_y.row(r);
        run.reference.insert(run.reference.end(), row.begin(), row.end());
    }
    return run;
}

}  // namespace ppg2ecg
