#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ppg2ecg/errors.hpp"
#include "ppg2ecg/matrix.hpp"

namespace ppg2ecg {

using Index = std::int64_t;

/// Half-open sample interval [start, end).
struct Interval {
    Index start = 0;
    Index end = 0;

    bool overlaps(Index lo, Index hi) const noexcept { return start < hi && lo < end; }
};

struct TimeSeries {
    std::vector<double> samples;
    double fs = 0.0;

    std::size_t size() const noexcept { return samples.size(); }
    double duration_s() const { return fs > 0.0 ? static_cast<double>(samples.size()) / fs : 0.0; }
};

enum class PeakKind { EcgR, PpgSystolic, PpgOnset };

struct PeakTrain {
    std::vector<Index> indices;
    PeakKind kind = PeakKind::EcgR;

    std::size_t size() const noexcept { return indices.size(); }
};

inline bool strictly_increasing(const std::vector<Index>& v) {
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i] <= v[i - 1]) return false;
    return true;
}

/// One subject's simultaneously recorded PPG+ECG plus metadata.
struct Session {
    TimeSeries ppg;
    TimeSeries ecg;
    std::optional<double> age;     // years
    std::optional<double> weight;  // kg
    std::vector<Interval> artifact_mask;
    std::optional<std::vector<Index>> ppg_peaks;  // systolic peaks
    std::optional<std::vector<Index>> ecg_peaks;  // R peaks
    std::string id;
};

enum class Scheme { SR, R2R };

inline std::string scheme_name(Scheme s) { return s == Scheme::SR ? "SR" : "R2R"; }

inline Scheme scheme_from_name(const std::string& s) {
    if (s == "SR" || s == "sr") return Scheme::SR;
    if (s == "R2R" || s == "r2r") return Scheme::R2R;
    raise(ErrorCode::InvalidConfig, "unknown scheme '" + s + "' (expected SR or R2R)");
}

/// Aligned, rescaled, normalized cycle matrices. Row i of c_x and c_y is the
/// i-th PPG/ECG cycle; every row has mean 0 and population std 1.
struct CyclePairSet {
    Matrix c_x;  // N x L
    Matrix c_y;  // N x L
    Scheme scheme = Scheme::R2R;
    std::size_t L = 0;
    std::vector<Interval> cycle_boundaries;  // original-sample segment per cycle
    std::size_t degenerate_dropped = 0;      // near-constant cycles removed

    std::size_t cycle_count() const noexcept { return c_x.rows(); }
};

struct CoefficientSet {
    Matrix x_trunc;  // N x L_x
    Matrix y_trunc;  // N x L_y
    std::size_t L = 0;
    std::size_t l_x = 0;
    std::size_t l_y = 0;
};

struct TransformModel {
    Matrix f_star;  // L_x x L_y
    double gamma = 0.0;
    std::size_t L = 0;
    std::size_t l_x = 0;
    std::size_t l_y = 0;
    Scheme scheme = Scheme::R2R;
    double lambda_detrend = 0.0;
    double train_fraction = 0.8;  // split used at training time, kept for reconstruct
};

/// Output of the sample-level alignment step. The aligned signals live on a
/// common truncated timeline; peak trains and the artifact mask are carried
/// over onto that timeline.
struct AlignmentResult {
    int cycle_delay = 0;
    Index sample_shift = 0;
    TimeSeries ppg;
    TimeSeries ecg;
    PeakTrain r_peaks;
    PeakTrain systolic_peaks;
    std::vector<Interval> mask;
};

struct SessionMetrics {
    double rrmse = 0.0;
    double rho = 0.0;
    std::size_t n_test_cycles = 0;
    Scheme scheme = Scheme::R2R;
    std::size_t l_x = 0;
    std::string session_id;
};

struct ProfileRegressionResult {
    double coefficients[4] = {0, 0, 0, 0};  // intercept, age, weight, age*weight
    double r_squared = 0.0;
    double f_statistic = 0.0;
    double p_value = 1.0;
    std::size_t n = 0;
};

}  // namespace ppg2ecg
