#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <vector>

#include "ppg2ecg/config.hpp"
#include "ppg2ecg/errors.hpp"
#include "ppg2ecg/matrix.hpp"
#include "ppg2ecg/types.hpp"

namespace ppg2ecg {

/// Lower median of a sorted copy; deterministic for even counts.
template <typename T>
T lower_median(std::vector<T> v) {
    if (v.empty()) raise(ErrorCode::InsufficientPeaks, "median of empty set");
    std::sort(v.begin(), v.end());
    return v[(v.size() - 1) / 2];
}

inline std::vector<Interval> merge_intervals(std::vector<Interval> ivs) {
    std::erase_if(ivs, [](const Interval& iv) { return iv.end <= iv.start; });
    std::sort(ivs.begin(), ivs.end(),
              [](const Interval& a, const Interval& b) { return a.start < b.start; });
    std::vector<Interval> out;
    for (const auto& iv : ivs) {
        if (!out.empty() && iv.start <= out.back().end)
            out.back().end = std::max(out.back().end, iv.end);
        else
            out.push_back(iv);
    }
    return out;
}

/// Validates and canonicalizes a session: equal-length finite signal pair,
/// merged artifact intervals, monotone in-range peak annotations. Idempotent.
inline Session validate_session(Session s) {
    if (s.ppg.fs <= 0.0 || s.ecg.fs <= 0.0 || s.ppg.fs != s.ecg.fs)
        raise(ErrorCode::UnitMismatch, "session signals need one positive sampling rate");
    const std::size_t tp = s.ppg.size(), te = s.ecg.size();
    const std::size_t longer = std::max(tp, te);
    if (longer == 0) raise(ErrorCode::SignalTooShort, "empty session");
    if (static_cast<double>(longer - std::min(tp, te)) > 0.01 * static_cast<double>(longer))
        raise(ErrorCode::LengthMismatchBeyondTolerance,
              "ppg/ecg lengths differ by more than 1%: " + std::to_string(tp) + " vs "
                  + std::to_string(te));
    const std::size_t T = std::min(tp, te);
    s.ppg.samples.resize(T);
    s.ecg.samples.resize(T);

    for (std::size_t i = 0; i < T; ++i) {
        if (!std::isfinite(s.ppg.samples[i]))
            raise(ErrorCode::NonFiniteSample, "non-finite ppg sample", static_cast<Index>(i));
        if (!std::isfinite(s.ecg.samples[i]))
            raise(ErrorCode::NonFiniteSample, "non-finite ecg sample", static_cast<Index>(i));
    }

    auto clean_peaks = [T](std::optional<std::vector<Index>>& peaks, const char* what) {
        if (!peaks) return;
        if (!strictly_increasing(*peaks))
            raise(ErrorCode::NonMonotonePeaks, std::string(what) + " annotations not increasing");
        std::erase_if(*peaks,
                      [T](Index p) { return p < 0 || p >= static_cast<Index>(T); });
    };
    clean_peaks(s.ppg_peaks, "ppg_peaks");
    clean_peaks(s.ecg_peaks, "ecg_peaks");

    for (auto& iv : s.artifact_mask) {
        iv.start = std::max<Index>(iv.start, 0);
        iv.end = std::min<Index>(iv.end, static_cast<Index>(T));
    }
    s.artifact_mask = merge_intervals(std::move(s.artifact_mask));
    return s;
}

namespace detail {

/// Rolling mean/std over a centered window via prefix sums.
struct RollingStats {
    std::vector<double> mean, sd;

    RollingStats(const std::vector<double>& x, std::size_t window) {
        const std::size_t T = x.size();
        std::vector<double> s1(T + 1, 0.0), s2(T + 1, 0.0);
        for (std::size_t i = 0; i < T; ++i) {
            s1[i + 1] = s1[i] + x[i];
            s2[i + 1] = s2[i] + x[i] * x[i];
        }
        mean.resize(T);
        sd.resize(T);
        const std::size_t half = window / 2;
        for (std::size_t i = 0; i < T; ++i) {
            const std::size_t lo = i > half ? i - half : 0;
            const std::size_t hi = std::min(T, i + half + 1);
            const double n = static_cast<double>(hi - lo);
            const double m = (s1[hi] - s1[lo]) / n;
            const double v = std::max(0.0, (s2[hi] - s2[lo]) / n - m * m);
            mean[i] = m;
            sd[i] = std::sqrt(v);
        }
    }
};

inline std::vector<Index> refractory_pass(const std::vector<double>& x,
                                          const std::vector<Index>& candidates, Index refractory) {
    std::vector<Index> kept;
    for (Index c : candidates) {
        if (kept.empty() || c - kept.back() >= refractory)
            kept.push_back(c);
        else if (x[static_cast<std::size_t>(c)] > x[static_cast<std::size_t>(kept.back())])
            kept.back() = c;  // keep the larger peak inside the refractory window
    }
    return kept;
}

}  // namespace detail

/// Adaptive-threshold maxima detector used for both R peaks and systolic
/// peaks: local maxima above rolling 2 s mean + 1 rolling std, thinned by a
/// refractory period of 0.25 x median inter-peak interval (bootstrapped with
/// 0.25 s). One rolling std (not two) keeps quasi-sinusoidal pulses
/// detectable: a pure tone peaks at sqrt(2) of its own std.
inline PeakTrain detect_maxima(const TimeSeries& ts, PeakKind kind) {
    const std::size_t T = ts.size();
    if (ts.fs <= 0.0 || static_cast<double>(T) < 2.0 * ts.fs)
        raise(ErrorCode::SignalTooShort, "detector needs at least 2 s of signal");
    const auto& x = ts.samples;
    const auto window = static_cast<std::size_t>(std::llround(2.0 * ts.fs));
    detail::RollingStats stats(x, std::max<std::size_t>(window, 3));

    std::vector<Index> candidates;
    for (std::size_t i = 1; i + 1 < T; ++i) {
        if (x[i] > x[i - 1] && x[i] >= x[i + 1] && x[i] > stats.mean[i] + stats.sd[i])
            candidates.push_back(static_cast<Index>(i));
    }

    const Index bootstrap = std::max<Index>(1, std::llround(0.25 * ts.fs));
    auto pass1 = detail::refractory_pass(x, candidates, bootstrap);
    if (pass1.size() < 3) raise(ErrorCode::TooFewPeaks, "fewer than 3 peaks detected");
    std::vector<Index> gaps(pass1.size() - 1);
    for (std::size_t i = 1; i < pass1.size(); ++i) gaps[i - 1] = pass1[i] - pass1[i - 1];
    const Index refractory =
        std::max<Index>(1, std::llround(0.25 * static_cast<double>(lower_median(gaps))));
    auto peaks = detail::refractory_pass(x, candidates, refractory);
    if (peaks.size() < 3) raise(ErrorCode::TooFewPeaks, "fewer than 3 peaks detected");
    return PeakTrain{std::move(peaks), kind};
}

/// Onset j is the minimum-value sample strictly between systolic peaks j and
/// j+1, so onset j belongs to the cycle of systolic peak j+1.
inline PeakTrain onset_train(const TimeSeries& ppg, const PeakTrain& systolic) {
    if (systolic.size() < 2) raise(ErrorCode::InsufficientPeaks, "need 2+ systolic peaks");
    const auto& x = ppg.samples;
    std::vector<Index> onsets;
    for (std::size_t j = 1; j < systolic.size(); ++j) {
        Index best = systolic.indices[j - 1] + 1;
        for (Index t = best; t < systolic.indices[j]; ++t)
            if (x[static_cast<std::size_t>(t)] < x[static_cast<std::size_t>(best)]) best = t;
        onsets.push_back(best);
    }
    return PeakTrain{std::move(onsets), PeakKind::PpgOnset};
}

inline PeakTrain detect_peaks(const TimeSeries& ts, PeakKind kind) {
    if (kind == PeakKind::PpgOnset)
        return onset_train(ts, detect_maxima(ts, PeakKind::PpgSystolic));
    return detect_maxima(ts, kind);
}

/// Picks annotated or detected peaks for the requested signal.
inline PeakTrain resolve_peaks(const Session& s, PeakKind kind, PeakSource source) {
    const bool want_ecg = (kind == PeakKind::EcgR);
    const auto& annotated = want_ecg ? s.ecg_peaks : s.ppg_peaks;
    const auto& ts = want_ecg ? s.ecg : s.ppg;
    if (source == PeakSource::Annotations && !annotated)
        raise(ErrorCode::MissingMeta, "peak annotations requested but absent");
    if (source != PeakSource::Detector && annotated && annotated->size() >= 3)
        return PeakTrain{*annotated, kind};
    return detect_maxima(ts, kind);
}

/// Cycle-delay estimate: the candidate n in [-k, k] minimizing the summed
/// absolute discrepancy between the two peak trains under the index pairing
/// (sp(i - n*1[n<0]), rp(i + n*1[n>0])), each candidate preliminarily aligned
/// on its first paired peaks. Ties break toward small |n|, then negative n.
inline int estimate_cycle_delay(const PeakTrain& sp, const PeakTrain& rp, int k) {
    if (k < 0) raise(ErrorCode::InvalidConfig, "search radius must be >= 0");
    const std::size_t n_min = std::min(sp.size(), rp.size());
    if (n_min < static_cast<std::size_t>(k) + 2)
        raise(ErrorCode::InsufficientPeaks, "peak trains shorter than k+2");
    const std::size_t terms = n_min - static_cast<std::size_t>(k);

    auto cost_of = [&](int n) {
        const std::size_t oa = n < 0 ? static_cast<std::size_t>(-n) : 0;
        const std::size_t ob = n > 0 ? static_cast<std::size_t>(n) : 0;
        const Index a0 = sp.indices[oa], b0 = rp.indices[ob];
        long long cost = 0;
        for (std::size_t i = 0; i < terms; ++i) {
            const Index a = sp.indices[i + oa] - a0;
            const Index b = rp.indices[i + ob] - b0;
            cost += std::llabs(a - b);
        }
        return cost;
    };

    int best_n = 0;
    long long best_cost = cost_of(0);
    for (int mag = 1; mag <= k; ++mag) {
        for (int n : {-mag, mag}) {
            const long long c = cost_of(n);
            if (c < best_cost) {
                best_cost = c;
                best_n = n;
            }
        }
    }
    return best_n;
}

/// Shifts the PPG stream so PPG onsets land on their paired ECG R peaks (the
/// median per-cycle onset-to-R offset is removed). Shifted-out samples are
/// dropped and both signals truncated to the common support; peak trains and
/// artifact mask are mapped onto the new timeline, mask intervals widened to
/// cover their extent on both pre-shift timelines.
inline AlignmentResult align_to_sample(const Session& s, int delay, const PeakTrain& sp,
                                       const PeakTrain& rp) {
    const auto T = static_cast<Index>(s.ppg.size());
    const PeakTrain onsets = onset_train(s.ppg, sp);

    const std::size_t oa = delay < 0 ? static_cast<std::size_t>(-delay) : 0;
    const std::size_t ob = delay > 0 ? static_cast<std::size_t>(delay) : 0;
    std::vector<Index> offsets;
    for (std::size_t i = 0;; ++i) {
        const std::size_t ia = i + oa, ib = i + ob;
        if (ia >= sp.size() || ib >= rp.size()) break;
        if (ia == 0) continue;  // no onset precedes the first systolic peak
        offsets.push_back(onsets.indices[ia - 1] - rp.indices[ib]);
    }
    if (offsets.empty()) raise(ErrorCode::InsufficientPeaks, "no onset/R-peak pairs to align");
    const Index m = lower_median(offsets);
    if (std::llabs(m) >= T) raise(ErrorCode::EmptyOverlap, "alignment shift exceeds signal");

    const Index Tn = T - std::llabs(m);
    AlignmentResult out;
    out.cycle_delay = delay;
    out.sample_shift = -m;
    out.ppg.fs = out.ecg.fs = s.ppg.fs;
    out.ppg.samples.resize(static_cast<std::size_t>(Tn));
    out.ecg.samples.resize(static_cast<std::size_t>(Tn));
    const Index ppg_from = m >= 0 ? m : 0;  // new index t reads ppg[t + ppg_from]
    const Index ecg_from = m >= 0 ? 0 : -m;
    for (Index t = 0; t < Tn; ++t) {
        out.ppg.samples[static_cast<std::size_t>(t)] =
            s.ppg.samples[static_cast<std::size_t>(t + ppg_from)];
        out.ecg.samples[static_cast<std::size_t>(t)] =
            s.ecg.samples[static_cast<std::size_t>(t + ecg_from)];
    }

    auto remap = [Tn](const std::vector<Index>& idx, Index shift) {
        std::vector<Index> mapped;
        for (Index p : idx) {
            const Index q = p - shift;
            if (q >= 0 && q < Tn) mapped.push_back(q);
        }
        return mapped;
    };
    out.r_peaks = PeakTrain{remap(rp.indices, ecg_from), PeakKind::EcgR};
    out.systolic_peaks = PeakTrain{remap(sp.indices, ppg_from), PeakKind::PpgSystolic};

    std::vector<Interval> mask;
    for (const auto& iv : s.artifact_mask) {
        Interval w{iv.start - std::llabs(m), iv.end};
        w.start = std::max<Index>(w.start, 0);
        w.end = std::min<Index>(w.end, Tn);
        if (w.start < w.end) mask.push_back(w);
    }
    out.mask = merge_intervals(std::move(mask));
    return out;
}

inline AlignmentResult align_to_sample(const Session& s, int delay) {
    return align_to_sample(s, delay, resolve_peaks(s, PeakKind::PpgSystolic, PeakSource::Auto),
                           resolve_peaks(s, PeakKind::EcgR, PeakSource::Auto));
}

/// Removes the smoothness-prior trend: the trend solves
/// (I + lambda D2' D2) trend = x with D2 the interior second-difference
/// stencil, a symmetric positive-definite pentadiagonal system solved by
/// banded Cholesky. Returns x - trend.
inline TimeSeries detrend(const TimeSeries& ts, double lambda) {
    const std::size_t T = ts.size();
    if (T < 3) raise(ErrorCode::SignalTooShort, "detrend needs at least 3 samples");
    if (lambda < 0.0) raise(ErrorCode::InvalidConfig, "lambda must be >= 0");

    PentaBands a;
    a.d.assign(T, 1.0);
    a.e1.assign(T - 1, 0.0);
    a.e2.assign(T - 2, 0.0);
    for (std::size_t j = 0; j + 2 < T; ++j) {  // accumulate lambda * D2' D2
        a.d[j] += lambda;
        a.d[j + 1] += 4.0 * lambda;
        a.d[j + 2] += lambda;
        a.e1[j] += -2.0 * lambda;
        a.e1[j + 1] += -2.0 * lambda;
        a.e2[j] += lambda;
    }
    const std::vector<double> trend = penta_cholesky_solve(a, ts.samples);
    TimeSeries out;
    out.fs = ts.fs;
    out.samples.resize(T);
    for (std::size_t i = 0; i < T; ++i) out.samples[i] = ts.samples[i] - trend[i];
    return out;
}

struct RawCycles {
    std::vector<Interval> boundaries;
    std::vector<std::vector<double>> ppg_cycles;
    std::vector<std::vector<double>> ecg_cycles;
};

/// Cuts both signals at identical per-cycle boundaries derived from R peaks.
/// R2R: cycle i = [rp(i), rp(i+1)). SR: boundaries sit one third of the
/// preceding R-R interval to the left of each R peak. Cycles overlapping the
/// artifact mask or with implausible length (outside 0.25-2.0 s) are dropped.
inline RawCycles segment_cycles(const TimeSeries& ppg, const TimeSeries& ecg, const PeakTrain& rp,
                                Scheme scheme, const std::vector<Interval>& mask = {}) {
    if (rp.size() < 3) raise(ErrorCode::InsufficientPeaks, "segmentation needs 3+ R peaks");
    const auto T = static_cast<Index>(std::min(ppg.size(), ecg.size()));
    const double fs = ppg.fs;

    std::vector<Interval> bounds;
    const auto& r = rp.indices;
    if (scheme == Scheme::R2R) {
        for (std::size_t i = 0; i + 1 < r.size(); ++i) bounds.push_back({r[i], r[i + 1]});
    } else {
        auto left_of = [&](std::size_t i) {
            return r[i] - std::llround(static_cast<double>(r[i] - r[i - 1]) / 3.0);
        };
        for (std::size_t i = 1; i + 1 < r.size(); ++i)
            bounds.push_back({left_of(i), left_of(i + 1)});
    }

    RawCycles out;
    for (const auto& b : bounds) {
        if (b.start < 0 || b.end > T) continue;
        const double len = static_cast<double>(b.end - b.start);
        if (len < 0.25 * fs || len > 2.0 * fs) continue;
        bool masked = false;
        for (const auto& iv : mask)
            if (iv.overlaps(b.start, b.end)) {
                masked = true;
                break;
            }
        if (masked) continue;
        out.boundaries.push_back(b);
        out.ppg_cycles.emplace_back(ppg.samples.begin() + b.start, ppg.samples.begin() + b.end);
        out.ecg_cycles.emplace_back(ecg.samples.begin() + b.start, ecg.samples.begin() + b.end);
    }
    if (out.boundaries.empty()) raise(ErrorCode::NoValidCycles, "no cycles survive segmentation");
    return out;
}

/// Linear interpolation of one cycle onto L uniform points; the original
/// first/last samples map exactly onto the output endpoints.
inline std::vector<double> rescale_cycle(const std::vector<double>& cycle, std::size_t L) {
    const std::size_t n = cycle.size();
    if (n < 2 || L < 2) raise(ErrorCode::InvalidConfig, "rescale needs length >= 2");
    std::vector<double> out(L);
    const double step = static_cast<double>(n - 1) / static_cast<double>(L - 1);
    for (std::size_t j = 0; j < L; ++j) {
        const double p = static_cast<double>(j) * step;
        auto i0 = static_cast<std::size_t>(p);
        if (i0 >= n - 1) i0 = n - 2;
        const double frac = p - static_cast<double>(i0);
        out[j] = cycle[i0] * (1.0 - frac) + cycle[i0 + 1] * frac;
    }
    out[L - 1] = cycle[n - 1];
    return out;
}

inline void znormalize_row(std::span<double> row, double* out_std = nullptr) {
    const double n = static_cast<double>(row.size());
    double mean = 0.0;
    for (double v : row) mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : row) var += (v - mean) * (v - mean);
    var /= n;  // population variance
    const double sd = std::sqrt(var);
    if (out_std) *out_std = sd;
    if (sd > 0.0)
        for (double& v : row) v = (v - mean) / sd;
}

/// Rescales every cycle to length L and z-normalizes each row with the
/// population standard deviation. Near-constant cycles (std < 1e-12) are
/// dropped and counted.
inline CyclePairSet scale_and_normalize(const RawCycles& raw, std::size_t L, Scheme scheme) {
    CyclePairSet out;
    out.scheme = scheme;
    out.L = L;
    std::vector<std::array<std::vector<double>, 2>> rows;
    for (std::size_t i = 0; i < raw.boundaries.size(); ++i) {
        auto px = rescale_cycle(raw.ppg_cycles[i], L);
        auto py = rescale_cycle(raw.ecg_cycles[i], L);
        double sx = 0.0, sy = 0.0;
        znormalize_row(px, &sx);
        znormalize_row(py, &sy);
        if (sx < 1e-12 || sy < 1e-12) {
            ++out.degenerate_dropped;
            continue;
        }
        rows.push_back({std::move(px), std::move(py)});
        out.cycle_boundaries.push_back(raw.boundaries[i]);
    }
    if (rows.empty()) raise(ErrorCode::AllCyclesDegenerate, "every cycle is near-constant");
    out.c_x = Matrix(rows.size(), L);
    out.c_y = Matrix(rows.size(), L);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        std::copy(rows[i][0].begin(), rows[i][0].end(), out.c_x.row(i).begin());
        std::copy(rows[i][1].begin(), rows[i][1].end(), out.c_y.row(i).begin());
    }
    return out;
}

/// Whole front end: peaks -> cycle delay -> sample alignment -> detrend ->
/// segmentation -> rescale + normalize.
inline CyclePairSet preprocess_session(const Session& raw, const PipelineConfig& cfg) {
    cfg.validate();
    const Session s = validate_session(raw);
    const PeakTrain sp = resolve_peaks(s, PeakKind::PpgSystolic, cfg.peak_source);
    const PeakTrain rp = resolve_peaks(s, PeakKind::EcgR, cfg.peak_source);
    const int delay = estimate_cycle_delay(sp, rp, cfg.k);
    const AlignmentResult aligned = align_to_sample(s, delay, sp, rp);
    const TimeSeries ppg_d = detrend(aligned.ppg, cfg.lambda_detrend);
    const TimeSeries ecg_d = detrend(aligned.ecg, cfg.lambda_detrend);
    const RawCycles raw_cycles =
        segment_cycles(ppg_d, ecg_d, aligned.r_peaks, cfg.scheme, aligned.mask);
    CyclePairSet cycles = scale_and_normalize(raw_cycles, cfg.L, cfg.scheme);
    if (cycles.cycle_count() < 2)
        raise(ErrorCode::TooFewCycles, "need at least 2 cycles after preprocessing");
    return cycles;
}

}  // namespace ppg2ecg
