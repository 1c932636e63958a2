#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "ppg2ecg/errors.hpp"
#include "ppg2ecg/matrix.hpp"
#include "ppg2ecg/preprocess.hpp"
#include "ppg2ecg/rng.hpp"
#include "ppg2ecg/spectral.hpp"
#include "ppg2ecg/types.hpp"

namespace ppg2ecg {

/// Synthetic session generator. Two coupling modes:
///  - template: fixed Gaussian-bump PPG/ECG cycle shapes, useful for detector
///    and alignment tests.
///  - linear_dct: every cycle is built in the DCT domain so that an exact
///    linear map F_true sends truncated PPG coefficients to truncated ECG
///    coefficients, each cycle has exactly zero mean and unit population
///    variance at its native length, and per-cycle shape variation is carried
///    by a small block of coefficients (variation_band). With fs*60/hr equal
///    to the pipeline cycle length L and no jitter, the whole preprocessing
///    front end is an exact identity on these cycles, which turns the
///    end-to-end run into a checkable oracle.
struct SynthConfig {
    double fs = 300.0;
    double duration_s = 480.0;
    double hr_mean = 75.0;
    double hr_jitter = 0.03;  // fractional std of cycle length
    enum class Coupling { Template, LinearDct };
    Coupling coupling = Coupling::Template;
    double noise_std = 0.0;
    std::uint64_t seed = 1;

    Index ppg_delay = 0;             // uniform PPG delay in samples (pulse transit time)
    double shape_variation = 0.3;    // per-cycle coefficient perturbation, fraction of cycle rms
    std::size_t band_lo = 8;         // PPG DCT coords carrying the per-cycle variation
    std::size_t band_hi = 11;
    std::size_t ecg_coeffs = 90;     // ECG content confined to DCT coords < ecg_coeffs
    double ecg_variation_fraction = 0.02;  // share of ECG cycle energy driven by the variation
    double mid_band_fraction = 0.40;       // PPG template energy placed on the variation band

    void validate() const {
        if (fs <= 0.0 || duration_s <= 0.0 || hr_mean <= 0.0)
            raise(ErrorCode::InvalidConfig, "synth rates must be positive");
        if (hr_jitter < 0.0 || hr_jitter > 0.2)
            raise(ErrorCode::InvalidConfig, "hr_jitter must lie in [0, 0.2]");
        if (noise_std < 0.0) raise(ErrorCode::InvalidConfig, "noise_std must be >= 0");
        if (ppg_delay < 0) raise(ErrorCode::InvalidConfig, "ppg_delay must be >= 0");
        if (band_lo < 1 || band_hi < band_lo)
            raise(ErrorCode::InvalidConfig, "variation band must satisfy 1 <= lo <= hi");
        if (!(shape_variation >= 0.0 && shape_variation < 1.0))
            raise(ErrorCode::InvalidConfig, "shape_variation must lie in [0, 1)");
        if (!(ecg_variation_fraction >= 0.0 && ecg_variation_fraction < 1.0))
            raise(ErrorCode::InvalidConfig, "ecg_variation_fraction must lie in [0, 1)");
        if (mid_band_fraction < 0.0 || mid_band_fraction >= 1.0)
            raise(ErrorCode::InvalidConfig, "mid_band_fraction must lie in [0, 1)");
    }
};

struct GroundTruth {
    std::vector<Index> r_peaks;         // emitted ECG R-peak indices
    std::vector<Index> systolic_peaks;  // emitted PPG systolic peaks (delay included)
    std::vector<Index> onsets;          // emitted PPG onsets (delay included)
    std::vector<Index> cycle_starts;    // latent cycle boundaries (== r_peaks)
    std::size_t cycle_count = 0;        // full cycles emitted
    Index injected_delay = 0;
    Index n0 = 0;                       // nominal cycle length in samples
    Matrix f_true;                      // exact coefficient map (linear_dct only)
    std::size_t f_true_l_x = 0;
    std::size_t f_true_l_y = 0;
};

struct SynthOutput {
    Session session;
    GroundTruth truth;
};

namespace detail {

struct Bump {
    double pos, amp, sigma;  // all as fractions of the cycle
};

// ECG: R at the cycle start, then S, T, and the next beat's P and Q late in
// the cycle. T/P amplitudes sit below the detector threshold band on purpose.
inline constexpr Bump kEcgBumps[] = {
    {0.0, 1.0, 0.009}, {0.045, -0.22, 0.012}, {0.28, 0.16, 0.055},
    {0.82, 0.12, 0.042}, {0.965, -0.09, 0.011},
};

// PPG: sharp onset notch exactly at the cycle start (anchors the onset to the
// R-peak location), systolic peak, dicrotic wave.
inline constexpr Bump kPpgBumps[] = {
    {0.0, -0.65, 0.008}, {0.30, 1.0, 0.10}, {0.62, 0.32, 0.095},
};

template <std::size_t K>
std::vector<double> bump_cycle(const Bump (&bumps)[K], std::size_t n) {
    std::vector<double> out(n, 0.0);
    for (std::size_t t = 0; t < n; ++t) {
        const double frac = static_cast<double>(t) / static_cast<double>(n);
        double v = 0.0;
        for (const auto& b : bumps) {
            for (int image = -2; image <= 2; ++image) {
                const double d = frac - (b.pos + static_cast<double>(image));
                v += b.amp * std::exp(-d * d / (2.0 * b.sigma * b.sigma));
            }
        }
        out[t] = v;
    }
    double mean = 0.0;
    for (double v : out) mean += v;
    mean /= static_cast<double>(n);
    for (double& v : out) v -= mean;
    return out;
}

inline double norm2(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return s;
}

/// Orthonormal basis of the orthogonal complement of `axis` (or of the whole
/// space when axis ~ 0), built from unit vectors by Gram-Schmidt.
inline std::vector<std::vector<double>> complement_basis(const std::vector<double>& axis) {
    const std::size_t d = axis.size();
    std::vector<std::vector<double>> basis;
    const double an = std::sqrt(norm2(axis));
    std::vector<double> ahat(d, 0.0);
    if (an > 1e-12)
        for (std::size_t i = 0; i < d; ++i) ahat[i] = axis[i] / an;
    const std::size_t want = an > 1e-12 ? d - 1 : d;
    for (std::size_t m = 0; m < d && basis.size() < want; ++m) {
        std::vector<double> v(d, 0.0);
        v[m] = 1.0;
        if (an > 1e-12) {
            double dot = ahat[m];
            for (std::size_t i = 0; i < d; ++i) v[i] -= dot * ahat[i];
        }
        for (const auto& w : basis) {
            double dot = 0.0;
            for (std::size_t i = 0; i < d; ++i) dot += v[i] * w[i];
            for (std::size_t i = 0; i < d; ++i) v[i] -= dot * w[i];
        }
        const double vn = std::sqrt(norm2(v));
        if (vn < 1e-9) continue;
        for (double& x : v) x /= vn;
        basis.push_back(std::move(v));
    }
    return basis;
}

}  // namespace detail

inline SynthOutput generate(const SynthConfig& cfg) {
    cfg.validate();
    const auto n0 = static_cast<Index>(std::llround(cfg.fs * 60.0 / cfg.hr_mean));
    if (n0 < 16) raise(ErrorCode::InvalidConfig, "cycle length too short at this fs/hr");
    const auto n0z = static_cast<std::size_t>(n0);
    const bool linear = cfg.coupling == SynthConfig::Coupling::LinearDct;
    if (linear && (cfg.ecg_coeffs < 8 || cfg.ecg_coeffs > n0z))
        raise(ErrorCode::InvalidConfig, "ecg_coeffs must lie in [8, cycle length]");
    if (linear && cfg.band_hi >= std::min(n0z, cfg.ecg_coeffs))
        raise(ErrorCode::InvalidConfig, "variation band exceeds usable coefficients");
    if (cfg.ppg_delay > n0)
        raise(ErrorCode::InvalidConfig, "ppg_delay must not exceed one cycle");
    const auto T = static_cast<Index>(std::llround(cfg.duration_s * cfg.fs));
    if (T < 4 * n0) raise(ErrorCode::InvalidConfig, "duration shorter than 4 cycles");

    Rng rng(cfg.seed);
    const DctPlan plan(n0z);

    // --- templates -----------------------------------------------------
    const std::size_t bw = cfg.band_hi - cfg.band_lo + 1;
    const double r2 = cfg.shape_variation * cfg.shape_variation * static_cast<double>(n0);
    const double r = std::sqrt(r2);

    std::vector<double> ppg_coeffs, ecg_coeffs_t;  // latent templates, DCT domain
    std::vector<double> tau_hat;                   // normalized template band block
    std::vector<std::vector<double>> wbasis;       // variation directions in the band
    std::vector<std::vector<double>> zeta;         // ECG target directions (coeff domain)
    double alpha1 = 0.0, template_gain = 0.0;
    std::vector<double> ppg_template_time, ecg_template_time;

    if (linear) {
        ppg_coeffs = plan.forward(detail::bump_cycle(detail::kPpgBumps, n0z));
        ppg_coeffs[0] = 0.0;
        // Deterministic mid-band component: keeps the truncated template
        // direction strong enough for the ridge stage even after detrending.
        // Alternating signs cancel at the cycle start, so the onset notch
        // stays the unambiguous minimum there.
        const double e_bumps = detail::norm2(ppg_coeffs);
        const double tau_amp =
            std::sqrt(cfg.mid_band_fraction * e_bumps / static_cast<double>(bw));
        for (std::size_t k = cfg.band_lo; k <= cfg.band_hi; ++k)
            ppg_coeffs[k] += ((k - cfg.band_lo) % 2 == 0) ? tau_amp : -tau_amp;
        const double scale =
            std::sqrt((static_cast<double>(n0) - r2) / detail::norm2(ppg_coeffs));
        for (double& c : ppg_coeffs) c *= scale;

        std::vector<double> band(bw);
        for (std::size_t k = 0; k < bw; ++k) band[k] = ppg_coeffs[cfg.band_lo + k];
        tau_hat = band;
        wbasis = detail::complement_basis(band);

        auto zraw = plan.forward(detail::bump_cycle(detail::kEcgBumps, n0z));
        zraw[0] = 0.0;
        for (std::size_t k = cfg.ecg_coeffs; k < n0z; ++k) zraw[k] = 0.0;
        const double zn = std::sqrt(detail::norm2(zraw));
        for (double& c : zraw) c /= zn;
        const double v = r2 > 0.0 ? cfg.ecg_variation_fraction : 0.0;
        template_gain = std::sqrt(static_cast<double>(n0) * (1.0 - v));
        alpha1 = r > 0.0 ? std::sqrt(v * static_cast<double>(n0)) / r : 0.0;
        ecg_coeffs_t.assign(n0z, 0.0);
        for (std::size_t k = 0; k < n0z; ++k) ecg_coeffs_t[k] = template_gain * zraw[k];

        // ECG variation targets: unit axes high in the content band (where the
        // detrend filter passes), orthonormalized against the template.
        for (std::size_t j = 0; j < wbasis.size(); ++j) {
            std::vector<double> z(n0z, 0.0);
            const std::size_t q = cfg.ecg_coeffs - 1 - 2 * j;
            z[q] = 1.0;
            double dot = zraw[q];
            for (std::size_t k = 0; k < n0z; ++k) z[k] -= dot * zraw[k];
            for (const auto& prev : zeta) {
                double pd = 0.0;
                for (std::size_t k = 0; k < n0z; ++k) pd += z[k] * prev[k];
                for (std::size_t k = 0; k < n0z; ++k) z[k] -= pd * prev[k];
            }
            const double znn = std::sqrt(detail::norm2(z));
            for (double& c : z) c /= znn;
            zeta.push_back(std::move(z));
        }
        ppg_template_time = plan.inverse(ppg_coeffs);
        ecg_template_time = plan.inverse(ecg_coeffs_t);
    } else {
        ppg_template_time = detail::bump_cycle(detail::kPpgBumps, n0z);
        ecg_template_time = detail::bump_cycle(detail::kEcgBumps, n0z);
        znormalize_row(ppg_template_time);
        znormalize_row(ecg_template_time);
    }

    // --- cycle layout ---------------------------------------------------
    // Two leading and one trailing template cycle bracket the varied cycles:
    // the first absorbs the delay fill and the detrend boundary, the last
    // closes the final varied cycle with an R peak.
    std::vector<Index> lens{n0, n0};
    Index total = 2 * n0;
    const Index lo_len = std::max<Index>(2, std::llround(0.3 * static_cast<double>(n0)));
    const Index hi_len = std::llround(1.7 * static_cast<double>(n0));
    while (true) {
        Index len = n0;
        if (cfg.hr_jitter > 0.0) {
            const double jittered =
                static_cast<double>(n0) * (1.0 + cfg.hr_jitter * rng.normal());
            len = std::clamp<Index>(std::llround(jittered), lo_len, hi_len);
        }
        if (total + len + n0 > T) break;
        lens.push_back(len);
        total += len;
    }
    if (total + n0 <= T) {
        lens.push_back(n0);
        total += n0;
    }
    const std::size_t n_full = lens.size();
    const Index partial = T - total;

    // --- emit cycles ----------------------------------------------------
    SynthOutput out;
    out.truth.n0 = n0;
    out.truth.injected_delay = cfg.ppg_delay;
    out.truth.cycle_count = n_full;
    std::vector<double> ppg_lat, ecg_lat;
    ppg_lat.reserve(static_cast<std::size_t>(T));
    ecg_lat.reserve(static_cast<std::size_t>(T));
    std::vector<Index> sp_lat, onset_lat;

    // Landmarks come from the template geometry, not per-cycle argmax: the
    // per-cycle variation must not move the annotations around.
    const auto sp_off = static_cast<Index>(
        std::max_element(ppg_template_time.begin(), ppg_template_time.end())
        - ppg_template_time.begin());
    const auto onset_off = static_cast<Index>(
        std::min_element(ppg_template_time.begin(), ppg_template_time.end())
        - ppg_template_time.begin());

    Index start = 0;
    for (std::size_t c = 0; c < n_full; ++c) {
        const bool varied = linear && c >= 2 && c + 1 < n_full && r > 0.0 && !wbasis.empty();
        std::vector<double> x_cycle, y_cycle;
        if (varied) {
            std::vector<double> g(wbasis.size());
            double gn = 0.0;
            do {
                for (double& gi : g) gi = rng.normal();
                gn = 0.0;
                for (double gi : g) gn += gi * gi;
            } while (gn < 1e-24);
            gn = std::sqrt(gn);

            std::vector<double> p = ppg_coeffs;
            std::vector<double> q = ecg_coeffs_t;
            for (std::size_t j = 0; j < wbasis.size(); ++j) {
                const double aj = r * g[j] / gn;  // <w_j, u>; sum of squares is r^2
                for (std::size_t k = 0; k < bw; ++k)
                    p[cfg.band_lo + k] += aj * wbasis[j][k];
                for (std::size_t k = 0; k < n0z; ++k) q[k] += alpha1 * aj * zeta[j][k];
            }
            x_cycle = plan.inverse(p);
            y_cycle = plan.inverse(q);
        } else {
            x_cycle = ppg_template_time;
            y_cycle = ecg_template_time;
        }
        if (lens[c] != n0) {
            x_cycle = rescale_cycle(x_cycle, static_cast<std::size_t>(lens[c]));
            y_cycle = rescale_cycle(y_cycle, static_cast<std::size_t>(lens[c]));
        }
        out.truth.cycle_starts.push_back(start);
        out.truth.r_peaks.push_back(start);
        const double stretch = static_cast<double>(lens[c]) / static_cast<double>(n0);
        sp_lat.push_back(start + std::llround(static_cast<double>(sp_off) * stretch));
        onset_lat.push_back(start + std::llround(static_cast<double>(onset_off) * stretch));
        ppg_lat.insert(ppg_lat.end(), x_cycle.begin(), x_cycle.end());
        ecg_lat.insert(ecg_lat.end(), y_cycle.begin(), y_cycle.end());
        start += lens[c];
    }
    if (partial > 0) {
        out.truth.r_peaks.push_back(start);
        if (onset_off < partial) onset_lat.push_back(start + onset_off);
        if (sp_off < partial) sp_lat.push_back(start + sp_off);
        ppg_lat.insert(ppg_lat.end(), ppg_template_time.begin(),
                       ppg_template_time.begin() + partial);
        ecg_lat.insert(ecg_lat.end(), ecg_template_time.begin(),
                       ecg_template_time.begin() + partial);
    }

    for (Index p : sp_lat)
        if (p + cfg.ppg_delay < T) out.truth.systolic_peaks.push_back(p + cfg.ppg_delay);
    for (Index p : onset_lat)
        if (p + cfg.ppg_delay < T) out.truth.onsets.push_back(p + cfg.ppg_delay);

    // --- delay, noise, session ------------------------------------------
    const Index d = cfg.ppg_delay;
    out.session.ppg.fs = out.session.ecg.fs = cfg.fs;
    out.session.ppg.samples.resize(static_cast<std::size_t>(T));
    out.session.ecg.samples = ecg_lat;
    for (Index t = 0; t < T; ++t) {
        const Index src = t >= d ? t - d : t - d + n0;  // left fill from the template prefix
        out.session.ppg.samples[static_cast<std::size_t>(t)] =
            ppg_lat[static_cast<std::size_t>(src)];
    }
    if (cfg.noise_std > 0.0) {
        for (auto& v : out.session.ppg.samples) v += cfg.noise_std * rng.normal();
        for (auto& v : out.session.ecg.samples) v += cfg.noise_std * rng.normal();
    }
    out.session.ppg_peaks = out.truth.systolic_peaks;
    out.session.ecg_peaks = out.truth.r_peaks;
    out.session.id = "synth-" + std::to_string(cfg.seed);

    // --- exact coefficient map ------------------------------------------
    if (linear) {
        const std::size_t lx = cfg.band_hi + 1;
        const std::size_t ly = cfg.ecg_coeffs;
        Matrix f(lx, ly);
        double tn2 = 0.0;
        for (std::size_t k = 0; k < lx; ++k) tn2 += ppg_coeffs[k] * ppg_coeffs[k];
        for (std::size_t k = 0; k < lx; ++k)
            for (std::size_t m = 0; m < ly; ++m)
                f(k, m) = ppg_coeffs[k] / tn2 * ecg_coeffs_t[m];
        for (std::size_t j = 0; j < wbasis.size(); ++j)
            for (std::size_t k = 0; k < bw; ++k)
                for (std::size_t m = 0; m < ly; ++m)
                    f(cfg.band_lo + k, m) += wbasis[j][k] * alpha1 * zeta[j][m];
        out.truth.f_true = std::move(f);
        out.truth.f_true_l_x = lx;
        out.truth.f_true_l_y = ly;
    }
    return out;
}

}  // namespace ppg2ecg
