#pragma once

#include <cstddef>

#include "ppg2ecg/errors.hpp"
#include "ppg2ecg/types.hpp"

namespace ppg2ecg {

enum class PeakSource { Annotations, Detector, Auto };

inline std::string peak_source_name(PeakSource p) {
    switch (p) {
        case PeakSource::Annotations: return "annotations";
        case PeakSource::Detector: return "detector";
        default: return "auto";
    }
}

inline PeakSource peak_source_from_name(const std::string& s) {
    if (s == "annotations") return PeakSource::Annotations;
    if (s == "detector") return PeakSource::Detector;
    if (s == "auto") return PeakSource::Auto;
    raise(ErrorCode::InvalidConfig, "unknown peak_source '" + s + "'");
}

struct PipelineConfig {
    Scheme scheme = Scheme::R2R;
    std::size_t L = 300;
    std::size_t l_x = 12;
    std::size_t l_y = 100;
    double lambda_detrend = 500.0;
    double gamma = 10.0;
    int k = 5;  // cycle-delay search radius
    double train_fraction = 0.8;
    PeakSource peak_source = PeakSource::Auto;

    void validate() const {
        if (L < 2) raise(ErrorCode::InvalidConfig, "L must be at least 2");
        if (l_x < 1 || l_x > l_y || l_y > L)
            raise(ErrorCode::InvalidConfig, "need 1 <= L_x <= L_y <= L");
        if (lambda_detrend < 0.0) raise(ErrorCode::InvalidConfig, "lambda_detrend must be >= 0");
        if (gamma < 0.0) raise(ErrorCode::InvalidConfig, "gamma must be >= 0");
        if (k < 0) raise(ErrorCode::InvalidConfig, "k must be >= 0");
        if (!(train_fraction > 0.0 && train_fraction < 1.0))
            raise(ErrorCode::InvalidConfig, "train_fraction must be in (0,1)");
    }
};

}  // namespace ppg2ecg
