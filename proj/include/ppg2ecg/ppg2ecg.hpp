#pragma once

#include "ppg2ecg/config.hpp"
#include "ppg2ecg/errors.hpp"
#include "ppg2ecg/evaluation.hpp"
#include "ppg2ecg/io.hpp"
#include "ppg2ecg/matrix.hpp"
#include "ppg2ecg/preprocess.hpp"
#include "ppg2ecg/regression.hpp"
#include "ppg2ecg/rng.hpp"
#include "ppg2ecg/spectral.hpp"
#include "ppg2ecg/synth.hpp"
#include "ppg2ecg/types.hpp"
