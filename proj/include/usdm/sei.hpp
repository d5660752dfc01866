/*
 * Copyright 2026 the usdm authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <vector>

#include "usdm/sfa.hpp"
#include "usdm/tensor.hpp"

namespace usdm {

/// Periodic-distortion statistic of one band: population variance of the
/// global means of its r1*r2 phase sub-images. Zero iff the band is
/// phase-balanced. Invariant under additive offsets; scales as s^2 under
/// multiplication by s, so thresholds assume [0,1]-normalized data.
/// Images that are not period multiples are cropped first.
double band_sei(const Tensor& band, const SFAPattern& pattern);

/// Mean of band_sei over all bands of the cube.
double cube_sei(const SpectralCube& cube, const SFAPattern& pattern);

struct SEIReport {
    std::vector<double> per_band;
    double sei = 0.0;
    long long epoch = -1;
};

SEIReport sei_report(const SpectralCube& cube, const SFAPattern& pattern,
                     long long epoch = -1);

/// Early-stopping rule: stop as soon as the latest recorded SEI exceeds
/// sei_max. The lowest-SEI checkpoint is tracked separately by the
/// training loop.
bool should_stop(const std::vector<double>& sei_history, double sei_max);

}  // namespace usdm
