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

#include "usdm/tensor.hpp"

namespace usdm {

/// Full-reference quality bundle for [0,1] cubes.
struct MetricReport {
    double psnr = 0.0;        // cube-MSE PSNR in dB, +inf for identical cubes
    double psnr_band_mean = 0.0;  // mean of per-band PSNRs
    double ssim = 0.0;
    double sam = 0.0;         // degrees; meaningful only when sam_defined
    bool sam_defined = false;
    double ergas = 0.0;
    std::vector<double> band_psnr;
    std::vector<double> band_ssim;
};

/// 10*log10(peak^2 / MSE) over the whole cube; +infinity when identical.
double psnr(const SpectralCube& a, const SpectralCube& ref, double peak = 1.0);

/// Single-scale SSIM per band (Gaussian window 11, sigma 1.5, K1=0.01,
/// K2=0.03), averaged over bands. Valid-window means; images smaller than
/// the window are rejected.
double ssim(const SpectralCube& a, const SpectralCube& ref, double dynamic_range = 1.0);

/// Mean per-pixel spectral angle in degrees; pixels where either spectrum
/// is zero are excluded. Returns NaN when no pixel is valid.
double sam_degrees(const SpectralCube& a, const SpectralCube& ref);

/// 100 * ratio * sqrt(mean_b (RMSE_b / mean_b)^2). Bands whose reference
/// mean is zero are excluded (with a warning to stderr).
double ergas(const SpectralCube& a, const SpectralCube& ref, double ratio = 1.0);

MetricReport evaluate(const SpectralCube& a, const SpectralCube& ref,
                      double ergas_ratio = 1.0);

}  // namespace usdm
