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

#include "usdm/sei.hpp"

namespace usdm {

namespace {

double band_sei_raw(const double* band, int h, int w, const SFAPattern& pattern) {
    const int ch = (h / pattern.r1) * pattern.r1;
    const int cw = (w / pattern.r2) * pattern.r2;
    if (ch < pattern.r1 || cw < pattern.r2)
        throw std::invalid_argument("sei: band smaller than one pattern period");
    std::vector<double> means;
    if (ch == h && cw == w) {
        means = phase_means(band, h, w, pattern.r1, pattern.r2);
    } else {
        // crop to the largest period multiple
        Tensor crop = Tensor::plane(ch, cw);
        for (int y = 0; y < ch; ++y)
            for (int x = 0; x < cw; ++x)
                crop.at(0, y, x) = band[static_cast<std::size_t>(y) * w + x];
        means = phase_means(crop.band(0), ch, cw, pattern.r1, pattern.r2);
    }
    double mean = 0.0;
    for (double v : means) mean += v;
    mean /= static_cast<double>(means.size());
    double var = 0.0;
    for (double v : means) var += (v - mean) * (v - mean);
    return var / static_cast<double>(means.size());  // population variance
}

}  // namespace

double band_sei(const Tensor& band, const SFAPattern& pattern) {
    if (band.c != 1) throw std::invalid_argument("band_sei: expects a single band");
    return band_sei_raw(band.band(0), band.h, band.w, pattern);
}

double cube_sei(const SpectralCube& cube, const SFAPattern& pattern) {
    double acc = 0.0;
    for (int b = 0; b < cube.c; ++b)
        acc += band_sei_raw(cube.band(b), cube.h, cube.w, pattern);
    return acc / static_cast<double>(cube.c);
}

SEIReport sei_report(const SpectralCube& cube, const SFAPattern& pattern,
                     long long epoch) {
    SEIReport r;
    r.epoch = epoch;
    r.per_band.reserve(cube.c);
    double acc = 0.0;
    for (int b = 0; b < cube.c; ++b) {
        const double v = band_sei_raw(cube.band(b), cube.h, cube.w, pattern);
        r.per_band.push_back(v);
        acc += v;
    }
    r.sei = acc / static_cast<double>(cube.c);
    return r;
}

bool should_stop(const std::vector<double>& sei_history, double sei_max) {
    return !sei_history.empty() && sei_history.back() > sei_max;
}

}  // namespace usdm
