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

#include "usdm/interp.hpp"

#include <vector>

#include "usdm/kernels.hpp"

namespace usdm {

namespace {

void check_dims(int h, int w, const SFAPattern& pattern) {
    if (h < pattern.r1 || w < pattern.r2)
        throw std::invalid_argument("wb_interpolate: image smaller than one pattern period");
}

// every band must occur in the tile, otherwise it has no samples to spread
void check_coverage(const SFAPattern& pattern) {
    std::vector<char> seen(pattern.bands, 0);
    for (int v : pattern.layout) seen[v] = 1;
    for (int b = 0; b < pattern.bands; ++b)
        if (!seen[b])
            throw std::invalid_argument("wb_interpolate: band " + std::to_string(b) +
                                        " never sampled by the pattern");
}

}  // namespace

namespace detail {

void wb_forward(const double* mosaic, int h, int w, const SFAPattern& pattern,
                double* cube) {
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    std::vector<double> sparse(plane), mask(plane), num(plane), den(plane);
    for (int b = 0; b < pattern.bands; ++b) {
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                const bool hit = pattern.band_at(y, x) == b;
                sparse[static_cast<std::size_t>(y) * w + x] =
                    hit ? mosaic[static_cast<std::size_t>(y) * w + x] : 0.0;
                mask[static_cast<std::size_t>(y) * w + x] = hit ? 1.0 : 0.0;
            }
        kernels::tri_filter(sparse.data(), h, w, pattern.r1, pattern.r2, num.data());
        kernels::tri_filter(mask.data(), h, w, pattern.r1, pattern.r2, den.data());
        double* out = cube + static_cast<std::size_t>(b) * plane;
        for (std::size_t i = 0; i < plane; ++i) {
            if (!(den[i] > 0.0))
                throw std::logic_error("wb_interpolate: empty interpolation window");
            out[i] = num[i] / den[i];
        }
    }
}

void wb_adjoint(const double* gcube, int h, int w, const SFAPattern& pattern,
                double* gmosaic) {
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    std::vector<double> mask(plane), den(plane), scaled(plane), spread(plane);
    for (int b = 0; b < pattern.bands; ++b) {
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                mask[static_cast<std::size_t>(y) * w + x] =
                    pattern.band_at(y, x) == b ? 1.0 : 0.0;
        kernels::tri_filter(mask.data(), h, w, pattern.r1, pattern.r2, den.data());
        const double* g = gcube + static_cast<std::size_t>(b) * plane;
        for (std::size_t i = 0; i < plane; ++i) scaled[i] = g[i] / den[i];
        // the triangular kernel is symmetric, so the filter is its own adjoint
        kernels::tri_filter(scaled.data(), h, w, pattern.r1, pattern.r2, spread.data());
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                if (pattern.band_at(y, x) == b)
                    gmosaic[static_cast<std::size_t>(y) * w + x] +=
                        spread[static_cast<std::size_t>(y) * w + x];
    }
}

}  // namespace detail

SpectralCube wb_interpolate(const MosaicImage& mosaic, const SFAPattern& pattern) {
    check_dims(mosaic.h, mosaic.w, pattern);
    check_coverage(pattern);
    SpectralCube cube(pattern.bands, mosaic.h, mosaic.w);
    detail::wb_forward(mosaic.data.data(), mosaic.h, mosaic.w, pattern,
                       cube.data.data());
    return cube;
}

}  // namespace usdm
