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

// OpenMP kernels. Work is split over independent output rows or weight
// slots only, so no reduction crosses a thread boundary and results are
// bit-identical to the serial reference at any thread count.

#include <algorithm>
#include <cstddef>
#include <vector>

#include "usdm/kernels.hpp"

namespace usdm::kernels::par {

namespace {

// one output row, taps for a fixed (input row, weight row) fused over x
inline void accum_row3(double* orow, const double* irow, const double* w3, int w) {
    if (w == 1) {
        orow[0] += w3[1] * irow[0];
        return;
    }
    orow[0] += w3[1] * irow[0] + w3[2] * irow[1];
    const double c0 = w3[0], c1 = w3[1], c2 = w3[2];
    for (int x = 1; x < w - 1; ++x)
        orow[x] += c0 * irow[x - 1] + c1 * irow[x] + c2 * irow[x + 1];
    orow[w - 1] += c0 * irow[w - 2] + c1 * irow[w - 1];
}

// same with the horizontal taps mirrored (for the input-gradient pass)
inline void accum_row3_flipped(double* orow, const double* irow, const double* w3, int w) {
    if (w == 1) {
        orow[0] += w3[1] * irow[0];
        return;
    }
    orow[0] += w3[1] * irow[0] + w3[0] * irow[1];
    const double c0 = w3[0], c1 = w3[1], c2 = w3[2];
    for (int x = 1; x < w - 1; ++x)
        orow[x] += c2 * irow[x - 1] + c1 * irow[x] + c0 * irow[x + 1];
    orow[w - 1] += c2 * irow[w - 2] + c1 * irow[w - 1];
}

}  // namespace

void conv3x3_forward(const double* in, int cin, int h, int w, const double* wgt,
                     const double* bias, int cout, double* out) {
#pragma omp parallel for collapse(2) schedule(static)
    for (int co = 0; co < cout; ++co)
        for (int y = 0; y < h; ++y) {
            double* orow = out + (static_cast<std::size_t>(co) * h + y) * w;
            const double bv = bias ? bias[co] : 0.0;
            for (int x = 0; x < w; ++x) orow[x] = bv;
            const double* wco = wgt + static_cast<std::size_t>(co) * cin * 9;
            for (int ci = 0; ci < cin; ++ci) {
                const double* w9 = wco + static_cast<std::size_t>(ci) * 9;
                const double* iplane = in + static_cast<std::size_t>(ci) * h * w;
                for (int dy = -1; dy <= 1; ++dy) {
                    const int yy = y + dy;
                    if (yy < 0 || yy >= h) continue;
                    accum_row3(orow, iplane + static_cast<std::size_t>(yy) * w,
                               w9 + (dy + 1) * 3, w);
                }
            }
        }
}

void conv3x3_grad_input(const double* gout, int cout, int h, int w,
                        const double* wgt, int cin, double* gin) {
#pragma omp parallel for collapse(2) schedule(static)
    for (int ci = 0; ci < cin; ++ci)
        for (int y = 0; y < h; ++y) {
            double* grow = gin + (static_cast<std::size_t>(ci) * h + y) * w;
            for (int co = 0; co < cout; ++co) {
                const double* w9 = wgt + (static_cast<std::size_t>(co) * cin + ci) * 9;
                const double* oplane = gout + static_cast<std::size_t>(co) * h * w;
                for (int dy = -1; dy <= 1; ++dy) {
                    const int yy = y - dy;
                    if (yy < 0 || yy >= h) continue;
                    accum_row3_flipped(grow, oplane + static_cast<std::size_t>(yy) * w,
                                       w9 + (dy + 1) * 3, w);
                }
            }
        }
}

void conv3x3_grad_weights(const double* in, int cin, const double* gout, int cout,
                          int h, int w, double* gw, double* gb) {
#pragma omp parallel for collapse(2) schedule(static)
    for (int co = 0; co < cout; ++co)
        for (int ci = 0; ci < cin; ++ci) {
            const double* oplane = gout + static_cast<std::size_t>(co) * h * w;
            const double* iplane = in + static_cast<std::size_t>(ci) * h * w;
            double* w9 = gw + (static_cast<std::size_t>(co) * cin + ci) * 9;
            for (int dy = -1; dy <= 1; ++dy) {
                const int y0 = std::max(0, -dy), y1 = std::min(h, h - dy);
                for (int dx = -1; dx <= 1; ++dx) {
                    const int x0 = std::max(0, -dx), x1 = std::min(w, w - dx);
                    double acc = 0.0;
                    for (int y = y0; y < y1; ++y) {
                        const double* grow = oplane + static_cast<std::size_t>(y) * w;
                        const double* irow =
                            iplane + static_cast<std::size_t>(y + dy) * w + dx;
                        for (int x = x0; x < x1; ++x) acc += grow[x] * irow[x];
                    }
                    w9[(dy + 1) * 3 + (dx + 1)] += acc;
                }
            }
        }
    if (gb) {
#pragma omp parallel for schedule(static)
        for (int co = 0; co < cout; ++co) {
            const double* oplane = gout + static_cast<std::size_t>(co) * h * w;
            double acc = 0.0;
            for (std::size_t i = 0; i < static_cast<std::size_t>(h) * w; ++i)
                acc += oplane[i];
            gb[co] += acc;
        }
    }
}

void tri_filter(const double* in, int h, int w, int r1, int r2, double* out) {
    std::vector<double> tmp(static_cast<std::size_t>(h) * w, 0.0);
#pragma omp parallel for schedule(static)
    for (int y = 0; y < h; ++y) {
        const double* irow = in + static_cast<std::size_t>(y) * w;
        double* trow = tmp.data() + static_cast<std::size_t>(y) * w;
        for (int v = -(r2 - 1); v <= r2 - 1; ++v) {
            const double wv = 1.0 - static_cast<double>(v < 0 ? -v : v) / r2;
            const int x0 = std::max(0, -v), x1 = std::min(w, w - v);
            for (int x = x0; x < x1; ++x) trow[x] += wv * irow[x + v];
        }
    }
#pragma omp parallel for schedule(static)
    for (int y = 0; y < h; ++y) {
        double* orow = out + static_cast<std::size_t>(y) * w;
        for (int x = 0; x < w; ++x) orow[x] = 0.0;
        for (int u = -(r1 - 1); u <= r1 - 1; ++u) {
            const int yy = y + u;
            if (yy < 0 || yy >= h) continue;
            const double wu = 1.0 - static_cast<double>(u < 0 ? -u : u) / r1;
            const double* trow = tmp.data() + static_cast<std::size_t>(yy) * w;
            for (int x = 0; x < w; ++x) orow[x] += wu * trow[x];
        }
    }
}

}  // namespace usdm::kernels::par
