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

// Plain reference kernels. Kept deliberately tap-by-tap; the parallel
// versions in kernels_par.cpp restructure the loops and are checked
// against these in the test suite.

#include <algorithm>
#include <cstddef>
#include <vector>

#include "usdm/kernels.hpp"

namespace usdm::kernels::serial {

void conv3x3_forward(const double* in, int cin, int h, int w, const double* wgt,
                     const double* bias, int cout, double* out) {
    for (int co = 0; co < cout; ++co) {
        double* oplane = out + static_cast<std::size_t>(co) * h * w;
        const double bv = bias ? bias[co] : 0.0;
        for (std::size_t i = 0; i < static_cast<std::size_t>(h) * w; ++i) oplane[i] = bv;
        for (int ci = 0; ci < cin; ++ci) {
            const double* w9 = wgt + (static_cast<std::size_t>(co) * cin + ci) * 9;
            const double* iplane = in + static_cast<std::size_t>(ci) * h * w;
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x) {
                    double acc = 0.0;
                    for (int dy = -1; dy <= 1; ++dy)
                        for (int dx = -1; dx <= 1; ++dx) {
                            const int yy = y + dy, xx = x + dx;
                            if (yy < 0 || yy >= h || xx < 0 || xx >= w) continue;
                            acc += w9[(dy + 1) * 3 + (dx + 1)] *
                                   iplane[static_cast<std::size_t>(yy) * w + xx];
                        }
                    oplane[static_cast<std::size_t>(y) * w + x] += acc;
                }
        }
    }
}

void conv3x3_grad_input(const double* gout, int cout, int h, int w,
                        const double* wgt, int cin, double* gin) {
    for (int ci = 0; ci < cin; ++ci) {
        double* gplane = gin + static_cast<std::size_t>(ci) * h * w;
        for (int co = 0; co < cout; ++co) {
            const double* w9 = wgt + (static_cast<std::size_t>(co) * cin + ci) * 9;
            const double* oplane = gout + static_cast<std::size_t>(co) * h * w;
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x) {
                    double acc = 0.0;
                    for (int dy = -1; dy <= 1; ++dy)
                        for (int dx = -1; dx <= 1; ++dx) {
                            const int yy = y - dy, xx = x - dx;
                            if (yy < 0 || yy >= h || xx < 0 || xx >= w) continue;
                            acc += w9[(dy + 1) * 3 + (dx + 1)] *
                                   oplane[static_cast<std::size_t>(yy) * w + xx];
                        }
                    gplane[static_cast<std::size_t>(y) * w + x] += acc;
                }
        }
    }
}

void conv3x3_grad_weights(const double* in, int cin, const double* gout, int cout,
                          int h, int w, double* gw, double* gb) {
    for (int co = 0; co < cout; ++co) {
        const double* oplane = gout + static_cast<std::size_t>(co) * h * w;
        for (int ci = 0; ci < cin; ++ci) {
            const double* iplane = in + static_cast<std::size_t>(ci) * h * w;
            double* w9 = gw + (static_cast<std::size_t>(co) * cin + ci) * 9;
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx) {
                    double acc = 0.0;
                    for (int y = 0; y < h; ++y)
                        for (int x = 0; x < w; ++x) {
                            const int yy = y + dy, xx = x + dx;
                            if (yy < 0 || yy >= h || xx < 0 || xx >= w) continue;
                            acc += oplane[static_cast<std::size_t>(y) * w + x] *
                                   iplane[static_cast<std::size_t>(yy) * w + xx];
                        }
                    w9[(dy + 1) * 3 + (dx + 1)] += acc;
                }
        }
        if (gb) {
            double acc = 0.0;
            for (std::size_t i = 0; i < static_cast<std::size_t>(h) * w; ++i)
                acc += oplane[i];
            gb[co] += acc;
        }
    }
}

void tri_filter(const double* in, int h, int w, int r1, int r2, double* out) {
    std::vector<double> tmp(static_cast<std::size_t>(h) * w, 0.0);
    for (int y = 0; y < h; ++y) {
        const double* irow = in + static_cast<std::size_t>(y) * w;
        double* trow = tmp.data() + static_cast<std::size_t>(y) * w;
        for (int v = -(r2 - 1); v <= r2 - 1; ++v) {
            const double wv = 1.0 - static_cast<double>(v < 0 ? -v : v) / r2;
            const int x0 = std::max(0, -v), x1 = std::min(w, w - v);
            for (int x = x0; x < x1; ++x) trow[x] += wv * irow[x + v];
        }
    }
    std::fill(out, out + static_cast<std::size_t>(h) * w, 0.0);
    for (int y = 0; y < h; ++y) {
        double* orow = out + static_cast<std::size_t>(y) * w;
        for (int u = -(r1 - 1); u <= r1 - 1; ++u) {
            const int yy = y + u;
            if (yy < 0 || yy >= h) continue;
            const double wu = 1.0 - static_cast<double>(u < 0 ? -u : u) / r1;
            const double* trow = tmp.data() + static_cast<std::size_t>(yy) * w;
            for (int x = 0; x < w; ++x) orow[x] += wu * trow[x];
        }
    }
}

}  // namespace usdm::kernels::serial
