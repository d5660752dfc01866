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

#include "usdm/kernels.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <cstring>

#include "usdm/sfa.hpp"

namespace usdm::kernels {

namespace {

Backend backend_from_env() {
    const char* v = std::getenv("USDM_KERNEL_BACKEND");
    if (v && std::strcmp(v, "serial") == 0) return Backend::serial;
    return Backend::parallel;
}

std::atomic<Backend> g_backend{backend_from_env()};

}  // namespace

Backend active_backend() { return g_backend.load(std::memory_order_relaxed); }
void set_backend(Backend b) { g_backend.store(b, std::memory_order_relaxed); }

void conv3x3_forward(const double* in, int cin, int h, int w, const double* wgt,
                     const double* bias, int cout, double* out) {
    if (active_backend() == Backend::serial)
        serial::conv3x3_forward(in, cin, h, w, wgt, bias, cout, out);
    else
        par::conv3x3_forward(in, cin, h, w, wgt, bias, cout, out);
}

void conv3x3_grad_input(const double* gout, int cout, int h, int w,
                        const double* wgt, int cin, double* gin) {
    if (active_backend() == Backend::serial)
        serial::conv3x3_grad_input(gout, cout, h, w, wgt, cin, gin);
    else
        par::conv3x3_grad_input(gout, cout, h, w, wgt, cin, gin);
}

void conv3x3_grad_weights(const double* in, int cin, const double* gout, int cout,
                          int h, int w, double* gw, double* gb) {
    if (active_backend() == Backend::serial)
        serial::conv3x3_grad_weights(in, cin, gout, cout, h, w, gw, gb);
    else
        par::conv3x3_grad_weights(in, cin, gout, cout, h, w, gw, gb);
}

void tri_filter(const double* in, int h, int w, int r1, int r2, double* out) {
    if (active_backend() == Backend::serial)
        serial::tri_filter(in, h, w, r1, r2, out);
    else
        par::tri_filter(in, h, w, r1, r2, out);
}

void mosaic_gather(const double* cube, int h, int w, const SFAPattern& pattern,
                   double* plane) {
#pragma omp parallel for schedule(static)
    for (int y = 0; y < h; ++y) {
        double* prow = plane + static_cast<std::size_t>(y) * w;
        for (int x = 0; x < w; ++x)
            prow[x] = cube[(static_cast<std::size_t>(pattern.band_at(y, x)) * h + y) * w + x];
    }
}

void mosaic_scatter(const double* plane, int h, int w, const SFAPattern& pattern,
                    double* cube) {
#pragma omp parallel for schedule(static)
    for (int y = 0; y < h; ++y) {
        const double* prow = plane + static_cast<std::size_t>(y) * w;
        for (int x = 0; x < w; ++x)
            cube[(static_cast<std::size_t>(pattern.band_at(y, x)) * h + y) * w + x] = prow[x];
    }
}

void cube_shift(const double* in, int c, int h, int w, int dy, int dx, double* out) {
    dy = ((dy % h) + h) % h;
    dx = ((dx % w) + w) % w;
#pragma omp parallel for collapse(2) schedule(static)
    for (int b = 0; b < c; ++b)
        for (int y = 0; y < h; ++y) {
            const int sy = (y - dy + h) % h;
            const double* irow = in + (static_cast<std::size_t>(b) * h + sy) * w;
            double* orow = out + (static_cast<std::size_t>(b) * h + y) * w;
            for (int x = 0; x < w; ++x) orow[x] = irow[(x - dx + w) % w];
        }
}

void bilinear_resize(const double* in, int c, int h, int w, double* out,
                     int th, int tw) {
    const double sy = static_cast<double>(h) / th;
    const double sx = static_cast<double>(w) / tw;
#pragma omp parallel for collapse(2) schedule(static)
    for (int b = 0; b < c; ++b)
        for (int oy = 0; oy < th; ++oy) {
            double fy = (oy + 0.5) * sy - 0.5;
            fy = std::clamp(fy, 0.0, static_cast<double>(h - 1));
            const int y0 = static_cast<int>(fy);
            const int y1 = std::min(y0 + 1, h - 1);
            const double ay = fy - y0;
            const double* r0 = in + (static_cast<std::size_t>(b) * h + y0) * w;
            const double* r1 = in + (static_cast<std::size_t>(b) * h + y1) * w;
            double* orow = out + (static_cast<std::size_t>(b) * th + oy) * tw;
            for (int ox = 0; ox < tw; ++ox) {
                double fx = (ox + 0.5) * sx - 0.5;
                fx = std::clamp(fx, 0.0, static_cast<double>(w - 1));
                const int x0 = static_cast<int>(fx);
                const int x1 = std::min(x0 + 1, w - 1);
                const double ax = fx - x0;
                orow[ox] = (1.0 - ay) * ((1.0 - ax) * r0[x0] + ax * r0[x1]) +
                           ay * ((1.0 - ax) * r1[x0] + ax * r1[x1]);
            }
        }
}

void bilinear_resize_adjoint(const double* gout, int c, int th, int tw,
                             double* gin, int h, int w) {
    const double sy = static_cast<double>(h) / th;
    const double sx = static_cast<double>(w) / tw;
    // scatter per band; bands are independent so only the band loop is parallel
#pragma omp parallel for schedule(static)
    for (int b = 0; b < c; ++b) {
        double* gplane = gin + static_cast<std::size_t>(b) * h * w;
        const double* oplane = gout + static_cast<std::size_t>(b) * th * tw;
        for (int oy = 0; oy < th; ++oy) {
            double fy = (oy + 0.5) * sy - 0.5;
            fy = std::clamp(fy, 0.0, static_cast<double>(h - 1));
            const int y0 = static_cast<int>(fy);
            const int y1 = std::min(y0 + 1, h - 1);
            const double ay = fy - y0;
            for (int ox = 0; ox < tw; ++ox) {
                double fx = (ox + 0.5) * sx - 0.5;
                fx = std::clamp(fx, 0.0, static_cast<double>(w - 1));
                const int x0 = static_cast<int>(fx);
                const int x1 = std::min(x0 + 1, w - 1);
                const double ax = fx - x0;
                const double g = oplane[static_cast<std::size_t>(oy) * tw + ox];
                gplane[static_cast<std::size_t>(y0) * w + x0] += (1.0 - ay) * (1.0 - ax) * g;
                gplane[static_cast<std::size_t>(y0) * w + x1] += (1.0 - ay) * ax * g;
                gplane[static_cast<std::size_t>(y1) * w + x0] += ay * (1.0 - ax) * g;
                gplane[static_cast<std::size_t>(y1) * w + x1] += ay * ax * g;
            }
        }
    }
}

}  // namespace usdm::kernels
