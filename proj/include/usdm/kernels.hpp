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

namespace usdm {
struct SFAPattern;
}

/// Data-parallel inner loops. Every compute-heavy kernel exists twice:
/// a plain serial reference in kernels::serial and an OpenMP version in
/// kernels::par. The top-level functions dispatch on the active backend
/// (default parallel, override with set_backend or USDM_KERNEL_BACKEND=serial).
/// Both variants produce identical results; reductions are ordered so runs
/// are bit-reproducible at any thread count.
namespace usdm::kernels {

enum class Backend { serial, parallel };

Backend active_backend();
void set_backend(Backend b);

/// plane(h,w) = cube(band_at(h,w), h, w)
void mosaic_gather(const double* cube, int h, int w, const SFAPattern& pattern,
                   double* plane);

/// cube(band_at(h,w), h, w) = plane(h,w); cube must be zero-initialized
void mosaic_scatter(const double* plane, int h, int w, const SFAPattern& pattern,
                    double* cube);

/// circular translation by (dy, dx), all bands alike
void cube_shift(const double* in, int c, int h, int w, int dy, int dx, double* out);

/// half-pixel-center bilinear rescale of every band to (th, tw)
void bilinear_resize(const double* in, int c, int h, int w, double* out,
                     int th, int tw);

/// adjoint of bilinear_resize; accumulates into gin
void bilinear_resize_adjoint(const double* gout, int c, int th, int tw,
                             double* gin, int h, int w);

/// 3x3 same-size convolution, zero padded.
/// in (cin,h,w); wgt (cout,cin,3,3); bias (cout) or nullptr; out (cout,h,w)
void conv3x3_forward(const double* in, int cin, int h, int w, const double* wgt,
                     const double* bias, int cout, double* out);

/// accumulates d(loss)/d(in) into gin (cin,h,w)
void conv3x3_grad_input(const double* gout, int cout, int h, int w,
                        const double* wgt, int cin, double* gin);

/// accumulates weight/bias gradients into gw (cout,cin,3,3) and gb (cout)
void conv3x3_grad_weights(const double* in, int cin, const double* gout, int cout,
                          int h, int w, double* gw, double* gb);

/// separable triangular filter, weights (1-|u|/r1)(1-|v|/r2) on
/// |u| <= r1-1, |v| <= r2-1, zero padded. Normalized-convolution block
/// for the weighted bilinear interpolation (and its adjoint: the kernel
/// is symmetric, so the filter is self-adjoint).
void tri_filter(const double* in, int h, int w, int r1, int r2, double* out);

namespace serial {
void conv3x3_forward(const double* in, int cin, int h, int w, const double* wgt,
                     const double* bias, int cout, double* out);
void conv3x3_grad_input(const double* gout, int cout, int h, int w,
                        const double* wgt, int cin, double* gin);
void conv3x3_grad_weights(const double* in, int cin, const double* gout, int cout,
                          int h, int w, double* gw, double* gb);
void tri_filter(const double* in, int h, int w, int r1, int r2, double* out);
}  // namespace serial

namespace par {
void conv3x3_forward(const double* in, int cin, int h, int w, const double* wgt,
                     const double* bias, int cout, double* out);
void conv3x3_grad_input(const double* gout, int cout, int h, int w,
                        const double* wgt, int cin, double* gin);
void conv3x3_grad_weights(const double* in, int cin, const double* gout, int cout,
                          int h, int w, double* gw, double* gb);
void tri_filter(const double* in, int h, int w, int r1, int r2, double* out);
}  // namespace par

}  // namespace usdm::kernels
