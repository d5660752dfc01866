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

#include "usdm/sfa.hpp"
#include "usdm/tensor.hpp"

namespace usdm {

/// Weighted bilinear interpolation: each sparse band is filled in by
/// normalized convolution with the separable kernel
/// k(u,v) = (1 - |u|/r1)(1 - |v|/r2), zero-padded borders. Sampled pixels
/// are preserved exactly (the nearest same-band neighbor sits one period
/// away, where the kernel is zero) and the output carries no periodic
/// mosaic structure. The denominator is strictly positive whenever the
/// image covers at least one period, so no border special-case is needed;
/// smaller images are rejected.
SpectralCube wb_interpolate(const MosaicImage& mosaic, const SFAPattern& pattern);

namespace detail {
/// raw-buffer forward used by the autodiff graph; cube (B,h,w)
void wb_forward(const double* mosaic, int h, int w, const SFAPattern& pattern,
                double* cube);
/// adjoint of wb_forward (the map is linear in the mosaic); accumulates
/// into gmosaic (h,w)
void wb_adjoint(const double* gcube, int h, int w, const SFAPattern& pattern,
                double* gmosaic);
}  // namespace detail

}  // namespace usdm
