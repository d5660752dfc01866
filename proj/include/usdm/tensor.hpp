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

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace usdm {

/// Dense (c, h, w) tensor of doubles, band-major with row-major planes.
/// Mosaic images are tensors with c == 1, spectral cubes use c == bands,
/// network feature maps use c == channels.
struct Tensor {
    int c = 0, h = 0, w = 0;
    std::vector<double> data;

    Tensor() = default;
    Tensor(int c_, int h_, int w_, double fill = 0.0)
        : c(c_), h(h_), w(w_),
          data(static_cast<std::size_t>(c_) * h_ * w_, fill) {
        if (c_ < 0 || h_ < 0 || w_ < 0)
            throw std::invalid_argument("tensor: negative dimension");
    }

    static Tensor plane(int h, int w, double fill = 0.0) {
        return Tensor(1, h, w, fill);
    }

    std::size_t size() const { return data.size(); }
    bool empty() const { return data.empty(); }
    bool same_shape(const Tensor& o) const {
        return c == o.c && h == o.h && w == o.w;
    }

    double& at(int ci, int hi, int wi) {
        return data[(static_cast<std::size_t>(ci) * h + hi) * w + wi];
    }
    double at(int ci, int hi, int wi) const {
        return data[(static_cast<std::size_t>(ci) * h + hi) * w + wi];
    }

    double* band(int ci) {
        return data.data() + static_cast<std::size_t>(ci) * h * w;
    }
    const double* band(int ci) const {
        return data.data() + static_cast<std::size_t>(ci) * h * w;
    }

    bool all_finite() const {
        for (double v : data)
            if (!std::isfinite(v)) return false;
        return true;
    }

    double min_value() const {
        double m = data.empty() ? 0.0 : data[0];
        for (double v : data) m = v < m ? v : m;
        return m;
    }
    double max_value() const {
        double m = data.empty() ? 0.0 : data[0];
        for (double v : data) m = v > m ? v : m;
        return m;
    }
};

/// H x W x B radiance cube, values nominally in [0, 1].
using SpectralCube = Tensor;
/// Single-plane mosaic observation (c == 1).
using MosaicImage = Tensor;
/// Network feature map (c == channels).
using FeatureMap = Tensor;

}  // namespace usdm
