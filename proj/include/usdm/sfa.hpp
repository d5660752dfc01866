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

#include <iosfwd>
#include <random>
#include <string>
#include <vector>

#include "usdm/tensor.hpp"

namespace usdm {

using Rng = std::mt19937_64;

/// Periodic spectral filter array: an r1 x r2 tile of band indices.
/// Non-redundant patterns have bands == r1*r2 with each band appearing once.
struct SFAPattern {
    int r1 = 0, r2 = 0, bands = 0;
    std::vector<int> layout;  // r1*r2 entries, row-major

    /// Canonical non-redundant pattern: band (i*r2 + j) at tile cell (i, j).
    static SFAPattern row_major(int r1, int r2);

    /// Parse the pattern file format (see save()).
    static SFAPattern parse(std::istream& in);
    static SFAPattern load(const std::string& path);
    void save(const std::string& path) const;
    std::string to_text() const;

    int phases() const { return r1 * r2; }
    int phase_of(int h, int w) const { return (h % r1) * r2 + (w % r2); }
    int band_at(int h, int w) const { return layout[phase_of(h, w)]; }
    bool non_redundant() const;

    /// Throws if any layout entry is outside [0, bands) or, for
    /// bands == r1*r2, if the layout is not a bijection onto the bands.
    void validate() const;
};

/// Y(h,w) = cube(band_at(h,w), h, w).
MosaicImage mosaic_sample(const SpectralCube& cube, const SFAPattern& pattern);

/// Binary sampling masks, one plane per band; per-pixel band sum is 1
/// for non-redundant patterns.
SpectralCube mask_of(const SFAPattern& pattern, int h, int w);

/// Mosaic value placed in its own band, zeros elsewhere.
/// mosaic_sample(sparse_expand(y)) == y exactly.
SpectralCube sparse_expand(const MosaicImage& mosaic, const SFAPattern& pattern);

/// Geometric transform of a demosaiced cube. The transformed cube is
/// treated as a new scene re-imaged with the canonical mask, so outputs
/// are cropped to period multiples where a transform breaks alignment.
struct TransformSpec {
    enum class Kind { shift, flip, rotate, resize };
    Kind kind = Kind::shift;
    int shift_rows = 0, shift_cols = 0;  // shift, in [1, r1] x [1, r2]
    bool flip_horizontal = false;        // flip axis: true mirrors columns
    int quarter_turns = 0;               // rotate, in {1, 2, 3}
    double scale = 1.0;                  // resize, in [0.5, 2.0]

    static TransformSpec shift(int rows, int cols);
    static TransformSpec flip(bool horizontal);
    static TransformSpec rotate(int quarter_turns);
    static TransformSpec resize(double scale);

    void validate(const SFAPattern& pattern) const;
    std::string describe() const;
};

/// Shift is circular; flip/rotate are exact index permutations; resize is
/// a bilinear rescale. All bands are transformed identically and the result
/// is cropped to a period multiple (rejected if smaller than one period).
SpectralCube apply_transform(const SpectralCube& cube, const TransformSpec& spec,
                             const SFAPattern& pattern);

/// Selection weights over the four transform kinds.
struct TransformPolicy {
    double w_shift = 1.0, w_flip = 1.0, w_rotate = 1.0, w_resize = 1.0;
    static TransformPolicy uniform() { return {}; }
    static TransformPolicy shift_only() { return {1.0, 0.0, 0.0, 0.0}; }
};

TransformSpec random_transform(Rng& rng, const SFAPattern& pattern,
                               const TransformPolicy& policy = {});

/// Rearranges a band image into its r1*r2 phase sub-images; sub-image
/// (p, q) collects pixels (p + r1*m, q + r2*n). Listed at index p*r2 + q.
/// Inputs not a period multiple are cropped first.
std::vector<Tensor> inverse_pixel_shuffle(const Tensor& band, int r1, int r2);

/// Exact inverse of inverse_pixel_shuffle.
Tensor pixel_shuffle(const std::vector<Tensor>& subs, int r1, int r2);

/// Per-phase global means of a band plane, index p*r2 + q; the building
/// block shared by the self-evaluation index and the spatial attention.
std::vector<double> phase_means(const double* band, int h, int w, int r1, int r2);

}  // namespace usdm
