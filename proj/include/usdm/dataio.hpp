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

#include <string>
#include <utility>
#include <vector>

#include "usdm/sfa.hpp"
#include "usdm/tensor.hpp"

namespace usdm {

/// Cube container: text header (magic SPECUBE, version, H/W/B, float32,
/// little-endian, optional wavelengths in nm) followed by the raw payload,
/// band-major with row-major bands. Round trips are bit-exact. Mosaics are
/// stored as B == 1 cubes.
void save_cube(const std::string& path, const SpectralCube& cube,
               const std::vector<double>& wavelengths = {});
SpectralCube load_cube(const std::string& path,
                       std::vector<double>* wavelengths = nullptr);

/// Synthetic spectral responses standing in for proprietary camera curves:
/// Gaussian rows over the source wavelength grid, centers equally spaced
/// over [lo, hi], each row L1-normalized.
struct SSFBank {
    std::vector<double> source_wavelengths;  // grid the rows are tabulated on
    Tensor rows;                             // (1, B, L)
    std::vector<double> centers;             // nm
    double fwhm = 0.0;                       // nm
    int bands() const { return rows.h; }
};

/// fwhm <= 0 selects the default band spacing. The range must be covered
/// by the source grid.
SSFBank make_ssf_bank(const std::vector<double>& source_wavelengths, int bands,
                      double lo = 600.0, double hi = 900.0, double fwhm = 0.0);

/// Each output band is the weighted sum of source bands with its row's
/// weights; linear in the source cube and constant-preserving.
SpectralCube spectral_resample(const SpectralCube& source, const SSFBank& bank);

int snap_down(int size, int period);

/// Random crop origin snapped to the pattern period so the patch mask
/// equals the canonical mask.
std::pair<int, int> aligned_offset(Rng& rng, int h, int w, int patch_h,
                                   int patch_w, int r1, int r2);
Tensor crop(const Tensor& t, int oy, int ox, int patch_h, int patch_w);

/// Phase-aligned random patches; requested size is snapped down to a
/// period multiple. Offsets, when requested, pair with each patch.
std::vector<MosaicImage> extract_patches(
    const MosaicImage& mosaic, int size, int count, Rng& rng,
    const SFAPattern& pattern, std::vector<std::pair<int, int>>* offsets = nullptr);

/// Procedural desk-scale scene: piecewise-smooth abundance fields mixing a
/// small dictionary of smooth spectra, plus edges and mild texture; values
/// clamped to [0,1]. complexity 0 gives a spatially constant cube.
SpectralCube generate_scene(Rng& rng, int h, int w, int bands,
                            double complexity = 1.0);

/// Nominal wavelength grid (nm) attached to generated scenes.
std::vector<double> scene_wavelengths(int bands, double lo = 600.0, double hi = 900.0);

/// Rescale a cube to [0,1] by its max; returns the scale that was divided
/// out (1.0 for an all-zero or already-normalized cube).
double normalize_max(SpectralCube& cube);

/// 16-bit grayscale PNG of a [0,1] plane (clamped), for inspection.
void save_png16(const std::string& path, const Tensor& plane);

/// Dataset manifest: one entry per line, `<split> <path> [gt-path]`,
/// '#' starts a comment. Splits are free-form tags (train/val/test).
struct Manifest {
    struct Entry {
        std::string split;
        std::string path;
        std::string gt;  // empty when absent
    };
    std::vector<Entry> entries;
    std::vector<Entry> split(const std::string& tag) const;
};

Manifest load_manifest(const std::string& path);
void save_manifest(const std::string& path, const Manifest& manifest);

}  // namespace usdm
