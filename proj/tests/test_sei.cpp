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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <limits>

#include "usdm/dataio.hpp"
#include "usdm/interp.hpp"
#include "usdm/sei.hpp"

using namespace usdm;

TEST_CASE("constant band has zero periodic distortion") {
    SFAPattern p = SFAPattern::row_major(3, 3);
    CHECK(band_sei(Tensor::plane(9, 9, 0.7), p) == 0.0);
    CHECK(cube_sei(SpectralCube(9, 9, 9, 0.7), p) == 0.0);
}

TEST_CASE("one-hot phase hand case gives 3/16") {
    SFAPattern p = SFAPattern::row_major(2, 2);
    Tensor band = Tensor::plane(4, 4, 0.0);
    for (int y = 0; y < 4; y += 2)
        for (int x = 0; x < 4; x += 2) band.at(0, y, x) = 1.0;  // phase (0,0) only
    CHECK(band_sei(band, p) == doctest::Approx(0.1875).epsilon(1e-15));

    // cube with that band plus three constant bands: SEI = (3/16)/4
    SpectralCube cube(4, 4, 4, 0.25);
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 4; ++x) cube.at(0, y, x) = band.at(0, y, x);
    CHECK(cube_sei(cube, p) == doctest::Approx(3.0 / 64.0).epsilon(1e-15));
}

TEST_CASE("offset invariance and quadratic scaling") {
    SFAPattern p = SFAPattern::row_major(2, 3);
    Rng rng(5);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Tensor band = Tensor::plane(8, 9);
    for (double& v : band.data) v = unit(rng);
    const double base = band_sei(band, p);

    Tensor shifted = band;
    for (double& v : shifted.data) v += 0.37;
    CHECK(band_sei(shifted, p) == doctest::Approx(base).epsilon(1e-12));

    Tensor scaled = band;
    for (double& v : scaled.data) v *= 2.5;
    CHECK(band_sei(scaled, p) == doctest::Approx(2.5 * 2.5 * base).epsilon(1e-12));
}

TEST_CASE("non-multiple images are cropped, tiny ones rejected") {
    SFAPattern p = SFAPattern::row_major(2, 2);
    Tensor band = Tensor::plane(5, 5, 0.0);
    band.at(0, 4, 4) = 100.0;  // outside the 4x4 crop
    CHECK(band_sei(band, p) == 0.0);
    CHECK_THROWS(band_sei(Tensor::plane(1, 4, 0.0), p));
}

TEST_CASE("interpolated cubes score below mosaic replication") {
    // the collapse output repeats the mosaic in every band and is periodic
    // by construction; WB smooths the phases out
    SFAPattern p = SFAPattern::row_major(4, 4);
    Rng rng(9);
    for (int trial = 0; trial < 5; ++trial) {
        SpectralCube scene = generate_scene(rng, 32, 32, 16, 1.0);
        MosaicImage y = mosaic_sample(scene, p);
        SpectralCube wb = wb_interpolate(y, p);
        SpectralCube replicated(16, 32, 32);
        for (int b = 0; b < 16; ++b)
            std::copy(y.data.begin(), y.data.end(), replicated.band(b));
        CHECK(cube_sei(wb, p) < cube_sei(replicated, p));
    }
}

TEST_CASE("stop rule fires only above the threshold") {
    CHECK_FALSE(should_stop({1e-8, 5e-8}, 2.1e-7));
    CHECK(should_stop({1e-8, 3e-7}, 2.1e-7));
    CHECK_FALSE(should_stop({}, 2.1e-7));
    CHECK_FALSE(should_stop({1e2, 1e3}, std::numeric_limits<double>::infinity()));
}
