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

#include <algorithm>
#include <sstream>

#include "usdm/sfa.hpp"

using namespace usdm;

namespace {

Tensor random_cube(Rng& rng, int c, int h, int w) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Tensor t(c, h, w);
    for (double& v : t.data) v = unit(rng);
    return t;
}

// independent triple-loop oracle for mosaic sampling
MosaicImage mosaic_oracle(const SpectralCube& cube, const SFAPattern& p) {
    MosaicImage y = Tensor::plane(cube.h, cube.w);
    for (int i = 0; i < cube.h; ++i)
        for (int j = 0; j < cube.w; ++j)
            for (int b = 0; b < cube.c; ++b)
                if (p.layout[(i % p.r1) * p.r2 + (j % p.r2)] == b)
                    y.at(0, i, j) = cube.at(b, i, j);
    return y;
}

MosaicImage circshift(const MosaicImage& y, int dy, int dx) {
    MosaicImage out = Tensor::plane(y.h, y.w);
    for (int i = 0; i < y.h; ++i)
        for (int j = 0; j < y.w; ++j)
            out.at(0, i, j) = y.at(0, (i - dy + y.h) % y.h, (j - dx + y.w) % y.w);
    return out;
}

}  // namespace

TEST_CASE("pattern validation and file round trip") {
    SFAPattern p = SFAPattern::row_major(5, 5);
    CHECK(p.bands == 25);
    CHECK(p.non_redundant());
    CHECK_NOTHROW(p.validate());

    std::istringstream in(p.to_text());
    SFAPattern q = SFAPattern::parse(in);
    CHECK(q.r1 == p.r1);
    CHECK(q.layout == p.layout);

    SFAPattern bad = p;
    bad.layout[3] = 99;
    CHECK_THROWS(bad.validate());
    bad = p;
    bad.layout[3] = bad.layout[4];  // repeated band in a non-redundant pattern
    CHECK_THROWS(bad.validate());

    std::istringstream junk("NOTAPATTERN 1");
    CHECK_THROWS(SFAPattern::parse(junk));
}

TEST_CASE("mosaic_sample matches the definition") {
    SFAPattern p = SFAPattern::row_major(2, 2);

    SUBCASE("constant cube stays constant") {
        SpectralCube cube(4, 6, 6, 0.37);
        MosaicImage y = mosaic_sample(cube, p);
        for (double v : y.data) CHECK(v == 0.37);
    }

    SUBCASE("band-index cube tiles the layout") {
        SpectralCube cube(4, 4, 4);
        for (int b = 0; b < 4; ++b)
            for (int i = 0; i < 4; ++i)
                for (int j = 0; j < 4; ++j) cube.at(b, i, j) = b;
        MosaicImage y = mosaic_sample(cube, p);
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j)
                CHECK(y.at(0, i, j) == (i % 2) * 2 + (j % 2));
    }

    SUBCASE("random cube equals the loop oracle exactly") {
        Rng rng(7);
        SpectralCube cube = random_cube(rng, 4, 6, 6);
        MosaicImage a = mosaic_sample(cube, p);
        MosaicImage b = mosaic_oracle(cube, p);
        for (std::size_t i = 0; i < a.size(); ++i) CHECK(a.data[i] == b.data[i]);
    }

    SUBCASE("band mismatch is rejected") {
        SpectralCube cube(3, 4, 4);
        CHECK_THROWS(mosaic_sample(cube, p));
    }
}

TEST_CASE("masks partition every pixel") {
    SUBCASE("degenerate 1x1 pattern") {
        SFAPattern p = SFAPattern::row_major(1, 1);
        SpectralCube m = mask_of(p, 3, 5);
        for (double v : m.data) CHECK(v == 1.0);
    }

    SUBCASE("2x2 pattern gives one-hot planes") {
        SFAPattern p = SFAPattern::row_major(2, 2);
        SpectralCube m = mask_of(p, 2, 2);
        for (int b = 0; b < 4; ++b)
            for (int i = 0; i < 2; ++i)
                for (int j = 0; j < 2; ++j)
                    CHECK(m.at(b, i, j) == (i * 2 + j == b ? 1.0 : 0.0));
    }

    SUBCASE("per-pixel band sum is exactly one on random sizes") {
        Rng rng(3);
        std::uniform_int_distribution<int> dim(1, 23);
        for (int trial = 0; trial < 5; ++trial) {
            SFAPattern p = SFAPattern::row_major(3, 2);
            const int h = dim(rng), w = dim(rng);
            SpectralCube m = mask_of(p, h, w);
            for (int i = 0; i < h; ++i)
                for (int j = 0; j < w; ++j) {
                    double s = 0.0;
                    for (int b = 0; b < p.bands; ++b) s += m.at(b, i, j);
                    CHECK(s == 1.0);
                }
        }
    }
}

TEST_CASE("sparse_expand round trip") {
    SFAPattern p = SFAPattern::row_major(3, 3);
    Rng rng(11);

    SUBCASE("constant mosaic fills its own phase only") {
        MosaicImage y = Tensor::plane(6, 6, 0.5);
        SpectralCube cube = sparse_expand(y, p);
        for (int b = 0; b < p.bands; ++b)
            for (int i = 0; i < 6; ++i)
                for (int j = 0; j < 6; ++j)
                    CHECK(cube.at(b, i, j) == (p.band_at(i, j) == b ? 0.5 : 0.0));
    }

    SUBCASE("mosaic_sample(sparse_expand(y)) == y exactly") {
        MosaicImage y = random_cube(rng, 1, 9, 12);
        MosaicImage back = mosaic_sample(sparse_expand(y, p), p);
        for (std::size_t i = 0; i < y.size(); ++i) CHECK(back.data[i] == y.data[i]);
    }

    SUBCASE("zero mosaic gives a zero cube") {
        SpectralCube cube = sparse_expand(Tensor::plane(3, 3, 0.0), p);
        for (double v : cube.data) CHECK(v == 0.0);
    }
}

TEST_CASE("transforms are exact permutations with period bookkeeping") {
    SFAPattern p = SFAPattern::row_major(2, 3);
    Rng rng(5);
    SpectralCube cube = random_cube(rng, 6, 4, 6);

    SUBCASE("flip twice is the identity") {
        for (bool horizontal : {false, true}) {
            SpectralCube once = apply_transform(cube, TransformSpec::flip(horizontal), p);
            SpectralCube twice = apply_transform(once, TransformSpec::flip(horizontal), p);
            CHECK(twice.data == cube.data);
        }
    }

    SUBCASE("four quarter turns are the identity") {
        SFAPattern sq = SFAPattern::row_major(2, 2);
        SpectralCube c2 = random_cube(rng, 4, 4, 4);
        SpectralCube r = apply_transform(c2, TransformSpec::rotate(1), sq);
        r = apply_transform(r, TransformSpec::rotate(3), sq);
        CHECK(r.data == c2.data);
        SpectralCube r2 = apply_transform(c2, TransformSpec::rotate(2), sq);
        r2 = apply_transform(r2, TransformSpec::rotate(2), sq);
        CHECK(r2.data == c2.data);
    }

    SUBCASE("full-period shift commutes with sampling") {
        SpectralCube shifted = apply_transform(
            cube, TransformSpec::shift(p.r1, p.r2), p);
        MosaicImage lhs = mosaic_sample(shifted, p);
        MosaicImage rhs = circshift(mosaic_oracle(cube, p), p.r1, p.r2);
        for (std::size_t i = 0; i < lhs.size(); ++i) CHECK(lhs.data[i] == rhs.data[i]);
    }

    SUBCASE("index permutations preserve the value multiset") {
        for (const TransformSpec& spec :
             {TransformSpec::shift(1, 2), TransformSpec::flip(true),
              TransformSpec::flip(false)}) {
            SpectralCube t = apply_transform(cube, spec, p);
            std::vector<double> a = cube.data, b = t.data;
            std::sort(a.begin(), a.end());
            std::sort(b.begin(), b.end());
            CHECK(a == b);
        }
    }

    SUBCASE("resize keeps period multiples and rejects sub-period results") {
        SpectralCube big = random_cube(rng, 6, 8, 12);
        SpectralCube r = apply_transform(big, TransformSpec::resize(0.6), p);
        CHECK(r.h % p.r1 == 0);
        CHECK(r.w % p.r2 == 0);
        CHECK(r.h >= p.r1);
        CHECK(r.w >= p.r2);

        SpectralCube tiny = random_cube(rng, 6, 2, 3);
        CHECK_THROWS(apply_transform(tiny, TransformSpec::resize(0.5), p));
    }

    SUBCASE("shift outside one period is rejected") {
        CHECK_THROWS(apply_transform(cube, TransformSpec::shift(0, 1), p));
        CHECK_THROWS(apply_transform(cube, TransformSpec::shift(1, p.r2 + 1), p));
    }
}

TEST_CASE("random_transform policies and determinism") {
    SFAPattern p = SFAPattern::row_major(5, 5);

    SUBCASE("shift-only policy always draws in-period shifts") {
        Rng rng(21);
        for (int i = 0; i < 200; ++i) {
            TransformSpec s = random_transform(rng, p, TransformPolicy::shift_only());
            CHECK(s.kind == TransformSpec::Kind::shift);
            CHECK(s.shift_rows >= 1);
            CHECK(s.shift_rows <= 5);
            CHECK(s.shift_cols >= 1);
            CHECK(s.shift_cols <= 5);
        }
    }

    SUBCASE("fixed seed reproduces the spec sequence") {
        Rng a(99), b(99);
        for (int i = 0; i < 100; ++i) {
            TransformSpec sa = random_transform(a, p);
            TransformSpec sb = random_transform(b, p);
            CHECK(sa.describe() == sb.describe());
        }
    }

    SUBCASE("uniform policy frequencies stay within five sigma") {
        Rng rng(1234);
        const int n = 10000;
        int counts[4] = {0, 0, 0, 0};
        for (int i = 0; i < n; ++i) {
            TransformSpec s = random_transform(rng, p);
            counts[static_cast<int>(s.kind)]++;
        }
        const double expect = n / 4.0;
        const double sigma = std::sqrt(n * 0.25 * 0.75);
        for (int k = 0; k < 4; ++k)
            CHECK(std::abs(counts[k] - expect) <= 5.0 * sigma);
    }
}

TEST_CASE("inverse pixel shuffle") {
    SUBCASE("constant band yields constant sub-images") {
        Tensor band = Tensor::plane(6, 6, 2.5);
        auto subs = inverse_pixel_shuffle(band, 2, 3);
        CHECK(subs.size() == 6);
        for (const Tensor& s : subs)
            for (double v : s.data) CHECK(v == 2.5);
    }

    SUBCASE("2x2 hand case") {
        Tensor band = Tensor::plane(2, 2);
        band.at(0, 0, 0) = 1;
        band.at(0, 0, 1) = 2;
        band.at(0, 1, 0) = 3;
        band.at(0, 1, 1) = 4;
        auto subs = inverse_pixel_shuffle(band, 2, 2);
        REQUIRE(subs.size() == 4);
        CHECK(subs[0].at(0, 0, 0) == 1);
        CHECK(subs[1].at(0, 0, 0) == 2);
        CHECK(subs[2].at(0, 0, 0) == 3);
        CHECK(subs[3].at(0, 0, 0) == 4);
    }

    SUBCASE("shuffle then unshuffle is the identity") {
        Rng rng(17);
        Tensor band = random_cube(rng, 1, 8, 12);
        Tensor back = pixel_shuffle(inverse_pixel_shuffle(band, 4, 3), 4, 3);
        CHECK(back.data == band.data);
    }
}
