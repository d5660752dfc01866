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

#include "usdm/sfa.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "usdm/kernels.hpp"

namespace usdm {

SFAPattern SFAPattern::row_major(int r1, int r2) {
    if (r1 < 1 || r2 < 1)
        throw std::invalid_argument("pattern: period must be at least 1x1");
    SFAPattern p;
    p.r1 = r1;
    p.r2 = r2;
    p.bands = r1 * r2;
    p.layout.resize(p.bands);
    for (int i = 0; i < p.bands; ++i) p.layout[i] = i;
    return p;
}

bool SFAPattern::non_redundant() const { return bands == r1 * r2; }

void SFAPattern::validate() const {
    if (r1 < 1 || r2 < 1 || bands < 1)
        throw std::invalid_argument("pattern: r1, r2, bands must be positive");
    if (static_cast<int>(layout.size()) != r1 * r2)
        throw std::invalid_argument("pattern: layout size does not match r1*r2");
    for (int v : layout)
        if (v < 0 || v >= bands)
            throw std::invalid_argument("pattern: layout entry outside [0, bands)");
    if (non_redundant()) {
        std::vector<char> seen(bands, 0);
        for (int v : layout) {
            if (seen[v])
                throw std::invalid_argument(
                    "pattern: non-redundant layout repeats band " + std::to_string(v));
            seen[v] = 1;
        }
    }
}

SFAPattern SFAPattern::parse(std::istream& in) {
    std::string magic;
    int version = 0;
    in >> magic >> version;
    if (magic != "SFAPATTERN" || version != 1)
        throw std::runtime_error("pattern: bad magic, expected 'SFAPATTERN 1'");
    SFAPattern p;
    std::string key;
    for (int i = 0; i < 3; ++i) {
        in >> key;
        if (key == "r1") in >> p.r1;
        else if (key == "r2") in >> p.r2;
        else if (key == "B") in >> p.bands;
        else throw std::runtime_error("pattern: unexpected key '" + key + "'");
    }
    in >> key;
    if (key != "LAYOUT") throw std::runtime_error("pattern: missing LAYOUT block");
    p.layout.resize(static_cast<std::size_t>(p.r1) * p.r2);
    for (int& v : p.layout)
        if (!(in >> v)) throw std::runtime_error("pattern: truncated layout grid");
    p.validate();
    return p;
}

SFAPattern SFAPattern::load(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("pattern: cannot open " + path);
    return parse(f);
}

std::string SFAPattern::to_text() const {
    std::ostringstream out;
    out << "SFAPATTERN 1\n"
        << "r1 " << r1 << "\nr2 " << r2 << "\nB " << bands << "\nLAYOUT\n";
    for (int i = 0; i < r1; ++i) {
        for (int j = 0; j < r2; ++j)
            out << layout[i * r2 + j] << (j + 1 == r2 ? '\n' : ' ');
    }
    return out.str();
}

void SFAPattern::save(const std::string& path) const {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("pattern: cannot write " + path);
    f << to_text();
}

MosaicImage mosaic_sample(const SpectralCube& cube, const SFAPattern& pattern) {
    if (cube.c != pattern.bands)
        throw std::invalid_argument("mosaic_sample: cube band count does not match pattern");
    MosaicImage y = Tensor::plane(cube.h, cube.w);
    kernels::mosaic_gather(cube.data.data(), cube.h, cube.w, pattern, y.data.data());
    return y;
}

SpectralCube mask_of(const SFAPattern& pattern, int h, int w) {
    if (h < 1 || w < 1) throw std::invalid_argument("mask_of: H, W must be >= 1");
    SpectralCube m(pattern.bands, h, w, 0.0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) m.at(pattern.band_at(y, x), y, x) = 1.0;
    return m;
}

SpectralCube sparse_expand(const MosaicImage& mosaic, const SFAPattern& pattern) {
    SpectralCube cube(pattern.bands, mosaic.h, mosaic.w, 0.0);
    kernels::mosaic_scatter(mosaic.data.data(), mosaic.h, mosaic.w, pattern,
                            cube.data.data());
    return cube;
}

TransformSpec TransformSpec::shift(int rows, int cols) {
    TransformSpec s;
    s.kind = Kind::shift;
    s.shift_rows = rows;
    s.shift_cols = cols;
    return s;
}
TransformSpec TransformSpec::flip(bool horizontal) {
    TransformSpec s;
    s.kind = Kind::flip;
    s.flip_horizontal = horizontal;
    return s;
}
TransformSpec TransformSpec::rotate(int quarter_turns) {
    TransformSpec s;
    s.kind = Kind::rotate;
    s.quarter_turns = quarter_turns;
    return s;
}
TransformSpec TransformSpec::resize(double scale) {
    TransformSpec s;
    s.kind = Kind::resize;
    s.scale = scale;
    return s;
}

void TransformSpec::validate(const SFAPattern& pattern) const {
    switch (kind) {
        case Kind::shift:
            if (shift_rows < 1 || shift_rows > pattern.r1 || shift_cols < 1 ||
                shift_cols > pattern.r2)
                throw std::invalid_argument("transform: shift outside one period");
            break;
        case Kind::flip:
            break;
        case Kind::rotate:
            if (quarter_turns < 1 || quarter_turns > 3)
                throw std::invalid_argument("transform: rotation must be 1..3 quarter turns");
            break;
        case Kind::resize:
            if (scale < 0.5 || scale > 2.0)
                throw std::invalid_argument("transform: resize scale outside [0.5, 2.0]");
            break;
    }
}

std::string TransformSpec::describe() const {
    std::ostringstream s;
    switch (kind) {
        case Kind::shift: s << "shift(" << shift_rows << "," << shift_cols << ")"; break;
        case Kind::flip: s << "flip(" << (flip_horizontal ? "horizontal" : "vertical") << ")"; break;
        case Kind::rotate: s << "rotate(" << quarter_turns << ")"; break;
        case Kind::resize: s << "resize(" << scale << ")"; break;
    }
    return s.str();
}

namespace {

SpectralCube crop_to_period(SpectralCube cube, const SFAPattern& pattern) {
    int ch = (cube.h / pattern.r1) * pattern.r1;
    int cw = (cube.w / pattern.r2) * pattern.r2;
    if (ch < pattern.r1 || cw < pattern.r2)
        throw std::invalid_argument("transform: result smaller than one pattern period");
    if (ch == cube.h && cw == cube.w) return cube;
    SpectralCube out(cube.c, ch, cw);
    for (int b = 0; b < cube.c; ++b)
        for (int y = 0; y < ch; ++y)
            for (int x = 0; x < cw; ++x) out.at(b, y, x) = cube.at(b, y, x);
    return out;
}

}  // namespace

SpectralCube apply_transform(const SpectralCube& cube, const TransformSpec& spec,
                             const SFAPattern& pattern) {
    spec.validate(pattern);
    const int bcount = cube.c, h = cube.h, w = cube.w;
    switch (spec.kind) {
        case TransformSpec::Kind::shift: {
            SpectralCube out(bcount, h, w);
            kernels::cube_shift(cube.data.data(), bcount, h, w, spec.shift_rows,
                                spec.shift_cols, out.data.data());
            return out;
        }
        case TransformSpec::Kind::flip: {
            SpectralCube out(bcount, h, w);
            for (int b = 0; b < bcount; ++b)
                for (int y = 0; y < h; ++y)
                    for (int x = 0; x < w; ++x)
                        out.at(b, y, x) = spec.flip_horizontal
                                              ? cube.at(b, y, w - 1 - x)
                                              : cube.at(b, h - 1 - y, x);
            return out;
        }
        case TransformSpec::Kind::rotate: {
            SpectralCube cur = cube;
            for (int t = 0; t < spec.quarter_turns; ++t) {
                SpectralCube out(cur.c, cur.w, cur.h);
                for (int b = 0; b < cur.c; ++b)
                    for (int y = 0; y < out.h; ++y)
                        for (int x = 0; x < out.w; ++x)
                            out.at(b, y, x) = cur.at(b, x, cur.w - 1 - y);
                cur = std::move(out);
            }
            return crop_to_period(std::move(cur), pattern);
        }
        case TransformSpec::Kind::resize: {
            int th = std::max(pattern.r1,
                              static_cast<int>(h * spec.scale / pattern.r1) * pattern.r1);
            int tw = std::max(pattern.r2,
                              static_cast<int>(w * spec.scale / pattern.r2) * pattern.r2);
            if (h * spec.scale < pattern.r1 || w * spec.scale < pattern.r2)
                throw std::invalid_argument("transform: resize result smaller than one period");
            SpectralCube out(bcount, th, tw);
            kernels::bilinear_resize(cube.data.data(), bcount, h, w, out.data.data(), th, tw);
            return out;
        }
    }
    throw std::logic_error("transform: unreachable");
}

TransformSpec random_transform(Rng& rng, const SFAPattern& pattern,
                               const TransformPolicy& policy) {
    const double ws[4] = {policy.w_shift, policy.w_flip, policy.w_rotate, policy.w_resize};
    double total = ws[0] + ws[1] + ws[2] + ws[3];
    if (!(total > 0.0))
        throw std::invalid_argument("random_transform: policy weights sum to zero");
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double pick = unit(rng) * total;
    int kind = 0;
    for (; kind < 3; ++kind) {
        if (pick < ws[kind]) break;
        pick -= ws[kind];
    }
    switch (kind) {
        case 0: {
            std::uniform_int_distribution<int> di(1, pattern.r1), dj(1, pattern.r2);
            return TransformSpec::shift(di(rng), dj(rng));
        }
        case 1: {
            std::uniform_int_distribution<int> axis(0, 1);
            return TransformSpec::flip(axis(rng) == 1);
        }
        case 2: {
            std::uniform_int_distribution<int> turns(1, 3);
            return TransformSpec::rotate(turns(rng));
        }
        default: {
            std::uniform_real_distribution<double> s(0.5, 2.0);
            return TransformSpec::resize(s(rng));
        }
    }
}

std::vector<Tensor> inverse_pixel_shuffle(const Tensor& band, int r1, int r2) {
    if (band.c != 1)
        throw std::invalid_argument("inverse_pixel_shuffle: expects a single-band image");
    const int sh = band.h / r1, sw = band.w / r2;  // crop to period multiple
    if (sh < 1 || sw < 1)
        throw std::invalid_argument("inverse_pixel_shuffle: image smaller than one period");
    std::vector<Tensor> subs;
    subs.reserve(static_cast<std::size_t>(r1) * r2);
    for (int p = 0; p < r1; ++p)
        for (int q = 0; q < r2; ++q) {
            Tensor sub = Tensor::plane(sh, sw);
            for (int m = 0; m < sh; ++m)
                for (int n = 0; n < sw; ++n)
                    sub.at(0, m, n) = band.at(0, p + r1 * m, q + r2 * n);
            subs.push_back(std::move(sub));
        }
    return subs;
}

Tensor pixel_shuffle(const std::vector<Tensor>& subs, int r1, int r2) {
    if (static_cast<int>(subs.size()) != r1 * r2)
        throw std::invalid_argument("pixel_shuffle: expected r1*r2 sub-images");
    const int sh = subs[0].h, sw = subs[0].w;
    Tensor band = Tensor::plane(sh * r1, sw * r2);
    for (int p = 0; p < r1; ++p)
        for (int q = 0; q < r2; ++q) {
            const Tensor& sub = subs[p * r2 + q];
            if (sub.h != sh || sub.w != sw)
                throw std::invalid_argument("pixel_shuffle: sub-image shapes differ");
            for (int m = 0; m < sh; ++m)
                for (int n = 0; n < sw; ++n)
                    band.at(0, p + r1 * m, q + r2 * n) = sub.at(0, m, n);
        }
    return band;
}

std::vector<double> phase_means(const double* band, int h, int w, int r1, int r2) {
    const int sh = h / r1, sw = w / r2;
    if (sh < 1 || sw < 1)
        throw std::invalid_argument("phase_means: image smaller than one period");
    std::vector<double> means(static_cast<std::size_t>(r1) * r2, 0.0);
    for (int p = 0; p < r1; ++p)
        for (int q = 0; q < r2; ++q) {
            double acc = 0.0;
            for (int m = 0; m < sh; ++m) {
                const double* row = band + static_cast<std::size_t>(p + r1 * m) * w;
                for (int n = 0; n < sw; ++n) acc += row[q + r2 * n];
            }
            means[p * r2 + q] = acc / (static_cast<double>(sh) * sw);
        }
    return means;
}

}  // namespace usdm
