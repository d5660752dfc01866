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

#include "usdm/dataio.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

namespace usdm {

namespace {

constexpr const char* kCubeMagic = "SPECUBE";

void write_atomic(const std::string& path, const std::string& bytes) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw std::runtime_error("io: cannot write " + tmp);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw std::runtime_error("io: write failed for " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace

void save_cube(const std::string& path, const SpectralCube& cube,
               const std::vector<double>& wavelengths) {
    if (cube.empty()) throw std::invalid_argument("save_cube: empty cube");
    if (!wavelengths.empty() && static_cast<int>(wavelengths.size()) != cube.c)
        throw std::invalid_argument("save_cube: wavelength count != band count");
    std::ostringstream out;
    out << kCubeMagic << " 1\n"
        << "H " << cube.h << "\nW " << cube.w << "\nB " << cube.c << "\n"
        << "DTYPE float32\nORDER little-endian\n";
    if (!wavelengths.empty()) {
        out << "WAVELENGTHS";
        for (double v : wavelengths) out << ' ' << v;
        out << '\n';
    }
    out << "DATA\n";
    std::vector<float> payload(cube.size());
    for (std::size_t i = 0; i < cube.size(); ++i)
        payload[i] = static_cast<float>(cube.data[i]);
    out.write(reinterpret_cast<const char*>(payload.data()),
              static_cast<std::streamsize>(payload.size() * sizeof(float)));
    write_atomic(path, out.str());
}

SpectralCube load_cube(const std::string& path, std::vector<double>* wavelengths) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_cube: cannot open " + path);

    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("load_cube: empty file " + path);
    {
        std::istringstream head(line);
        std::string magic;
        int version = 0;
        head >> magic >> version;
        if (magic != kCubeMagic)
            throw std::runtime_error("load_cube: bad magic in " + path);
        if (version != 1)
            throw std::runtime_error("load_cube: unsupported version in " + path);
    }

    int h = -1, w = -1, b = -1;
    std::vector<double> wl;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::string key;
        ls >> key;
        if (key == "DATA") break;
        if (key == "H") ls >> h;
        else if (key == "W") ls >> w;
        else if (key == "B") ls >> b;
        else if (key == "DTYPE") {
            std::string v;
            ls >> v;
            if (v != "float32")
                throw std::runtime_error("load_cube: dtype mismatch, expected float32, got " + v);
        } else if (key == "ORDER") {
            std::string v;
            ls >> v;
            if (v != "little-endian")
                throw std::runtime_error(
                    "load_cube: byte order '" + v +
                    "' not supported, payload must be little-endian");
        } else if (key == "WAVELENGTHS") {
            double x;
            while (ls >> x) wl.push_back(x);
        } else {
            throw std::runtime_error("load_cube: unknown header key '" + key + "'");
        }
    }
    if (h < 1 || w < 1 || b < 1)
        throw std::runtime_error("load_cube: missing or invalid H/W/B header");
    if (!wl.empty() && static_cast<int>(wl.size()) != b)
        throw std::runtime_error("load_cube: wavelength count != band count");

    const std::size_t count = static_cast<std::size_t>(h) * w * b;
    std::vector<float> payload(count);
    in.read(reinterpret_cast<char*>(payload.data()),
            static_cast<std::streamsize>(count * sizeof(float)));
    if (static_cast<std::size_t>(in.gcount()) != count * sizeof(float))
        throw std::runtime_error("load_cube: truncated payload in " + path);
    char extra;
    if (in.read(&extra, 1))
        throw std::runtime_error("load_cube: payload larger than H*W*B in " + path);

    SpectralCube cube(b, h, w);
    for (std::size_t i = 0; i < count; ++i) cube.data[i] = payload[i];
    if (wavelengths) *wavelengths = std::move(wl);
    return cube;
}

SSFBank make_ssf_bank(const std::vector<double>& source_wavelengths, int bands,
                      double lo, double hi, double fwhm) {
    if (bands < 1) throw std::invalid_argument("ssf: bands must be >= 1");
    if (source_wavelengths.empty())
        throw std::invalid_argument("ssf: empty source wavelength grid");
    if (!(lo < hi)) throw std::invalid_argument("ssf: need lo < hi");
    const auto [mn, mx] =
        std::minmax_element(source_wavelengths.begin(), source_wavelengths.end());
    if (*mn > lo || *mx < hi)
        throw std::invalid_argument("ssf: requested range outside source grid coverage");

    SSFBank bank;
    bank.source_wavelengths = source_wavelengths;
    const double spacing = bands > 1 ? (hi - lo) / (bands - 1) : (hi - lo);
    bank.fwhm = fwhm > 0.0 ? fwhm : spacing;
    const double sigma = bank.fwhm / (2.0 * std::sqrt(2.0 * std::log(2.0)));
    const int l = static_cast<int>(source_wavelengths.size());
    bank.rows = Tensor(1, bands, l);
    for (int b = 0; b < bands; ++b) {
        const double center = bands > 1 ? lo + b * spacing : 0.5 * (lo + hi);
        bank.centers.push_back(center);
        // shift exponents by the closest distance so delta-like banks stay
        // well normalized instead of underflowing to 0/0
        double d2min = std::numeric_limits<double>::infinity();
        for (int k = 0; k < l; ++k) {
            const double d = source_wavelengths[k] - center;
            d2min = std::min(d2min, d * d);
        }
        double sum = 0.0;
        double* row = bank.rows.data.data() + static_cast<std::size_t>(b) * l;
        for (int k = 0; k < l; ++k) {
            const double d = source_wavelengths[k] - center;
            row[k] = std::exp(-(d * d - d2min) / (2.0 * sigma * sigma));
            sum += row[k];
        }
        for (int k = 0; k < l; ++k) row[k] /= sum;
    }
    return bank;
}

SpectralCube spectral_resample(const SpectralCube& source, const SSFBank& bank) {
    if (source.c != bank.rows.w)
        throw std::invalid_argument("spectral_resample: bank grid does not match source bands");
    SpectralCube out(bank.bands(), source.h, source.w, 0.0);
    const std::size_t plane = static_cast<std::size_t>(source.h) * source.w;
    for (int b = 0; b < bank.bands(); ++b) {
        double* op = out.band(b);
        const double* row = bank.rows.data.data() + static_cast<std::size_t>(b) * source.c;
        for (int l = 0; l < source.c; ++l) {
            const double wgt = row[l];
            if (wgt == 0.0) continue;
            const double* sp = source.band(l);
            for (std::size_t i = 0; i < plane; ++i) op[i] += wgt * sp[i];
        }
    }
    return out;
}

int snap_down(int size, int period) {
    const int snapped = (size / period) * period;
    if (snapped < period)
        throw std::invalid_argument("snap_down: size smaller than one period");
    return snapped;
}

std::pair<int, int> aligned_offset(Rng& rng, int h, int w, int patch_h, int patch_w,
                                   int r1, int r2) {
    if (patch_h > h || patch_w > w)
        throw std::invalid_argument("aligned_offset: patch larger than image");
    std::uniform_int_distribution<int> dy(0, (h - patch_h) / r1);
    std::uniform_int_distribution<int> dx(0, (w - patch_w) / r2);
    return {dy(rng) * r1, dx(rng) * r2};
}

Tensor crop(const Tensor& t, int oy, int ox, int patch_h, int patch_w) {
    if (oy < 0 || ox < 0 || oy + patch_h > t.h || ox + patch_w > t.w)
        throw std::invalid_argument("crop: window outside image");
    Tensor out(t.c, patch_h, patch_w);
    for (int c = 0; c < t.c; ++c)
        for (int y = 0; y < patch_h; ++y)
            for (int x = 0; x < patch_w; ++x)
                out.at(c, y, x) = t.at(c, oy + y, ox + x);
    return out;
}

std::vector<MosaicImage> extract_patches(const MosaicImage& mosaic, int size,
                                         int count, Rng& rng,
                                         const SFAPattern& pattern,
                                         std::vector<std::pair<int, int>>* offsets) {
    const int ph = std::min(snap_down(size, pattern.r1), mosaic.h);
    const int pw = std::min(snap_down(size, pattern.r2), mosaic.w);
    std::vector<MosaicImage> patches;
    patches.reserve(count);
    if (offsets) offsets->clear();
    for (int i = 0; i < count; ++i) {
        const auto [oy, ox] =
            aligned_offset(rng, mosaic.h, mosaic.w, ph, pw, pattern.r1, pattern.r2);
        patches.push_back(crop(mosaic, oy, ox, ph, pw));
        if (offsets) offsets->emplace_back(oy, ox);
    }
    return patches;
}

std::vector<double> scene_wavelengths(int bands, double lo, double hi) {
    std::vector<double> wl(bands);
    for (int b = 0; b < bands; ++b)
        wl[b] = bands > 1 ? lo + b * (hi - lo) / (bands - 1) : 0.5 * (lo + hi);
    return wl;
}

namespace {

// smooth positive spectrum over the normalized band axis
std::vector<double> random_spectrum(Rng& rng, int bands) {
    std::uniform_real_distribution<double> base(0.35, 0.75);
    std::uniform_real_distribution<double> amp(-0.3, 0.3);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * 3.14159265358979323846);
    const double a0 = base(rng);
    const double a1 = amp(rng), a2 = amp(rng) / 2.0, a3 = amp(rng) / 3.0;
    const double p1 = phase(rng), p2 = phase(rng), p3 = phase(rng);
    std::vector<double> s(bands);
    for (int b = 0; b < bands; ++b) {
        const double t = bands > 1 ? static_cast<double>(b) / (bands - 1) : 0.0;
        const double pi = 3.14159265358979323846;
        double v = a0 + a1 * std::cos(pi * t + p1) + a2 * std::cos(2.0 * pi * t + p2) +
                   a3 * std::cos(3.0 * pi * t + p3);
        s[b] = std::clamp(v, 0.05, 1.0);
    }
    return s;
}

}  // namespace

SpectralCube generate_scene(Rng& rng, int h, int w, int bands, double complexity) {
    if (h < 1 || w < 1 || bands < 1)
        throw std::invalid_argument("generate_scene: dimensions must be positive");
    if (complexity <= 0.0) {
        const std::vector<double> s = random_spectrum(rng, bands);
        SpectralCube cube(bands, h, w);
        for (int b = 0; b < bands; ++b)
            std::fill(cube.band(b), cube.band(b) + static_cast<std::size_t>(h) * w, s[b]);
        return cube;
    }

    const double pi = 3.14159265358979323846;
    const int n_spectra = 3 + static_cast<int>(2.0 * complexity);
    const int n_sites = 2 + static_cast<int>(3.0 * complexity);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);

    std::vector<std::vector<double>> spectra;
    for (int s = 0; s < n_spectra; ++s) spectra.push_back(random_spectrum(rng, bands));

    // Voronoi regions give sharp material edges; each site mixes the
    // spectrum dictionary with softmax weights
    std::vector<double> site_y(n_sites), site_x(n_sites);
    std::vector<std::vector<double>> site_mix(n_sites, std::vector<double>(n_spectra));
    for (int s = 0; s < n_sites; ++s) {
        site_y[s] = unit(rng) * h;
        site_x[s] = unit(rng) * w;
        double total = 0.0;
        for (int k = 0; k < n_spectra; ++k) {
            site_mix[s][k] = std::exp(2.0 * gauss(rng));
            total += site_mix[s][k];
        }
        for (int k = 0; k < n_spectra; ++k) site_mix[s][k] /= total;
    }

    // per-spectrum low-frequency modulation fields
    std::vector<double> fy(n_spectra), fx(n_spectra), fp(n_spectra);
    std::uniform_real_distribution<double> freq(0.5, 3.0);
    for (int k = 0; k < n_spectra; ++k) {
        fy[k] = freq(rng);
        fx[k] = freq(rng);
        fp[k] = unit(rng) * 2.0 * pi;
    }
    // spectrally flat mid-frequency texture
    std::uniform_real_distribution<double> tex_freq(6.0, 14.0);
    const double ty = tex_freq(rng), tx = tex_freq(rng), tp = unit(rng) * 2.0 * pi;
    const double tex_amp = 0.08 * std::min(complexity, 2.0);

    SpectralCube cube(bands, h, w);
    std::vector<double> mix(n_spectra);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            int region = 0;
            double best = std::numeric_limits<double>::infinity();
            for (int s = 0; s < n_sites; ++s) {
                const double dy = y - site_y[s], dx = x - site_x[s];
                const double d = dy * dy + dx * dx;
                if (d < best) {
                    best = d;
                    region = s;
                }
            }
            double total = 0.0;
            for (int k = 0; k < n_spectra; ++k) {
                const double mod =
                    0.2 * std::cos(2.0 * pi * (fy[k] * y / h + fx[k] * x / w) + fp[k]);
                mix[k] = std::max(0.0, site_mix[region][k] + mod);
                total += mix[k];
            }
            if (total <= 0.0) {
                mix.assign(n_spectra, 1.0 / n_spectra);
                total = 1.0;
            }
            const double brightness =
                1.0 + tex_amp * std::cos(2.0 * pi * (ty * y / h + tx * x / w) + tp);
            for (int b = 0; b < bands; ++b) {
                double v = 0.0;
                for (int k = 0; k < n_spectra; ++k) v += mix[k] * spectra[k][b];
                cube.at(b, y, x) = std::clamp(brightness * v / total, 0.0, 1.0);
            }
        }
    return cube;
}

double normalize_max(SpectralCube& cube) {
    const double mx = cube.max_value();
    if (!(mx > 0.0)) return 1.0;
    for (double& v : cube.data) v /= mx;
    return mx;
}

namespace {

void png_chunk(std::string& out, const char type[4], const std::string& payload) {
    const std::uint32_t len = static_cast<std::uint32_t>(payload.size());
    const unsigned char lb[4] = {static_cast<unsigned char>(len >> 24),
                                 static_cast<unsigned char>(len >> 16),
                                 static_cast<unsigned char>(len >> 8),
                                 static_cast<unsigned char>(len)};
    out.append(reinterpret_cast<const char*>(lb), 4);
    std::string body(type, 4);
    body += payload;
    out += body;
    const auto crc = crc32(0L, reinterpret_cast<const Bytef*>(body.data()),
                           static_cast<uInt>(body.size()));
    const unsigned char cb[4] = {static_cast<unsigned char>(crc >> 24),
                                 static_cast<unsigned char>(crc >> 16),
                                 static_cast<unsigned char>(crc >> 8),
                                 static_cast<unsigned char>(crc)};
    out.append(reinterpret_cast<const char*>(cb), 4);
}

}  // namespace

void save_png16(const std::string& path, const Tensor& plane) {
    if (plane.c != 1) throw std::invalid_argument("save_png16: expects a single plane");
    const int h = plane.h, w = plane.w;

    // filter byte 0 per row, 16-bit big-endian samples
    std::string raw;
    raw.reserve(static_cast<std::size_t>(h) * (1 + 2 * w));
    for (int y = 0; y < h; ++y) {
        raw.push_back('\0');
        for (int x = 0; x < w; ++x) {
            const double v = std::clamp(plane.at(0, y, x), 0.0, 1.0);
            const auto s = static_cast<std::uint16_t>(std::lround(v * 65535.0));
            raw.push_back(static_cast<char>(s >> 8));
            raw.push_back(static_cast<char>(s & 0xff));
        }
    }
    uLongf bound = compressBound(static_cast<uLong>(raw.size()));
    std::string compressed(bound, '\0');
    if (compress2(reinterpret_cast<Bytef*>(compressed.data()), &bound,
                  reinterpret_cast<const Bytef*>(raw.data()),
                  static_cast<uLong>(raw.size()), 6) != Z_OK)
        throw std::runtime_error("save_png16: deflate failed");
    compressed.resize(bound);

    std::string out("\x89PNG\r\n\x1a\n", 8);
    std::string ihdr;
    const auto be32 = [&ihdr](std::uint32_t v) {
        ihdr.push_back(static_cast<char>(v >> 24));
        ihdr.push_back(static_cast<char>(v >> 16));
        ihdr.push_back(static_cast<char>(v >> 8));
        ihdr.push_back(static_cast<char>(v));
    };
    be32(static_cast<std::uint32_t>(w));
    be32(static_cast<std::uint32_t>(h));
    ihdr.push_back(16);  // bit depth
    ihdr.push_back(0);   // grayscale
    ihdr.push_back(0);   // deflate
    ihdr.push_back(0);   // adaptive filtering
    ihdr.push_back(0);   // no interlace
    png_chunk(out, "IHDR", ihdr);
    png_chunk(out, "IDAT", compressed);
    png_chunk(out, "IEND", "");
    write_atomic(path, out);
}

std::vector<Manifest::Entry> Manifest::split(const std::string& tag) const {
    std::vector<Entry> out;
    for (const auto& e : entries)
        if (e.split == tag) out.push_back(e);
    return out;
}

Manifest load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("manifest: cannot open " + path);
    Manifest m;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        std::istringstream ls(line);
        Manifest::Entry e;
        if (!(ls >> e.split)) continue;  // blank line
        if (!(ls >> e.path))
            throw std::runtime_error("manifest: missing path at line " +
                                     std::to_string(lineno));
        ls >> e.gt;
        m.entries.push_back(std::move(e));
    }
    return m;
}

void save_manifest(const std::string& path, const Manifest& manifest) {
    std::ostringstream out;
    for (const auto& e : manifest.entries) {
        out << e.split << ' ' << e.path;
        if (!e.gt.empty()) out << ' ' << e.gt;
        out << '\n';
    }
    write_atomic(path, out.str());
}

}  // namespace usdm
