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

#include "usdm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>

namespace usdm {

namespace {

void check_shapes(const SpectralCube& a, const SpectralCube& ref, const char* name) {
    if (!a.same_shape(ref))
        throw std::invalid_argument(std::string(name) + ": cube shapes differ");
    if (a.empty()) throw std::invalid_argument(std::string(name) + ": empty cubes");
}

double band_mse(const double* a, const double* ref, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = a[i] - ref[i];
        acc += d * d;
    }
    return acc / static_cast<double>(n);
}

constexpr int kSsimWindow = 11;
constexpr double kSsimSigma = 1.5;

std::vector<double> gaussian_window() {
    std::vector<double> k(kSsimWindow);
    const int half = kSsimWindow / 2;
    double sum = 0.0;
    for (int i = 0; i < kSsimWindow; ++i) {
        const double d = i - half;
        k[i] = std::exp(-d * d / (2.0 * kSsimSigma * kSsimSigma));
        sum += k[i];
    }
    for (double& v : k) v /= sum;
    return k;
}

// separable valid-mode Gaussian filter; output (h-10) x (w-10)
std::vector<double> filter_valid(const double* img, int h, int w,
                                 const std::vector<double>& k) {
    const int n = static_cast<int>(k.size());
    const int oh = h - n + 1, ow = w - n + 1;
    std::vector<double> rows(static_cast<std::size_t>(h) * ow);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (int i = 0; i < n; ++i)
                acc += k[i] * img[static_cast<std::size_t>(y) * w + x + i];
            rows[static_cast<std::size_t>(y) * ow + x] = acc;
        }
    std::vector<double> out(static_cast<std::size_t>(oh) * ow);
    for (int y = 0; y < oh; ++y)
        for (int x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (int i = 0; i < n; ++i)
                acc += k[i] * rows[static_cast<std::size_t>(y + i) * ow + x];
            out[static_cast<std::size_t>(y) * ow + x] = acc;
        }
    return out;
}

double ssim_band(const double* a, const double* ref, int h, int w, double range) {
    const std::vector<double> k = gaussian_window();
    const std::size_t n = static_cast<std::size_t>(h) * w;
    std::vector<double> aa(n), rr(n), ar(n);
    for (std::size_t i = 0; i < n; ++i) {
        aa[i] = a[i] * a[i];
        rr[i] = ref[i] * ref[i];
        ar[i] = a[i] * ref[i];
    }
    const std::vector<double> mu_a = filter_valid(a, h, w, k);
    const std::vector<double> mu_r = filter_valid(ref, h, w, k);
    const std::vector<double> m_aa = filter_valid(aa.data(), h, w, k);
    const std::vector<double> m_rr = filter_valid(rr.data(), h, w, k);
    const std::vector<double> m_ar = filter_valid(ar.data(), h, w, k);

    const double c1 = (0.01 * range) * (0.01 * range);
    const double c2 = (0.03 * range) * (0.03 * range);
    double acc = 0.0;
    for (std::size_t i = 0; i < mu_a.size(); ++i) {
        const double ma = mu_a[i], mr = mu_r[i];
        const double va = m_aa[i] - ma * ma;
        const double vr = m_rr[i] - mr * mr;
        const double cov = m_ar[i] - ma * mr;
        acc += ((2.0 * ma * mr + c1) * (2.0 * cov + c2)) /
               ((ma * ma + mr * mr + c1) * (va + vr + c2));
    }
    return acc / static_cast<double>(mu_a.size());
}

}  // namespace

double psnr(const SpectralCube& a, const SpectralCube& ref, double peak) {
    check_shapes(a, ref, "psnr");
    const double mse = band_mse(a.data.data(), ref.data.data(), a.size());
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(peak * peak / mse);
}

double ssim(const SpectralCube& a, const SpectralCube& ref, double dynamic_range) {
    check_shapes(a, ref, "ssim");
    if (a.h < kSsimWindow || a.w < kSsimWindow)
        throw std::invalid_argument("ssim: image smaller than the 11x11 window");
    double acc = 0.0;
    for (int b = 0; b < a.c; ++b)
        acc += ssim_band(a.band(b), ref.band(b), a.h, a.w, dynamic_range);
    return acc / static_cast<double>(a.c);
}

double sam_degrees(const SpectralCube& a, const SpectralCube& ref) {
    check_shapes(a, ref, "sam");
    const int bcount = a.c;
    double acc = 0.0;
    long long valid = 0;
    for (int y = 0; y < a.h; ++y)
        for (int x = 0; x < a.w; ++x) {
            double dot = 0.0, na = 0.0, nr = 0.0;
            for (int b = 0; b < bcount; ++b) {
                const double va = a.at(b, y, x), vr = ref.at(b, y, x);
                dot += va * vr;
                na += va * va;
                nr += vr * vr;
            }
            if (na == 0.0 || nr == 0.0) continue;  // zero-spectrum pixels excluded
            double cosang = dot / (std::sqrt(na) * std::sqrt(nr));
            cosang = std::clamp(cosang, -1.0, 1.0);
            acc += std::acos(cosang);
            ++valid;
        }
    if (valid == 0) return std::numeric_limits<double>::quiet_NaN();
    constexpr double kRadToDeg = 180.0 / 3.14159265358979323846;
    return acc / static_cast<double>(valid) * kRadToDeg;
}

double ergas(const SpectralCube& a, const SpectralCube& ref, double ratio) {
    check_shapes(a, ref, "ergas");
    const std::size_t plane = static_cast<std::size_t>(a.h) * a.w;
    double acc = 0.0;
    int used = 0;
    for (int b = 0; b < a.c; ++b) {
        double mean = 0.0;
        const double* rp = ref.band(b);
        for (std::size_t i = 0; i < plane; ++i) mean += rp[i];
        mean /= static_cast<double>(plane);
        if (mean == 0.0) {
            std::cerr << "ergas: band " << b << " has zero reference mean, excluded\n";
            continue;
        }
        const double rmse = std::sqrt(band_mse(a.band(b), rp, plane));
        acc += (rmse / mean) * (rmse / mean);
        ++used;
    }
    if (used == 0) throw std::invalid_argument("ergas: no band with nonzero mean");
    return 100.0 * ratio * std::sqrt(acc / static_cast<double>(used));
}

MetricReport evaluate(const SpectralCube& a, const SpectralCube& ref,
                      double ergas_ratio) {
    check_shapes(a, ref, "evaluate");
    MetricReport r;
    r.psnr = psnr(a, ref);
    const std::size_t plane = static_cast<std::size_t>(a.h) * a.w;
    double acc = 0.0;
    for (int b = 0; b < a.c; ++b) {
        const double mse = band_mse(a.band(b), ref.band(b), plane);
        const double v = mse == 0.0 ? std::numeric_limits<double>::infinity()
                                    : 10.0 * std::log10(1.0 / mse);
        r.band_psnr.push_back(v);
        acc += v;
    }
    r.psnr_band_mean = acc / static_cast<double>(a.c);
    if (a.h >= kSsimWindow && a.w >= kSsimWindow) {
        double s = 0.0;
        for (int b = 0; b < a.c; ++b) {
            const double v = ssim_band(a.band(b), ref.band(b), a.h, a.w, 1.0);
            r.band_ssim.push_back(v);
            s += v;
        }
        r.ssim = s / static_cast<double>(a.c);
    }
    const double sam = sam_degrees(a, ref);
    r.sam_defined = !std::isnan(sam);
    r.sam = r.sam_defined ? sam : 0.0;
    r.ergas = ergas(a, ref, ergas_ratio);
    return r;
}

}  // namespace usdm
