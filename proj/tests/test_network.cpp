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

#include <cmath>
#include <cstdio>

#include "usdm/interp.hpp"
#include "usdm/network.hpp"
#include "usdm/train.hpp"

using namespace usdm;

namespace {

Tensor random_tensor(Rng& rng, int c, int h, int w, double lo = 0.0, double hi = 1.0) {
    std::uniform_real_distribution<double> d(lo, hi);
    Tensor t(c, h, w);
    for (double& v : t.data) v = d(rng);
    return t;
}

// ---- plain-loop reference implementations, independent of the graph ----

Tensor conv3_ref(const Tensor& in, const Tensor& wgt, const Tensor& bias) {
    Tensor out(wgt.c, in.h, in.w);
    for (int co = 0; co < wgt.c; ++co)
        for (int y = 0; y < in.h; ++y)
            for (int x = 0; x < in.w; ++x) {
                double acc = bias.data[co];
                for (int ci = 0; ci < in.c; ++ci)
                    for (int dy = -1; dy <= 1; ++dy)
                        for (int dx = -1; dx <= 1; ++dx) {
                            const int yy = y + dy, xx = x + dx;
                            if (yy < 0 || yy >= in.h || xx < 0 || xx >= in.w) continue;
                            acc += wgt.at(co, ci, (dy + 1) * 3 + dx + 1) *
                                   in.at(ci, yy, xx);
                        }
                out.at(co, y, x) = acc;
            }
    return out;
}

std::vector<double> se_ref(const std::vector<double>& x, const SqueezeExcite& se) {
    const int n = se.w1.w, hid = se.w1.h;
    std::vector<double> h(hid), out(n);
    for (int i = 0; i < hid; ++i) {
        double acc = se.b1.data[i];
        for (int k = 0; k < n; ++k) acc += se.w1.at(0, i, k) * x[k];
        h[i] = acc > 0.0 ? acc : 0.0;
    }
    for (int i = 0; i < n; ++i) {
        double acc = se.b2.data[i];
        for (int k = 0; k < hid; ++k) acc += se.w2.at(0, i, k) * h[k];
        out[i] = 1.0 / (1.0 + std::exp(-acc));
    }
    return out;
}

std::vector<double> phase_means_ref(const Tensor& fm, int c, int r1, int r2) {
    std::vector<double> m(r1 * r2, 0.0);
    std::vector<int> n(r1 * r2, 0);
    for (int y = 0; y < fm.h; ++y)
        for (int x = 0; x < fm.w; ++x) {
            const int p = (y % r1) * r2 + (x % r2);
            m[p] += fm.at(c, y, x);
            n[p] += 1;
        }
    for (int p = 0; p < r1 * r2; ++p) m[p] /= n[p];
    return m;
}

Tensor lsa_ref(const Tensor& fm, const SqueezeExcite& sas, const SqueezeExcite& sac,
               int r1, int r2) {
    // per-channel phase attention with shared weights
    std::vector<std::vector<double>> am(fm.c);
    for (int c = 0; c < fm.c; ++c)
        am[c] = se_ref(phase_means_ref(fm, c, r1, r2), sas);
    // channel attention from global means
    std::vector<double> cm(fm.c, 0.0);
    for (int c = 0; c < fm.c; ++c) {
        for (int y = 0; y < fm.h; ++y)
            for (int x = 0; x < fm.w; ++x) cm[c] += fm.at(c, y, x);
        cm[c] /= static_cast<double>(fm.h) * fm.w;
    }
    const std::vector<double> av = se_ref(cm, sac);
    Tensor out(fm.c, fm.h, fm.w);
    for (int c = 0; c < fm.c; ++c)
        for (int y = 0; y < fm.h; ++y)
            for (int x = 0; x < fm.w; ++x)
                out.at(c, y, x) =
                    fm.at(c, y, x) * am[c][(y % r1) * r2 + (x % r2)] * av[c];
    return out;
}

Tensor wb_ref(const MosaicImage& y, const SFAPattern& p) {
    Tensor out(p.bands, y.h, y.w);
    for (int b = 0; b < p.bands; ++b)
        for (int i = 0; i < y.h; ++i)
            for (int j = 0; j < y.w; ++j) {
                double num = 0.0, den = 0.0;
                for (int u = -(p.r1 - 1); u <= p.r1 - 1; ++u)
                    for (int v = -(p.r2 - 1); v <= p.r2 - 1; ++v) {
                        const int ii = i + u, jj = j + v;
                        if (ii < 0 || ii >= y.h || jj < 0 || jj >= y.w) continue;
                        if (p.band_at(ii, jj) != b) continue;
                        const double wq = (1.0 - std::abs(u) / double(p.r1)) *
                                          (1.0 - std::abs(v) / double(p.r2));
                        num += wq * y.at(0, ii, jj);
                        den += wq;
                    }
                out.at(b, i, j) = num / den;
            }
    return out;
}

}  // namespace

TEST_CASE("f_sas symmetry, range and weight count") {
    Rng rng(1);
    const int r1 = 2, r2 = 2, d = 2;
    SqueezeExcite se = make_squeeze_excite(r1 * r2, d, rng);

    SUBCASE("constant plane gives a uniform attention matrix") {
        Tensor plane(1, 6, 6, 0.3);
        Tensor am = f_sas(plane, se, r1, r2);
        for (double v : am.data) CHECK(v == doctest::Approx(am.data[0]).epsilon(1e-14));
    }

    SUBCASE("outputs lie strictly inside (0,1)") {
        Tensor plane = random_tensor(rng, 1, 8, 8, -5.0, 5.0);
        Tensor am = f_sas(plane, se, r1, r2);
        for (double v : am.data) {
            CHECK(v > 0.0);
            CHECK(v < 1.0);
        }
    }

    SUBCASE("dense weight shapes enumerate to 2*(r1*r2)^2/d") {
        CHECK(se.w1.c == 1);
        CHECK(se.w1.h == se_hidden(4, d));
        CHECK(se.w1.w == 4);
        CHECK(se.w2.h == 4);
        CHECK(se.w2.w == se_hidden(4, d));
        const long long got = static_cast<long long>(se.w1.size() + se.w2.size());
        CHECK(got == 16);  // 2 * 4^2 / 2, biases counted separately
        const long long biases = static_cast<long long>(se.b1.size() + se.b2.size());
        CHECK(biases == 4 + se_hidden(4, d));
    }
}

TEST_CASE("f_sac symmetry, range and weight count") {
    Rng rng(2);
    const int channels = 8, d = 2;
    SqueezeExcite se = make_squeeze_excite(channels, d, rng);

    SUBCASE("constant feature maps of different levels give the same vector") {
        Tensor a(channels, 4, 4, 0.1);
        Tensor b(channels, 4, 4, 0.1);
        Tensor va = f_sac(a, se);
        Tensor vb = f_sac(b, se);
        for (std::size_t i = 0; i < va.size(); ++i)
            CHECK(va.data[i] == doctest::Approx(vb.data[i]).epsilon(1e-14));
    }

    SUBCASE("entries in (0,1)") {
        Tensor fm = random_tensor(rng, channels, 4, 4, -3.0, 3.0);
        Tensor av = f_sac(fm, se);
        CHECK(av.size() == static_cast<std::size_t>(channels));
        for (double v : av.data) {
            CHECK(v > 0.0);
            CHECK(v < 1.0);
        }
    }

    SUBCASE("weight count is 2*C^2/d") {
        CHECK(static_cast<long long>(se.w1.size() + se.w2.size()) == 64);
    }
}

TEST_CASE("lsa_apply basics and scalar-loop oracle") {
    Rng rng(3);
    const int r1 = 2, r2 = 2, d = 2, channels = 2;
    SqueezeExcite sas = make_squeeze_excite(r1 * r2, d, rng);
    SqueezeExcite sac = make_squeeze_excite(channels, d, rng);

    SUBCASE("zero map stays zero") {
        Tensor fm(channels, 4, 4, 0.0);
        Tensor out = lsa_apply(fm, sas, sac, r1, r2);
        for (double v : out.data) CHECK(v == 0.0);
    }

    SUBCASE("attention contracts magnitudes") {
        Tensor fm = random_tensor(rng, channels, 4, 4, -2.0, 2.0);
        Tensor out = lsa_apply(fm, sas, sac, r1, r2);
        for (std::size_t i = 0; i < fm.size(); ++i)
            CHECK(std::abs(out.data[i]) <= std::abs(fm.data[i]));
    }

    SUBCASE("matches the brute-force oracle") {
        Tensor fm = random_tensor(rng, channels, 4, 4, -1.0, 1.0);
        Tensor got = lsa_apply(fm, sas, sac, r1, r2);
        Tensor want = lsa_ref(fm, sas, sac, r1, r2);
        for (std::size_t i = 0; i < got.size(); ++i)
            CHECK(got.data[i] == doctest::Approx(want.data[i]).epsilon(1e-6));
    }
}

TEST_CASE("hsa_apply gates every channel-phase pair") {
    Rng rng(4);
    const int r1 = 2, r2 = 2, channels = 3;
    SqueezeExcite joint = make_squeeze_excite(channels * r1 * r2, 2, rng);
    Tensor fm = random_tensor(rng, channels, 4, 4, -1.0, 1.0);
    Tensor out = hsa_apply(fm, joint, r1, r2);
    REQUIRE(out.same_shape(fm));
    for (std::size_t i = 0; i < fm.size(); ++i)
        CHECK(std::abs(out.data[i]) <= std::abs(fm.data[i]));
    Tensor zero(channels, 4, 4, 0.0);
    Tensor zout = hsa_apply(zero, joint, r1, r2);
    for (double v : zout.data) CHECK(v == 0.0);
}

TEST_CASE("attention parameter accounting") {
    SUBCASE("exact formula cases") {
        CHECK(lsa_param_count(8, 2, 2, 2) == 80);    // 2(16+64)/2
        CHECK(lsa_param_count(1, 1, 1, 1) == 4);     // 2(1+1)/1
        CHECK(hsa_param_count(8, 2, 2, 2) == 1024);  // 2*16*64/2
        CHECK(hsa_param_count(1, 1, 1, 1) == 2);
        CHECK(hsa_param_count(64, 5, 5, 4) == 1280000);
        CHECK(lsa_count_formula(8, 2, 2, 2) == 80.0);
        CHECK(hsa_count_formula(64, 5, 5, 4) == 1280000.0);
    }

    SUBCASE("ceil-split realization for the 25-band default") {
        // 2*(25*ceil(25/4) + 64*ceil(64/4)) = 2*(175 + 1024)
        CHECK(lsa_param_count(64, 5, 5, 4) == 2398);
        const double ratio = static_cast<double>(lsa_param_count(64, 5, 5, 4)) /
                             static_cast<double>(hsa_param_count(64, 5, 5, 4));
        CHECK(ratio <= 0.002);  // the heavyweight module sheds >= 99.8%
    }

    SUBCASE("bias accounting") {
        CHECK(lsa_param_count(8, 2, 2, 2, true) ==
              80 + (4 + se_hidden(4, 2) + 8 + se_hidden(8, 2)));
    }

    SUBCASE("realized model weights match the closed count") {
        ModelConfig cfg;
        cfg.bands = 4;
        cfg.r1 = cfg.r2 = 2;
        cfg.channels = 8;
        cfg.blocks = 1;
        cfg.reduction = 2;
        DemosaicModel m =
            DemosaicModel::init(cfg, SFAPattern::row_major(2, 2), 5);
        long long attention_weights = 0, attention_biases = 0;
        for (const auto& e : m.params().entries) {
            if (e.name.find(".sas.") == std::string::npos &&
                e.name.find(".sac.") == std::string::npos)
                continue;
            if (e.name.ends_with(".weight"))
                attention_weights += static_cast<long long>(e.tensor.size());
            else
                attention_biases += static_cast<long long>(e.tensor.size());
        }
        CHECK(attention_weights == lsa_param_count(8, 2, 2, 2));
        CHECK(attention_weights + attention_biases == lsa_param_count(8, 2, 2, 2, true));
    }
}

TEST_CASE("count_params accounting identities") {
    Params p;
    CHECK(p.total_count() == 0);
    p.add("dense.weight", Tensor(1, 2, 3));  // 3 -> 2 dense layer
    p.add("dense.bias", Tensor(1, 1, 2));
    CHECK(p.total_count() == 8);
    long long sum = 0;
    for (const auto& [name, n] : p.per_layer()) sum += n;
    CHECK(sum == p.total_count());
}

TEST_CASE("fresh model forward equals WB exactly") {
    ModelConfig cfg;
    cfg.bands = 9;
    cfg.r1 = cfg.r2 = 3;
    cfg.channels = 6;
    cfg.blocks = 2;
    cfg.reduction = 2;
    SFAPattern p = SFAPattern::row_major(3, 3);
    DemosaicModel m = DemosaicModel::init(cfg, p, 77);
    Rng rng(8);
    MosaicImage y = random_tensor(rng, 1, 9, 12);
    SpectralCube out = m.forward(y);
    SpectralCube wb = wb_interpolate(y, p);
    REQUIRE(out.same_shape(wb));
    for (std::size_t i = 0; i < out.size(); ++i)
        CHECK(out.data[i] == doctest::Approx(wb.data[i]).epsilon(1e-12));
}

TEST_CASE("forward shape contract and input validation") {
    ModelConfig cfg;
    cfg.bands = 4;
    cfg.r1 = cfg.r2 = 2;
    cfg.channels = 4;
    cfg.blocks = 1;
    cfg.reduction = 2;
    SFAPattern p = SFAPattern::row_major(2, 2);
    DemosaicModel m = DemosaicModel::init(cfg, p, 1);
    Rng rng(9);
    SpectralCube out = m.forward(random_tensor(rng, 1, 6, 8));
    CHECK(out.c == 4);
    CHECK(out.h == 6);
    CHECK(out.w == 8);
    CHECK_THROWS(m.forward(random_tensor(rng, 1, 5, 8)));  // not a period multiple
}

TEST_CASE("forward matches a straight-line scalar reimplementation") {
    ModelConfig cfg;
    cfg.bands = 4;
    cfg.r1 = cfg.r2 = 2;
    cfg.channels = 2;
    cfg.blocks = 1;
    cfg.reduction = 2;
    SFAPattern p = SFAPattern::row_major(2, 2);
    DemosaicModel m = DemosaicModel::init(cfg, p, 123);
    // give the zero tail arbitrary values so the residual path matters
    Rng wrng(321);
    m.params().at("tail.weight") = random_tensor(wrng, 4, 2, 9, -0.5, 0.5);
    m.params().at("tail.bias") = random_tensor(wrng, 1, 1, 4, -0.1, 0.1);

    Rng rng(10);
    MosaicImage y = random_tensor(rng, 1, 4, 4);
    SpectralCube got = m.forward(y);

    // reference: every stage with plain loops
    Tensor wb = wb_ref(y, p);
    Tensor sparse(4, 4, 4, 0.0);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) sparse.at(p.band_at(i, j), i, j) = y.at(0, i, j);
    Tensor input(8, 4, 4);
    std::copy(sparse.data.begin(), sparse.data.end(), input.data.begin());
    std::copy(wb.data.begin(), wb.data.end(), input.data.begin() + sparse.size());

    const Params& ps = m.params();
    Tensor x = conv3_ref(input, ps.at("stem.weight"), ps.at("stem.bias"));
    Tensor t = conv3_ref(x, ps.at("block0.conv1.weight"), ps.at("block0.conv1.bias"));
    for (double& v : t.data) v = v > 0.0 ? v : 0.0;
    t = conv3_ref(t, ps.at("block0.conv2.weight"), ps.at("block0.conv2.bias"));
    for (std::size_t i = 0; i < x.size(); ++i) x.data[i] += t.data[i];
    SqueezeExcite sas{ps.at("block0.sas.fc1.weight"), ps.at("block0.sas.fc1.bias"),
                      ps.at("block0.sas.fc2.weight"), ps.at("block0.sas.fc2.bias")};
    SqueezeExcite sac{ps.at("block0.sac.fc1.weight"), ps.at("block0.sac.fc1.bias"),
                      ps.at("block0.sac.fc2.weight"), ps.at("block0.sac.fc2.bias")};
    x = lsa_ref(x, sas, sac, 2, 2);
    Tensor res = conv3_ref(x, ps.at("tail.weight"), ps.at("tail.bias"));
    Tensor want = wb;
    for (std::size_t i = 0; i < want.size(); ++i)
        want.data[i] += cfg.residual_scale * res.data[i];

    for (std::size_t i = 0; i < got.size(); ++i)
        CHECK(got.data[i] == doctest::Approx(want.data[i]).epsilon(1e-5));
}

TEST_CASE("forward gradients match central finite differences") {
    ModelConfig cfg;
    cfg.bands = 4;
    cfg.r1 = cfg.r2 = 2;
    cfg.channels = 4;
    cfg.blocks = 1;
    cfg.reduction = 2;
    SFAPattern p = SFAPattern::row_major(2, 2);
    DemosaicModel m = DemosaicModel::init(cfg, p, 55);
    Rng wrng(66);
    m.params().at("tail.weight") = random_tensor(wrng, 4, 4, 9, -0.3, 0.3);

    Rng rng(11);
    MosaicImage y = random_tensor(rng, 1, 6, 6);
    SpectralCube target = random_tensor(rng, 4, 6, 6);
    LossConfig loss;

    // analytic gradients of the supervised objective through the full forward
    Graph g;
    DemosaicModel::Bound bound = m.bind(g);
    Var yv = g.input(y);
    Var out = m.build_forward(g, bound, yv);
    Var lv = g.charbonnier(g.sub(out, g.input(target)), loss.epsilon);
    g.backward(lv);

    const double step = 1e-5;
    Rng pick(77);
    int checked = 0;
    for (std::size_t e = 0; e < m.params().entries.size(); ++e) {
        const Tensor& grad = g.grad(bound.vars[e]);
        if (grad.empty()) continue;
        std::uniform_int_distribution<std::size_t> di(0, grad.size() - 1);
        for (int rep = 0; rep < 2; ++rep) {
            const std::size_t j = di(pick);
            Tensor& pt = m.params().entries[e].tensor;
            const double keep = pt.data[j];
            pt.data[j] = keep + step;
            const double up =
                Trainer::loss_value(m, y, std::nullopt, loss, &target).total;
            pt.data[j] = keep - step;
            const double dn =
                Trainer::loss_value(m, y, std::nullopt, loss, &target).total;
            pt.data[j] = keep;
            const double fd = (up - dn) / (2.0 * step);
            const double ga = grad.data[j];
            const double rel = std::abs(ga - fd) / std::max(std::abs(fd), 1e-8);
            CHECK(rel < 1e-3);
            ++checked;
        }
    }
    CHECK(checked >= 20);
}

TEST_CASE("checkpoint round trip is bit-exact") {
    ModelConfig cfg;
    cfg.bands = 4;
    cfg.r1 = cfg.r2 = 2;
    cfg.channels = 4;
    cfg.blocks = 1;
    cfg.reduction = 2;
    cfg.attention = AttentionKind::hsa;
    DemosaicModel m = DemosaicModel::init(cfg, SFAPattern::row_major(2, 2), 9);
    CheckpointMeta meta;
    meta.epoch = 42;
    meta.seed = 1234567;
    meta.sei_history = {1e-8, 2.5e-7};

    const std::string path = "ckpt_roundtrip_test.bin";
    m.save_checkpoint(path, meta);
    CheckpointMeta got_meta;
    DemosaicModel got = DemosaicModel::load_checkpoint(path, &got_meta);
    std::remove(path.c_str());

    CHECK(got_meta.epoch == meta.epoch);
    CHECK(got_meta.seed == meta.seed);
    CHECK(got_meta.sei_history == meta.sei_history);
    CHECK(got.config().attention == AttentionKind::hsa);
    REQUIRE(got.params().entries.size() == m.params().entries.size());
    for (std::size_t i = 0; i < m.params().entries.size(); ++i) {
        CHECK(got.params().entries[i].name == m.params().entries[i].name);
        CHECK(got.params().entries[i].tensor.data == m.params().entries[i].tensor.data);
    }
}

TEST_CASE("attention variants and the no-interp ablation run") {
    SFAPattern p = SFAPattern::row_major(2, 2);
    Rng rng(12);
    MosaicImage y = random_tensor(rng, 1, 8, 8);
    for (AttentionKind kind : {AttentionKind::none, AttentionKind::lsa, AttentionKind::hsa}) {
        ModelConfig cfg;
        cfg.bands = 4;
        cfg.r1 = cfg.r2 = 2;
        cfg.channels = 4;
        cfg.blocks = 1;
        cfg.reduction = 2;
        cfg.attention = kind;
        DemosaicModel m = DemosaicModel::init(cfg, p, 3);
        CHECK(m.forward(y).c == 4);
    }
    ModelConfig cfg;
    cfg.bands = 4;
    cfg.r1 = cfg.r2 = 2;
    cfg.channels = 4;
    cfg.blocks = 1;
    cfg.reduction = 2;
    cfg.interp_branch = false;
    DemosaicModel m = DemosaicModel::init(cfg, p, 3);
    SpectralCube out = m.forward(y);
    // zero tail and no interpolation branch: the output starts at zero
    for (double v : out.data) CHECK(v == 0.0);
}
