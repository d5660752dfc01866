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

#include "usdm/network.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

namespace usdm {

void ModelConfig::validate() const {
    if (bands < 1 || r1 < 1 || r2 < 1)
        throw std::invalid_argument("model: bands and pattern period must be positive");
    if (channels < 1 || blocks < 0 || reduction < 1)
        throw std::invalid_argument("model: channels >= 1, blocks >= 0, reduction >= 1");
    if (channels < reduction)
        throw std::invalid_argument("model: channels must be >= reduction ratio");
    if (!(residual_scale == residual_scale))
        throw std::invalid_argument("model: residual_scale is NaN");
}

int Params::index_of(const std::string& name) const {
    for (std::size_t i = 0; i < entries.size(); ++i)
        if (entries[i].name == name) return static_cast<int>(i);
    return -1;
}

Tensor& Params::at(const std::string& name) {
    const int i = index_of(name);
    if (i < 0) throw std::out_of_range("params: no tensor named " + name);
    return entries[i].tensor;
}

const Tensor& Params::at(const std::string& name) const {
    const int i = index_of(name);
    if (i < 0) throw std::out_of_range("params: no tensor named " + name);
    return entries[i].tensor;
}

Tensor& Params::add(const std::string& name, Tensor t) {
    if (index_of(name) >= 0)
        throw std::invalid_argument("params: duplicate tensor name " + name);
    entries.push_back({name, std::move(t)});
    return entries.back().tensor;
}

long long Params::total_count() const {
    long long n = 0;
    for (const auto& e : entries) n += static_cast<long long>(e.tensor.size());
    return n;
}

std::vector<std::pair<std::string, long long>> Params::per_layer() const {
    std::vector<std::pair<std::string, long long>> out;
    out.reserve(entries.size());
    for (const auto& e : entries)
        out.emplace_back(e.name, static_cast<long long>(e.tensor.size()));
    return out;
}

int se_hidden(int n, int d) { return (n + d - 1) / d; }

long long lsa_param_count(int channels, int r1, int r2, int d, bool include_bias) {
    const long long p = static_cast<long long>(r1) * r2;
    const long long ph = se_hidden(static_cast<int>(p), d);
    const long long ch = se_hidden(channels, d);
    long long n = 2 * p * ph + 2 * static_cast<long long>(channels) * ch;
    if (include_bias) n += p + ph + channels + ch;
    return n;
}

long long hsa_param_count(int channels, int r1, int r2, int d, bool include_bias) {
    const long long np = static_cast<long long>(r1) * r2 * channels;
    const long long nh = se_hidden(static_cast<int>(np), d);
    long long n = 2 * np * nh;
    if (include_bias) n += np + nh;
    return n;
}

double lsa_count_formula(int channels, int r1, int r2, int d) {
    const double p2 = static_cast<double>(r1) * r1 * r2 * r2;
    const double c2 = static_cast<double>(channels) * channels;
    return 2.0 * (p2 + c2) / d;
}

double hsa_count_formula(int channels, int r1, int r2, int d) {
    const double p2 = static_cast<double>(r1) * r1 * r2 * r2;
    const double c2 = static_cast<double>(channels) * channels;
    return 2.0 * p2 * c2 / d;
}

namespace {

Tensor randn(int c, int h, int w, double stddev, Rng& rng) {
    std::normal_distribution<double> dist(0.0, stddev);
    Tensor t(c, h, w);
    for (double& v : t.data) v = dist(rng);
    return t;
}

Tensor conv_init(int cout, int cin, Rng& rng) {
    return randn(cout, cin, 9, std::sqrt(2.0 / (9.0 * cin)), rng);
}

}  // namespace

SqueezeExcite make_squeeze_excite(int n, int d, Rng& rng) {
    const int hidden = se_hidden(n, d);
    SqueezeExcite se;
    se.w1 = randn(1, hidden, n, std::sqrt(2.0 / n), rng);
    se.b1 = Tensor(1, 1, hidden, 0.0);
    se.w2 = randn(1, n, hidden, std::sqrt(2.0 / hidden), rng);
    se.b2 = Tensor(1, 1, n, 0.0);
    return se;
}

namespace {

// squeeze-excitation tail shared by all attention variants
Var se_gate(Graph& g, Var pooled, Var w1, Var b1, Var w2, Var b2) {
    Var h = g.relu(g.dense_rows(pooled, w1, b1));
    return g.sigmoid(g.dense_rows(h, w2, b2));
}

}  // namespace

Tensor f_sas(const Tensor& channel_map, const SqueezeExcite& se, int r1, int r2) {
    Graph g;
    Var x = g.input(channel_map);
    Var pm = g.phase_mean(x, r1, r2);
    Var gate = se_gate(g, pm, g.input(se.w1), g.input(se.b1), g.input(se.w2), g.input(se.b2));
    Var am = g.phase_expand(gate, r1, r2, channel_map.h, channel_map.w);
    return g.value(am);
}

Tensor f_sac(const FeatureMap& fm, const SqueezeExcite& se) {
    Graph g;
    Var x = g.input(fm);
    Var cm = g.channel_mean(x);
    Var gate = se_gate(g, cm, g.input(se.w1), g.input(se.b1), g.input(se.w2), g.input(se.b2));
    return g.value(gate);
}

FeatureMap lsa_apply(const FeatureMap& fm, const SqueezeExcite& sas,
                     const SqueezeExcite& sac, int r1, int r2) {
    Graph g;
    Var x = g.input(fm);
    Var am = g.phase_expand(
        se_gate(g, g.phase_mean(x, r1, r2), g.input(sas.w1), g.input(sas.b1),
                g.input(sas.w2), g.input(sas.b2)),
        r1, r2, fm.h, fm.w);
    Var av = se_gate(g, g.channel_mean(x), g.input(sac.w1), g.input(sac.b1),
                     g.input(sac.w2), g.input(sac.b2));
    return g.value(g.channel_scale(g.mul(x, am), av));
}

FeatureMap hsa_apply(const FeatureMap& fm, const SqueezeExcite& joint, int r1, int r2) {
    Graph g;
    Var x = g.input(fm);
    Var flat = g.flatten_rows(g.phase_mean(x, r1, r2));  // (1,1,C*P)
    Var gate = se_gate(g, flat, g.input(joint.w1), g.input(joint.b1),
                       g.input(joint.w2), g.input(joint.b2));
    // one gate per (channel, phase)
    Var aw = g.reshape_rows(gate, fm.c);
    return g.value(g.mul(x, g.phase_expand(aw, r1, r2, fm.h, fm.w)));
}

DemosaicModel DemosaicModel::init(const ModelConfig& cfg, const SFAPattern& pattern,
                                  std::uint64_t seed) {
    cfg.validate();
    pattern.validate();
    if (cfg.bands != pattern.bands)
        throw std::invalid_argument("model: config bands != pattern bands");
    if (cfg.r1 != pattern.r1 || cfg.r2 != pattern.r2)
        throw std::invalid_argument("model: config period != pattern period");

    DemosaicModel m(cfg, pattern);
    Rng rng(seed);
    const int c = cfg.channels;
    const int phases = cfg.r1 * cfg.r2;

    m.params_.add("stem.weight", conv_init(c, cfg.input_channels(), rng));
    m.params_.add("stem.bias", Tensor(1, 1, c, 0.0));
    for (int k = 0; k < cfg.blocks; ++k) {
        const std::string b = "block" + std::to_string(k) + ".";
        m.params_.add(b + "conv1.weight", conv_init(c, c, rng));
        m.params_.add(b + "conv1.bias", Tensor(1, 1, c, 0.0));
        m.params_.add(b + "conv2.weight", conv_init(c, c, rng));
        m.params_.add(b + "conv2.bias", Tensor(1, 1, c, 0.0));
        if (cfg.attention == AttentionKind::lsa) {
            SqueezeExcite sas = make_squeeze_excite(phases, cfg.reduction, rng);
            SqueezeExcite sac = make_squeeze_excite(c, cfg.reduction, rng);
            m.params_.add(b + "sas.fc1.weight", std::move(sas.w1));
            m.params_.add(b + "sas.fc1.bias", std::move(sas.b1));
            m.params_.add(b + "sas.fc2.weight", std::move(sas.w2));
            m.params_.add(b + "sas.fc2.bias", std::move(sas.b2));
            m.params_.add(b + "sac.fc1.weight", std::move(sac.w1));
            m.params_.add(b + "sac.fc1.bias", std::move(sac.b1));
            m.params_.add(b + "sac.fc2.weight", std::move(sac.w2));
            m.params_.add(b + "sac.fc2.bias", std::move(sac.b2));
        } else if (cfg.attention == AttentionKind::hsa) {
            SqueezeExcite joint = make_squeeze_excite(phases * c, cfg.reduction, rng);
            m.params_.add(b + "hsa.fc1.weight", std::move(joint.w1));
            m.params_.add(b + "hsa.fc1.bias", std::move(joint.b1));
            m.params_.add(b + "hsa.fc2.weight", std::move(joint.w2));
            m.params_.add(b + "hsa.fc2.bias", std::move(joint.b2));
        }
    }
    // zero tail: a fresh model is exactly the WB interpolation
    m.params_.add("tail.weight", Tensor(cfg.bands, c, 9, 0.0));
    m.params_.add("tail.bias", Tensor(1, 1, cfg.bands, 0.0));
    return m;
}

DemosaicModel::Bound DemosaicModel::bind(Graph& g) const {
    Bound b;
    b.vars.reserve(params_.entries.size());
    for (const auto& e : params_.entries) b.vars.push_back(g.input(e.tensor, true));
    return b;
}

Var DemosaicModel::bound_var(const Bound& bound, const std::string& name) const {
    const int i = params_.index_of(name);
    if (i < 0) throw std::out_of_range("model: no parameter named " + name);
    return bound.vars[static_cast<std::size_t>(i)];
}

Var DemosaicModel::build_forward(Graph& g, const Bound& bound, Var mosaic) const {
    const Tensor& y = g.value(mosaic);
    if (y.c != 1) throw std::invalid_argument("forward: mosaic must be a single plane");
    if (y.h % cfg_.r1 != 0 || y.w % cfg_.r2 != 0)
        throw std::invalid_argument("forward: mosaic dimensions must be period multiples");

    Var wbv = g.wb(mosaic, pattern_);
    Var x = g.sparse_expand(mosaic, pattern_);
    if (cfg_.interp_branch) x = g.concat_channels(x, wbv);
    x = g.conv3x3(x, bound_var(bound, "stem.weight"), bound_var(bound, "stem.bias"));
    for (int k = 0; k < cfg_.blocks; ++k) {
        const std::string b = "block" + std::to_string(k) + ".";
        Var t = g.conv3x3(x, bound_var(bound, b + "conv1.weight"),
                          bound_var(bound, b + "conv1.bias"));
        t = g.relu(t);
        t = g.conv3x3(t, bound_var(bound, b + "conv2.weight"),
                      bound_var(bound, b + "conv2.bias"));
        x = g.add(x, t);
        if (cfg_.attention == AttentionKind::lsa) {
            Var am = g.phase_expand(
                se_gate(g, g.phase_mean(x, cfg_.r1, cfg_.r2),
                        bound_var(bound, b + "sas.fc1.weight"),
                        bound_var(bound, b + "sas.fc1.bias"),
                        bound_var(bound, b + "sas.fc2.weight"),
                        bound_var(bound, b + "sas.fc2.bias")),
                cfg_.r1, cfg_.r2, y.h, y.w);
            Var av = se_gate(g, g.channel_mean(x),
                             bound_var(bound, b + "sac.fc1.weight"),
                             bound_var(bound, b + "sac.fc1.bias"),
                             bound_var(bound, b + "sac.fc2.weight"),
                             bound_var(bound, b + "sac.fc2.bias"));
            x = g.channel_scale(g.mul(x, am), av);
        } else if (cfg_.attention == AttentionKind::hsa) {
            Var gate = se_gate(g, g.flatten_rows(g.phase_mean(x, cfg_.r1, cfg_.r2)),
                               bound_var(bound, b + "hsa.fc1.weight"),
                               bound_var(bound, b + "hsa.fc1.bias"),
                               bound_var(bound, b + "hsa.fc2.weight"),
                               bound_var(bound, b + "hsa.fc2.bias"));
            // (1,1,C*P) carries one gate per (channel, phase)
            Var aw = g.reshape_rows(gate, cfg_.channels);
            x = g.mul(x, g.phase_expand(aw, cfg_.r1, cfg_.r2, y.h, y.w));
        }
    }
    Var res = g.conv3x3(x, bound_var(bound, "tail.weight"), bound_var(bound, "tail.bias"));
    if (cfg_.interp_branch) return g.add_scaled(wbv, res, cfg_.residual_scale);
    return g.scale(res, cfg_.residual_scale);
}

SpectralCube DemosaicModel::forward(const MosaicImage& mosaic) const {
    Graph g;
    Var y = g.input(mosaic);
    Bound bound = bind(g);
    return g.value(build_forward(g, bound, y));
}

namespace {

template <typename T>
void write_pod(std::ostream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw std::runtime_error("checkpoint: truncated file");
    return v;
}

constexpr char kCkptMagic[8] = {'U', 'S', 'D', 'M', 'C', 'K', 'P', 'T'};

}  // namespace

void DemosaicModel::save_checkpoint(const std::string& path,
                                    const CheckpointMeta& meta) const {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw std::runtime_error("checkpoint: cannot write " + tmp);
        out.write(kCkptMagic, sizeof(kCkptMagic));
        write_pod<std::uint32_t>(out, 1);  // version
        write_pod<std::int32_t>(out, cfg_.bands);
        write_pod<std::int32_t>(out, cfg_.r1);
        write_pod<std::int32_t>(out, cfg_.r2);
        write_pod<std::int32_t>(out, cfg_.channels);
        write_pod<std::int32_t>(out, cfg_.blocks);
        write_pod<std::int32_t>(out, cfg_.reduction);
        write_pod<double>(out, cfg_.residual_scale);
        write_pod<std::uint8_t>(out, static_cast<std::uint8_t>(cfg_.attention));
        write_pod<std::uint8_t>(out, cfg_.interp_branch ? 1 : 0);
        write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(pattern_.layout.size()));
        for (int v : pattern_.layout) write_pod<std::int32_t>(out, v);
        write_pod<std::int64_t>(out, meta.epoch);
        write_pod<std::uint64_t>(out, meta.seed);
        write_pod<std::uint64_t>(out, meta.sei_history.size());
        for (double v : meta.sei_history) write_pod<double>(out, v);
        write_pod<std::uint64_t>(out, params_.entries.size());
        for (const auto& e : params_.entries) {
            write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(e.name.size()));
            out.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
            write_pod<std::int32_t>(out, e.tensor.c);
            write_pod<std::int32_t>(out, e.tensor.h);
            write_pod<std::int32_t>(out, e.tensor.w);
            out.write(reinterpret_cast<const char*>(e.tensor.data.data()),
                      static_cast<std::streamsize>(e.tensor.size() * sizeof(double)));
        }
        if (!out) throw std::runtime_error("checkpoint: write failed for " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

DemosaicModel DemosaicModel::load_checkpoint(const std::string& path,
                                             CheckpointMeta* meta) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("checkpoint: cannot open " + path);
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kCkptMagic, sizeof(magic)) != 0)
        throw std::runtime_error("checkpoint: bad magic in " + path);
    const auto version = read_pod<std::uint32_t>(in);
    if (version != 1)
        throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));

    ModelConfig cfg;
    cfg.bands = read_pod<std::int32_t>(in);
    cfg.r1 = read_pod<std::int32_t>(in);
    cfg.r2 = read_pod<std::int32_t>(in);
    cfg.channels = read_pod<std::int32_t>(in);
    cfg.blocks = read_pod<std::int32_t>(in);
    cfg.reduction = read_pod<std::int32_t>(in);
    cfg.residual_scale = read_pod<double>(in);
    cfg.attention = static_cast<AttentionKind>(read_pod<std::uint8_t>(in));
    cfg.interp_branch = read_pod<std::uint8_t>(in) != 0;

    SFAPattern pattern;
    pattern.r1 = cfg.r1;
    pattern.r2 = cfg.r2;
    pattern.bands = cfg.bands;
    const auto layout_n = read_pod<std::uint32_t>(in);
    pattern.layout.resize(layout_n);
    for (auto& v : pattern.layout) v = read_pod<std::int32_t>(in);
    pattern.validate();

    CheckpointMeta m;
    m.epoch = read_pod<std::int64_t>(in);
    m.seed = read_pod<std::uint64_t>(in);
    const auto sei_n = read_pod<std::uint64_t>(in);
    m.sei_history.resize(sei_n);
    for (auto& v : m.sei_history) v = read_pod<double>(in);
    if (meta) *meta = m;

    DemosaicModel model(cfg, pattern);
    const auto n_entries = read_pod<std::uint64_t>(in);
    for (std::uint64_t i = 0; i < n_entries; ++i) {
        const auto name_len = read_pod<std::uint32_t>(in);
        std::string name(name_len, '\0');
        in.read(name.data(), name_len);
        const int c = read_pod<std::int32_t>(in);
        const int h = read_pod<std::int32_t>(in);
        const int w = read_pod<std::int32_t>(in);
        Tensor t(c, h, w);
        in.read(reinterpret_cast<char*>(t.data.data()),
                static_cast<std::streamsize>(t.size() * sizeof(double)));
        if (!in) throw std::runtime_error("checkpoint: truncated tensor data in " + path);
        model.params_.add(name, std::move(t));
    }
    return model;
}

}  // namespace usdm
