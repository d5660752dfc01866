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

#include <cstdint>
#include <string>
#include <vector>

#include "usdm/graph.hpp"
#include "usdm/sfa.hpp"
#include "usdm/tensor.hpp"

namespace usdm {

enum class AttentionKind { none, lsa, hsa };

struct ModelConfig {
    int bands = 25, r1 = 5, r2 = 5;
    int channels = 64;        // feature channels C
    int blocks = 4;           // residual blocks K
    int reduction = 4;        // attention bottleneck ratio d
    double residual_scale = 1.0;
    AttentionKind attention = AttentionKind::lsa;
    bool interp_branch = true;

    int input_channels() const { return interp_branch ? 2 * bands : bands; }
    void validate() const;
};

struct NamedTensor {
    std::string name;
    Tensor tensor;
};

/// Trainable weights, addressable by layer name in a stable order.
struct Params {
    std::vector<NamedTensor> entries;

    int index_of(const std::string& name) const;
    Tensor& at(const std::string& name);
    const Tensor& at(const std::string& name) const;
    Tensor& add(const std::string& name, Tensor t);

    long long total_count() const;
    std::vector<std::pair<std::string, long long>> per_layer() const;
};

/// ceil(n/d) bottleneck width of a squeeze-excitation block on n units
int se_hidden(int n, int d);

/// realized weight counts per attention site (dense weights only unless
/// include_bias); the lightweight module splits per-phase and per-channel
long long lsa_param_count(int channels, int r1, int r2, int d, bool include_bias = false);
long long hsa_param_count(int channels, int r1, int r2, int d, bool include_bias = false);
/// idealized closed forms 2(r1^2 r2^2 + C^2)/d and 2 r1^2 r2^2 C^2 / d;
/// fractional when d does not divide the squares
double lsa_count_formula(int channels, int r1, int r2, int d);
double hsa_count_formula(int channels, int r1, int r2, int d);

/// weights of one squeeze-excitation block (n -> ceil(n/d) -> n)
struct SqueezeExcite {
    Tensor w1, b1, w2, b2;  // w1 (1,hidden,n), b1 (1,1,hidden), w2 (1,n,hidden), b2 (1,1,n)
};
SqueezeExcite make_squeeze_excite(int n, int d, Rng& rng);

/// Per-channel spatial attention: phase means of the plane -> shared
/// squeeze-excitation -> sigmoid -> each pixel gets its phase weight.
/// Every channel of a feature map runs through the same weights.
Tensor f_sas(const Tensor& channel_map, const SqueezeExcite& se, int r1, int r2);

/// Channel attention vector from per-channel global means, (1,1,C).
Tensor f_sac(const FeatureMap& fm, const SqueezeExcite& se);

/// Refined map: out(h,w,i) = fm(h,w,i) * Am_i(h,w) * Av_i.
FeatureMap lsa_apply(const FeatureMap& fm, const SqueezeExcite& sas,
                     const SqueezeExcite& sac, int r1, int r2);

/// Heavyweight reference: one squeeze-excitation over the flattened
/// channel-phase means, one weight per (channel, phase).
FeatureMap hsa_apply(const FeatureMap& fm, const SqueezeExcite& joint, int r1, int r2);

struct CheckpointMeta {
    long long epoch = 0;
    std::uint64_t seed = 0;
    std::vector<double> sei_history;
};

/// Residual demosaicing network with the interpolation branch:
/// out = WB(y) + residual_scale * Net(concat(sparse_expand(y), WB(y))),
/// Net = stem conv -> K x [conv-relu-conv skip, attention] -> tail conv.
/// The tail is zero-initialized so a fresh model reproduces WB exactly.
class DemosaicModel {
  public:
    DemosaicModel() = default;
    static DemosaicModel init(const ModelConfig& cfg, const SFAPattern& pattern,
                              std::uint64_t seed);

    const ModelConfig& config() const { return cfg_; }
    const SFAPattern& pattern() const { return pattern_; }
    Params& params() { return params_; }
    const Params& params() const { return params_; }

    /// leaf Vars for every parameter, in params() order
    struct Bound {
        std::vector<Var> vars;
    };
    Bound bind(Graph& g) const;

    /// mosaic must be a (1,H,W) plane with H, W period multiples
    Var build_forward(Graph& g, const Bound& bound, Var mosaic) const;

    SpectralCube forward(const MosaicImage& mosaic) const;

    void save_checkpoint(const std::string& path, const CheckpointMeta& meta) const;
    static DemosaicModel load_checkpoint(const std::string& path,
                                         CheckpointMeta* meta = nullptr);

  private:
    DemosaicModel(ModelConfig cfg, SFAPattern pattern)
        : cfg_(cfg), pattern_(std::move(pattern)) {}

    Var bound_var(const Bound& bound, const std::string& name) const;

    ModelConfig cfg_;
    SFAPattern pattern_;
    Params params_;
};

}  // namespace usdm
