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

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "usdm/network.hpp"
#include "usdm/sfa.hpp"
#include "usdm/tensor.hpp"

namespace usdm {

struct LossConfig {
    double alpha = 1.0;      // observation-term weight
    double epsilon = 1e-3;   // Charbonnier constant
    bool stop_gradient_pseudo_gt = false;
    void validate() const;
};

enum class PolicyKind { shift_only, mixed, none };

struct TrainConfig {
    double learning_rate = 1e-4;
    int patch = 100;        // snapped down to a period multiple
    int batch = 1;          // patches drawn per step
    long long max_epochs = 1000;
    PolicyKind policy = PolicyKind::mixed;
    bool supervised = false;
    std::uint64_t seed = 0;
    int sei_every = 50;     // evaluation cadence in epochs
    double sei_max = std::numeric_limits<double>::infinity();
    double beta1 = 0.9, beta2 = 0.999, adam_epsilon = 1e-8;
    bool keep_checkpoints = true;
    void validate() const;
};

/// mean over elements of sqrt(x^2 + eps^2); the floor at zero residual is eps
double charbonnier(const Tensor& residual, double epsilon);

/// Charbonnier of (mosaic_sample(xhat) - y), mean over H*W
double mosaic_loss(const SpectralCube& xhat, const MosaicImage& y,
                   const SFAPattern& pattern, double epsilon);

/// Charbonnier of the elementwise difference of two same-shape cubes
double cube_loss(const Tensor& a, const Tensor& b, double epsilon);

struct AdamState {
    std::vector<Tensor> m, v;
    long long t = 0;
};

struct StepStats {
    double total = 0.0, cube = 0.0, mosaic = 0.0;
    std::string transform;
};

/// One unsupervised update: reconstruct, transform, re-sample, reconstruct
/// again; total loss = cube_loss(second, transformed) + alpha * mosaic_loss.
/// Gradients flow through both network invocations and (unless the
/// stop-gradient flag is set) through the transformed pseudo ground truth.
class Trainer {
  public:
    Trainer(DemosaicModel model, const LossConfig& loss, const TrainConfig& train);

    /// gt is required in supervised mode and ignored otherwise
    StepStats step(const MosaicImage& patch, const SpectralCube* gt = nullptr);

    DemosaicModel& model() { return model_; }
    const DemosaicModel& model() const { return model_; }
    Rng& rng() { return rng_; }
    long long steps_taken() const { return steps_; }

    /// loss of one step without updating parameters (finite-difference
    /// harness); the transform is fixed by the caller, empty means identity
    static StepStats loss_value(const DemosaicModel& model, const MosaicImage& y,
                                const std::optional<TransformSpec>& spec,
                                const LossConfig& loss,
                                const SpectralCube* gt = nullptr);

  private:
    StepStats run_graph(const MosaicImage& patch, const SpectralCube* gt,
                        const std::optional<TransformSpec>& spec, bool update);
    static StepStats build_and_backward(const DemosaicModel& model, Graph& g,
                                        const DemosaicModel::Bound& bound,
                                        const MosaicImage& y,
                                        const std::optional<TransformSpec>& spec,
                                        const LossConfig& loss, const SpectralCube* gt,
                                        bool backward);

    DemosaicModel model_;
    LossConfig loss_;
    TrainConfig cfg_;
    Rng rng_;
    AdamState adam_;
    long long steps_ = 0;
};

struct TrainItem {
    MosaicImage mosaic;
    std::optional<SpectralCube> gt;  // enables supervised mode and metric logging
    std::string name;
};

struct EvalPoint {
    long long epoch = 0;
    double sei = 0.0;
    bool has_metrics = false;
    double psnr = 0.0, ssim = 0.0, sam = 0.0, ergas = 0.0;
};

struct FitResult {
    std::vector<double> epoch_total, epoch_cube, epoch_mosaic;
    std::vector<EvalPoint> evals;
    long long best_epoch = -1;  // argmin-SEI evaluation epoch
    double best_sei = std::numeric_limits<double>::infinity();
    bool stopped_by_sei = false;
    long long epochs_run = 0;
    std::string history_path, best_checkpoint, last_checkpoint;
};

/// Full training loop: one random aligned patch per train image per epoch,
/// SEI on the validation set every sei_every epochs (plus the final epoch),
/// metrics when validation ground truth is present. Stops when the latest
/// SEI exceeds sei_max or max_epochs is reached. The lowest-SEI model is
/// kept as the best checkpoint. run_dir empty disables persistence.
FitResult fit(DemosaicModel& model, const std::vector<TrainItem>& train,
              const std::vector<TrainItem>& val, const LossConfig& loss,
              const TrainConfig& cfg, const std::string& run_dir = "");

}  // namespace usdm
