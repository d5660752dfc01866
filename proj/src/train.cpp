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

#include "usdm/train.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "usdm/dataio.hpp"
#include "usdm/metrics.hpp"
#include "usdm/sei.hpp"

namespace usdm {

void LossConfig::validate() const {
    if (alpha < 0.0) throw std::invalid_argument("loss: alpha must be >= 0");
    if (!(epsilon > 0.0)) throw std::invalid_argument("loss: epsilon must be > 0");
}

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0)) throw std::invalid_argument("train: learning rate must be > 0");
    if (patch < 1) throw std::invalid_argument("train: patch size must be >= 1");
    if (batch < 1) throw std::invalid_argument("train: batch must be >= 1");
    if (max_epochs < 0) throw std::invalid_argument("train: max_epochs must be >= 0");
    if (sei_every < 1) throw std::invalid_argument("train: sei_every must be >= 1");
}

double charbonnier(const Tensor& residual, double epsilon) {
    if (!(epsilon > 0.0)) throw std::invalid_argument("charbonnier: eps must be positive");
    if (residual.empty()) throw std::invalid_argument("charbonnier: empty tensor");
    const double e2 = epsilon * epsilon;
    double acc = 0.0;
    for (double v : residual.data) acc += std::sqrt(v * v + e2);
    return acc / static_cast<double>(residual.size());
}

double mosaic_loss(const SpectralCube& xhat, const MosaicImage& y,
                   const SFAPattern& pattern, double epsilon) {
    MosaicImage sampled = mosaic_sample(xhat, pattern);
    if (!sampled.same_shape(y))
        throw std::invalid_argument("mosaic_loss: cube and mosaic shapes disagree");
    for (std::size_t i = 0; i < sampled.size(); ++i) sampled.data[i] -= y.data[i];
    return charbonnier(sampled, epsilon);
}

double cube_loss(const Tensor& a, const Tensor& b, double epsilon) {
    if (!a.same_shape(b)) throw std::invalid_argument("cube_loss: shape mismatch");
    Tensor diff = a;
    for (std::size_t i = 0; i < diff.size(); ++i) diff.data[i] -= b.data[i];
    return charbonnier(diff, epsilon);
}

Trainer::Trainer(DemosaicModel model, const LossConfig& loss, const TrainConfig& train)
    : model_(std::move(model)), loss_(loss), cfg_(train), rng_(train.seed) {
    loss_.validate();
    cfg_.validate();
}

StepStats Trainer::build_and_backward(const DemosaicModel& model, Graph& g,
                                      const DemosaicModel::Bound& bound,
                                      const MosaicImage& y,
                                      const std::optional<TransformSpec>& spec,
                                      const LossConfig& loss, const SpectralCube* gt,
                                      bool backward) {
    const SFAPattern& pattern = model.pattern();
    Var yv = g.input(y);
    Var xhat = model.build_forward(g, bound, yv);

    StepStats stats;
    Var total;
    if (gt) {
        // supervised reference objective
        Var gv = g.input(*gt);
        total = g.charbonnier(g.sub(xhat, gv), loss.epsilon);
        stats.cube = g.scalar(total);
        stats.transform = "supervised";
    } else {
        Var ml = g.charbonnier(g.sub(g.mosaic_sample(xhat, pattern), yv), loss.epsilon);
        Var base = loss.stop_gradient_pseudo_gt ? g.detach(xhat) : xhat;
        Var xtrans = spec ? g.transform(base, *spec, pattern) : base;
        Var ytrans = g.mosaic_sample(xtrans, pattern);
        Var xtrans1 = model.build_forward(g, bound, ytrans);
        Var cl = g.charbonnier(g.sub(xtrans1, xtrans), loss.epsilon);
        total = g.add_scaled(cl, ml, loss.alpha);
        stats.cube = g.scalar(cl);
        stats.mosaic = g.scalar(ml);
        stats.transform = spec ? spec->describe() : "identity";
    }
    stats.total = g.scalar(total);
    if (backward) g.backward(total);
    return stats;
}

StepStats Trainer::loss_value(const DemosaicModel& model, const MosaicImage& y,
                              const std::optional<TransformSpec>& spec,
                              const LossConfig& loss, const SpectralCube* gt) {
    Graph g;
    DemosaicModel::Bound bound = model.bind(g);
    return build_and_backward(model, g, bound, y, spec, loss, gt, false);
}

StepStats Trainer::run_graph(const MosaicImage& patch, const SpectralCube* gt,
                             const std::optional<TransformSpec>& spec, bool update) {
    Graph g;
    DemosaicModel::Bound bound = model_.bind(g);
    StepStats stats = build_and_backward(model_, g, bound, patch, spec, loss_, gt, update);
    if (!std::isfinite(stats.total))
        throw std::runtime_error("training: non-finite loss at step " +
                                 std::to_string(steps_ + 1) + " (transform " +
                                 stats.transform + ")");
    if (!update) return stats;

    Params& params = model_.params();
    const std::size_t n = params.entries.size();
    if (adam_.m.empty()) {
        adam_.m.reserve(n);
        adam_.v.reserve(n);
        for (const auto& e : params.entries) {
            adam_.m.emplace_back(e.tensor.c, e.tensor.h, e.tensor.w, 0.0);
            adam_.v.emplace_back(e.tensor.c, e.tensor.h, e.tensor.w, 0.0);
        }
    }
    ++adam_.t;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(adam_.t));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(adam_.t));
    for (std::size_t i = 0; i < n; ++i) {
        const Tensor& grad = g.grad(bound.vars[i]);
        Tensor& p = params.entries[i].tensor;
        if (grad.empty()) continue;  // parameter unused by this graph
        Tensor& m = adam_.m[i];
        Tensor& v = adam_.v[i];
        for (std::size_t j = 0; j < p.size(); ++j) {
            const double gj = grad.data[j];
            m.data[j] = cfg_.beta1 * m.data[j] + (1.0 - cfg_.beta1) * gj;
            v.data[j] = cfg_.beta2 * v.data[j] + (1.0 - cfg_.beta2) * gj * gj;
            p.data[j] -= cfg_.learning_rate * (m.data[j] / bc1) /
                         (std::sqrt(v.data[j] / bc2) + cfg_.adam_epsilon);
        }
    }
    ++steps_;
    return stats;
}

StepStats Trainer::step(const MosaicImage& patch, const SpectralCube* gt) {
    if (cfg_.supervised && !gt)
        throw std::invalid_argument("training: supervised mode needs ground truth");
    std::optional<TransformSpec> spec;
    if (!cfg_.supervised) {
        switch (cfg_.policy) {
            case PolicyKind::mixed:
                spec = random_transform(rng_, model_.pattern(), TransformPolicy::uniform());
                break;
            case PolicyKind::shift_only:
                spec = random_transform(rng_, model_.pattern(), TransformPolicy::shift_only());
                break;
            case PolicyKind::none:
                break;
        }
    }
    return run_graph(patch, cfg_.supervised ? gt : nullptr, spec, true);
}

namespace {

std::string csv_cell(double v, bool present) {
    if (!present) return "";
    std::ostringstream s;
    s.precision(12);
    s << v;
    return s.str();
}

void write_history(const std::string& path, const FitResult& r) {
    std::ostringstream out;
    out << "epoch,total_loss,cube_loss,mosaic_loss,sei,psnr,ssim,sam,ergas\n";
    std::size_t ev = 0;
    out.precision(12);
    for (std::size_t e = 0; e < r.epoch_total.size(); ++e) {
        const long long epoch = static_cast<long long>(e) + 1;
        out << epoch << ',' << r.epoch_total[e] << ',' << r.epoch_cube[e] << ','
            << r.epoch_mosaic[e] << ',';
        while (ev < r.evals.size() && r.evals[ev].epoch < epoch) ++ev;
        if (ev < r.evals.size() && r.evals[ev].epoch == epoch) {
            const EvalPoint& p = r.evals[ev];
            out << csv_cell(p.sei, true) << ',' << csv_cell(p.psnr, p.has_metrics)
                << ',' << csv_cell(p.ssim, p.has_metrics) << ','
                << csv_cell(p.sam, p.has_metrics) << ','
                << csv_cell(p.ergas, p.has_metrics);
        } else {
            out << ",,,,";
        }
        out << '\n';
    }
    const std::string tmp = path + ".tmp";
    {
        std::ofstream f(tmp);
        if (!f) throw std::runtime_error("training: cannot write " + tmp);
        f << out.str();
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace

FitResult fit(DemosaicModel& model, const std::vector<TrainItem>& train,
              const std::vector<TrainItem>& val, const LossConfig& loss,
              const TrainConfig& cfg, const std::string& run_dir) {
    loss.validate();
    cfg.validate();
    if (train.empty()) throw std::invalid_argument("training: empty train set");
    if (cfg.supervised)
        for (const auto& item : train)
            if (!item.gt)
                throw std::invalid_argument("training: supervised mode needs ground truth for " +
                                            (item.name.empty() ? "a train item" : item.name));

    const bool persist = !run_dir.empty();
    if (persist) std::filesystem::create_directories(run_dir);

    FitResult result;
    if (persist) {
        result.history_path = run_dir + "/history.csv";
        result.best_checkpoint = run_dir + "/ckpt_best.bin";
        result.last_checkpoint = run_dir + "/ckpt_last.bin";
    }
    if (cfg.max_epochs == 0) {
        if (persist) write_history(result.history_path, result);
        return result;
    }

    Trainer trainer(std::move(model), loss, cfg);
    const SFAPattern& pattern = trainer.model().pattern();
    std::vector<double> sei_history;

    auto evaluate_now = [&](long long epoch) {
        EvalPoint p;
        p.epoch = epoch;
        double sei_acc = 0.0;
        double psnr_acc = 0.0, ssim_acc = 0.0, sam_acc = 0.0, ergas_acc = 0.0;
        int with_gt = 0;
        for (const auto& item : val) {
            SpectralCube out = trainer.model().forward(item.mosaic);
            sei_acc += cube_sei(out, pattern);
            if (item.gt) {
                MetricReport r = evaluate(out, *item.gt);
                psnr_acc += r.psnr;
                ssim_acc += r.ssim;
                sam_acc += r.sam;
                ergas_acc += r.ergas;
                ++with_gt;
            }
        }
        p.sei = sei_acc / static_cast<double>(val.size());
        if (with_gt == static_cast<int>(val.size()) && with_gt > 0) {
            p.has_metrics = true;
            p.psnr = psnr_acc / with_gt;
            p.ssim = ssim_acc / with_gt;
            p.sam = sam_acc / with_gt;
            p.ergas = ergas_acc / with_gt;
        }
        return p;
    };

    try {
        for (long long epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
            double tot = 0.0, cub = 0.0, mos = 0.0;
            int steps = 0;
            for (const auto& item : train) {
                const int ph = std::min(snap_down(cfg.patch, pattern.r1), item.mosaic.h);
                const int pw = std::min(snap_down(cfg.patch, pattern.r2), item.mosaic.w);
                for (int bi = 0; bi < cfg.batch; ++bi) {
                    const auto [oy, ox] = aligned_offset(
                        trainer.rng(), item.mosaic.h, item.mosaic.w, ph, pw,
                        pattern.r1, pattern.r2);
                    MosaicImage patch = crop(item.mosaic, oy, ox, ph, pw);
                    SpectralCube gt_patch;
                    const SpectralCube* gp = nullptr;
                    if (cfg.supervised && item.gt) {
                        gt_patch = crop(*item.gt, oy, ox, ph, pw);
                        gp = &gt_patch;
                    }
                    StepStats s = trainer.step(patch, gp);
                    tot += s.total;
                    cub += s.cube;
                    mos += s.mosaic;
                    ++steps;
                }
            }
            result.epoch_total.push_back(tot / steps);
            result.epoch_cube.push_back(cub / steps);
            result.epoch_mosaic.push_back(mos / steps);
            result.epochs_run = epoch;

            const bool eval_due =
                !val.empty() && (epoch % cfg.sei_every == 0 || epoch == cfg.max_epochs);
            if (!eval_due) continue;

            EvalPoint p = evaluate_now(epoch);
            result.evals.push_back(p);
            sei_history.push_back(p.sei);

            CheckpointMeta meta;
            meta.epoch = epoch;
            meta.seed = cfg.seed;
            meta.sei_history = sei_history;
            if (persist && cfg.keep_checkpoints)
                trainer.model().save_checkpoint(result.last_checkpoint, meta);
            if (p.sei < result.best_sei) {
                result.best_sei = p.sei;
                result.best_epoch = epoch;
                if (persist && cfg.keep_checkpoints)
                    trainer.model().save_checkpoint(result.best_checkpoint, meta);
            }
            if (persist) write_history(result.history_path, result);
            if (should_stop(sei_history, cfg.sei_max)) {
                result.stopped_by_sei = true;
                break;
            }
        }
    } catch (...) {
        // keep whatever history exists, then surface the failure
        if (persist) write_history(result.history_path, result);
        model = std::move(trainer.model());
        throw;
    }

    if (persist) write_history(result.history_path, result);
    model = std::move(trainer.model());
    return result;
}

}  // namespace usdm
