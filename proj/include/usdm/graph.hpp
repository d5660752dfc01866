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

#include <functional>
#include <vector>

#include "usdm/sfa.hpp"
#include "usdm/tensor.hpp"

namespace usdm {

struct Var {
    int id = -1;
    bool valid() const { return id >= 0; }
};

/// Reverse-mode autodiff over Tensor values. A Graph is a single-use tape:
/// build the forward computation with the op methods, call backward(loss)
/// once, read gradients. Nodes are evaluated eagerly; ids are topologically
/// ordered by construction. Gradients of a parameter used in several places
/// (e.g. the two network invocations of a training step) accumulate on its
/// leaf. Not thread-safe; build one Graph per thread.
class Graph {
  public:
    Graph() = default;
    Graph(const Graph&) = delete;
    Graph& operator=(const Graph&) = delete;

    /// leaf holding a value; set requires_grad to collect d(loss)/d(value)
    Var input(Tensor value, bool requires_grad = false);

    // elementwise
    Var relu(Var x);
    Var sigmoid(Var x);
    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var mul(Var a, Var b);
    Var scale(Var x, double s);
    Var add_scaled(Var a, Var b, double s);  // a + s*b

    /// 3x3 same convolution; weights (cout, cin, 9), bias (1, 1, cout)
    Var conv3x3(Var x, Var weights, Var bias);

    Var concat_channels(Var a, Var b);

    /// per-channel per-phase global means: (C,H,W) -> (C,1,r1*r2);
    /// requires H, W to be period multiples
    Var phase_mean(Var x, int r1, int r2);
    /// broadcast phase weights back to pixels: (C,1,r1*r2) -> (C,H,W)
    Var phase_expand(Var x, int r1, int r2, int h, int w);
    /// global mean per channel: (C,H,W) -> (1,1,C)
    Var channel_mean(Var x);
    /// x(c,·,·) * v(0,0,c)
    Var channel_scale(Var x, Var v);
    /// shared dense layer applied to every row: (R,1,N) x w(1,M,N) + b(1,1,M) -> (R,1,M)
    Var dense_rows(Var x, Var weights, Var bias);
    /// (C,1,P) -> (1,1,C*P)
    Var flatten_rows(Var x);
    /// (1,1,R*P) -> (R,1,P)
    Var reshape_rows(Var x, int rows);

    Var mosaic_sample(Var cube, const SFAPattern& pattern);
    Var sparse_expand(Var plane, const SFAPattern& pattern);
    /// weighted bilinear interpolation (linear in the mosaic)
    Var wb(Var plane, const SFAPattern& pattern);
    Var transform(Var cube, const TransformSpec& spec, const SFAPattern& pattern);

    /// value pass-through that blocks gradient flow
    Var detach(Var x);

    /// mean over elements of sqrt(x^2 + eps^2) -> (1,1,1)
    Var charbonnier(Var x, double eps);

    const Tensor& value(Var v) const;
    /// gradient collected by backward(); zero-shaped if the node was never
    /// reached (or did not require gradients)
    const Tensor& grad(Var v) const;
    double scalar(Var v) const;

    void backward(Var loss);
    std::size_t node_count() const { return nodes_.size(); }

  private:
    struct Node {
        Tensor val;
        Tensor grd;
        bool needs_grad = false;
        std::function<void()> back;  // empty for leaves
    };

    Var push(Tensor value, bool needs_grad, std::function<void()> back = {});
    Tensor& grad_buffer(int id);
    bool needs(Var v) const { return nodes_[v.id].needs_grad; }
    const Tensor& val(Var v) const { return nodes_[v.id].val; }

    std::vector<Node> nodes_;
    bool backward_done_ = false;
};

}  // namespace usdm
