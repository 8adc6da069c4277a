#pragma once

#include <cstdint>
#include <vector>

#include "lmsf/layers.hpp"
#include "lmsf/tensor.hpp"

namespace lmsf {

// Depthwise-separable residual block with tied weights across scales:
// x + pw(relu(gn(dw(x)))).
struct SepBlock {
    ConvLayer dw, pw;
    GroupNormLayer gn;

    Tensor forward(const Tensor& x) const;
};

// Shared-weight multi-scale head. A single projection and block stack serve
// all three scales (structural tying, not copies); deep scales are aligned
// and upsampled to the stride-8 grid, fused under a learned gate, then
// decoded to logits at stride 8, 4 or 1.
struct LmshParams {
    ConvLayer shared_proj;               // C_f -> C_h, tied across scales
    std::vector<SepBlock> shared_blocks; // B blocks, tied across scales
    ConvLayer align4, align5;            // per-deep-scale 1x1
    ConvLayer gate;                      // 3*C_h -> C_h, pre-sigmoid
    ConvLayer deep_mix;                  // 2*C_h -> C_h
    ConvLayer cls8;                      // C_h -> C_cls
    ConvLayer cls4_dw, cls4_pw;          // depthwise-separable decoder step
    ConvLayer cls1;                      // final 1x1 at stride 1
    ConvLayer edge_head;                 // C_h -> 1, edge supervision only
};

// The gated fusion G = A (.) U3 + (1 - A) (.) deepMix([U4, U5]) on the
// stride-8 grid, with A = sigmoid(gate([U3, U4, U5])).
Tensor lmsh_fuse(const Tensor& f3, const Tensor& f4, const Tensor& f5, const LmshParams& p);

// Decodes the fused map to class logits at the requested output stride.
Tensor lmsh_decode(const Tensor& fused, const LmshParams& p, int out_stride);

Tensor lmsh_forward(const Tensor& f3, const Tensor& f4, const Tensor& f5, const LmshParams& p,
                    int out_stride);

// Dense per-pixel class labels, 0 = background.
struct LabelMap {
    int h = 0, w = 0;
    std::vector<int> labels;  // h*w, values 0..C_cls

    int at(int y, int x) const { return labels[static_cast<std::size_t>(y) * w + x]; }
};

struct Instance {
    int class_id = 0;  // 1..C_cls
    int area = 0;
    int x0 = 0, y0 = 0, x1 = 0, y1 = 0;  // inclusive bounding box
    std::vector<std::uint8_t> mask;      // h*w of the source map, 0/1
};

// argmax over class channels; background where no class logit is positive.
LabelMap label_map_from_logits(const Tensor& logits);

// 4-connected components per class via two-pass union-find; components below
// min_area are dropped. Deterministic order: class asc, area desc, then
// top-left-most pixel.
std::vector<Instance> instances_from_labels(const LabelMap& map, int min_area);
std::vector<Instance> extract_instances(const Tensor& logits, int min_area);

// 1 where any 4-neighbor carries a different label, else 0.
std::vector<float> edge_target(const LabelMap& map);

// Majority label per factor x factor cell (ties break toward the smaller id).
LabelMap majority_downsample(const LabelMap& map, int factor);

// lambda * mean BCE-with-logits(edge_head(sobel(fused)), edge_target(gt)).
double edge_loss(const Tensor& fused, const LmshParams& p, const LabelMap& gt, double lambda);

}  // namespace lmsf
