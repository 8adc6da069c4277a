#pragma once

#include "lmsf/layers.hpp"
#include "lmsf/tensor.hpp"

namespace lmsf {

// Scale-sequence fusion: each pyramid level is summarized into a token, a
// small mixer turns the three tokens into per-channel weights and direction
// gates, and the levels exchange information through gated 1x1-conv +
// resample paths.
struct SsffParams {
    ConvLayer smp_proj;  // shared 1x1 after 2x2 mean pooling (token SMP half)
    ConvLayer mix1;      // 6*C_f -> 2*C_f
    ConvLayer mix2;      // 2*C_f -> 3*C_f + 4
    // Per-scale self paths and direction paths, all bias-free 1x1 at C_f.
    ConvLayer self3, self4, self5;
    ConvLayer from4to3, from5to4, from3to4, from4to5;

    int cf() const { return self3.in_ch; }
};

struct SsffGates {
    Tensor alpha3, alpha4, alpha5;          // (n, C_f, 1, 1), in (0,1)
    Tensor g3_up, g4_up, g4_down, g5_down;  // (n, 1, 1, 1), in (0,1)
};

struct SsffOut {
    Tensor f3, f4, f5;
};

SsffGates ssff_mixer(const Tensor& f3, const Tensor& f4, const Tensor& f5, const SsffParams& p);
SsffOut ssff_apply(const Tensor& f3, const Tensor& f4, const Tensor& f5, const SsffGates& g,
                   const SsffParams& p);
SsffOut ssff_forward(const Tensor& f3, const Tensor& f4, const Tensor& f5, const SsffParams& p);

// Stride-8 refinement: a semantic prior from the deep levels drives a channel
// gate and a spatial gate over the fine level, applied in residual form.
struct TfeParams {
    ConvLayer prior;      // 1x1 on concat[up(F4), up2(F5)]: 2*C_f -> C_f
    ConvLayer w1, w2;     // channel-gate bottleneck C_f -> C_f/r -> C_f
    ConvLayer dw3, dw5;   // depthwise 3x3 and 5x5 over the prior
    ConvLayer edge_proj;  // 1x1 C_f -> 1, used only by the consistency loss
};

Tensor tfe_forward(const Tensor& f3, const Tensor& f4, const Tensor& f5, const TfeParams& p);

// lambda * mean |sobel(edge_proj(f3_refined)) - sobel(gray(image at stride 8))|
double grad_consistency_loss(const Tensor& f3_refined, const ConvLayer& edge_proj,
                             const Tensor& image, double lambda);

}  // namespace lmsf
