#pragma once

#include <array>
#include <cstdint>

#include "lmsf/layers.hpp"
#include "lmsf/reparam.hpp"
#include "lmsf/tensor.hpp"

namespace lmsf {

// Channel gate from pooled descriptors plus a spatial gate from a depthwise
// conv; the output is the input reweighted by both.
struct EmaParams {
    ConvLayer mix1;        // 1x1, C -> C/r
    ConvLayer mix2;        // 1x1, C/r -> C
    ConvLayer spatial_dw;  // depthwise k x k, stride 1
};

// out(c,u,v) = a_c * S(u,v) * Y(c,u,v) with
//   a = sigmoid(mix2(relu(mix1(gap(Y))))), S = sigmoid(channel_mean(spatial_dw(Y)))
Tensor ema_forward(const Tensor& y, const EmaParams& p);

// Parameters an EMA gate adds at width c (reduction r, spatial kernel k).
std::uint64_t ema_param_count(int c, int r, int k);

// One re-parameterizable unit: a fuseable depthwise token mixer and a
// fuseable pointwise channel mixer (expand x2 -> relu -> project), with a
// residual around the whole unit. Channel count is preserved.
struct RvbUnit {
    BranchSpec token;    // {3x3 DW, 1x1 DW, identity}, C -> C
    BranchSpec expand;   // 1x1, C -> 2C
    BranchSpec project;  // 1x1, 2C -> C
    ConvLayer token_fused, expand_fused, project_fused;
    bool has_fused = false;
    bool has_branches = true;  // false when loaded from a deploy-form store

    Tensor forward(const Tensor& x, Form form) const;
    void fuse();
};

struct RvbEmaUnit {
    bool ema_enabled = false;
    EmaParams ema;  // meaningful only when ema_enabled
    RvbUnit rvb;

    Tensor forward(const Tensor& x, Form form) const;
};

// CSP-style stage body: 1x1 in-conv, split into a shortcut half and a
// transform half, three units over the transform half, then a 1x1 merge of
// [shortcut, Y1, Y2, Y3].
struct C2fProBlock {
    ConvLayer in_conv;   // C_in -> 2*C_mid
    ConvLayer out_conv;  // 4*C_mid -> C_out
    std::array<RvbEmaUnit, 3> units;

    Tensor forward(const Tensor& x, Form form) const;
    void fuse();
};

// Stride-2 depthwise-separable downsampling: DW 3x3 s2 -> GN -> ReLU ->
// PW 1x1 -> GN -> ReLU.
struct SepDown {
    ConvLayer dw, pw;
    GroupNormLayer gn1, gn2;

    Tensor forward(const Tensor& x) const;
};

// relu(gn(conv1x1(x))): aligns a pyramid level to the fusion width.
struct LmfeAlign {
    ConvLayer proj;
    GroupNormLayer gn;

    Tensor forward(const Tensor& x) const;
};

struct FeaturePyramid {
    Tensor p3, p4, p5;  // strides 8, 16, 32
};

struct BackboneStage {
    SepDown down;
    C2fProBlock block;
};

struct Backbone {
    ConvLayer stem_conv;  // 3x3 stride 2
    GroupNormLayer stem_gn;
    std::array<BackboneStage, 4> stages;  // strides 4, 8, 16, 32

    FeaturePyramid forward(const Tensor& image, Form form) const;
    void fuse();
};

}  // namespace lmsf
