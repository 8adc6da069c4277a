#pragma once

#include <utility>
#include <vector>

#include "lmsf/layers.hpp"
#include "lmsf/tensor.hpp"

namespace lmsf {

enum class Resample { nearest_up2, mean_down2, blur_down2, global_avg_pool };

// Convolution over NCHW input, zero padding. Reports its MAC count to the
// active profiler context. Symbolic inputs propagate shape only.
Tensor conv2d(const Tensor& x, const ConvLayer& layer);

Tensor group_norm(const Tensor& x, const GroupNormLayer& gn);
Tensor affine_norm(const Tensor& x, const AffineNormStats& st);

// Per-channel |Gx| + |Gy| with the 3x3 Sobel pair, replicate padding.
Tensor sobel_grad(const Tensor& x);

Tensor resample(const Tensor& x, Resample mode);
Tensor replicate_pad(const Tensor& x, int p);

Tensor relu(const Tensor& x);
Tensor sigmoid(const Tensor& x);

Tensor add(const Tensor& a, const Tensor& b);
// Elementwise product; b may broadcast as (n,c,1,1), (n,1,h,w) or (n,1,1,1).
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, float s);

Tensor concat_ch(const std::vector<Tensor>& parts);
std::pair<Tensor, Tensor> split_half_ch(const Tensor& x);
Tensor slice_ch(const Tensor& x, int from, int count);

// Mean over the channel axis -> (n,1,h,w).
Tensor channel_mean(const Tensor& x);

}  // namespace lmsf
