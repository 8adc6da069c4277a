#pragma once

#include <cstdint>
#include <vector>

#include "lmsf/kernels.hpp"
#include "lmsf/layers.hpp"
#include "lmsf/tensor.hpp"

// Independent re-implementations used only to check the engine. Everything
// here is written straight from definitions, favoring clarity over speed, and
// deliberately shares no code with the kernels it validates.
namespace lmsf::verify {

// Six-nested-loop convolution from the definition (zero padding).
Tensor naive_conv2d(const Tensor& x, const ConvLayer& layer);

// Group normalization with mean/variance by direct summation per (sample,
// group), using E[x^2] - E[x]^2 for the variance.
Tensor naive_group_norm(const Tensor& x, const GroupNormLayer& gn);

// |Gx| + |Gy| by correlating an explicitly replicate-padded plane with the
// 3x3 Sobel kernel pair.
Tensor naive_sobel(const Tensor& x);

// Drop-in conv kernel (kernels::ConvFn signature) that tallies every scalar
// multiply it performs. Install via kernels::swap_conv to cross-check the
// profiler's closed-form MAC counts.
void counting_conv(const float* in, const float* wgt, const float* bias, float* out,
                   const kernels::ConvGeom& g);
std::uint64_t counted_multiplies();
void reset_counted_multiplies();

// 4-connected components of a label map (0 = background) by explicit BFS
// flood fill. Returns per-component (label, area) with area >= min_area, in
// no particular order.
struct FloodRegion {
    int label = 0;
    int area = 0;
};
std::vector<FloodRegion> flood_fill_regions(const std::vector<int>& labels, int h, int w,
                                            int min_area);

}  // namespace lmsf::verify
