#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace lmsf {

// 2D convolution parameters. Weight layout: out_ch x (in_ch/groups) x kh x kw,
// row-major. Bias is optional (empty vector = no bias).
struct ConvLayer {
    int in_ch = 0;
    int out_ch = 0;
    int kh = 1;
    int kw = 1;
    int stride = 1;
    int pad = 0;
    int dilation = 1;
    int groups = 1;
    std::vector<float> weight;
    std::vector<float> bias;

    bool has_bias() const { return !bias.empty(); }
    bool depthwise() const { return groups == in_ch && groups == out_ch; }
    std::size_t weight_count() const {
        return static_cast<std::size_t>(out_ch) * (in_ch / groups) * kh * kw;
    }
    std::uint64_t param_count() const { return weight_count() + bias.size(); }
    void validate() const;

    int out_h(int h) const { return (h + 2 * pad - dilation * (kh - 1) - 1) / stride + 1; }
    int out_w(int w) const { return (w + 2 * pad - dilation * (kw - 1) - 1) / stride + 1; }

    float& wt(int oc, int icg, int ky, int kx) {
        return weight[((static_cast<std::size_t>(oc) * (in_ch / groups) + icg) * kh + ky) * kw +
                      kx];
    }
    float wt(int oc, int icg, int ky, int kx) const {
        return weight[((static_cast<std::size_t>(oc) * (in_ch / groups) + icg) * kh + ky) * kw +
                      kx];
    }
};

// Group normalization: per-sample, per-group whitening plus per-channel affine.
struct GroupNormLayer {
    int channels = 0;
    int num_groups = 1;
    float eps = 1e-5f;
    std::vector<float> gamma;
    std::vector<float> beta;

    std::uint64_t param_count() const { return gamma.size() + beta.size(); }
    void validate() const;
};

// Per-channel normalization carried in inference form: constant statistics
// (mean, var) plus affine (gamma, beta). This is what conv-norm folding
// consumes; it never estimates anything from the input.
struct AffineNormStats {
    std::vector<float> mean;
    std::vector<float> var;
    std::vector<float> gamma;
    std::vector<float> beta;
    float eps = 1e-5f;

    int channels() const { return static_cast<int>(gamma.size()); }
    // Learnable parameters only; mean/var are statistics.
    std::uint64_t param_count() const { return gamma.size() + beta.size(); }
    void validate() const;
};

// Helpers used by model construction.
ConvLayer make_conv(int in_ch, int out_ch, int k, int stride, int pad, int groups, bool bias);
ConvLayer make_identity_1x1(int channels);
AffineNormStats make_identity_norm(int channels, float eps = 1e-5f);

}  // namespace lmsf
