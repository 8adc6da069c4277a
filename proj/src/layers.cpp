#include "lmsf/layers.hpp"

#include <cmath>
#include <string>

#include "lmsf/contract.hpp"

namespace lmsf {

void ConvLayer::validate() const {
    require(in_ch >= 1 && out_ch >= 1 && kh >= 1 && kw >= 1, "conv dims must be >= 1");
    require(stride >= 1 && dilation >= 1 && pad >= 0, "conv stride/dilation/pad invalid");
    require(groups >= 1 && in_ch % groups == 0 && out_ch % groups == 0,
            "conv channels not divisible by groups: in=" + std::to_string(in_ch) +
                " out=" + std::to_string(out_ch) + " groups=" + std::to_string(groups));
    require(weight.size() == weight_count(), "conv weight size mismatch");
    require(bias.empty() || bias.size() == static_cast<std::size_t>(out_ch),
            "conv bias size mismatch");
}

void GroupNormLayer::validate() const {
    require(channels >= 1 && num_groups >= 1, "group norm dims must be >= 1");
    require(channels % num_groups == 0,
            "group norm channels " + std::to_string(channels) + " not divisible by " +
                std::to_string(num_groups) + " groups");
    require(eps > 0.0f, "group norm eps must be > 0");
    require(gamma.size() == static_cast<std::size_t>(channels) && beta.size() == gamma.size(),
            "group norm affine size mismatch");
}

void AffineNormStats::validate() const {
    require(!gamma.empty(), "affine norm is empty");
    require(mean.size() == gamma.size() && var.size() == gamma.size() &&
                beta.size() == gamma.size(),
            "affine norm field sizes disagree");
    require(eps > 0.0f, "affine norm eps must be > 0");
}

ConvLayer make_conv(int in_ch, int out_ch, int k, int stride, int pad, int groups, bool bias) {
    ConvLayer c;
    c.in_ch = in_ch;
    c.out_ch = out_ch;
    c.kh = c.kw = k;
    c.stride = stride;
    c.pad = pad;
    c.groups = groups;
    c.weight.assign(c.weight_count(), 0.0f);
    if (bias) c.bias.assign(out_ch, 0.0f);
    c.validate();
    return c;
}

ConvLayer make_identity_1x1(int channels) {
    ConvLayer c = make_conv(channels, channels, 1, 1, 0, 1, false);
    for (int o = 0; o < channels; ++o) c.wt(o, o, 0, 0) = 1.0f;
    return c;
}

AffineNormStats make_identity_norm(int channels, float eps) {
    // Pick var so that var + eps rounds to exactly 1; folding an identity
    // norm is then weight-for-weight (scale = 1/sqrt(1) = 1).
    float v = 1.0f - eps;
    while (v + eps > 1.0f) v = std::nextafterf(v, 0.0f);
    while (v + eps < 1.0f) v = std::nextafterf(v, 2.0f);
    AffineNormStats st;
    st.mean.assign(channels, 0.0f);
    st.var.assign(channels, v);
    st.gamma.assign(channels, 1.0f);
    st.beta.assign(channels, 0.0f);
    st.eps = eps;
    return st;
}

}  // namespace lmsf
