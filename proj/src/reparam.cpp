#include "lmsf/reparam.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "lmsf/contract.hpp"
#include "lmsf/ops.hpp"

namespace lmsf {

namespace {

const RepBranch* first_conv_branch(const BranchSpec& spec) {
    for (const RepBranch& b : spec.branches)
        if (!b.identity) return &b;
    return nullptr;
}

// Zero-pads a (dilation-1) kernel into the center of a K x K kernel.
ConvLayer embed_center(const ConvLayer& conv, int k) {
    if (conv.kh == k && conv.kw == k) return conv;
    ConvLayer out = conv;
    out.kh = out.kw = k;
    out.pad = (k - 1) / 2;
    out.weight.assign(out.weight_count(), 0.0f);
    const int oy = (k - conv.kh) / 2;
    const int ox = (k - conv.kw) / 2;
    for (int o = 0; o < conv.out_ch; ++o)
        for (int i = 0; i < conv.in_ch / conv.groups; ++i)
            for (int ky = 0; ky < conv.kh; ++ky)
                for (int kx = 0; kx < conv.kw; ++kx)
                    out.wt(o, i, oy + ky, ox + kx) = conv.wt(o, i, ky, kx);
    return out;
}

// The identity map written as a K x K grouped conv (centered delta kernel).
ConvLayer delta_conv(int channels, int k, int groups) {
    ConvLayer c = make_conv(channels, channels, k, 1, (k - 1) / 2, groups, false);
    const int per_group = channels / groups;
    const int ctr = (k - 1) / 2;
    for (int o = 0; o < channels; ++o) c.wt(o, o % per_group, ctr, ctr) = 1.0f;
    return c;
}

}  // namespace

void BranchSpec::validate() const {
    require(!branches.empty(), "branch spec is empty");
    const RepBranch* ref = first_conv_branch(*this);
    int identity_count = 0;
    for (const RepBranch& b : branches) {
        if (b.identity) {
            ++identity_count;
            b.norm.validate();
            continue;
        }
        b.conv.validate();
        b.norm.validate();
        require(b.conv.dilation == 1, "fuseable branch must have dilation 1");
        require(b.conv.kh == b.conv.kw && b.conv.kh % 2 == 1,
                "fuseable branch kernel must be square and odd, got " + std::to_string(b.conv.kh) +
                    "x" + std::to_string(b.conv.kw));
        require(b.conv.pad == (b.conv.kh - 1) / 2,
                "fuseable branch padding must center the kernel");
        require(b.norm.channels() == b.conv.out_ch, "branch norm/conv channel mismatch");
        require(b.conv.in_ch == ref->conv.in_ch && b.conv.out_ch == ref->conv.out_ch,
                "branches disagree on channel counts");
        require(b.conv.stride == ref->conv.stride, "branches disagree on stride");
        require(b.conv.groups == ref->conv.groups, "branches disagree on groups");
    }
    require(identity_count <= 1, "more than one identity branch");
    if (identity_count > 0) {
        if (ref != nullptr) {
            require(ref->conv.in_ch == ref->conv.out_ch,
                    "identity branch requires matching channel counts");
            require(ref->conv.stride == 1, "identity branch requires stride 1");
        }
        for (const RepBranch& b : branches)
            if (b.identity && ref != nullptr)
                require(b.norm.channels() == ref->conv.out_ch,
                        "identity norm channel mismatch");
    }
}

Tensor branch_forward(const Tensor& x, const RepBranch& b) {
    if (b.identity) return affine_norm(x, b.norm);
    return affine_norm(conv2d(x, b.conv), b.norm);
}

Tensor branch_sum_forward(const Tensor& x, const BranchSpec& spec) {
    spec.validate();
    Tensor acc = branch_forward(x, spec.branches.front());
    for (std::size_t i = 1; i < spec.branches.size(); ++i)
        acc = add(acc, branch_forward(x, spec.branches[i]));
    return acc;
}

ConvLayer fuse_conv_norm(const ConvLayer& conv, const AffineNormStats& st) {
    conv.validate();
    st.validate();
    require(st.channels() == conv.out_ch,
            "fuse_conv_norm: stats cover " + std::to_string(st.channels()) +
                " channels, conv has " + std::to_string(conv.out_ch));
    ConvLayer out = conv;
    if (!out.has_bias()) out.bias.assign(out.out_ch, 0.0f);
    const std::size_t per_out = out.weight_count() / out.out_ch;
    for (int o = 0; o < out.out_ch; ++o) {
        const float s = st.gamma[o] / std::sqrt(st.var[o] + st.eps);
        for (std::size_t i = 0; i < per_out; ++i) out.weight[o * per_out + i] *= s;
        const float b = conv.has_bias() ? conv.bias[o] : 0.0f;
        out.bias[o] = st.beta[o] + (b - st.mean[o]) * s;
    }
    return out;
}

ConvLayer fuse_branches(const BranchSpec& spec) {
    spec.validate();
    const RepBranch* ref = first_conv_branch(spec);

    int k = 1;
    for (const RepBranch& b : spec.branches)
        if (!b.identity) k = std::max(k, b.conv.kh);

    // A lone identity branch: fold its norm into a delta kernel directly.
    const int channels = ref ? ref->conv.in_ch : spec.branches.front().norm.channels();
    const int groups = ref ? ref->conv.groups : 1;

    ConvLayer fused;
    bool first = true;
    for (const RepBranch& b : spec.branches) {
        ConvLayer part = b.identity ? fuse_conv_norm(delta_conv(channels, k, groups), b.norm)
                                    : embed_center(fuse_conv_norm(b.conv, b.norm), k);
        if (first) {
            fused = part;
            first = false;
        } else {
            for (std::size_t i = 0; i < fused.weight.size(); ++i) fused.weight[i] += part.weight[i];
            for (std::size_t i = 0; i < fused.bias.size(); ++i) fused.bias[i] += part.bias[i];
        }
    }
    return fused;
}

EquivalenceReport certify_equivalence(const ForwardFn& a, const ForwardFn& b, int n, int c, int h,
                                      int w, int trials, double tol, std::uint64_t seed) {
    EquivalenceReport rep;
    rep.tol = tol;
    rep.trials = trials;
    std::mt19937_64 gen(seed);
    std::normal_distribution<float> dist(0.0f, 1.0f);
    for (int t = 0; t < trials; ++t) {
        Tensor x(n, c, h, w);
        for (std::size_t i = 0; i < x.size(); ++i) x.data()[i] = dist(gen);
        rep.max_abs_diff = std::max(rep.max_abs_diff, max_abs_diff(a(x), b(x)));
    }
    rep.pass = rep.max_abs_diff <= tol;
    return rep;
}

}  // namespace lmsf
