#include "lmsf/backbone.hpp"

#include <string>

#include "lmsf/contract.hpp"
#include "lmsf/ops.hpp"
#include "lmsf/profiler.hpp"

namespace lmsf {

Tensor ema_forward(const Tensor& y, const EmaParams& p) {
    require(y.c() == p.mix1.in_ch, "ema: input has " + std::to_string(y.c()) +
                                       " channels, gate expects " + std::to_string(p.mix1.in_ch));
    Tensor z = resample(y, Resample::global_avg_pool);
    Tensor a = sigmoid(conv2d(relu(conv2d(z, p.mix1)), p.mix2));
    Tensor s = sigmoid(channel_mean(conv2d(y, p.spatial_dw)));
    return mul(mul(y, a), s);
}

std::uint64_t ema_param_count(int c, int r, int k) {
    const std::uint64_t mix1 = std::uint64_t(c) * (c / r) + (c / r);
    const std::uint64_t mix2 = std::uint64_t(c / r) * c + c;
    const std::uint64_t spatial = std::uint64_t(c) * k * k + c;
    return mix1 + mix2 + spatial;
}

Tensor RvbUnit::forward(const Tensor& x, Form form) const {
    Tensor t, e, pr;
    if (form == Form::train) {
        require(has_branches, "train-form forward requested but unit holds only fused weights");
        t = relu(branch_sum_forward(x, token));
        e = relu(branch_sum_forward(t, expand));
        pr = branch_sum_forward(e, project);
    } else {
        require(has_fused, "deploy-form forward requested before fusing");
        t = relu(conv2d(x, token_fused));
        e = relu(conv2d(t, expand_fused));
        pr = conv2d(e, project_fused);
    }
    return add(x, pr);
}

void RvbUnit::fuse() {
    require(has_branches, "cannot fuse a unit that holds only fused weights");
    token_fused = fuse_branches(token);
    expand_fused = fuse_branches(expand);
    project_fused = fuse_branches(project);
    has_fused = true;
}

Tensor RvbEmaUnit::forward(const Tensor& x, Form form) const {
    return rvb.forward(ema_enabled ? ema_forward(x, ema) : x, form);
}

Tensor C2fProBlock::forward(const Tensor& x, Form form) const {
    Tensor x0 = conv2d(x, in_conv);
    auto [xs, xt] = split_half_ch(x0);
    Tensor y1 = units[0].forward(xt, form);
    Tensor y2 = units[1].forward(y1, form);
    Tensor y3 = units[2].forward(y2, form);
    return conv2d(concat_ch({xs, y1, y2, y3}), out_conv);
}

void C2fProBlock::fuse() {
    for (RvbEmaUnit& u : units) u.rvb.fuse();
}

Tensor SepDown::forward(const Tensor& x) const {
    Tensor y = relu(group_norm(conv2d(x, dw), gn1));
    return relu(group_norm(conv2d(y, pw), gn2));
}

Tensor LmfeAlign::forward(const Tensor& x) const {
    return relu(group_norm(conv2d(x, proj), gn));
}

FeaturePyramid Backbone::forward(const Tensor& image, Form form) const {
    require(image.c() == 3,
            "backbone expects a 3-channel image, got " + image.shape_str());
    require(image.h() % 32 == 0 && image.w() % 32 == 0,
            "backbone input dims must be divisible by 32, got " + image.shape_str());

    Tensor x;
    {
        profiler::Scope scope("stem");
        x = relu(group_norm(conv2d(image, stem_conv), stem_gn));
    }
    FeaturePyramid pyr;
    static const char* stage_names[4] = {"stage1", "stage2", "stage3", "stage4"};
    for (int s = 0; s < 4; ++s) {
        profiler::Scope scope(stage_names[s]);
        x = stages[s].block.forward(stages[s].down.forward(x), form);
        if (s == 1) pyr.p3 = x;
        if (s == 2) pyr.p4 = x;
        if (s == 3) pyr.p5 = x;
    }
    return pyr;
}

void Backbone::fuse() {
    for (BackboneStage& s : stages) s.block.fuse();
}

}  // namespace lmsf
