#include "lmsf/neck.hpp"

#include <cmath>
#include <string>

#include "lmsf/contract.hpp"
#include "lmsf/ops.hpp"

namespace lmsf {

namespace {

void check_pyramid(const Tensor& f3, const Tensor& f4, const Tensor& f5, int cf) {
    require(f3.c() == cf && f4.c() == cf && f5.c() == cf,
            "fusion inputs must all have " + std::to_string(cf) + " channels, got " +
                f3.shape_str() + " / " + f4.shape_str() + " / " + f5.shape_str());
    require(f3.n() == f4.n() && f4.n() == f5.n(), "fusion inputs disagree on batch");
    require(f3.h() == 2 * f4.h() && f3.w() == 2 * f4.w() && f4.h() == 2 * f5.h() &&
                f4.w() == 2 * f5.w(),
            "fusion inputs must sit on strides 8/16/32, got " + f3.shape_str() + " / " +
                f4.shape_str() + " / " + f5.shape_str());
}

// token = [gap(F), gap(smp_proj(meanDown2(F)))], a (n, 2*C_f, 1, 1) column.
Tensor scale_token(const Tensor& f, const SsffParams& p) {
    Tensor gap = resample(f, Resample::global_avg_pool);
    Tensor smp = resample(conv2d(resample(f, Resample::mean_down2), p.smp_proj),
                          Resample::global_avg_pool);
    return concat_ch({gap, smp});
}

}  // namespace

SsffGates ssff_mixer(const Tensor& f3, const Tensor& f4, const Tensor& f5, const SsffParams& p) {
    const int cf = p.cf();
    check_pyramid(f3, f4, f5, cf);

    Tensor tokens = concat_ch({scale_token(f3, p), scale_token(f4, p), scale_token(f5, p)});
    Tensor m = sigmoid(conv2d(relu(conv2d(tokens, p.mix1)), p.mix2));
    require(m.c() == 3 * cf + 4, "mixer output width mismatch");

    SsffGates g;
    g.alpha3 = slice_ch(m, 0, cf);
    g.alpha4 = slice_ch(m, cf, cf);
    g.alpha5 = slice_ch(m, 2 * cf, cf);
    g.g3_up = slice_ch(m, 3 * cf + 0, 1);
    g.g4_up = slice_ch(m, 3 * cf + 1, 1);
    g.g4_down = slice_ch(m, 3 * cf + 2, 1);
    g.g5_down = slice_ch(m, 3 * cf + 3, 1);
    return g;
}

SsffOut ssff_apply(const Tensor& f3, const Tensor& f4, const Tensor& f5, const SsffGates& g,
                   const SsffParams& p) {
    check_pyramid(f3, f4, f5, p.cf());

    // All updates read the original (unhatted) inputs; the two directions do
    // not feed each other within one pass.
    SsffOut out;
    out.f3 = add(mul(conv2d(f3, p.self3), g.alpha3),
                 mul(resample(conv2d(f4, p.from4to3), Resample::nearest_up2), g.g3_up));
    out.f4 = add(add(mul(conv2d(f4, p.self4), g.alpha4),
                     mul(resample(conv2d(f5, p.from5to4), Resample::nearest_up2), g.g4_up)),
                 mul(resample(conv2d(f3, p.from3to4), Resample::blur_down2), g.g4_down));
    out.f5 = add(mul(conv2d(f5, p.self5), g.alpha5),
                 mul(resample(conv2d(f4, p.from4to5), Resample::blur_down2), g.g5_down));
    return out;
}

SsffOut ssff_forward(const Tensor& f3, const Tensor& f4, const Tensor& f5, const SsffParams& p) {
    return ssff_apply(f3, f4, f5, ssff_mixer(f3, f4, f5, p), p);
}

Tensor tfe_forward(const Tensor& f3, const Tensor& f4, const Tensor& f5, const TfeParams& p) {
    Tensor up4 = resample(f4, Resample::nearest_up2);
    Tensor up5 = resample(resample(f5, Resample::nearest_up2), Resample::nearest_up2);
    Tensor s = conv2d(concat_ch({up4, up5}), p.prior);

    Tensor w = sigmoid(conv2d(relu(conv2d(resample(s, Resample::global_avg_pool), p.w1)), p.w2));
    Tensor ms = sigmoid(channel_mean(add(conv2d(s, p.dw3), conv2d(s, p.dw5))));
    return add(mul(mul(f3, w), ms), f3);
}

double grad_consistency_loss(const Tensor& f3_refined, const ConvLayer& edge_proj,
                             const Tensor& image, double lambda) {
    if (lambda == 0.0) return 0.0;
    Tensor predicted = sobel_grad(conv2d(f3_refined, edge_proj));

    Tensor gray = channel_mean(image);
    for (int i = 0; i < 3; ++i) gray = resample(gray, Resample::mean_down2);
    require(predicted.same_shape(gray),
            "edge projection " + predicted.shape_str() + " does not match stride-8 image " +
                gray.shape_str());
    Tensor target = sobel_grad(gray);

    double acc = 0.0;
    for (std::size_t i = 0; i < predicted.size(); ++i)
        acc += std::fabs(static_cast<double>(predicted.data()[i]) - target.data()[i]);
    return lambda * acc / static_cast<double>(predicted.size());
}

}  // namespace lmsf
