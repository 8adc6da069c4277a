#include "verify/invariants.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "lmsf/backbone.hpp"
#include "lmsf/contract.hpp"
#include "lmsf/neck.hpp"
#include "lmsf/ops.hpp"
#include "lmsf/profiler.hpp"
#include "verify/oracles.hpp"

namespace lmsf::verify {

namespace {

Tensor randn(int n, int c, int h, int w, std::mt19937& gen, float sigma = 1.0f) {
    Tensor t(n, c, h, w);
    std::normal_distribution<float> dist(0.0f, sigma);
    for (std::size_t i = 0; i < t.size(); ++i) t.data()[i] = dist(gen);
    return t;
}

void fill_random(std::vector<float>& v, std::mt19937& gen, float scale) {
    std::uniform_real_distribution<float> dist(-scale, scale);
    for (float& x : v) x = dist(gen);
}

SuiteResult fail(const std::string& name, const std::string& detail) {
    return {name, false, detail};
}

SuiteResult ok(const std::string& name) { return {name, true, ""}; }

SuiteResult conv_oracle_suite(std::mt19937& gen) {
    const std::string name = "conv-oracle";
    std::uniform_int_distribution<int> small(1, 3);
    for (int trial = 0; trial < 10; ++trial) {
        const int groups[] = {1, 2, 4};
        const int g = groups[trial % 3];
        const int in_ch = g * small(gen);
        const int out_ch = g * small(gen);
        const int k = 1 + 2 * (trial % 2);
        const int stride = 1 + trial % 2;
        ConvLayer conv = make_conv(in_ch, out_ch, k, stride, k / 2, g, trial % 2 == 0);
        fill_random(conv.weight, gen, 1.0f);
        fill_random(conv.bias, gen, 1.0f);
        Tensor x = randn(2, in_ch, 6, 7, gen);
        const double diff = max_abs_diff(conv2d(x, conv), naive_conv2d(x, conv));
        if (diff > 1e-5) {
            std::ostringstream msg;
            msg << "trial " << trial << ": conv vs oracle diff " << diff;
            return fail(name, msg.str());
        }
    }
    return ok(name);
}

SuiteResult fusion_certificate_suite(Model& m, std::uint64_t seed) {
    const std::string name = "fusion-certificates";
    if (!m.fused_ready) m.fuse_all();
    for (const BlockCertificate& c : certify_blocks(m, 8, 6, 1e-4, seed)) {
        if (!c.report.pass) {
            std::ostringstream msg;
            msg << c.name << ": train/deploy diff " << c.report.max_abs_diff << " exceeds "
                << c.report.tol;
            return fail(name, msg.str());
        }
    }
    return ok(name);
}

SuiteResult gate_range_suite(const Model& m, std::mt19937& gen) {
    const std::string name = "gate-ranges";
    const int cf = m.cfg.fusion_channels;
    for (int trial = 0; trial < 3; ++trial) {
        Tensor f3 = randn(1, cf, 8, 8, gen, 2.0f);
        Tensor f4 = randn(1, cf, 4, 4, gen, 2.0f);
        Tensor f5 = randn(1, cf, 2, 2, gen, 2.0f);
        SsffGates g = ssff_mixer(f3, f4, f5, m.ssff);
        for (const Tensor* t : {&g.alpha3, &g.alpha4, &g.alpha5, &g.g3_up, &g.g4_up,
                                &g.g4_down, &g.g5_down})
            for (std::size_t i = 0; i < t->size(); ++i) {
                const float v = t->data()[i];
                if (!(v > 0.0f && v < 1.0f))
                    return fail(name, "mixer gate left the open unit interval: " +
                                          std::to_string(v));
            }
    }
    return ok(name);
}

SuiteResult ema_contractivity_suite(const Model& m, std::mt19937& gen) {
    const std::string name = "ema-contractivity";
    for (const BackboneStage& stage : m.backbone.stages) {
        if (!stage.block.units[0].ema_enabled) continue;
        const EmaParams& p = stage.block.units[0].ema;
        const int c = p.mix1.in_ch;
        Tensor y = randn(1, c, 6, 6, gen, 2.0f);
        Tensor out = ema_forward(y, p);
        for (std::size_t i = 0; i < y.size(); ++i) {
            if (!std::isfinite(out.data()[i]))
                return fail(name, "non-finite gate output");
            if (std::fabs(out.data()[i]) > std::fabs(y.data()[i]))
                return fail(name, "gated output exceeded its input in magnitude");
        }
    }
    return ok(name);
}

SuiteResult tfe_residual_suite(const Model& m, std::mt19937& gen) {
    const std::string name = "tfe-residual-bound";
    const int cf = m.cfg.fusion_channels;
    for (int trial = 0; trial < 3; ++trial) {
        Tensor f3 = randn(1, cf, 8, 8, gen);
        for (std::size_t i = 0; i < f3.size(); ++i) f3.data()[i] = std::fabs(f3.data()[i]);
        Tensor f4 = randn(1, cf, 4, 4, gen);
        Tensor f5 = randn(1, cf, 2, 2, gen);
        Tensor out = tfe_forward(f3, f4, f5, m.tfe);
        if (!(max_abs_diff(out, f3) < max_abs(f3)))
            return fail(name, "residual update was not a strict contraction");
        for (std::size_t i = 0; i < f3.size(); ++i) {
            const float lo = f3.data()[i] - 1e-5f;
            const float hi = 2.0f * f3.data()[i] + 1e-5f;
            if (out.data()[i] < lo || out.data()[i] > hi)
                return fail(name, "refined value escaped the [x, 2x] band");
        }
    }
    return ok(name);
}

SuiteResult head_convexity_suite(const Model& m, std::mt19937& gen) {
    const std::string name = "head-gate-convexity";
    const LmshParams& p = m.head;
    const int cf = m.cfg.fusion_channels;
    Tensor f3 = randn(1, cf, 8, 8, gen);
    Tensor f4 = randn(1, cf, 4, 4, gen);
    Tensor f5 = randn(1, cf, 2, 2, gen);

    auto tower = [&](const Tensor& x) {
        Tensor t = conv2d(x, p.shared_proj);
        for (const SepBlock& b : p.shared_blocks) t = b.forward(t);
        return t;
    };
    Tensor u3 = tower(f3);
    Tensor u4 = resample(conv2d(tower(f4), p.align4), Resample::nearest_up2);
    Tensor u5 = resample(resample(conv2d(tower(f5), p.align5), Resample::nearest_up2),
                         Resample::nearest_up2);
    Tensor deep = conv2d(concat_ch({u4, u5}), p.deep_mix);
    Tensor g = lmsh_fuse(f3, f4, f5, p);
    for (std::size_t i = 0; i < g.size(); ++i) {
        const float lo = std::min(u3.data()[i], deep.data()[i]) - 1e-5f;
        const float hi = std::max(u3.data()[i], deep.data()[i]) + 1e-5f;
        if (g.data()[i] < lo || g.data()[i] > hi)
            return fail(name, "fused value left the interval between its sources");
    }
    return ok(name);
}

SuiteResult pyramid_stride_suite(const Model& m) {
    const std::string name = "pyramid-strides";
    const int base = m.cfg.input_size;
    for (const int size : {base, base + 32, base + 64}) {
        FeaturePyramid pyr =
            m.backbone.forward(Tensor::symbolic(1, 3, size, size), Form::train);
        if (pyr.p3.h() != size / 8 || pyr.p3.w() != size / 8 || pyr.p4.h() != size / 16 ||
            pyr.p5.h() != size / 32)
            return fail(name, "pyramid resolution off contract at input " +
                                  std::to_string(size));
    }
    return ok(name);
}

SuiteResult updown_identity_suite(std::mt19937& gen) {
    const std::string name = "updown-identity";
    Tensor x = randn(2, 3, 5, 7, gen, 2.0f);
    Tensor back = resample(resample(x, Resample::nearest_up2), Resample::mean_down2);
    if (max_abs_diff(back, x) != 0.0)
        return fail(name, "mean-down of nearest-up failed to return the input bitwise");
    return ok(name);
}

SuiteResult loss_zero_suite(const Model& m, std::mt19937& gen) {
    const std::string name = "loss-zero-cases";
    const int cf = m.cfg.fusion_channels;
    Tensor f3 = randn(1, cf, 4, 4, gen);
    Tensor img = randn(1, 3, 32, 32, gen);
    if (grad_consistency_loss(f3, m.tfe.edge_proj, img, 0.0) != 0.0)
        return fail(name, "disabled consistency loss was non-zero");
    if (grad_consistency_loss(f3, m.tfe.edge_proj, img, 0.1) < 0.0)
        return fail(name, "consistency loss went negative");

    Tensor flat3(1, cf, 4, 4);
    std::fill(flat3.values().begin(), flat3.values().end(), 0.4f);
    Tensor flat_img(1, 3, 32, 32);
    std::fill(flat_img.values().begin(), flat_img.values().end(), 0.6f);
    if (grad_consistency_loss(flat3, m.tfe.edge_proj, flat_img, 0.1) != 0.0)
        return fail(name, "flat fields should cost nothing");

    LabelMap constant;
    constant.h = 4;
    constant.w = 4;
    constant.labels.assign(16, 1);
    Tensor fused = randn(1, m.cfg.head_channels, 4, 4, gen);
    if (edge_loss(fused, m.head, constant, 0.0) != 0.0)
        return fail(name, "disabled edge loss was non-zero");
    if (edge_loss(fused, m.head, constant, 0.1) < 0.0)
        return fail(name, "edge loss went negative");
    return ok(name);
}

SuiteResult config_rejection_suite() {
    const std::string name = "config-rejection";
    auto rejects = [](ModelConfig bad) {
        try {
            bad.validate();
        } catch (const ContractViolation&) {
            return true;
        }
        return false;
    };
    ModelConfig no_input;
    no_input.input_size = 0;
    ModelConfig no_stages;
    no_stages.width_multiplier = 0.0f;
    ModelConfig misaligned;
    misaligned.input_size = 630;
    if (!rejects(no_input)) return fail(name, "zero input size was accepted");
    if (!rejects(no_stages)) return fail(name, "zero width multiplier was accepted");
    if (!rejects(misaligned)) return fail(name, "input size off the stride grid was accepted");
    return ok(name);
}

SuiteResult profiler_closed_form_suite() {
    const std::string name = "profiler-closed-form";
    ConvLayer dense = make_conv(16, 32, 1, 1, 0, 1, true);
    if (dense.param_count() != 544) return fail(name, "1x1 parameter closed form is off");
    profiler::Context ctx;
    {
        profiler::Bind bind(ctx);
        conv2d(Tensor::symbolic(1, 16, 80, 80), dense);
        if (2 * ctx.total_macs() != 6553600)
            return fail(name, "dense 1x1 flop count is off");
    }

    ConvLayer dw = make_conv(8, 8, 3, 1, 1, 8, false);
    profiler::Context ctx2;
    {
        profiler::Bind bind(ctx2);
        conv2d(Tensor::symbolic(1, 8, 10, 10), dw);
    }
    if (2 * ctx2.total_macs() != 2ull * 8 * 9 * 100)
        return fail(name, "depthwise flop count is off");
    return ok(name);
}

}  // namespace

std::vector<SuiteResult> run_invariant_battery(Model& m, std::uint64_t seed) {
    std::mt19937 gen(static_cast<std::uint32_t>(seed));
    std::vector<SuiteResult> results;
    results.push_back(conv_oracle_suite(gen));
    results.push_back(fusion_certificate_suite(m, seed + 1));
    results.push_back(gate_range_suite(m, gen));
    results.push_back(ema_contractivity_suite(m, gen));
    results.push_back(tfe_residual_suite(m, gen));
    results.push_back(head_convexity_suite(m, gen));
    results.push_back(pyramid_stride_suite(m));
    results.push_back(updown_identity_suite(gen));
    results.push_back(loss_zero_suite(m, gen));
    results.push_back(config_rejection_suite());
    results.push_back(profiler_closed_form_suite());
    return results;
}

}  // namespace lmsf::verify
