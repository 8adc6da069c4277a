#include "lmsf/ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "lmsf/contract.hpp"
#include "lmsf/kernels.hpp"
#include "lmsf/profiler.hpp"

namespace lmsf {

namespace {

const float* plane_ptr(const Tensor& t, int bn, int ch) {
    return t.data() + (static_cast<std::size_t>(bn) * t.c() + ch) * t.plane();
}

float* plane_ptr(Tensor& t, int bn, int ch) {
    return t.data() + (static_cast<std::size_t>(bn) * t.c() + ch) * t.plane();
}

}  // namespace

Tensor conv2d(const Tensor& x, const ConvLayer& layer) {
    layer.validate();
    require(x.c() == layer.in_ch,
            "conv2d: input has " + std::to_string(x.c()) + " channels, layer expects " +
                std::to_string(layer.in_ch) + " (input " + x.shape_str() + ")");
    const int oh = layer.out_h(x.h());
    const int ow = layer.out_w(x.w());
    require(oh >= 1 && ow >= 1,
            "conv2d: input " + x.shape_str() + " too small for kernel " + std::to_string(layer.kh) +
                "x" + std::to_string(layer.kw) + " stride " + std::to_string(layer.stride));

    const std::uint64_t macs = static_cast<std::uint64_t>(x.n()) * layer.out_ch *
                               (layer.in_ch / layer.groups) * layer.kh * layer.kw * oh * ow;
    profiler::add_macs(macs);

    if (x.is_symbolic()) return Tensor::symbolic(x.n(), layer.out_ch, oh, ow);

    Tensor out(x.n(), layer.out_ch, oh, ow);
    kernels::ConvGeom g;
    g.n = x.n();
    g.in_ch = layer.in_ch;
    g.h = x.h();
    g.w = x.w();
    g.out_ch = layer.out_ch;
    g.kh = layer.kh;
    g.kw = layer.kw;
    g.stride = layer.stride;
    g.pad = layer.pad;
    g.dilation = layer.dilation;
    g.groups = layer.groups;
    g.out_h = oh;
    g.out_w = ow;
    kernels::conv2d(x.data(), layer.weight.data(), layer.has_bias() ? layer.bias.data() : nullptr,
                    out.data(), g);
    return out;
}

Tensor group_norm(const Tensor& x, const GroupNormLayer& gn) {
    gn.validate();
    require(x.c() == gn.channels, "group_norm: input has " + std::to_string(x.c()) +
                                      " channels, layer expects " + std::to_string(gn.channels));
    if (x.is_symbolic()) return x;

    Tensor out(x.n(), x.c(), x.h(), x.w());
    const int cpg = gn.channels / gn.num_groups;
    const std::size_t plane = x.plane();
    const std::size_t m = cpg * plane;

    for (int bn = 0; bn < x.n(); ++bn) {
        for (int gi = 0; gi < gn.num_groups; ++gi) {
            const float* src = plane_ptr(x, bn, gi * cpg);
            double sum = 0.0;
            for (std::size_t i = 0; i < m; ++i) sum += src[i];
            const double mean = sum / static_cast<double>(m);
            double sq = 0.0;
            for (std::size_t i = 0; i < m; ++i) {
                const double d = src[i] - mean;
                sq += d * d;
            }
            const double var = sq / static_cast<double>(m);
            const float inv = static_cast<float>(1.0 / std::sqrt(var + gn.eps));
            const float mu = static_cast<float>(mean);
            for (int cc = 0; cc < cpg; ++cc) {
                const int ch = gi * cpg + cc;
                const float g = gn.gamma[ch];
                const float b = gn.beta[ch];
                const float* in = plane_ptr(x, bn, ch);
                float* dst = plane_ptr(out, bn, ch);
                for (std::size_t i = 0; i < plane; ++i) dst[i] = (in[i] - mu) * inv * g + b;
            }
        }
    }
    return out;
}

Tensor affine_norm(const Tensor& x, const AffineNormStats& st) {
    st.validate();
    require(x.c() == st.channels(), "affine_norm: input has " + std::to_string(x.c()) +
                                        " channels, stats expect " + std::to_string(st.channels()));
    if (x.is_symbolic()) return x;

    Tensor out(x.n(), x.c(), x.h(), x.w());
    const std::size_t plane = x.plane();
    for (int bn = 0; bn < x.n(); ++bn) {
        for (int ch = 0; ch < x.c(); ++ch) {
            const float s = st.gamma[ch] / std::sqrt(st.var[ch] + st.eps);
            const float t = st.beta[ch] - st.mean[ch] * s;
            const float* in = plane_ptr(x, bn, ch);
            float* dst = plane_ptr(out, bn, ch);
            for (std::size_t i = 0; i < plane; ++i) dst[i] = in[i] * s + t;
        }
    }
    return out;
}

Tensor sobel_grad(const Tensor& x) {
    if (x.is_symbolic()) return x;
    Tensor out(x.n(), x.c(), x.h(), x.w());
    const int h = x.h();
    const int w = x.w();
    for (int bn = 0; bn < x.n(); ++bn) {
        for (int ch = 0; ch < x.c(); ++ch) {
            const float* in = plane_ptr(x, bn, ch);
            float* dst = plane_ptr(out, bn, ch);
            for (int y = 0; y < h; ++y) {
                const int ym = std::max(y - 1, 0) * w;
                const int y0 = y * w;
                const int yp = std::min(y + 1, h - 1) * w;
                for (int xx = 0; xx < w; ++xx) {
                    const int xm = std::max(xx - 1, 0);
                    const int xp = std::min(xx + 1, w - 1);
                    const float a = in[ym + xm], b = in[ym + xx], c = in[ym + xp];
                    const float d = in[y0 + xm], f = in[y0 + xp];
                    const float g = in[yp + xm], hh = in[yp + xx], i = in[yp + xp];
                    const float gx = (c + 2.0f * f + i) - (a + 2.0f * d + g);
                    const float gy = (g + 2.0f * hh + i) - (a + 2.0f * b + c);
                    dst[y0 + xx] = std::fabs(gx) + std::fabs(gy);
                }
            }
        }
    }
    return out;
}

Tensor replicate_pad(const Tensor& x, int p) {
    require(p >= 0, "replicate_pad: negative pad");
    if (p == 0) return x;
    if (x.is_symbolic()) return Tensor::symbolic(x.n(), x.c(), x.h() + 2 * p, x.w() + 2 * p);
    Tensor out(x.n(), x.c(), x.h() + 2 * p, x.w() + 2 * p);
    const int h = x.h();
    const int w = x.w();
    const int ow = w + 2 * p;
    for (int bn = 0; bn < x.n(); ++bn) {
        for (int ch = 0; ch < x.c(); ++ch) {
            const float* in = plane_ptr(x, bn, ch);
            float* dst = plane_ptr(out, bn, ch);
            for (int y = 0; y < h + 2 * p; ++y) {
                const int sy = std::clamp(y - p, 0, h - 1);
                for (int xx = 0; xx < ow; ++xx) {
                    const int sx = std::clamp(xx - p, 0, w - 1);
                    dst[y * ow + xx] = in[sy * w + sx];
                }
            }
        }
    }
    return out;
}

namespace {

Tensor nearest_up2(const Tensor& x) {
    if (x.is_symbolic()) return Tensor::symbolic(x.n(), x.c(), x.h() * 2, x.w() * 2);
    Tensor out(x.n(), x.c(), x.h() * 2, x.w() * 2);
    const int w = x.w();
    const int ow = w * 2;
    for (int bn = 0; bn < x.n(); ++bn) {
        for (int ch = 0; ch < x.c(); ++ch) {
            const float* in = plane_ptr(x, bn, ch);
            float* dst = plane_ptr(out, bn, ch);
            for (int y = 0; y < x.h() * 2; ++y)
                for (int xx = 0; xx < ow; ++xx) dst[y * ow + xx] = in[(y / 2) * w + (xx / 2)];
        }
    }
    return out;
}

// Disjoint 2x2 block means; odd extents are handled by replicating the last
// row/column into the partial block.
Tensor mean_down2(const Tensor& x) {
    const int oh = (x.h() + 1) / 2;
    const int ow = (x.w() + 1) / 2;
    if (x.is_symbolic()) return Tensor::symbolic(x.n(), x.c(), oh, ow);
    Tensor out(x.n(), x.c(), oh, ow);
    const int h = x.h();
    const int w = x.w();
    for (int bn = 0; bn < x.n(); ++bn) {
        for (int ch = 0; ch < x.c(); ++ch) {
            const float* in = plane_ptr(x, bn, ch);
            float* dst = plane_ptr(out, bn, ch);
            for (int y = 0; y < oh; ++y) {
                const int y0 = 2 * y;
                const int y1 = std::min(2 * y + 1, h - 1);
                for (int xx = 0; xx < ow; ++xx) {
                    const int x0 = 2 * xx;
                    const int x1 = std::min(2 * xx + 1, w - 1);
                    dst[y * ow + xx] =
                        (in[y0 * w + x0] + in[y0 * w + x1] + in[y1 * w + x0] + in[y1 * w + x1]) *
                        0.25f;
                }
            }
        }
    }
    return out;
}

// 3x3 binomial depthwise filter [1,2,1] x [1,2,1] / 16, one copy per channel.
ConvLayer binomial_blur(int channels) {
    ConvLayer blur = make_conv(channels, channels, 3, 1, 0, channels, false);
    static const float taps[9] = {1.f, 2.f, 1.f, 2.f, 4.f, 2.f, 1.f, 2.f, 1.f};
    for (int ch = 0; ch < channels; ++ch)
        for (int i = 0; i < 9; ++i) blur.weight[ch * 9 + i] = taps[i] / 16.0f;
    return blur;
}

Tensor global_avg_pool(const Tensor& x) {
    if (x.is_symbolic()) return Tensor::symbolic(x.n(), x.c(), 1, 1);
    Tensor out(x.n(), x.c(), 1, 1);
    const std::size_t plane = x.plane();
    for (int bn = 0; bn < x.n(); ++bn) {
        for (int ch = 0; ch < x.c(); ++ch) {
            const float* in = plane_ptr(x, bn, ch);
            double sum = 0.0;
            for (std::size_t i = 0; i < plane; ++i) sum += in[i];
            out.at(bn, ch, 0, 0) = static_cast<float>(sum / static_cast<double>(plane));
        }
    }
    return out;
}

}  // namespace

Tensor resample(const Tensor& x, Resample mode) {
    switch (mode) {
        case Resample::nearest_up2:
            return nearest_up2(x);
        case Resample::mean_down2:
            return mean_down2(x);
        case Resample::blur_down2:
            return mean_down2(conv2d(replicate_pad(x, 1), binomial_blur(x.c())));
        case Resample::global_avg_pool:
            return global_avg_pool(x);
    }
    contract_fail("resample: unknown mode");
}

Tensor relu(const Tensor& x) {
    if (x.is_symbolic()) return x;
    Tensor out(x.n(), x.c(), x.h(), x.w());
    kernels::relu(x.data(), out.data(), x.size());
    return out;
}

Tensor sigmoid(const Tensor& x) {
    if (x.is_symbolic()) return x;
    Tensor out(x.n(), x.c(), x.h(), x.w());
    const float* in = x.data();
    float* dst = out.data();
    for (std::size_t i = 0; i < x.size(); ++i) dst[i] = 1.0f / (1.0f + std::exp(-in[i]));
    return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
    require(a.same_shape(b), "add: shape mismatch " + a.shape_str() + " vs " + b.shape_str());
    if (a.is_symbolic()) return a;
    Tensor out(a.n(), a.c(), a.h(), a.w());
    kernels::add(a.data(), b.data(), out.data(), a.size());
    return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
    require(b.n() == a.n(), "mul: batch mismatch " + a.shape_str() + " vs " + b.shape_str());
    if (a.same_shape(b)) {
        if (a.is_symbolic()) return a;
        Tensor out(a.n(), a.c(), a.h(), a.w());
        kernels::mul(a.data(), b.data(), out.data(), a.size());
        return out;
    }
    const bool per_channel = b.c() == a.c() && b.h() == 1 && b.w() == 1;
    const bool per_pixel = b.c() == 1 && b.h() == a.h() && b.w() == a.w();
    const bool per_sample = b.c() == 1 && b.h() == 1 && b.w() == 1;
    require(per_channel || per_pixel || per_sample,
            "mul: cannot broadcast " + b.shape_str() + " over " + a.shape_str());
    if (a.is_symbolic()) return a;

    Tensor out = a;
    const std::size_t plane = a.plane();
    for (int bn = 0; bn < a.n(); ++bn) {
        for (int ch = 0; ch < a.c(); ++ch) {
            float* dst = plane_ptr(out, bn, ch);
            if (per_pixel) {
                const float* gate = plane_ptr(b, bn, 0);
                for (std::size_t i = 0; i < plane; ++i) dst[i] *= gate[i];
            } else {
                const float g = per_channel ? b.at(bn, ch, 0, 0) : b.at(bn, 0, 0, 0);
                for (std::size_t i = 0; i < plane; ++i) dst[i] *= g;
            }
        }
    }
    return out;
}

Tensor scale(const Tensor& a, float s) {
    if (a.is_symbolic()) return a;
    Tensor out = a;
    float* dst = out.data();
    for (std::size_t i = 0; i < out.size(); ++i) dst[i] *= s;
    return out;
}

Tensor concat_ch(const std::vector<Tensor>& parts) {
    require(!parts.empty(), "concat_ch: no inputs");
    int total = 0;
    for (const Tensor& p : parts) {
        require(p.n() == parts[0].n() && p.h() == parts[0].h() && p.w() == parts[0].w() &&
                    p.is_symbolic() == parts[0].is_symbolic(),
                "concat_ch: incompatible input " + p.shape_str() + " vs " + parts[0].shape_str());
        total += p.c();
    }
    if (parts[0].is_symbolic())
        return Tensor::symbolic(parts[0].n(), total, parts[0].h(), parts[0].w());

    Tensor out(parts[0].n(), total, parts[0].h(), parts[0].w());
    const std::size_t plane = parts[0].plane();
    for (int bn = 0; bn < out.n(); ++bn) {
        int at = 0;
        for (const Tensor& p : parts) {
            for (int ch = 0; ch < p.c(); ++ch) {
                const float* in = plane_ptr(p, bn, ch);
                std::copy(in, in + plane, plane_ptr(out, bn, at + ch));
            }
            at += p.c();
        }
    }
    return out;
}

std::pair<Tensor, Tensor> split_half_ch(const Tensor& x) {
    require(x.c() % 2 == 0, "split_half_ch: odd channel count in " + x.shape_str());
    const int half = x.c() / 2;
    return {slice_ch(x, 0, half), slice_ch(x, half, half)};
}

Tensor slice_ch(const Tensor& x, int from, int count) {
    require(from >= 0 && count >= 1 && from + count <= x.c(),
            "slice_ch: range [" + std::to_string(from) + ", " + std::to_string(from + count) +
                ") out of bounds for " + x.shape_str());
    if (x.is_symbolic()) return Tensor::symbolic(x.n(), count, x.h(), x.w());
    Tensor out(x.n(), count, x.h(), x.w());
    const std::size_t plane = x.plane();
    for (int bn = 0; bn < x.n(); ++bn)
        for (int ch = 0; ch < count; ++ch) {
            const float* in = plane_ptr(x, bn, from + ch);
            std::copy(in, in + plane, plane_ptr(out, bn, ch));
        }
    return out;
}

Tensor channel_mean(const Tensor& x) {
    if (x.is_symbolic()) return Tensor::symbolic(x.n(), 1, x.h(), x.w());
    Tensor out(x.n(), 1, x.h(), x.w());
    const std::size_t plane = x.plane();
    const float inv = 1.0f / static_cast<float>(x.c());
    for (int bn = 0; bn < x.n(); ++bn) {
        float* dst = plane_ptr(out, bn, 0);
        for (int ch = 0; ch < x.c(); ++ch) {
            const float* in = plane_ptr(x, bn, ch);
            for (std::size_t i = 0; i < plane; ++i) dst[i] += in[i];
        }
        for (std::size_t i = 0; i < plane; ++i) dst[i] *= inv;
    }
    return out;
}

}  // namespace lmsf
