#include <cstddef>

#include "lmsf/kernels.hpp"

namespace lmsf::kernels {

// Reference convolution. Direct loops, zero padding, any stride/dilation/groups.
void conv2d_scalar(const float* in, const float* wgt, const float* bias, float* out,
                   const ConvGeom& g) {
    const int icg = g.in_ch / g.groups;
    const int ocg = g.out_ch / g.groups;
    const std::size_t in_plane = static_cast<std::size_t>(g.h) * g.w;
    const std::size_t out_plane = static_cast<std::size_t>(g.out_h) * g.out_w;
    const std::size_t ker = static_cast<std::size_t>(icg) * g.kh * g.kw;

    for (int bn = 0; bn < g.n; ++bn) {
        const float* in_n = in + static_cast<std::size_t>(bn) * g.in_ch * in_plane;
        float* out_n = out + static_cast<std::size_t>(bn) * g.out_ch * out_plane;
        for (int gi = 0; gi < g.groups; ++gi) {
            const float* in_g = in_n + static_cast<std::size_t>(gi) * icg * in_plane;
            for (int oc = 0; oc < ocg; ++oc) {
                const int oc_abs = gi * ocg + oc;
                const float* w_oc = wgt + static_cast<std::size_t>(oc_abs) * ker;
                float* out_c = out_n + static_cast<std::size_t>(oc_abs) * out_plane;
                const float b = bias ? bias[oc_abs] : 0.0f;
                for (int oy = 0; oy < g.out_h; ++oy) {
                    for (int ox = 0; ox < g.out_w; ++ox) {
                        float acc = b;
                        for (int ic = 0; ic < icg; ++ic) {
                            const float* in_c = in_g + static_cast<std::size_t>(ic) * in_plane;
                            const float* w_ic =
                                w_oc + static_cast<std::size_t>(ic) * g.kh * g.kw;
                            for (int ky = 0; ky < g.kh; ++ky) {
                                const int iy = oy * g.stride + ky * g.dilation - g.pad;
                                if (iy < 0 || iy >= g.h) continue;
                                for (int kx = 0; kx < g.kw; ++kx) {
                                    const int ix = ox * g.stride + kx * g.dilation - g.pad;
                                    if (ix < 0 || ix >= g.w) continue;
                                    acc += w_ic[ky * g.kw + kx] *
                                           in_c[static_cast<std::size_t>(iy) * g.w + ix];
                                }
                            }
                        }
                        out_c[static_cast<std::size_t>(oy) * g.out_w + ox] = acc;
                    }
                }
            }
        }
    }
}

void relu_scalar(const float* in, float* out, std::size_t len) {
    for (std::size_t i = 0; i < len; ++i) out[i] = in[i] > 0.0f ? in[i] : 0.0f;
}

void add_scalar(const float* a, const float* b, float* out, std::size_t len) {
    for (std::size_t i = 0; i < len; ++i) out[i] = a[i] + b[i];
}

void mul_scalar(const float* a, const float* b, float* out, std::size_t len) {
    for (std::size_t i = 0; i < len; ++i) out[i] = a[i] * b[i];
}

void axpby_scalar(float alpha, const float* a, float beta, const float* b, float* out,
                  std::size_t len) {
    for (std::size_t i = 0; i < len; ++i) out[i] = alpha * a[i] + beta * b[i];
}

}  // namespace lmsf::kernels
