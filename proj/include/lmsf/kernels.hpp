#pragma once

#include <cstddef>

namespace lmsf::kernels {

// Geometry of one convolution call, NCHW float32, zero padding.
struct ConvGeom {
    int n, in_ch, h, w;
    int out_ch, kh, kw;
    int stride, pad, dilation, groups;
    int out_h, out_w;
};

// in:   n * in_ch * h * w
// wgt:  out_ch * (in_ch/groups) * kh * kw
// bias: out_ch or nullptr
// out:  n * out_ch * out_h * out_w  (overwritten)
using ConvFn = void (*)(const float* in, const float* wgt, const float* bias, float* out,
                        const ConvGeom& g);

enum class Backend { auto_detect, scalar, avx2 };

// Selects the kernel set. auto_detect probes CPU features once.
void set_backend(Backend b);
Backend active_backend();
const char* backend_name(Backend b);

// Resolved entry points.
void conv2d(const float* in, const float* wgt, const float* bias, float* out, const ConvGeom& g);
void relu(const float* in, float* out, std::size_t len);
void add(const float* a, const float* b, float* out, std::size_t len);
void mul(const float* a, const float* b, float* out, std::size_t len);
void axpby(float alpha, const float* a, float beta, const float* b, float* out, std::size_t len);

// Test hook: replace the conv entry point (e.g. with an instrumented kernel).
// Returns the previous function so callers can restore it.
ConvFn swap_conv(ConvFn fn);

// Direct access to the per-backend conv implementations.
void conv2d_scalar(const float* in, const float* wgt, const float* bias, float* out,
                   const ConvGeom& g);
#if defined(__x86_64__) || defined(_M_X64)
void conv2d_avx2(const float* in, const float* wgt, const float* bias, float* out,
                 const ConvGeom& g);
void relu_avx2(const float* in, float* out, std::size_t len);
void add_avx2(const float* a, const float* b, float* out, std::size_t len);
void mul_avx2(const float* a, const float* b, float* out, std::size_t len);
void axpby_avx2(float alpha, const float* a, float beta, const float* b, float* out,
                std::size_t len);
#endif
void relu_scalar(const float* in, float* out, std::size_t len);
void add_scalar(const float* a, const float* b, float* out, std::size_t len);
void mul_scalar(const float* a, const float* b, float* out, std::size_t len);
void axpby_scalar(float alpha, const float* a, float beta, const float* b, float* out,
                  std::size_t len);

bool cpu_has_avx2();

}  // namespace lmsf::kernels
