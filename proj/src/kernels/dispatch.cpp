#include <atomic>

#include "lmsf/contract.hpp"
#include "lmsf/kernels.hpp"

namespace lmsf::kernels {

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(_M_X64)
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

namespace {

std::atomic<Backend> g_requested{Backend::auto_detect};

Backend resolve(Backend b) {
    if (b == Backend::auto_detect) return cpu_has_avx2() ? Backend::avx2 : Backend::scalar;
    return b;
}

struct Table {
    ConvFn conv;
    void (*relu)(const float*, float*, std::size_t);
    void (*add)(const float*, const float*, float*, std::size_t);
    void (*mul)(const float*, const float*, float*, std::size_t);
    void (*axpby)(float, const float*, float, const float*, float*, std::size_t);
};

Table table_for(Backend b) {
#if defined(__x86_64__) || defined(_M_X64)
    if (b == Backend::avx2)
        return {conv2d_avx2, relu_avx2, add_avx2, mul_avx2, axpby_avx2};
#endif
    return {conv2d_scalar, relu_scalar, add_scalar, mul_scalar, axpby_scalar};
}

Table g_table = table_for(resolve(Backend::auto_detect));
std::atomic<ConvFn> g_conv_override{nullptr};

}  // namespace

void set_backend(Backend b) {
    if (b == Backend::avx2)
        require(cpu_has_avx2(), "avx2 backend requested but CPU lacks avx2/fma");
    g_requested.store(b);
    g_table = table_for(resolve(b));
}

Backend active_backend() { return resolve(g_requested.load()); }

const char* backend_name(Backend b) {
    switch (b) {
        case Backend::scalar: return "scalar";
        case Backend::avx2: return "avx2";
        default: return "auto";
    }
}

ConvFn swap_conv(ConvFn fn) { return g_conv_override.exchange(fn); }

void conv2d(const float* in, const float* wgt, const float* bias, float* out, const ConvGeom& g) {
    if (ConvFn fn = g_conv_override.load()) {
        fn(in, wgt, bias, out, g);
        return;
    }
    g_table.conv(in, wgt, bias, out, g);
}

void relu(const float* in, float* out, std::size_t len) { g_table.relu(in, out, len); }
void add(const float* a, const float* b, float* out, std::size_t len) {
    g_table.add(a, b, out, len);
}
void mul(const float* a, const float* b, float* out, std::size_t len) {
    g_table.mul(a, b, out, len);
}
void axpby(float alpha, const float* a, float beta, const float* b, float* out, std::size_t len) {
    g_table.axpby(alpha, a, beta, b, out, len);
}

}  // namespace lmsf::kernels
