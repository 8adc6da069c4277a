#include "oracles.hpp"

#include <atomic>
#include <cmath>
#include <cstddef>
#include <deque>

namespace lmsf::verify {

namespace {

std::size_t idx4(int a, int b, int c, int d, int db, int dc, int dd) {
    return ((static_cast<std::size_t>(a) * db + b) * dc + c) * dd + d;
}

}  // namespace

Tensor naive_conv2d(const Tensor& x, const ConvLayer& L) {
    const int oh = L.out_h(x.h());
    const int ow = L.out_w(x.w());
    const int icg = L.in_ch / L.groups;
    const int ocg = L.out_ch / L.groups;
    Tensor out(x.n(), L.out_ch, oh, ow);
    for (int bn = 0; bn < x.n(); ++bn)
        for (int oc = 0; oc < L.out_ch; ++oc)
            for (int oy = 0; oy < oh; ++oy)
                for (int ox = 0; ox < ow; ++ox) {
                    const int g = oc / ocg;
                    float acc = L.has_bias() ? L.bias[oc] : 0.0f;
                    for (int ic = 0; ic < icg; ++ic)
                        for (int ky = 0; ky < L.kh; ++ky)
                            for (int kx = 0; kx < L.kw; ++kx) {
                                const int iy = oy * L.stride - L.pad + ky * L.dilation;
                                const int ix = ox * L.stride - L.pad + kx * L.dilation;
                                if (iy < 0 || iy >= x.h() || ix < 0 || ix >= x.w()) continue;
                                const float v =
                                    x.data()[idx4(bn, g * icg + ic, iy, ix, x.c(), x.h(), x.w())];
                                const float wv =
                                    L.weight[idx4(oc, ic, ky, kx, icg, L.kh, L.kw)];
                                acc += v * wv;
                            }
                    out.data()[idx4(bn, oc, oy, ox, L.out_ch, oh, ow)] = acc;
                }
    return out;
}

Tensor naive_group_norm(const Tensor& x, const GroupNormLayer& gn) {
    Tensor out(x.n(), x.c(), x.h(), x.w());
    const int cpg = gn.channels / gn.num_groups;
    for (int bn = 0; bn < x.n(); ++bn)
        for (int gi = 0; gi < gn.num_groups; ++gi) {
            double sum = 0.0, sumsq = 0.0;
            long count = 0;
            for (int cc = 0; cc < cpg; ++cc)
                for (int y = 0; y < x.h(); ++y)
                    for (int xx = 0; xx < x.w(); ++xx) {
                        const double v = x.at(bn, gi * cpg + cc, y, xx);
                        sum += v;
                        sumsq += v * v;
                        ++count;
                    }
            const double mean = sum / count;
            const double var = sumsq / count - mean * mean;
            for (int cc = 0; cc < cpg; ++cc) {
                const int ch = gi * cpg + cc;
                for (int y = 0; y < x.h(); ++y)
                    for (int xx = 0; xx < x.w(); ++xx)
                        out.at(bn, ch, y, xx) = static_cast<float>(
                            (x.at(bn, ch, y, xx) - mean) / std::sqrt(var + gn.eps) *
                                gn.gamma[ch] +
                            gn.beta[ch]);
            }
        }
    return out;
}

Tensor naive_sobel(const Tensor& x) {
    static const float kx[3][3] = {{-1, 0, 1}, {-2, 0, 2}, {-1, 0, 1}};
    static const float ky[3][3] = {{-1, -2, -1}, {0, 0, 0}, {1, 2, 1}};
    Tensor out(x.n(), x.c(), x.h(), x.w());
    const int ph = x.h() + 2;
    const int pw = x.w() + 2;
    std::vector<float> padded(static_cast<std::size_t>(ph) * pw);
    for (int bn = 0; bn < x.n(); ++bn)
        for (int ch = 0; ch < x.c(); ++ch) {
            for (int y = 0; y < ph; ++y)
                for (int xx = 0; xx < pw; ++xx) {
                    int sy = y - 1, sx = xx - 1;
                    sy = sy < 0 ? 0 : (sy >= x.h() ? x.h() - 1 : sy);
                    sx = sx < 0 ? 0 : (sx >= x.w() ? x.w() - 1 : sx);
                    padded[static_cast<std::size_t>(y) * pw + xx] = x.at(bn, ch, sy, sx);
                }
            for (int y = 0; y < x.h(); ++y)
                for (int xx = 0; xx < x.w(); ++xx) {
                    float gx = 0.0f, gy = 0.0f;
                    for (int dy = 0; dy < 3; ++dy)
                        for (int dx = 0; dx < 3; ++dx) {
                            const float v = padded[static_cast<std::size_t>(y + dy) * pw + xx + dx];
                            gx += kx[dy][dx] * v;
                            gy += ky[dy][dx] * v;
                        }
                    out.at(bn, ch, y, xx) = std::fabs(gx) + std::fabs(gy);
                }
        }
    return out;
}

namespace {
std::atomic<std::uint64_t> g_multiplies{0};
}

void counting_conv(const float* in, const float* wgt, const float* bias, float* out,
                   const kernels::ConvGeom& g) {
    std::uint64_t muls = 0;
    const int icg = g.in_ch / g.groups;
    const int ocg = g.out_ch / g.groups;
    for (int bn = 0; bn < g.n; ++bn)
        for (int oc = 0; oc < g.out_ch; ++oc)
            for (int oy = 0; oy < g.out_h; ++oy)
                for (int ox = 0; ox < g.out_w; ++ox) {
                    const int grp = oc / ocg;
                    float acc = bias ? bias[oc] : 0.0f;
                    for (int ic = 0; ic < icg; ++ic)
                        for (int ky = 0; ky < g.kh; ++ky)
                            for (int kx = 0; kx < g.kw; ++kx) {
                                const int iy = oy * g.stride - g.pad + ky * g.dilation;
                                const int ix = ox * g.stride - g.pad + kx * g.dilation;
                                // Padding taps still count: the closed-form
                                // MAC formula does not subtract border zeros,
                                // and neither do the real kernels.
                                ++muls;
                                if (iy < 0 || iy >= g.h || ix < 0 || ix >= g.w) continue;
                                acc += in[idx4(bn, grp * icg + ic, iy, ix, g.in_ch, g.h, g.w)] *
                                       wgt[idx4(oc, ic, ky, kx, icg, g.kh, g.kw)];
                            }
                    out[idx4(bn, oc, oy, ox, g.out_ch, g.out_h, g.out_w)] = acc;
                }
    g_multiplies += muls;
}

std::uint64_t counted_multiplies() { return g_multiplies.load(); }
void reset_counted_multiplies() { g_multiplies.store(0); }

std::vector<FloodRegion> flood_fill_regions(const std::vector<int>& labels, int h, int w,
                                            int min_area) {
    std::vector<FloodRegion> regions;
    std::vector<char> seen(labels.size(), 0);
    std::deque<int> queue;
    for (int start = 0; start < h * w; ++start) {
        if (seen[start] || labels[start] == 0) continue;
        const int lab = labels[start];
        int area = 0;
        seen[start] = 1;
        queue.push_back(start);
        while (!queue.empty()) {
            const int at = queue.front();
            queue.pop_front();
            ++area;
            const int y = at / w, x = at % w;
            const int neighbors[4] = {at - w, at + w, at - 1, at + 1};
            const bool ok[4] = {y > 0, y + 1 < h, x > 0, x + 1 < w};
            for (int i = 0; i < 4; ++i) {
                if (!ok[i]) continue;
                const int nb = neighbors[i];
                if (!seen[nb] && labels[nb] == lab) {
                    seen[nb] = 1;
                    queue.push_back(nb);
                }
            }
        }
        if (area >= min_area) regions.push_back({lab, area});
    }
    return regions;
}

}  // namespace lmsf::verify
