#include "lmsf/head.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "lmsf/contract.hpp"
#include "lmsf/ops.hpp"

namespace lmsf {

Tensor SepBlock::forward(const Tensor& x) const {
    return add(x, conv2d(relu(group_norm(conv2d(x, dw), gn)), pw));
}

namespace {

Tensor shared_tower(const Tensor& f, const LmshParams& p) {
    Tensor z = conv2d(f, p.shared_proj);
    for (const SepBlock& b : p.shared_blocks) z = b.forward(z);
    return z;
}

Tensor one_minus(const Tensor& a) {
    if (a.is_symbolic()) return a;
    Tensor out(a.n(), a.c(), a.h(), a.w());
    for (std::size_t i = 0; i < a.size(); ++i) out.data()[i] = 1.0f - a.data()[i];
    return out;
}

}  // namespace

Tensor lmsh_fuse(const Tensor& f3, const Tensor& f4, const Tensor& f5, const LmshParams& p) {
    Tensor u3 = shared_tower(f3, p);
    Tensor u4 = resample(conv2d(shared_tower(f4, p), p.align4), Resample::nearest_up2);
    Tensor u5 = resample(resample(conv2d(shared_tower(f5, p), p.align5), Resample::nearest_up2),
                         Resample::nearest_up2);

    Tensor a = sigmoid(conv2d(concat_ch({u3, u4, u5}), p.gate));
    Tensor deep = conv2d(concat_ch({u4, u5}), p.deep_mix);
    return add(mul(u3, a), mul(deep, one_minus(a)));
}

Tensor lmsh_decode(const Tensor& fused, const LmshParams& p, int out_stride) {
    require(out_stride == 8 || out_stride == 4 || out_stride == 1,
            "output stride must be 8, 4 or 1, got " + std::to_string(out_stride));
    Tensor l8 = conv2d(fused, p.cls8);
    if (out_stride == 8) return l8;

    Tensor up = resample(fused, Resample::nearest_up2);
    Tensor l4 = conv2d(conv2d(up, p.cls4_dw), p.cls4_pw);
    if (out_stride == 4) return l4;

    Tensor l1 = resample(resample(l4, Resample::nearest_up2), Resample::nearest_up2);
    return conv2d(l1, p.cls1);
}

Tensor lmsh_forward(const Tensor& f3, const Tensor& f4, const Tensor& f5, const LmshParams& p,
                    int out_stride) {
    return lmsh_decode(lmsh_fuse(f3, f4, f5, p), p, out_stride);
}

LabelMap label_map_from_logits(const Tensor& logits) {
    require(logits.n() == 1, "label extraction expects batch 1, got " + logits.shape_str());
    require(!logits.is_symbolic(), "label extraction needs real data");
    LabelMap map;
    map.h = logits.h();
    map.w = logits.w();
    map.labels.assign(static_cast<std::size_t>(map.h) * map.w, 0);
    const std::size_t plane = logits.plane();
    for (std::size_t i = 0; i < plane; ++i) {
        float best = logits.data()[i];
        int best_c = 0;
        for (int c = 1; c < logits.c(); ++c) {
            const float v = logits.data()[c * plane + i];
            if (v > best) {
                best = v;
                best_c = c;
            }
        }
        map.labels[i] = best <= 0.0f ? 0 : best_c + 1;
    }
    return map;
}

namespace {

int uf_find(std::vector<int>& parent, int a) {
    while (parent[a] != a) {
        parent[a] = parent[parent[a]];
        a = parent[a];
    }
    return a;
}

void uf_union(std::vector<int>& parent, int a, int b) {
    a = uf_find(parent, a);
    b = uf_find(parent, b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
}

}  // namespace

std::vector<Instance> instances_from_labels(const LabelMap& map, int min_area) {
    require(min_area >= 1, "min_area must be >= 1");
    const int h = map.h, w = map.w;
    const std::size_t total = static_cast<std::size_t>(h) * w;

    // Pass 1: provisional component ids with union-find over 4-neighbors.
    std::vector<int> parent(total);
    std::iota(parent.begin(), parent.end(), 0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const int at = y * w + x;
            if (map.labels[at] == 0) continue;
            if (x > 0 && map.labels[at - 1] == map.labels[at]) uf_union(parent, at, at - 1);
            if (y > 0 && map.labels[at - w] == map.labels[at]) uf_union(parent, at, at - w);
        }

    // Pass 2: gather roots into instances.
    std::vector<int> slot(total, -1);
    std::vector<Instance> all;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const int at = y * w + x;
            if (map.labels[at] == 0) continue;
            const int root = uf_find(parent, at);
            if (slot[root] < 0) {
                slot[root] = static_cast<int>(all.size());
                Instance inst;
                inst.class_id = map.labels[at];
                inst.x0 = inst.x1 = x;
                inst.y0 = inst.y1 = y;
                inst.mask.assign(total, 0);
                all.push_back(std::move(inst));
            }
            Instance& inst = all[slot[root]];
            inst.area += 1;
            inst.mask[at] = 1;
            inst.x0 = std::min(inst.x0, x);
            inst.x1 = std::max(inst.x1, x);
            inst.y0 = std::min(inst.y0, y);
            inst.y1 = std::max(inst.y1, y);
        }

    std::vector<Instance> kept;
    for (Instance& inst : all)
        if (inst.area >= min_area) kept.push_back(std::move(inst));
    std::sort(kept.begin(), kept.end(), [](const Instance& a, const Instance& b) {
        if (a.class_id != b.class_id) return a.class_id < b.class_id;
        if (a.area != b.area) return a.area > b.area;
        if (a.y0 != b.y0) return a.y0 < b.y0;
        return a.x0 < b.x0;
    });
    return kept;
}

std::vector<Instance> extract_instances(const Tensor& logits, int min_area) {
    return instances_from_labels(label_map_from_logits(logits), min_area);
}

std::vector<float> edge_target(const LabelMap& map) {
    std::vector<float> target(map.labels.size(), 0.0f);
    for (int y = 0; y < map.h; ++y)
        for (int x = 0; x < map.w; ++x) {
            const int lab = map.at(y, x);
            const bool differs = (x > 0 && map.at(y, x - 1) != lab) ||
                                 (x + 1 < map.w && map.at(y, x + 1) != lab) ||
                                 (y > 0 && map.at(y - 1, x) != lab) ||
                                 (y + 1 < map.h && map.at(y + 1, x) != lab);
            if (differs) target[static_cast<std::size_t>(y) * map.w + x] = 1.0f;
        }
    return target;
}

LabelMap majority_downsample(const LabelMap& map, int factor) {
    require(factor >= 1, "downsample factor must be >= 1");
    LabelMap out;
    out.h = (map.h + factor - 1) / factor;
    out.w = (map.w + factor - 1) / factor;
    out.labels.assign(static_cast<std::size_t>(out.h) * out.w, 0);
    std::vector<int> votes;
    for (int oy = 0; oy < out.h; ++oy)
        for (int ox = 0; ox < out.w; ++ox) {
            votes.clear();
            for (int dy = 0; dy < factor; ++dy)
                for (int dx = 0; dx < factor; ++dx) {
                    const int y = oy * factor + dy, x = ox * factor + dx;
                    if (y < map.h && x < map.w) votes.push_back(map.at(y, x));
                }
            std::sort(votes.begin(), votes.end());
            int best = votes[0], best_run = 0, run = 0, prev = -1;
            for (int v : votes) {
                run = v == prev ? run + 1 : 1;
                if (run > best_run) {
                    best_run = run;
                    best = v;
                }
                prev = v;
            }
            out.labels[static_cast<std::size_t>(oy) * out.w + ox] = best;
        }
    return out;
}

namespace {

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::fabs(x))); }

}  // namespace

double edge_loss(const Tensor& fused, const LmshParams& p, const LabelMap& gt, double lambda) {
    if (lambda == 0.0) return 0.0;
    Tensor e = conv2d(sobel_grad(fused), p.edge_head);
    require(e.n() == 1 && e.h() == gt.h && e.w() == gt.w,
            "edge logits " + e.shape_str() + " do not match the ground-truth grid " +
                std::to_string(gt.h) + "x" + std::to_string(gt.w));
    const std::vector<float> target = edge_target(gt);
    double acc = 0.0;
    for (std::size_t i = 0; i < e.size(); ++i) {
        const double logit = e.data()[i];
        acc += softplus(logit) - target[i] * logit;
    }
    return lambda * acc / static_cast<double>(e.size());
}

}  // namespace lmsf
