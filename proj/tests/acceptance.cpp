// Release gate for the engine. Each criterion prints exactly one PASS/FAIL
// line; the process exits nonzero if any criterion fails. Criteria:
//   1 branch fusion is output-equivalent, per block and end to end
//   2 the shipped default config profiles into the target envelope
//   3 the fused path is never meaningfully slower than the branched path
//   4 numeric kernels agree with brute-force oracles
//   5 the structural invariant battery passes in full
//   6 builds, weight files and inference are deterministic
//   7 instance extraction agrees with a flood-fill oracle

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "lmsf/bench.hpp"
#include "lmsf/config.hpp"
#include "lmsf/head.hpp"
#include "lmsf/model.hpp"
#include "lmsf/ops.hpp"
#include "lmsf/weights.hpp"
#include "verify/invariants.hpp"
#include "verify/oracles.hpp"

using namespace lmsf;

namespace {

Tensor randn(int n, int c, int h, int w, std::mt19937& gen, float sigma = 1.0f) {
    Tensor t(n, c, h, w);
    std::normal_distribution<float> dist(0.0f, sigma);
    for (std::size_t i = 0; i < t.size(); ++i) t.data()[i] = dist(gen);
    return t;
}

Tensor random_image(int size, std::mt19937& gen) {
    Tensor t(1, 3, size, size);
    std::uniform_real_distribution<float> dist(0.0f, 1.0f);
    for (std::size_t i = 0; i < t.size(); ++i) t.data()[i] = dist(gen);
    return t;
}

void fill_random(std::vector<float>& v, std::mt19937& gen, float scale) {
    std::uniform_real_distribution<float> dist(-scale, scale);
    for (float& x : v) x = dist(gen);
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2e", v);
    return buf;
}

std::string file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

ModelConfig shipped_config() { return load_config_file(LMSF_DEFAULT_CFG); }

// --- criterion bodies: return pass, write a one-phrase detail ---

bool reparam_equivalence(std::string& detail) {
    ModelConfig cfg = shipped_config();
    cfg.input_size = 128;  // widths as shipped; smaller canvas for runtime
    Model m = build_model(cfg, 41);
    m.fuse_all();

    double worst_block = 0.0;
    for (const BlockCertificate& c : certify_blocks(m, 8, 100, 1e-4, 97)) {
        worst_block = std::max(worst_block, c.report.max_abs_diff);
        if (!c.report.pass) {
            detail = c.name + " diff " + fmt(c.report.max_abs_diff);
            return false;
        }
    }

    std::mt19937 gen(58);
    double worst_e2e = 0.0;
    for (int i = 0; i < 10; ++i) {
        Tensor img = random_image(cfg.input_size, gen);
        const double d =
            max_abs_diff(m.forward(img, Form::train, 1), m.forward(img, Form::deploy, 1));
        worst_e2e = std::max(worst_e2e, d);
    }
    detail = "block diff <= " + fmt(worst_block) + ", end-to-end <= " + fmt(worst_e2e) +
             " over 10 images";
    return worst_e2e <= 1e-4;
}

bool efficiency_envelope(std::string& detail) {
    ModelConfig cfg = shipped_config();
    if (cfg.serialize() != ModelConfig().serialize()) {
        detail = "shipped config file disagrees with built-in defaults";
        return false;
    }
    Model m = build_model(cfg, 3);
    const ProfileReport rep = profile_model(m, Form::deploy);
    std::ostringstream msg;
    msg << rep.total_params << " params, " << rep.total_flops << " flops at "
        << rep.input_size << " deploy";
    detail = msg.str();
    return rep.total_params >= 1600000 && rep.total_params <= 2000000 &&
           rep.total_flops >= 7900000000ULL && rep.total_flops <= 9700000000ULL;
}

bool fusion_latency(std::string& detail) {
    ModelConfig cfg = shipped_config();
    cfg.input_size = 128;
    Model m = build_model(cfg, 5);
    const BenchReport train = bench_forward(m, Form::train, 50, 11);
    m.fuse_all();
    const BenchReport deploy = bench_forward(m, Form::deploy, 50, 11);
    std::ostringstream msg;
    msg << "median deploy " << fmt(deploy.median_ms) << " ms vs train " << fmt(train.median_ms)
        << " ms over 50 runs";
    detail = msg.str();
    return deploy.median_ms <= 1.05 * train.median_ms;
}

bool kernel_oracles(std::string& detail) {
    std::mt19937 gen(23);
    std::uniform_int_distribution<int> mult(1, 3);
    std::uniform_int_distribution<int> span(3, 12);
    double worst = 0.0;

    for (int trial = 0; trial < 50; ++trial) {
        int g, in_ch, out_ch;
        if (trial % 4 == 3) {  // depthwise
            g = in_ch = out_ch = 2 * mult(gen);
        } else {
            g = 1 << (trial % 3);  // 1, 2, 4
            in_ch = g * mult(gen);
            out_ch = g * mult(gen);
        }
        const int k = 1 + 2 * (trial % 3);
        const int stride = 1 + trial % 2;
        const int pad = (trial % 5 == 0) ? 0 : k / 2;
        ConvLayer conv = make_conv(in_ch, out_ch, k, stride, pad, g, trial % 2 == 0);
        fill_random(conv.weight, gen, 1.0f);
        fill_random(conv.bias, gen, 1.0f);
        Tensor x = randn(1 + trial % 2, in_ch, span(gen), span(gen), gen);
        if (x.h() + 2 * pad < k || x.w() + 2 * pad < k) continue;
        worst = std::max(worst, max_abs_diff(conv2d(x, conv), verify::naive_conv2d(x, conv)));
    }

    for (int trial = 0; trial < 50; ++trial) {
        GroupNormLayer gn;
        gn.num_groups = 1 << (trial % 4);  // 1, 2, 4, 8
        gn.channels = gn.num_groups * mult(gen);
        gn.gamma.resize(gn.channels);
        gn.beta.resize(gn.channels);
        fill_random(gn.gamma, gen, 2.0f);
        fill_random(gn.beta, gen, 2.0f);
        Tensor x = randn(1 + trial % 2, gn.channels, span(gen), span(gen), gen, 3.0f);
        worst = std::max(worst, max_abs_diff(group_norm(x, gn), verify::naive_group_norm(x, gn)));
    }

    for (int trial = 0; trial < 50; ++trial) {
        Tensor x = randn(1 + trial % 2, 1 + trial % 3, span(gen), span(gen), gen, 2.0f);
        worst = std::max(worst, max_abs_diff(sobel_grad(x), verify::naive_sobel(x)));
    }

    detail = "conv/norm/gradient vs oracles, 150 shapes, worst diff " + fmt(worst);
    return worst <= 1e-5;
}

bool invariant_battery(std::string& detail) {
    ModelConfig cfg = shipped_config();
    Model m = build_model(cfg, 77);
    const std::vector<verify::SuiteResult> suites = verify::run_invariant_battery(m, 99);
    int passed = 0;
    std::string first_fail;
    for (const verify::SuiteResult& s : suites) {
        if (s.pass)
            ++passed;
        else if (first_fail.empty())
            first_fail = s.name + ": " + s.detail;
    }
    std::ostringstream msg;
    msg << passed << "/" << suites.size() << " suites";
    if (!first_fail.empty()) msg << "; first failure " << first_fail;
    detail = msg.str();
    return passed == static_cast<int>(suites.size());
}

bool determinism_persistence(std::string& detail) {
    const std::string dir = "/tmp/lmsf_acceptance";
    if (std::system(("mkdir -p " + dir).c_str()) != 0) {
        detail = "could not create scratch directory";
        return false;
    }

    ModelConfig cfg = shipped_config();
    Model a = build_model(cfg, 123);
    Model b = build_model(cfg, 123);
    save_weights(dir + "/a.bin", to_store(a, Form::train));
    save_weights(dir + "/b.bin", to_store(b, Form::train));
    if (file_bytes(dir + "/a.bin") != file_bytes(dir + "/b.bin")) {
        detail = "same seed produced different weight files";
        return false;
    }

    Model reloaded = model_from_store(load_weights(dir + "/a.bin"));
    save_weights(dir + "/c.bin", to_store(reloaded, Form::train));
    if (file_bytes(dir + "/a.bin") != file_bytes(dir + "/c.bin")) {
        detail = "save/load round-trip changed bytes";
        return false;
    }

    cfg.input_size = 64;
    Model m = build_model(cfg, 9);
    m.fuse_all();
    std::mt19937 gen(14);
    Tensor img = random_image(64, gen);
    Tensor logits1 = m.forward(img, Form::deploy, 1);
    Tensor logits2 = m.forward(img, Form::deploy, 1);
    if (std::memcmp(logits1.data(), logits2.data(), logits1.size() * sizeof(float)) != 0) {
        detail = "repeated forward produced different logits";
        return false;
    }
    if (label_map_from_logits(logits1).labels != label_map_from_logits(logits2).labels) {
        detail = "repeated inference produced different masks";
        return false;
    }
    detail = "identical weight bytes, round-trip bytes and repeated-inference masks";
    return true;
}

bool instance_extraction(std::string& detail) {
    std::mt19937 gen(31);
    std::uniform_int_distribution<int> side(8, 40);
    std::uniform_int_distribution<int> cls(1, 4);

    for (int run = 0; run < 100; ++run) {
        const int h = side(gen), w = side(gen);
        LabelMap map;
        map.h = h;
        map.w = w;
        map.labels.assign(static_cast<std::size_t>(h) * w, 0);

        std::uniform_int_distribution<int> ry(0, h - 1), rx(0, w - 1);
        const int rects = 3 + run % 4;
        for (int r = 0; r < rects; ++r) {
            int y0 = ry(gen), y1 = ry(gen), x0 = rx(gen), x1 = rx(gen);
            if (y1 < y0) std::swap(y0, y1);
            if (x1 < x0) std::swap(x0, x1);
            const int c = cls(gen);
            for (int y = y0; y <= y1; ++y)
                for (int x = x0; x <= x1; ++x) map.labels[y * w + x] = c;
        }
        std::uniform_real_distribution<float> coin(0.0f, 1.0f);
        for (int& v : map.labels)
            if (coin(gen) < 0.15f) v = cls(gen) % 5;  // fragmenting speckle

        const int min_area = (run % 2 == 0) ? 1 : 1 + run % 4;
        const std::vector<Instance> got = instances_from_labels(map, min_area);
        std::vector<std::pair<int, int>> mine, oracle;
        for (const Instance& it : got) mine.emplace_back(it.class_id, it.area);
        for (const verify::FloodRegion& r :
             verify::flood_fill_regions(map.labels, h, w, min_area))
            oracle.emplace_back(r.label, r.area);
        std::sort(mine.begin(), mine.end());
        std::sort(oracle.begin(), oracle.end());
        if (mine != oracle) {
            detail = "run " + std::to_string(run) + ": component sets diverge from flood fill";
            return false;
        }

        // Disjointness and (at min_area 1) exact coverage of labeled pixels.
        std::vector<int> hits(map.labels.size(), 0);
        long long covered = 0;
        for (const Instance& it : got)
            for (std::size_t i = 0; i < it.mask.size(); ++i)
                if (it.mask[i]) {
                    ++hits[i];
                    ++covered;
                }
        long long labeled = 0;
        for (std::size_t i = 0; i < map.labels.size(); ++i) {
            if (hits[i] > 1) {
                detail = "run " + std::to_string(run) + ": instance masks overlap";
                return false;
            }
            if (hits[i] == 1 && map.labels[i] == 0) {
                detail = "run " + std::to_string(run) + ": instance covers background";
                return false;
            }
            if (map.labels[i] != 0) ++labeled;
        }
        if (min_area == 1 && covered != labeled) {
            detail = "run " + std::to_string(run) + ": labeled pixels not fully covered";
            return false;
        }
    }
    detail = "flood-fill agreement, disjointness and coverage on 100 label maps";
    return true;
}

struct Criterion {
    const char* name;
    bool (*run)(std::string&);
};

}  // namespace

int main() {
    const Criterion criteria[] = {
        {"reparameterization-equivalence", reparam_equivalence},
        {"efficiency-envelope", efficiency_envelope},
        {"fusion-latency-ordering", fusion_latency},
        {"kernel-oracles", kernel_oracles},
        {"invariant-battery", invariant_battery},
        {"determinism-persistence", determinism_persistence},
        {"instance-extraction", instance_extraction},
    };

    int failures = 0;
    int index = 0;
    for (const Criterion& c : criteria) {
        ++index;
        std::string detail;
        bool pass = false;
        try {
            pass = c.run(detail);
        } catch (const std::exception& e) {
            detail = std::string("exception: ") + e.what();
        }
        if (!pass) ++failures;
        std::printf("%s  %d %-34s %s\n", pass ? "PASS" : "FAIL", index, c.name, detail.c_str());
    }
    std::printf("acceptance: %d/7 criteria passed\n", 7 - failures);
    return failures == 0 ? 0 : 1;
}
