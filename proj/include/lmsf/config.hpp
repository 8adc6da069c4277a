#pragma once

#include <array>
#include <set>
#include <string>

namespace lmsf {

// Every knob the architecture leaves open, with calibrated defaults. Flat
// key=value text on disk; '#' starts a comment.
struct ModelConfig {
    int input_size = 640;
    float width_multiplier = 1.0f;
    int fusion_channels = 160;  // C_f: width of the neck and aligned pyramid
    int head_channels = 192;    // C_h: width of the shared head
    int head_blocks = 3;        // B: shared depthwise-separable blocks
    int ema_reduction = 4;      // r: channel-gate bottleneck ratio
    int spatial_kernel = 5;     // k: EMA spatial depthwise kernel
    int gn_groups = 8;
    float lambda_gc = 0.1f;
    float lambda_edge = 0.1f;
    int num_classes = 4;
    int min_area = 16;
    std::set<int> ema_strides = {16, 32};
    bool edge_gate_p3 = false;

    // Stage widths before width scaling: stem, then four stride-2 stages.
    static constexpr int kBaseStem = 16;
    static constexpr std::array<int, 4> kBaseWidths = {32, 64, 128, 256};

    int stem_width() const;
    std::array<int, 4> stage_widths() const;  // strides 4, 8, 16, 32
    int stage_stride(int i) const { return 4 << i; }

    void validate() const;  // violations name the offending field
    std::string serialize() const;
};

ModelConfig parse_config(const std::string& text);
ModelConfig load_config_file(const std::string& path);

}  // namespace lmsf
