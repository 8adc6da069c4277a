#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "lmsf/backbone.hpp"
#include "lmsf/config.hpp"
#include "lmsf/head.hpp"
#include "lmsf/neck.hpp"
#include "lmsf/weights.hpp"

namespace lmsf {

enum class ParamKind {
    conv_weight,
    conv_bias,
    gn_gamma,
    gn_beta,
    stat_mean,
    stat_var,
    stat_gamma,
    stat_beta,
};

// One named parameter tensor, as enumerated by Model::walk. The enumeration
// order is fixed, so it doubles as the serialization and init order.
struct ParamRef {
    std::string name;
    ParamKind kind;
    std::vector<int> dims;
    std::vector<float>* data;
    int fan_in = 0;  // conv_weight only
};

struct Model {
    ModelConfig cfg;
    std::string config_text;   // verbatim blob carried into weight files
    Form form = Form::train;   // which parameter set is authoritative
    bool fused_ready = false;  // deploy path usable

    Backbone backbone;
    LmfeAlign align3, align4, align5;
    SsffParams ssff;
    ConvLayer p3_edge_gate;  // present only when cfg.edge_gate_p3
    TfeParams tfe;
    LmshParams head;

    Tensor forward(const Tensor& image, Form f, int out_stride) const;
    void fuse_all();

    // Enumerates every parameter of the given form in a fixed order.
    void walk(Form f, const std::function<void(const ParamRef&)>& fn);
    std::uint64_t param_count(Form f);
};

// Deterministic construction: fixed seed -> bitwise-identical parameters.
Model build_model(const ModelConfig& cfg, std::uint64_t seed);

WeightStore to_store(Model& m, Form f);
Model model_from_store(const WeightStore& store);

struct ModuleCost {
    std::string name;
    std::uint64_t params = 0;
    std::uint64_t flops = 0;
};

// Parameter counts from layer shapes; FLOPs (= 2 x MACs) from a symbolic
// forward at the configured input size. Runs no arithmetic.
struct ProfileReport {
    Form form = Form::train;
    int input_size = 0;
    int out_stride = 1;
    std::vector<ModuleCost> modules;
    std::uint64_t total_params = 0;
    std::uint64_t total_flops = 0;
};

ProfileReport profile_model(Model& m, Form f);
std::string format_report(const ProfileReport& r);

// Train-vs-deploy certificates for all four stage bodies, at the given
// square spatial size.
struct BlockCertificate {
    std::string name;
    EquivalenceReport report;
};
std::vector<BlockCertificate> certify_blocks(const Model& m, int spatial, int trials, double tol,
                                             std::uint64_t seed);

}  // namespace lmsf
