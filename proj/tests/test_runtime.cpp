#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <random>
#include <string>

#include "lmsf/config.hpp"
#include "lmsf/contract.hpp"
#include "lmsf/kernels.hpp"
#include "lmsf/model.hpp"
#include "lmsf/ops.hpp"
#include "lmsf/profiler.hpp"
#include "lmsf/tensor.hpp"
#include "lmsf/weights.hpp"
#include "verify/oracles.hpp"

using namespace lmsf;

namespace {

ModelConfig tiny_cfg() {
    ModelConfig cfg;
    cfg.input_size = 64;
    cfg.width_multiplier = 0.5f;
    cfg.fusion_channels = 32;
    cfg.head_channels = 16;
    return cfg;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void spit(const std::string& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary);
    REQUIRE(out.good());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

std::string tmp_path(const std::string& stem) { return "/tmp/lmsf_rt_" + stem; }

Tensor random_image(int size, std::mt19937& gen) {
    Tensor t(1, 3, size, size);
    std::uniform_real_distribution<float> dist(0.0f, 1.0f);
    for (std::size_t i = 0; i < t.size(); ++i) t.data()[i] = dist(gen);
    return t;
}

}  // namespace

TEST_CASE("config text round-trips through parse and serialize") {
    ModelConfig cfg = tiny_cfg();
    cfg.lambda_gc = 0.05f;
    cfg.ema_strides = {8, 32};
    cfg.edge_gate_p3 = true;
    const std::string text = cfg.serialize();
    ModelConfig back = parse_config(text);
    CHECK(back.serialize() == text);
    CHECK(back.input_size == 64);
    CHECK(back.ema_strides == std::set<int>{8, 32});
    CHECK(back.edge_gate_p3);
}

TEST_CASE("config accepts comments and blank lines") {
    ModelConfig cfg = parse_config("# tuned for tests\n\ninput_size=96\n  gn_groups = 4 \n");
    CHECK(cfg.input_size == 96);
    CHECK(cfg.gn_groups == 4);
}

TEST_CASE("config rejections name the offending field") {
    ModelConfig bad;
    bad.input_size = 630;
    CHECK_THROWS_WITH_AS(bad.validate(),
                         "input_size must be a positive multiple of 32, got 630",
                         ContractViolation);
    CHECK_THROWS_AS(parse_config("input_size=630\n"), ContractViolation);
    CHECK_THROWS_AS(parse_config("frobnicate=1\n"), ContractViolation);
    CHECK_THROWS_AS(parse_config("input_size=sixty\n"), ContractViolation);
    CHECK_THROWS_AS(parse_config("ema_strides=8,64\n"), ContractViolation);

    ModelConfig odd = tiny_cfg();
    odd.fusion_channels = 30;
    CHECK_THROWS_AS(odd.validate(), ContractViolation);
}

TEST_CASE("identical seeds build byte-identical weight files") {
    ModelConfig cfg = tiny_cfg();
    Model a = build_model(cfg, 7);
    Model b = build_model(cfg, 7);
    save_weights(tmp_path("det_a.bin"), to_store(a, Form::train));
    save_weights(tmp_path("det_b.bin"), to_store(b, Form::train));
    CHECK(slurp(tmp_path("det_a.bin")) == slurp(tmp_path("det_b.bin")));

    Model c = build_model(cfg, 8);
    save_weights(tmp_path("det_c.bin"), to_store(c, Form::train));
    CHECK(slurp(tmp_path("det_a.bin")) != slurp(tmp_path("det_c.bin")));
}

TEST_CASE("weight save/load/save is byte stable") {
    Model m = build_model(tiny_cfg(), 11);
    save_weights(tmp_path("rt1.bin"), to_store(m, Form::train));
    WeightStore loaded = load_weights(tmp_path("rt1.bin"));
    save_weights(tmp_path("rt2.bin"), loaded);
    CHECK(slurp(tmp_path("rt1.bin")) == slurp(tmp_path("rt2.bin")));
}

TEST_CASE("weight file corruption is caught by name") {
    Model m = build_model(tiny_cfg(), 12);
    save_weights(tmp_path("good.bin"), to_store(m, Form::train));
    const std::string bytes = slurp(tmp_path("good.bin"));

    std::string bad_magic = bytes;
    bad_magic[0] = 'X';
    spit(tmp_path("badmagic.bin"), bad_magic);
    CHECK_THROWS_WITH_AS(load_weights(tmp_path("badmagic.bin")),
                         doctest::Contains("LMSF"), ContractViolation);

    spit(tmp_path("short.bin"), bytes.substr(0, bytes.size() / 2));
    CHECK_THROWS_WITH_AS(load_weights(tmp_path("short.bin")),
                         doctest::Contains("truncated"), ContractViolation);

    CHECK_THROWS_AS(load_weights(tmp_path("missing_file.bin")), ContractViolation);
}

TEST_CASE("a fused export loads into the single-path layers only") {
    std::mt19937 gen(21);
    Model m = build_model(tiny_cfg(), 13);
    Tensor img = random_image(64, gen);
    Tensor train_out = m.forward(img, Form::train, 8);

    m.fuse_all();
    Tensor deploy_out = m.forward(img, Form::deploy, 8);
    CHECK(max_abs_diff(train_out, deploy_out) <= 1e-4);

    save_weights(tmp_path("deploy.bin"), to_store(m, Form::deploy));
    WeightStore store = load_weights(tmp_path("deploy.bin"));
    CHECK(store.form == Form::deploy);
    for (const WeightEntry& e : store.entries) {
        CAPTURE(e.name);
        CHECK(e.name.find(".b0.") == std::string::npos);
        CHECK(e.name.find(".norm.") == std::string::npos);
    }

    Model loaded = model_from_store(store);
    CHECK(loaded.form == Form::deploy);
    CHECK_FALSE(loaded.backbone.stages[0].block.units[0].rvb.has_branches);
    CHECK(max_abs_diff(loaded.forward(img, Form::deploy, 8), deploy_out) == 0.0);
    CHECK_THROWS_AS(loaded.forward(img, Form::train, 8), ContractViolation);
}

TEST_CASE("train-form stores round-trip through the loader") {
    std::mt19937 gen(22);
    Model m = build_model(tiny_cfg(), 14);
    save_weights(tmp_path("train.bin"), to_store(m, Form::train));
    Model loaded = model_from_store(load_weights(tmp_path("train.bin")));
    Tensor img = random_image(64, gen);
    CHECK(max_abs_diff(loaded.forward(img, Form::train, 8), m.forward(img, Form::train, 8)) ==
          0.0);
}

TEST_CASE("the loader rejects missing, surplus and misshapen entries") {
    Model m = build_model(tiny_cfg(), 15);
    WeightStore store = to_store(m, Form::train);

    WeightStore missing = store;
    const std::string dropped = missing.entries.back().name;
    missing.entries.pop_back();
    CHECK_THROWS_WITH_AS(model_from_store(missing), doctest::Contains(dropped.c_str()),
                         ContractViolation);

    WeightStore surplus = store;
    WeightEntry extra;
    extra.name = "backbone.phantom.weight";
    extra.dims = {1};
    extra.data = {0.0f};
    surplus.entries.push_back(extra);
    CHECK_THROWS_AS(model_from_store(surplus), ContractViolation);

    WeightStore bent = store;
    bent.entries[0].dims = {1, bent.entries[0].dims[1], 3, 3};
    bent.entries[0].data.resize(static_cast<std::size_t>(bent.entries[0].dims[1]) * 9);
    CHECK_THROWS_WITH_AS(model_from_store(bent), doctest::Contains(bent.entries[0].name.c_str()),
                         ContractViolation);

    WeightStore skewed = store;
    skewed.config_text = "input_size=630\n";
    CHECK_THROWS_WITH_AS(model_from_store(skewed), doctest::Contains("input_size"),
                         ContractViolation);
}

TEST_CASE("whole model emits logits at every output stride") {
    std::mt19937 gen(31);
    Model m = build_model(tiny_cfg(), 16);
    Tensor img = random_image(64, gen);
    CHECK(m.forward(img, Form::train, 8).shape_str() == "1x4x8x8");
    CHECK(m.forward(img, Form::train, 4).shape_str() == "1x4x16x16");
    CHECK(m.forward(img, Form::train, 1).shape_str() == "1x4x64x64");
}

TEST_CASE("repeated forwards are bitwise identical") {
    std::mt19937 gen(32);
    Model m = build_model(tiny_cfg(), 17);
    Tensor img = random_image(64, gen);
    CHECK(max_abs_diff(m.forward(img, Form::train, 4), m.forward(img, Form::train, 4)) == 0.0);
}

TEST_CASE("profiled flop total equals twice the instrumented multiply count") {
    std::mt19937 gen(33);
    Model m = build_model(tiny_cfg(), 18);
    ProfileReport rep = profile_model(m, Form::train);

    kernels::swap_conv(verify::counting_conv);
    verify::reset_counted_multiplies();
    m.forward(random_image(64, gen), Form::train, 1);
    const std::uint64_t counted = verify::counted_multiplies();
    kernels::swap_conv(nullptr);

    CHECK(rep.total_flops == 2 * counted);
}

TEST_CASE("single-layer closed forms match the documented example") {
    ConvLayer conv = make_conv(16, 32, 1, 1, 0, 1, true);
    CHECK(conv.param_count() == 544);

    profiler::Context ctx;
    {
        profiler::Bind bind(ctx);
        conv2d(Tensor::symbolic(1, 16, 80, 80), conv);
    }
    CHECK(2 * ctx.total_macs() == 6553600);
}

TEST_CASE("deploy form is strictly smaller and never costlier") {
    Model m = build_model(tiny_cfg(), 19);
    const std::uint64_t train_params = m.param_count(Form::train);
    ProfileReport train_rep = profile_model(m, Form::train);

    m.fuse_all();
    const std::uint64_t deploy_params = m.param_count(Form::deploy);
    ProfileReport deploy_rep = profile_model(m, Form::deploy);

    CHECK(deploy_params < train_params);
    CHECK(deploy_rep.total_params < train_rep.total_params);
    CHECK(deploy_rep.total_flops <= train_rep.total_flops);
}

TEST_CASE("profile totals are the sum of their modules") {
    Model m = build_model(tiny_cfg(), 20);
    ProfileReport rep = profile_model(m, Form::train);
    std::uint64_t params = 0, flops = 0;
    for (const ModuleCost& mc : rep.modules) {
        params += mc.params;
        flops += mc.flops;
    }
    CHECK(rep.total_params == params);
    CHECK(rep.total_flops == flops);
    CHECK(rep.total_params == m.param_count(Form::train));
    CHECK(format_report(rep).find("2 x MACs") != std::string::npos);
}

TEST_CASE("optional edge gate changes the parameter walk and the forward path") {
    ModelConfig gated = tiny_cfg();
    gated.edge_gate_p3 = true;
    Model m = build_model(gated, 23);
    bool saw_gate = false;
    m.walk(Form::train, [&](const ParamRef& p) {
        if (p.name.rfind("ssff.edge_gate", 0) == 0) saw_gate = true;
    });
    CHECK(saw_gate);

    std::mt19937 gen(34);
    Tensor img = random_image(64, gen);
    Tensor out = m.forward(img, Form::train, 8);
    CHECK(out.shape_str() == "1x4x8x8");

    Model plain = build_model(tiny_cfg(), 23);
    CHECK(m.param_count(Form::train) ==
          plain.param_count(Form::train) + 32 + 1);  // 1x1 C_f -> 1 plus bias
}
