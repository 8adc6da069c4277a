#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "lmsf/bench.hpp"
#include "lmsf/config.hpp"
#include "lmsf/contract.hpp"
#include "lmsf/head.hpp"
#include "lmsf/image_io.hpp"
#include "lmsf/model.hpp"
#include "lmsf/ops.hpp"
#include "lmsf/weights.hpp"
#include "verify/invariants.hpp"

namespace {

using namespace lmsf;

struct CommonOpts {
    std::string config_path;
    std::string weights_path;
    std::string form_name = "train";
    std::uint64_t seed = 1;
};

Form parse_form(const std::string& name) {
    if (name == "train") return Form::train;
    if (name == "deploy") return Form::deploy;
    contract_fail("--form must be train or deploy, got '" + name + "'");
}

// Model from --weights when given, otherwise built from --config (or the
// defaults) with the given seed.
Model obtain_model(const CommonOpts& opt) {
    if (!opt.weights_path.empty()) return model_from_store(load_weights(opt.weights_path));
    ModelConfig cfg;
    if (!opt.config_path.empty()) cfg = load_config_file(opt.config_path);
    return build_model(cfg, opt.seed);
}

int run_profile(const CommonOpts& opt, const std::string& save_path) {
    Model m = obtain_model(opt);
    const Form f = parse_form(opt.form_name);
    std::cout << format_report(profile_model(m, f));
    if (!save_path.empty()) {
        save_weights(save_path, to_store(m, f));
        std::cout << "weights written to " << save_path << "\n";
    }
    return 0;
}

int run_fuse(const std::string& in_path, const std::string& out_path) {
    Model m = model_from_store(load_weights(in_path));
    require(m.form == Form::train,
            "weights in " + in_path + " are already in deploy form");
    m.fuse_all();
    save_weights(out_path, to_store(m, Form::deploy));
    std::cout << "fused weights written to " << out_path << "\n";
    return 0;
}

int run_infer(const std::string& weights_path, const std::string& image_path,
              const std::string& mask_path, const std::string& json_path) {
    Model m = model_from_store(load_weights(weights_path));
    const ImageU8 original = read_p6(image_path);
    const ImageU8 sized = nearest_resize(original, m.cfg.input_size, m.cfg.input_size);

    Tensor logits = m.forward(image_to_tensor(sized), m.form, 1);
    LabelMap dense = label_map_from_logits(logits);

    ImageU8 mask;
    mask.h = dense.h;
    mask.w = dense.w;
    mask.channels = 1;
    mask.pixels.resize(dense.labels.size());
    for (std::size_t i = 0; i < dense.labels.size(); ++i)
        mask.pixels[i] = static_cast<std::uint8_t>(dense.labels[i]);
    mask = nearest_resize(mask, original.h, original.w);
    write_p5(mask_path, mask);

    if (!json_path.empty()) {
        // Instances are reported in the same space as the emitted mask.
        LabelMap at_output;
        at_output.h = mask.h;
        at_output.w = mask.w;
        at_output.labels.assign(mask.pixels.begin(), mask.pixels.end());

        nlohmann::json out = nlohmann::json::array();
        for (const Instance& it : instances_from_labels(at_output, m.cfg.min_area)) {
            out.push_back({{"class", it.class_id},
                           {"area", it.area},
                           {"bbox", {it.x0, it.y0, it.x1, it.y1}}});
        }
        std::ofstream f(json_path);
        require(f.good(), "cannot open json output: " + json_path);
        f << out.dump(2) << "\n";
        require(f.good(), "failed writing json output: " + json_path);
    }
    return 0;
}

int run_bench(const CommonOpts& opt, int runs) {
    Model m = obtain_model(opt);
    const Form f = parse_form(opt.form_name);
    if (f == Form::deploy && m.form == Form::train && !m.fused_ready) m.fuse_all();
    std::cout << format_bench(bench_forward(m, f, runs, opt.seed));
    return 0;
}

int run_selfcheck(const CommonOpts& opt, bool inject_fault) {
    ModelConfig cfg;
    if (!opt.config_path.empty()) cfg = load_config_file(opt.config_path);
    Model m = build_model(cfg, opt.seed);
    m.fuse_all();
    if (inject_fault) {
        // Deliberately corrupt one fused kernel; the certificate suite must
        // notice that deploy no longer matches train.
        m.backbone.stages[0].block.units[0].rvb.token_fused.weight[0] += 0.05f;
        std::cout << "fault injected into a fused kernel\n";
    }

    int passed = 0;
    std::vector<verify::SuiteResult> results = verify::run_invariant_battery(m, opt.seed);
    for (const verify::SuiteResult& r : results) {
        if (r.pass) {
            ++passed;
            std::cout << "pass  " << r.name << "\n";
        } else {
            std::cout << "FAIL  " << r.name << "  (" << r.detail << ")\n";
        }
    }
    std::cout << "selfcheck: " << passed << "/" << results.size() << " suites passed\n";
    return passed == static_cast<int>(results.size()) ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"lmsf: lightweight multi-scale instance segmentation engine"};
    app.require_subcommand(1);

    CommonOpts opt;
    int runs = 50;
    bool inject_fault = false;
    std::string fuse_out, image_path, mask_path, json_path, save_path;

    CLI::App* profile = app.add_subcommand("profile", "analytic parameter and flop report");
    profile->add_option("--config", opt.config_path, "flat key=value config file");
    profile->add_option("--weights", opt.weights_path, "weight file (overrides --config)");
    profile->add_option("--form", opt.form_name, "train or deploy (default train)");
    profile->add_option("--seed", opt.seed, "build seed when no weights are given");
    profile->add_option("--save", save_path, "also write the profiled weights here");

    CLI::App* fuse = app.add_subcommand("fuse", "collapse branches into deploy-form weights");
    fuse->add_option("--weights", opt.weights_path, "train-form weight file")->required();
    fuse->add_option("--out", fuse_out, "output weight file")->required();

    CLI::App* infer = app.add_subcommand("infer", "segment one image");
    infer->add_option("--weights", opt.weights_path, "weight file")->required();
    infer->add_option("--image", image_path, "input image (binary P6)")->required();
    infer->add_option("--mask", mask_path, "output class-id mask (binary P5)")->required();
    infer->add_option("--json", json_path, "optional instance listing (JSON)");

    CLI::App* bench = app.add_subcommand("bench", "batch-1 latency measurement");
    bench->add_option("--config", opt.config_path, "flat key=value config file");
    bench->add_option("--weights", opt.weights_path, "weight file (overrides --config)");
    bench->add_option("--form", opt.form_name, "train or deploy (default train)");
    bench->add_option("--runs", runs, "timed runs, at least 10 (default 50)");
    bench->add_option("--seed", opt.seed, "build seed when no weights are given");

    CLI::App* selfcheck = app.add_subcommand("selfcheck", "run the invariant battery");
    selfcheck->add_option("--config", opt.config_path, "flat key=value config file");
    selfcheck->add_option("--seed", opt.seed, "build seed");
    selfcheck->add_flag("--inject-fault", inject_fault,
                        "corrupt a fused weight first (battery must fail)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (profile->parsed()) return run_profile(opt, save_path);
        if (fuse->parsed()) return run_fuse(opt.weights_path, fuse_out);
        if (infer->parsed()) return run_infer(opt.weights_path, image_path, mask_path, json_path);
        if (bench->parsed()) return run_bench(opt, runs);
        if (selfcheck->parsed()) return run_selfcheck(opt, inject_fault);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
