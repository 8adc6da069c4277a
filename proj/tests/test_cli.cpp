#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <set>
#include <string>

#include <json.hpp>

#include "lmsf/config.hpp"
#include "lmsf/image_io.hpp"
#include "lmsf/model.hpp"
#include "lmsf/weights.hpp"

using namespace lmsf;

namespace {

const std::string kBin = LMSF_BIN;
const std::string kDir = "/tmp/lmsf_cli";

struct RunResult {
    int exit_code = -1;
    std::string out;  // stdout + stderr
};

RunResult run(const std::string& args) {
    const std::string log = kDir + "/last_run.log";
    const int rc = std::system((kBin + " " + args + " > " + log + " 2>&1").c_str());
    RunResult r;
    r.exit_code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
    std::ifstream in(log);
    r.out.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    return r;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

ModelConfig tiny_cfg() {
    ModelConfig cfg;
    cfg.input_size = 64;
    cfg.width_multiplier = 0.5f;
    cfg.fusion_channels = 32;
    cfg.head_channels = 16;
    return cfg;
}

std::string write_tiny_cfg() {
    const std::string path = kDir + "/tiny.cfg";
    std::ofstream out(path);
    out << tiny_cfg().serialize();
    return path;
}

// 3-channel test image: two colored blocks over noise, written as binary P6
// with a header comment.
std::string write_scene(int w, int h) {
    const std::string path = kDir + "/scene.ppm";
    std::ofstream out(path, std::ios::binary);
    out << "P6\n# synthetic scene\n" << w << " " << h << "\n255\n";
    unsigned state = 12345;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            unsigned char rgb[3];
            if (x >= w / 8 && x < w / 2 && y >= h / 8 && y < h / 2) {
                rgb[0] = 220, rgb[1] = 40, rgb[2] = 40;
            } else {
                state = state * 1664525u + 1013904223u;
                rgb[0] = rgb[1] = rgb[2] = static_cast<unsigned char>(state >> 26);
            }
            out.write(reinterpret_cast<const char*>(rgb), 3);
        }
    return path;
}

struct Fixture {
    Fixture() {
        if (std::system(("mkdir -p " + kDir).c_str()) != 0) std::abort();
    }
};
Fixture fixture;

}  // namespace

TEST_CASE("profile prints a module table and can persist the built weights") {
    const std::string cfg = write_tiny_cfg();
    RunResult r = run("profile --config " + cfg + " --seed 7 --save " + kDir + "/train.bin");
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("2 x MACs") != std::string::npos);
    CHECK(r.out.find("total") != std::string::npos);

    // Same seed reproduces the file byte for byte; a different seed does not.
    RunResult again =
        run("profile --config " + cfg + " --seed 7 --save " + kDir + "/train2.bin");
    CHECK(again.exit_code == 0);
    CHECK(slurp(kDir + "/train.bin") == slurp(kDir + "/train2.bin"));
    run("profile --config " + cfg + " --seed 8 --save " + kDir + "/train3.bin");
    CHECK(slurp(kDir + "/train.bin") != slurp(kDir + "/train3.bin"));
}

TEST_CASE("fuse converts a train store to deploy form once") {
    RunResult r = run("fuse --weights " + kDir + "/train.bin --out " + kDir + "/deploy.bin");
    CHECK(r.exit_code == 0);
    CHECK(load_weights(kDir + "/deploy.bin").form == Form::deploy);

    RunResult twice =
        run("fuse --weights " + kDir + "/deploy.bin --out " + kDir + "/deploy2.bin");
    CHECK(twice.exit_code != 0);
    CHECK(twice.out.find("deploy form") != std::string::npos);
}

TEST_CASE("profile reads weight files in either form") {
    RunResult dep = run("profile --weights " + kDir + "/deploy.bin --form deploy");
    CHECK(dep.exit_code == 0);
    CHECK(dep.out.find("form: deploy") != std::string::npos);

    // A deploy store carries no branch parameters to run the train path.
    RunResult bad = run("profile --weights " + kDir + "/deploy.bin --form train");
    CHECK(bad.exit_code != 0);
}

TEST_CASE("infer writes a valid class-id graymap and deterministic outputs") {
    const std::string scene = write_scene(96, 80);
    RunResult r = run("infer --weights " + kDir + "/deploy.bin --image " + scene + " --mask " +
                      kDir + "/mask.pgm --json " + kDir + "/inst.json");
    CHECK(r.exit_code == 0);

    ImageU8 mask = read_p5(kDir + "/mask.pgm");
    CHECK(mask.h == 80);
    CHECK(mask.w == 96);
    for (std::uint8_t v : mask.pixels) CHECK(v <= 4);

    nlohmann::json inst = nlohmann::json::parse(slurp(kDir + "/inst.json"));
    REQUIRE(inst.is_array());
    int last_class = 0;
    for (const auto& it : inst) {
        CHECK(it["class"].get<int>() >= 1);
        CHECK(it["class"].get<int>() <= 4);
        CHECK(it["area"].get<int>() >= tiny_cfg().min_area);
        REQUIRE(it["bbox"].size() == 4);
        CHECK(it["bbox"][0].get<int>() <= it["bbox"][2].get<int>());
        CHECK(it["bbox"][1].get<int>() <= it["bbox"][3].get<int>());
        CHECK(it["class"].get<int>() >= last_class);  // class-ascending order
        last_class = it["class"].get<int>();
    }

    RunResult again = run("infer --weights " + kDir + "/deploy.bin --image " + scene +
                          " --mask " + kDir + "/mask2.pgm --json " + kDir + "/inst2.json");
    CHECK(again.exit_code == 0);
    CHECK(slurp(kDir + "/mask.pgm") == slurp(kDir + "/mask2.pgm"));
    CHECK(slurp(kDir + "/inst.json") == slurp(kDir + "/inst2.json"));
}

TEST_CASE("all-zero weights segment everything as background") {
    Model zero = build_model(tiny_cfg(), 1);
    zero.walk(Form::train, [](const ParamRef& p) {
        std::fill(p.data->begin(), p.data->end(), 0.0f);
    });
    save_weights(kDir + "/zero.bin", to_store(zero, Form::train));

    RunResult r = run("infer --weights " + kDir + "/zero.bin --image " + kDir +
                      "/scene.ppm --mask " + kDir + "/zmask.pgm --json " + kDir + "/z.json");
    CHECK(r.exit_code == 0);
    ImageU8 mask = read_p5(kDir + "/zmask.pgm");
    const std::set<std::uint8_t> values(mask.pixels.begin(), mask.pixels.end());
    CHECK(values == std::set<std::uint8_t>{0});
    CHECK(nlohmann::json::parse(slurp(kDir + "/z.json")).empty());
}

TEST_CASE("infer fails cleanly on unreadable input") {
    RunResult r = run("infer --weights " + kDir + "/deploy.bin --image " + kDir +
                      "/nope.ppm --mask " + kDir + "/m.pgm");
    CHECK(r.exit_code != 0);
    CHECK(r.out.find("error") != std::string::npos);
}

TEST_CASE("bench reports latency statistics and rejects short sessions") {
    const std::string cfg = kDir + "/tiny.cfg";
    RunResult r = run("bench --config " + cfg + " --form deploy --runs 10");
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("median") != std::string::npos);
    CHECK(r.out.find("fps") != std::string::npos);

    RunResult bad = run("bench --config " + cfg + " --runs 9");
    CHECK(bad.exit_code != 0);
    CHECK(bad.out.find("10") != std::string::npos);
}

TEST_CASE("selfcheck passes clean and fails with an injected fault") {
    const std::string cfg = kDir + "/tiny.cfg";
    RunResult good = run("selfcheck --config " + cfg);
    CHECK(good.exit_code == 0);
    CHECK(good.out.find("FAIL") == std::string::npos);
    CHECK(good.out.find("fusion-certificates") != std::string::npos);

    RunResult bad = run("selfcheck --config " + cfg + " --inject-fault");
    CHECK(bad.exit_code != 0);
    CHECK(bad.out.find("FAIL  fusion-certificates") != std::string::npos);
}

TEST_CASE("config errors surface with the offending key") {
    std::ofstream(kDir + "/bad.cfg") << "input_size=630\n";
    RunResult r = run("profile --config " + kDir + "/bad.cfg");
    CHECK(r.exit_code != 0);
    CHECK(r.out.find("input_size") != std::string::npos);
}
