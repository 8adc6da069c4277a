#include "lmsf/config.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "lmsf/contract.hpp"

namespace lmsf {

namespace {

// Nearest multiple of 8, floor 8, so every width divides cleanly for the
// default group-norm and gate-bottleneck settings.
int scale_width(int base, float multiplier) {
    const int raw = static_cast<int>(std::lround(base * multiplier));
    const int snapped = ((raw + 4) / 8) * 8;
    return snapped < 8 ? 8 : snapped;
}

std::string fmt_float(float v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.9g", static_cast<double>(v));
    return buf;
}

}  // namespace

int ModelConfig::stem_width() const { return scale_width(kBaseStem, width_multiplier); }

std::array<int, 4> ModelConfig::stage_widths() const {
    std::array<int, 4> w;
    for (int i = 0; i < 4; ++i) w[i] = scale_width(kBaseWidths[i], width_multiplier);
    return w;
}

void ModelConfig::validate() const {
    require(input_size >= 32 && input_size % 32 == 0,
            "input_size must be a positive multiple of 32, got " + std::to_string(input_size));
    require(width_multiplier > 0.0f, "width_multiplier must be > 0");
    require(fusion_channels >= 1, "fusion_channels must be >= 1");
    require(head_channels >= 1, "head_channels must be >= 1");
    require(head_blocks >= 1, "head_blocks must be >= 1");
    require(ema_reduction >= 1, "ema_reduction must be >= 1");
    require(spatial_kernel >= 1 && spatial_kernel % 2 == 1,
            "spatial_kernel must be odd, got " + std::to_string(spatial_kernel));
    require(gn_groups >= 1, "gn_groups must be >= 1");
    require(num_classes >= 1, "num_classes must be >= 1");
    require(min_area >= 1, "min_area must be >= 1");
    require(lambda_gc >= 0.0f && lambda_edge >= 0.0f, "loss weights must be >= 0");
    for (int s : ema_strides)
        require(s == 8 || s == 16 || s == 32,
                "ema_strides entries must be 8, 16 or 32, got " + std::to_string(s));

    require(fusion_channels % gn_groups == 0,
            "fusion_channels must be divisible by gn_groups");
    require(head_channels % gn_groups == 0, "head_channels must be divisible by gn_groups");
    require(fusion_channels % ema_reduction == 0,
            "fusion_channels must be divisible by ema_reduction");
    require(stem_width() % gn_groups == 0,
            "stem width " + std::to_string(stem_width()) + " must be divisible by gn_groups");
    const std::array<int, 4> widths = stage_widths();
    for (int i = 0; i < 4; ++i) {
        require(widths[i] % 2 == 0 && widths[i] % gn_groups == 0,
                "stage width " + std::to_string(widths[i]) +
                    " must be even and divisible by gn_groups");
        if (ema_strides.count(stage_stride(i)))
            require((widths[i] / 2) % ema_reduction == 0,
                    "stage width " + std::to_string(widths[i]) +
                        " incompatible with ema_reduction at stride " +
                        std::to_string(stage_stride(i)));
    }
}

std::string ModelConfig::serialize() const {
    std::ostringstream out;
    out << "input_size=" << input_size << "\n";
    out << "width_multiplier=" << fmt_float(width_multiplier) << "\n";
    out << "fusion_channels=" << fusion_channels << "\n";
    out << "head_channels=" << head_channels << "\n";
    out << "head_blocks=" << head_blocks << "\n";
    out << "ema_reduction=" << ema_reduction << "\n";
    out << "spatial_kernel=" << spatial_kernel << "\n";
    out << "gn_groups=" << gn_groups << "\n";
    out << "lambda_gc=" << fmt_float(lambda_gc) << "\n";
    out << "lambda_edge=" << fmt_float(lambda_edge) << "\n";
    out << "num_classes=" << num_classes << "\n";
    out << "min_area=" << min_area << "\n";
    out << "ema_strides=";
    bool first = true;
    for (int s : ema_strides) {
        if (!first) out << ",";
        out << s;
        first = false;
    }
    out << "\n";
    out << "edge_gate_p3=" << (edge_gate_p3 ? 1 : 0) << "\n";
    return out.str();
}

namespace {

int parse_int(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const int v = std::stoi(value, &used);
        require(used == value.size(), "trailing characters");
        return v;
    } catch (const ContractViolation&) {
        throw;
    } catch (...) {
        contract_fail("config: bad integer for " + key + ": '" + value + "'");
    }
}

float parse_float(const std::string& key, const std::string& value) {
    char* end = nullptr;
    const float v = std::strtof(value.c_str(), &end);
    require(end == value.c_str() + value.size(),
            "config: bad number for " + key + ": '" + value + "'");
    return v;
}

std::string trim(const std::string& s) {
    const std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

}  // namespace

ModelConfig parse_config(const std::string& text) {
    ModelConfig cfg;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;

        const std::size_t eq = line.find('=');
        require(eq != std::string::npos, "config: expected key=value, got '" + line + "'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));

        if (key == "input_size") cfg.input_size = parse_int(key, value);
        else if (key == "width_multiplier") cfg.width_multiplier = parse_float(key, value);
        else if (key == "fusion_channels") cfg.fusion_channels = parse_int(key, value);
        else if (key == "head_channels") cfg.head_channels = parse_int(key, value);
        else if (key == "head_blocks") cfg.head_blocks = parse_int(key, value);
        else if (key == "ema_reduction") cfg.ema_reduction = parse_int(key, value);
        else if (key == "spatial_kernel") cfg.spatial_kernel = parse_int(key, value);
        else if (key == "gn_groups") cfg.gn_groups = parse_int(key, value);
        else if (key == "lambda_gc") cfg.lambda_gc = parse_float(key, value);
        else if (key == "lambda_edge") cfg.lambda_edge = parse_float(key, value);
        else if (key == "num_classes") cfg.num_classes = parse_int(key, value);
        else if (key == "min_area") cfg.min_area = parse_int(key, value);
        else if (key == "edge_gate_p3") cfg.edge_gate_p3 = parse_int(key, value) != 0;
        else if (key == "ema_strides") {
            cfg.ema_strides.clear();
            std::istringstream list(value);
            std::string item;
            while (std::getline(list, item, ','))
                if (!trim(item).empty()) cfg.ema_strides.insert(parse_int(key, trim(item)));
        } else {
            contract_fail("config: unknown key '" + key + "'");
        }
    }
    cfg.validate();
    return cfg;
}

ModelConfig load_config_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), "cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

}  // namespace lmsf
