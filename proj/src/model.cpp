#include "lmsf/model.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <map>
#include <random>
#include <sstream>

#include "lmsf/contract.hpp"
#include "lmsf/ops.hpp"
#include "lmsf/profiler.hpp"

namespace lmsf {

namespace {

GroupNormLayer make_gn(int channels, int groups) {
    GroupNormLayer gn;
    gn.channels = channels;
    gn.num_groups = groups;
    gn.gamma.assign(channels, 1.0f);
    gn.beta.assign(channels, 0.0f);
    return gn;
}

AffineNormStats make_stats(int channels) {
    AffineNormStats st;
    st.mean.assign(channels, 0.0f);
    st.var.assign(channels, 1.0f);
    st.gamma.assign(channels, 1.0f);
    st.beta.assign(channels, 0.0f);
    return st;
}

RepBranch conv_branch(ConvLayer conv) {
    RepBranch b;
    b.norm = make_stats(conv.out_ch);
    b.conv = std::move(conv);
    return b;
}

RvbUnit make_rvb(int c) {
    RvbUnit u;
    u.token.branches.push_back(conv_branch(make_conv(c, c, 3, 1, 1, c, false)));
    u.token.branches.push_back(conv_branch(make_conv(c, c, 1, 1, 0, c, false)));
    RepBranch id;
    id.identity = true;
    id.norm = make_stats(c);
    u.token.branches.push_back(id);
    u.expand.branches.push_back(conv_branch(make_conv(c, 2 * c, 1, 1, 0, 1, false)));
    u.project.branches.push_back(conv_branch(make_conv(2 * c, c, 1, 1, 0, 1, false)));
    // Fused-side geometry, so a deploy-form store can load straight into it.
    u.token_fused = make_conv(c, c, 3, 1, 1, c, true);
    u.expand_fused = make_conv(c, 2 * c, 1, 1, 0, 1, true);
    u.project_fused = make_conv(2 * c, c, 1, 1, 0, 1, true);
    return u;
}

EmaParams make_ema(int c, int r, int k) {
    EmaParams e;
    e.mix1 = make_conv(c, c / r, 1, 1, 0, 1, true);
    e.mix2 = make_conv(c / r, c, 1, 1, 0, 1, true);
    e.spatial_dw = make_conv(c, c, k, 1, (k - 1) / 2, c, true);
    return e;
}

C2fProBlock make_c2f(int width, bool ema_on, const ModelConfig& cfg) {
    C2fProBlock b;
    b.in_conv = make_conv(width, width, 1, 1, 0, 1, true);
    b.out_conv = make_conv(2 * width, width, 1, 1, 0, 1, true);
    const int mid = width / 2;
    for (RvbEmaUnit& u : b.units) {
        u.rvb = make_rvb(mid);
        u.ema_enabled = ema_on;
        if (ema_on) u.ema = make_ema(mid, cfg.ema_reduction, cfg.spatial_kernel);
    }
    return b;
}

SepDown make_down(int from, int to, int gn_groups) {
    SepDown d;
    d.dw = make_conv(from, from, 3, 2, 1, from, false);
    d.gn1 = make_gn(from, gn_groups);
    d.pw = make_conv(from, to, 1, 1, 0, 1, false);
    d.gn2 = make_gn(to, gn_groups);
    return d;
}

LmfeAlign make_align(int from, int cf, int gn_groups) {
    LmfeAlign a;
    a.proj = make_conv(from, cf, 1, 1, 0, 1, false);
    a.gn = make_gn(cf, gn_groups);
    return a;
}

Model assemble(const ModelConfig& cfg) {
    cfg.validate();
    Model m;
    m.cfg = cfg;
    m.config_text = cfg.serialize();

    const int cf = cfg.fusion_channels;
    const int ch = cfg.head_channels;
    const std::array<int, 4> widths = cfg.stage_widths();

    m.backbone.stem_conv = make_conv(3, cfg.stem_width(), 3, 2, 1, 1, false);
    m.backbone.stem_gn = make_gn(cfg.stem_width(), cfg.gn_groups);
    int prev = cfg.stem_width();
    for (int i = 0; i < 4; ++i) {
        m.backbone.stages[i].down = make_down(prev, widths[i], cfg.gn_groups);
        m.backbone.stages[i].block =
            make_c2f(widths[i], cfg.ema_strides.count(cfg.stage_stride(i)) > 0, cfg);
        prev = widths[i];
    }

    m.align3 = make_align(widths[1], cf, cfg.gn_groups);
    m.align4 = make_align(widths[2], cf, cfg.gn_groups);
    m.align5 = make_align(widths[3], cf, cfg.gn_groups);

    m.ssff.smp_proj = make_conv(cf, cf, 1, 1, 0, 1, true);
    m.ssff.mix1 = make_conv(6 * cf, 2 * cf, 1, 1, 0, 1, true);
    m.ssff.mix2 = make_conv(2 * cf, 3 * cf + 4, 1, 1, 0, 1, true);
    m.ssff.self3 = make_conv(cf, cf, 1, 1, 0, 1, false);
    m.ssff.self4 = make_conv(cf, cf, 1, 1, 0, 1, false);
    m.ssff.self5 = make_conv(cf, cf, 1, 1, 0, 1, false);
    m.ssff.from4to3 = make_conv(cf, cf, 1, 1, 0, 1, false);
    m.ssff.from5to4 = make_conv(cf, cf, 1, 1, 0, 1, false);
    m.ssff.from3to4 = make_conv(cf, cf, 1, 1, 0, 1, false);
    m.ssff.from4to5 = make_conv(cf, cf, 1, 1, 0, 1, false);
    if (cfg.edge_gate_p3) m.p3_edge_gate = make_conv(cf, 1, 1, 1, 0, 1, true);

    m.tfe.prior = make_conv(2 * cf, cf, 1, 1, 0, 1, true);
    m.tfe.w1 = make_conv(cf, cf / cfg.ema_reduction, 1, 1, 0, 1, true);
    m.tfe.w2 = make_conv(cf / cfg.ema_reduction, cf, 1, 1, 0, 1, true);
    m.tfe.dw3 = make_conv(cf, cf, 3, 1, 1, cf, true);
    m.tfe.dw5 = make_conv(cf, cf, 5, 1, 2, cf, true);
    m.tfe.edge_proj = make_conv(cf, 1, 1, 1, 0, 1, true);

    m.head.shared_proj = make_conv(cf, ch, 1, 1, 0, 1, true);
    m.head.shared_blocks.resize(cfg.head_blocks);
    for (SepBlock& b : m.head.shared_blocks) {
        b.dw = make_conv(ch, ch, 3, 1, 1, ch, false);
        b.gn = make_gn(ch, cfg.gn_groups);
        b.pw = make_conv(ch, ch, 1, 1, 0, 1, true);
    }
    m.head.align4 = make_conv(ch, ch, 1, 1, 0, 1, true);
    m.head.align5 = make_conv(ch, ch, 1, 1, 0, 1, true);
    m.head.gate = make_conv(3 * ch, ch, 1, 1, 0, 1, true);
    m.head.deep_mix = make_conv(2 * ch, ch, 1, 1, 0, 1, true);
    m.head.cls8 = make_conv(ch, cfg.num_classes, 1, 1, 0, 1, true);
    m.head.cls4_dw = make_conv(ch, ch, 3, 1, 1, ch, false);
    m.head.cls4_pw = make_conv(ch, cfg.num_classes, 1, 1, 0, 1, true);
    m.head.cls1 = make_conv(cfg.num_classes, cfg.num_classes, 1, 1, 0, 1, true);
    m.head.edge_head = make_conv(ch, 1, 1, 1, 0, 1, true);
    return m;
}

// ---- parameter enumeration ----

using Sink = std::function<void(const ParamRef&)>;

void walk_conv(const std::string& name, ConvLayer& c, const Sink& fn) {
    ParamRef w;
    w.name = name + ".weight";
    w.kind = ParamKind::conv_weight;
    w.dims = {c.out_ch, c.in_ch / c.groups, c.kh, c.kw};
    w.data = &c.weight;
    w.fan_in = (c.in_ch / c.groups) * c.kh * c.kw;
    fn(w);
    if (c.has_bias()) {
        ParamRef b;
        b.name = name + ".bias";
        b.kind = ParamKind::conv_bias;
        b.dims = {c.out_ch};
        b.data = &c.bias;
        fn(b);
    }
}

void walk_gn(const std::string& name, GroupNormLayer& gn, const Sink& fn) {
    ParamRef g{name + ".gamma", ParamKind::gn_gamma, {gn.channels}, &gn.gamma, 0};
    ParamRef b{name + ".beta", ParamKind::gn_beta, {gn.channels}, &gn.beta, 0};
    fn(g);
    fn(b);
}

void walk_stats(const std::string& name, AffineNormStats& st, const Sink& fn) {
    const int c = st.channels();
    ParamRef mean{name + ".mean", ParamKind::stat_mean, {c}, &st.mean, 0};
    ParamRef var{name + ".var", ParamKind::stat_var, {c}, &st.var, 0};
    ParamRef gamma{name + ".gamma", ParamKind::stat_gamma, {c}, &st.gamma, 0};
    ParamRef beta{name + ".beta", ParamKind::stat_beta, {c}, &st.beta, 0};
    fn(mean);
    fn(var);
    fn(gamma);
    fn(beta);
}

void walk_spec(const std::string& name, BranchSpec& spec, const Sink& fn) {
    for (std::size_t i = 0; i < spec.branches.size(); ++i) {
        const std::string bn = name + ".b" + std::to_string(i);
        if (!spec.branches[i].identity) walk_conv(bn + ".conv", spec.branches[i].conv, fn);
        walk_stats(bn + ".norm", spec.branches[i].norm, fn);
    }
}

void walk_rvb(const std::string& name, RvbUnit& u, Form f, const Sink& fn) {
    if (f == Form::train) {
        walk_spec(name + ".token", u.token, fn);
        walk_spec(name + ".expand", u.expand, fn);
        walk_spec(name + ".project", u.project, fn);
    } else {
        walk_conv(name + ".token", u.token_fused, fn);
        walk_conv(name + ".expand", u.expand_fused, fn);
        walk_conv(name + ".project", u.project_fused, fn);
    }
}

void walk_ema(const std::string& name, EmaParams& e, const Sink& fn) {
    walk_conv(name + ".mix1", e.mix1, fn);
    walk_conv(name + ".mix2", e.mix2, fn);
    walk_conv(name + ".spatial", e.spatial_dw, fn);
}

void walk_c2f(const std::string& name, C2fProBlock& b, Form f, const Sink& fn) {
    walk_conv(name + ".in", b.in_conv, fn);
    for (int i = 0; i < 3; ++i) {
        const std::string un = name + ".u" + std::to_string(i);
        if (b.units[i].ema_enabled) walk_ema(un + ".ema", b.units[i].ema, fn);
        walk_rvb(un, b.units[i].rvb, f, fn);
    }
    walk_conv(name + ".out", b.out_conv, fn);
}

void walk_align(const std::string& name, LmfeAlign& a, const Sink& fn) {
    walk_conv(name + ".proj", a.proj, fn);
    walk_gn(name + ".gn", a.gn, fn);
}

}  // namespace

void Model::walk(Form f, const Sink& fn) {
    walk_conv("backbone.stem.conv", backbone.stem_conv, fn);
    walk_gn("backbone.stem.gn", backbone.stem_gn, fn);
    for (int i = 0; i < 4; ++i) {
        const std::string sn = "backbone.stage" + std::to_string(i + 1);
        SepDown& d = backbone.stages[i].down;
        walk_conv(sn + ".down.dw", d.dw, fn);
        walk_gn(sn + ".down.gn1", d.gn1, fn);
        walk_conv(sn + ".down.pw", d.pw, fn);
        walk_gn(sn + ".down.gn2", d.gn2, fn);
        walk_c2f(sn + ".c2f", backbone.stages[i].block, f, fn);
    }
    walk_align("align.p3", align3, fn);
    walk_align("align.p4", align4, fn);
    walk_align("align.p5", align5, fn);

    walk_conv("ssff.smp", ssff.smp_proj, fn);
    walk_conv("ssff.mix1", ssff.mix1, fn);
    walk_conv("ssff.mix2", ssff.mix2, fn);
    walk_conv("ssff.self3", ssff.self3, fn);
    walk_conv("ssff.self4", ssff.self4, fn);
    walk_conv("ssff.self5", ssff.self5, fn);
    walk_conv("ssff.d43", ssff.from4to3, fn);
    walk_conv("ssff.d54", ssff.from5to4, fn);
    walk_conv("ssff.d34", ssff.from3to4, fn);
    walk_conv("ssff.d45", ssff.from4to5, fn);
    if (cfg.edge_gate_p3) walk_conv("ssff.edge_gate", p3_edge_gate, fn);

    walk_conv("tfe.prior", tfe.prior, fn);
    walk_conv("tfe.w1", tfe.w1, fn);
    walk_conv("tfe.w2", tfe.w2, fn);
    walk_conv("tfe.dw3", tfe.dw3, fn);
    walk_conv("tfe.dw5", tfe.dw5, fn);
    walk_conv("tfe.edge", tfe.edge_proj, fn);

    walk_conv("head.proj", head.shared_proj, fn);
    for (std::size_t i = 0; i < head.shared_blocks.size(); ++i) {
        const std::string bn = "head.blk" + std::to_string(i);
        walk_conv(bn + ".dw", head.shared_blocks[i].dw, fn);
        walk_gn(bn + ".gn", head.shared_blocks[i].gn, fn);
        walk_conv(bn + ".pw", head.shared_blocks[i].pw, fn);
    }
    walk_conv("head.align4", head.align4, fn);
    walk_conv("head.align5", head.align5, fn);
    walk_conv("head.gate", head.gate, fn);
    walk_conv("head.deepmix", head.deep_mix, fn);
    walk_conv("head.cls8", head.cls8, fn);
    walk_conv("head.cls4dw", head.cls4_dw, fn);
    walk_conv("head.cls4pw", head.cls4_pw, fn);
    walk_conv("head.cls1", head.cls1, fn);
    walk_conv("head.edge", head.edge_head, fn);
}

std::uint64_t Model::param_count(Form f) {
    std::uint64_t total = 0;
    walk(f, [&](const ParamRef& p) { total += p.data->size(); });
    return total;
}

Tensor Model::forward(const Tensor& image, Form f, int out_stride) const {
    if (f == Form::train)
        require(form == Form::train, "train-form parameters are not present in this model");
    else
        require(form == Form::deploy || fused_ready,
                "deploy-form forward requested before fusing (run fuse first)");

    FeaturePyramid pyr;
    {
        profiler::Scope scope("backbone");
        pyr = backbone.forward(image, f);
    }
    Tensor f3, f4, f5;
    {
        profiler::Scope scope("align");
        f3 = align3.forward(pyr.p3);
        f4 = align4.forward(pyr.p4);
        f5 = align5.forward(pyr.p5);
    }
    SsffOut fused;
    {
        profiler::Scope scope("ssff");
        fused = ssff_forward(f3, f4, f5, ssff);
        if (cfg.edge_gate_p3)
            fused.f3 = mul(fused.f3, sigmoid(conv2d(sobel_grad(fused.f3), p3_edge_gate)));
    }
    Tensor refined;
    {
        profiler::Scope scope("tfe");
        refined = tfe_forward(fused.f3, fused.f4, fused.f5, tfe);
    }
    profiler::Scope scope("head");
    return lmsh_forward(refined, fused.f4, fused.f5, head, out_stride);
}

void Model::fuse_all() {
    require(form == Form::train, "model holds no branch weights to fuse");
    backbone.fuse();
    fused_ready = true;
}

Model build_model(const ModelConfig& cfg, std::uint64_t seed) {
    Model m = assemble(cfg);
    std::mt19937 gen(static_cast<std::uint32_t>(seed) ^
                     static_cast<std::uint32_t>(seed >> 32));
    std::uniform_real_distribution<float> stat_gamma(0.8f, 1.2f);
    std::uniform_real_distribution<float> stat_shift(-0.1f, 0.1f);
    std::uniform_real_distribution<float> stat_var(0.5f, 1.5f);

    m.walk(Form::train, [&](const ParamRef& p) {
        switch (p.kind) {
            case ParamKind::conv_weight: {
                const float bound = std::sqrt(6.0f / static_cast<float>(p.fan_in));
                std::uniform_real_distribution<float> he(-bound, bound);
                for (float& v : *p.data) v = he(gen);
                break;
            }
            case ParamKind::conv_bias:
                std::fill(p.data->begin(), p.data->end(), 0.0f);
                break;
            case ParamKind::gn_gamma:
                std::fill(p.data->begin(), p.data->end(), 1.0f);
                break;
            case ParamKind::gn_beta:
                std::fill(p.data->begin(), p.data->end(), 0.0f);
                break;
            case ParamKind::stat_mean:
                for (float& v : *p.data) v = stat_shift(gen);
                break;
            case ParamKind::stat_var:
                for (float& v : *p.data) v = stat_var(gen);
                break;
            case ParamKind::stat_gamma:
                for (float& v : *p.data) v = stat_gamma(gen);
                break;
            case ParamKind::stat_beta:
                for (float& v : *p.data) v = stat_shift(gen);
                break;
        }
    });
    return m;
}

WeightStore to_store(Model& m, Form f) {
    if (f == Form::deploy && m.form == Form::train)
        require(m.fused_ready, "fuse before exporting deploy-form weights");
    WeightStore store;
    store.form = f;
    store.config_text = m.config_text;
    m.walk(f, [&](const ParamRef& p) {
        WeightEntry e;
        e.name = p.name;
        e.dims = p.dims;
        e.data = *p.data;
        store.entries.push_back(std::move(e));
    });
    return store;
}

Model model_from_store(const WeightStore& store) {
    Model m = assemble(parse_config(store.config_text));
    m.config_text = store.config_text;
    m.form = store.form;

    std::size_t used = 0;
    m.walk(store.form, [&](const ParamRef& p) {
        const WeightEntry* e = store.find(p.name);
        require(e != nullptr, "weight file is missing entry '" + p.name + "'");
        std::string want, got;
        for (int d : p.dims) want += (want.empty() ? "" : "x") + std::to_string(d);
        for (int d : e->dims) got += (got.empty() ? "" : "x") + std::to_string(d);
        require(e->dims == p.dims,
                "shape mismatch for entry '" + p.name + "': file has " + got + ", model needs " +
                    want);
        *p.data = e->data;
        ++used;
    });
    require(used == store.entries.size(),
            "weight file has " + std::to_string(store.entries.size() - used) +
                " entries the model does not expect");

    if (store.form == Form::deploy) {
        for (BackboneStage& s : m.backbone.stages)
            for (RvbEmaUnit& u : s.block.units) {
                u.rvb.has_branches = false;
                u.rvb.has_fused = true;
            }
        m.fused_ready = true;
    }
    return m;
}

ProfileReport profile_model(Model& m, Form f) {
    if (f == Form::deploy && m.form == Form::train && !m.fused_ready) m.fuse_all();

    ProfileReport rep;
    rep.form = f;
    rep.input_size = m.cfg.input_size;

    profiler::Context ctx;
    {
        profiler::Bind bind(ctx);
        m.forward(Tensor::symbolic(1, 3, m.cfg.input_size, m.cfg.input_size), f, rep.out_stride);
    }

    std::map<std::string, ModuleCost> by_module;
    const std::vector<std::string> order = {"backbone", "align", "ssff", "tfe", "head"};
    for (const std::string& name : order) by_module[name].name = name;

    m.walk(f, [&](const ParamRef& p) {
        const std::string module = p.name.substr(0, p.name.find('.'));
        by_module[module].params += p.data->size();
    });
    for (const auto& [scope, macs] : ctx.macs_by_scope()) {
        const std::string module = scope.substr(0, scope.find('.'));
        by_module[module].flops += 2 * macs;
    }

    for (const std::string& name : order) {
        rep.modules.push_back(by_module[name]);
        rep.total_params += by_module[name].params;
        rep.total_flops += by_module[name].flops;
    }
    return rep;
}

std::string format_report(const ProfileReport& r) {
    std::ostringstream out;
    out << "form: " << form_name(r.form) << "   input: " << r.input_size << "x" << r.input_size
        << "   out-stride: " << r.out_stride << "\n";
    out << "flop convention: 2 x MACs (bias adds not counted)\n";
    char line[128];
    std::snprintf(line, sizeof(line), "%-10s %14s %16s\n", "module", "params", "flops");
    out << line;
    for (const ModuleCost& mc : r.modules) {
        std::snprintf(line, sizeof(line), "%-10s %14llu %16llu\n", mc.name.c_str(),
                      static_cast<unsigned long long>(mc.params),
                      static_cast<unsigned long long>(mc.flops));
        out << line;
    }
    std::snprintf(line, sizeof(line), "%-10s %14llu %16llu\n", "total",
                  static_cast<unsigned long long>(r.total_params),
                  static_cast<unsigned long long>(r.total_flops));
    out << line;
    std::snprintf(line, sizeof(line), "%-10s %14.3fM %15.3fG\n", "",
                  static_cast<double>(r.total_params) / 1e6,
                  static_cast<double>(r.total_flops) / 1e9);
    out << line;
    return out.str();
}

std::vector<BlockCertificate> certify_blocks(const Model& m, int spatial, int trials, double tol,
                                             std::uint64_t seed) {
    require(m.form == Form::train && m.fused_ready,
            "block certification needs a fused train-form model");
    std::vector<BlockCertificate> certs;
    const std::array<int, 4> widths = m.cfg.stage_widths();
    for (int i = 0; i < 4; ++i) {
        const C2fProBlock& block = m.backbone.stages[i].block;
        BlockCertificate c;
        c.name = "stage" + std::to_string(i + 1) + ".c2f";
        c.report = certify_equivalence(
            [&](const Tensor& x) { return block.forward(x, Form::train); },
            [&](const Tensor& x) { return block.forward(x, Form::deploy); }, 1, widths[i],
            spatial, spatial, trials, tol, seed + i);
        certs.push_back(std::move(c));
    }
    return certs;
}

}  // namespace lmsf
