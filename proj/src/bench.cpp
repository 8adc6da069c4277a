#include "lmsf/bench.hpp"

#include <algorithm>
#include <chrono>
#include <random>
#include <sstream>

#include "lmsf/contract.hpp"

namespace lmsf {

namespace {

double sorted_quantile(std::vector<double> v, double q) {
    std::sort(v.begin(), v.end());
    if (v.size() % 2 == 1 && q == 0.5) return v[v.size() / 2];
    if (q == 0.5) return 0.5 * (v[v.size() / 2 - 1] + v[v.size() / 2]);
    // Nearest-rank for the tail quantile.
    const std::size_t rank =
        std::min(v.size() - 1, static_cast<std::size_t>(q * static_cast<double>(v.size())));
    return v[rank];
}

}  // namespace

BenchReport bench_forward(const Model& m, Form f, int runs, std::uint64_t seed) {
    require(runs >= 10, "need at least 10 timed runs, got " + std::to_string(runs));

    Tensor img(1, 3, m.cfg.input_size, m.cfg.input_size);
    std::mt19937 gen(static_cast<std::uint32_t>(seed));
    std::uniform_real_distribution<float> dist(0.0f, 1.0f);
    for (std::size_t i = 0; i < img.size(); ++i) img.data()[i] = dist(gen);

    BenchReport rep;
    rep.form = f;
    rep.runs = runs;

    for (int i = 0; i < 5; ++i) m.forward(img, f, 8);
    rep.samples_ms.reserve(runs);
    for (int i = 0; i < runs; ++i) {
        const auto start = std::chrono::steady_clock::now();
        m.forward(img, f, 8);
        const auto stop = std::chrono::steady_clock::now();
        rep.samples_ms.push_back(
            std::chrono::duration<double, std::milli>(stop - start).count());
    }

    rep.median_ms = sorted_quantile(rep.samples_ms, 0.5);
    rep.p90_ms = sorted_quantile(rep.samples_ms, 0.9);
    rep.fps = 1000.0 / rep.median_ms;
    return rep;
}

std::string format_bench(const BenchReport& r) {
    std::ostringstream out;
    out.precision(3);
    out << std::fixed;
    out << "form: " << form_name(r.form) << "   runs: " << r.runs << " (5 warmup)\n";
    out << "median: " << r.median_ms << " ms   p90: " << r.p90_ms << " ms   fps: " << r.fps
        << "\n";
    return out.str();
}

}  // namespace lmsf
