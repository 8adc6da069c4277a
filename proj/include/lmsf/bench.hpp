#pragma once

#include <string>
#include <vector>

#include "lmsf/model.hpp"

namespace lmsf {

struct BenchReport {
    Form form = Form::train;
    int runs = 0;
    double median_ms = 0.0;
    double p90_ms = 0.0;
    double fps = 0.0;  // 1000 / median_ms
    std::vector<double> samples_ms;
};

// Times batch-1 forwards at the configured input size on one thread, after a
// fixed 5 warmup runs. Requires runs >= 10.
BenchReport bench_forward(const Model& m, Form f, int runs, std::uint64_t seed = 1);

std::string format_bench(const BenchReport& r);

}  // namespace lmsf
