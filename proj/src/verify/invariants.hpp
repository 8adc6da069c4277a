#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lmsf/model.hpp"

namespace lmsf::verify {

struct SuiteResult {
    std::string name;
    bool pass = true;
    std::string detail;  // explanation of the first failure, empty on pass
};

// The full self-check battery: numeric kernels against oracles, fusion
// certificates for every stage body, gate ranges, structural bounds, pyramid
// stride contracts, resampling identities, loss zero cases and profiler
// closed forms. The model must hold train-form parameters; it is fused in
// place if it has not been already.
std::vector<SuiteResult> run_invariant_battery(Model& m, std::uint64_t seed);

}  // namespace lmsf::verify
