#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lmsf/reparam.hpp"

namespace lmsf {

struct WeightEntry {
    std::string name;
    std::vector<int> dims;    // row-major shape, rank 1..4
    std::vector<float> data;  // product(dims) values
};

// On-disk layout (all integers little-endian):
//   magic "LMSF" | u32 version | u8 form (0 train, 1 deploy)
//   u32 config length | UTF-8 config text
//   u32 entry count
//   per entry: u16 name length | name | u8 rank | u32 dims[rank] | f32 data
struct WeightStore {
    std::uint32_t version = 1;
    Form form = Form::train;
    std::string config_text;
    std::vector<WeightEntry> entries;

    const WeightEntry* find(const std::string& name) const;
};

void save_weights(const std::string& path, const WeightStore& store);
WeightStore load_weights(const std::string& path);

}  // namespace lmsf
