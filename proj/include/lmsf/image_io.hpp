#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lmsf/tensor.hpp"

namespace lmsf {

// Interleaved 8-bit image: channels = 3 for RGB pixmaps (P6), 1 for
// graymaps (P5). Row-major, top-left origin.
struct ImageU8 {
    int h = 0, w = 0, channels = 0;
    std::vector<std::uint8_t> pixels;  // h * w * channels

    std::uint8_t at(int y, int x, int c) const {
        return pixels[(static_cast<std::size_t>(y) * w + x) * channels + c];
    }
};

// Binary pixmap/graymap readers; headers may carry '#' comments, the only
// accepted maxval is 255.
ImageU8 read_p6(const std::string& path);
ImageU8 read_p5(const std::string& path);

void write_p5(const std::string& path, const ImageU8& img);

ImageU8 nearest_resize(const ImageU8& img, int out_h, int out_w);

// (1, channels, h, w) float tensor with values in [0, 1] (v / 255).
Tensor image_to_tensor(const ImageU8& img);

}  // namespace lmsf
