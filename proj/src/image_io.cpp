#include "lmsf/image_io.hpp"

#include <cctype>
#include <fstream>

#include "lmsf/contract.hpp"

namespace lmsf {

namespace {

// Reads one header integer, skipping whitespace and '#' comments. Consumes
// exactly one trailing separator byte, which is what the raster format
// expects after the maxval field.
int read_header_int(std::istream& in, const std::string& path) {
    int c = in.get();
    while (c != EOF && (std::isspace(c) || c == '#')) {
        if (c == '#')
            while (c != EOF && c != '\n') c = in.get();
        c = in.get();
    }
    require(c != EOF && std::isdigit(c), "malformed image header: " + path);
    long v = 0;
    while (c != EOF && std::isdigit(c)) {
        v = v * 10 + (c - '0');
        require(v <= 1 << 20, "image header value out of range: " + path);
        c = in.get();
    }
    return static_cast<int>(v);
}

ImageU8 read_pnm(const std::string& path, char digit, int channels) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), "cannot open image: " + path);
    const int p = in.get();
    const int kind = in.get();
    require(p == 'P' && kind == digit,
            std::string("not a binary P") + digit + " image: " + path);

    ImageU8 img;
    img.w = read_header_int(in, path);
    img.h = read_header_int(in, path);
    const int maxval = read_header_int(in, path);
    require(img.w >= 1 && img.h >= 1, "bad image dimensions in " + path);
    require(maxval == 255,
            "unsupported maxval " + std::to_string(maxval) + " in " + path + " (need 255)");

    img.channels = channels;
    const std::streamsize count =
        static_cast<std::streamsize>(img.h) * img.w * channels;
    img.pixels.resize(static_cast<std::size_t>(count));
    in.read(reinterpret_cast<char*>(img.pixels.data()), count);
    require(in.gcount() == count, "truncated pixel data in " + path);
    return img;
}

}  // namespace

ImageU8 read_p6(const std::string& path) { return read_pnm(path, '6', 3); }
ImageU8 read_p5(const std::string& path) { return read_pnm(path, '5', 1); }

void write_p5(const std::string& path, const ImageU8& img) {
    require(img.channels == 1, "graymap output needs a single channel");
    require(img.pixels.size() == static_cast<std::size_t>(img.h) * img.w,
            "graymap pixel buffer does not match its dimensions");
    std::ofstream out(path, std::ios::binary);
    require(out.good(), "cannot open image for writing: " + path);
    out << "P5\n" << img.w << " " << img.h << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.pixels.data()),
              static_cast<std::streamsize>(img.pixels.size()));
    require(out.good(), "failed writing image: " + path);
}

ImageU8 nearest_resize(const ImageU8& img, int out_h, int out_w) {
    require(out_h >= 1 && out_w >= 1, "resize target must be positive");
    ImageU8 out;
    out.h = out_h;
    out.w = out_w;
    out.channels = img.channels;
    out.pixels.resize(static_cast<std::size_t>(out_h) * out_w * img.channels);
    for (int y = 0; y < out_h; ++y) {
        const int sy = static_cast<int>(static_cast<long>(y) * img.h / out_h);
        for (int x = 0; x < out_w; ++x) {
            const int sx = static_cast<int>(static_cast<long>(x) * img.w / out_w);
            for (int c = 0; c < img.channels; ++c)
                out.pixels[(static_cast<std::size_t>(y) * out_w + x) * img.channels + c] =
                    img.at(sy, sx, c);
        }
    }
    return out;
}

Tensor image_to_tensor(const ImageU8& img) {
    Tensor t(1, img.channels, img.h, img.w);
    const float inv = 1.0f / 255.0f;
    for (int c = 0; c < img.channels; ++c)
        for (int y = 0; y < img.h; ++y)
            for (int x = 0; x < img.w; ++x)
                t.at(0, c, y, x) = static_cast<float>(img.at(y, x, c)) * inv;
    return t;
}

}  // namespace lmsf
