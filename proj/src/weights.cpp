#include "lmsf/weights.hpp"

#include <bit>
#include <cstddef>
#include <fstream>

#include "lmsf/contract.hpp"

namespace lmsf {

namespace {

constexpr char kMagic[4] = {'L', 'M', 'S', 'F'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::string& out, std::uint32_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
    out.push_back(static_cast<char>((v >> 16) & 0xff));
    out.push_back(static_cast<char>((v >> 24) & 0xff));
}

void put_u16(std::string& out, std::uint16_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
}

class Reader {
public:
    Reader(const std::string& buf, const std::string& path) : buf_(buf), path_(path) {}

    std::uint8_t u8() {
        need(1);
        return static_cast<std::uint8_t>(buf_[at_++]);
    }
    std::uint16_t u16() {
        need(2);
        const auto* p = reinterpret_cast<const unsigned char*>(buf_.data() + at_);
        at_ += 2;
        return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
    }
    std::uint32_t u32() {
        need(4);
        const auto* p = reinterpret_cast<const unsigned char*>(buf_.data() + at_);
        at_ += 4;
        return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
               (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
    }
    std::string bytes(std::size_t len) {
        need(len);
        std::string s = buf_.substr(at_, len);
        at_ += len;
        return s;
    }
    void floats(float* dst, std::size_t count) {
        need(count * 4);
        for (std::size_t i = 0; i < count; ++i) {
            const auto* p = reinterpret_cast<const unsigned char*>(buf_.data() + at_ + i * 4);
            const std::uint32_t bits = static_cast<std::uint32_t>(p[0]) |
                                       (static_cast<std::uint32_t>(p[1]) << 8) |
                                       (static_cast<std::uint32_t>(p[2]) << 16) |
                                       (static_cast<std::uint32_t>(p[3]) << 24);
            dst[i] = std::bit_cast<float>(bits);
        }
        at_ += count * 4;
    }
    bool done() const { return at_ == buf_.size(); }

private:
    void need(std::size_t len) {
        require(at_ + len <= buf_.size(), "truncated weight file: " + path_);
    }
    const std::string& buf_;
    std::string path_;
    std::size_t at_ = 0;
};

}  // namespace

const WeightEntry* WeightStore::find(const std::string& name) const {
    for (const WeightEntry& e : entries)
        if (e.name == name) return &e;
    return nullptr;
}

void save_weights(const std::string& path, const WeightStore& store) {
    std::string out;
    out.append(kMagic, 4);
    put_u32(out, store.version);
    out.push_back(store.form == Form::train ? 0 : 1);
    put_u32(out, static_cast<std::uint32_t>(store.config_text.size()));
    out += store.config_text;
    put_u32(out, static_cast<std::uint32_t>(store.entries.size()));

    for (const WeightEntry& e : store.entries) {
        require(e.name.size() <= 0xffff, "weight entry name too long: " + e.name);
        require(!e.dims.empty() && e.dims.size() <= 255, "weight entry rank invalid: " + e.name);
        std::size_t count = 1;
        for (int d : e.dims) {
            require(d >= 1, "weight entry dim < 1: " + e.name);
            count *= static_cast<std::size_t>(d);
        }
        require(count == e.data.size(), "weight entry size mismatch: " + e.name);

        put_u16(out, static_cast<std::uint16_t>(e.name.size()));
        out += e.name;
        out.push_back(static_cast<char>(e.dims.size()));
        for (int d : e.dims) put_u32(out, static_cast<std::uint32_t>(d));
        for (float v : e.data) put_u32(out, std::bit_cast<std::uint32_t>(v));
    }

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    require(f.good(), "cannot open weight file for writing: " + path);
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    require(f.good(), "failed writing weight file: " + path);
}

WeightStore load_weights(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    require(f.good(), "cannot open weight file: " + path);
    std::string buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());

    Reader r(buf, path);
    const std::string magic = r.bytes(4);
    require(magic == std::string(kMagic, 4),
            "bad magic in " + path + ": expected \"LMSF\", got \"" + magic + "\"");

    WeightStore store;
    store.version = r.u32();
    require(store.version == kVersion,
            "unsupported weight file version " + std::to_string(store.version));
    const std::uint8_t form = r.u8();
    require(form <= 1, "bad form byte in " + path);
    store.form = form == 0 ? Form::train : Form::deploy;
    store.config_text = r.bytes(r.u32());

    const std::uint32_t count = r.u32();
    store.entries.resize(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        WeightEntry& e = store.entries[i];
        e.name = r.bytes(r.u16());
        const int rank = r.u8();
        require(rank >= 1, "weight entry '" + e.name + "' has rank 0");
        std::size_t total = 1;
        for (int d = 0; d < rank; ++d) {
            const std::uint32_t dim = r.u32();
            require(dim >= 1, "weight entry '" + e.name + "' has a zero dim");
            e.dims.push_back(static_cast<int>(dim));
            total *= dim;
        }
        e.data.resize(total);
        r.floats(e.data.data(), total);
    }
    require(r.done(), "trailing bytes in weight file: " + path);
    return store;
}

}  // namespace lmsf
