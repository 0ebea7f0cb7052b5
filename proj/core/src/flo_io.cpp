#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

#include "deturb/errors.hpp"
#include "deturb/flow.hpp"

namespace deturb {

namespace {

constexpr char kMagic[4] = {'P', 'I', 'E', 'H'};

void put_u32_le(std::vector<unsigned char>& out, std::uint32_t v)
{
    for (int i = 0; i < 4; ++i)
        out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xFFu));
}

std::uint32_t get_u32_le(const unsigned char* p)
{
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

} // namespace

// Header: "PIEH", int32 width, int32 height; then per pixel float32
// (horizontal, vertical) = (d_col, d_row), all little-endian.
void write_flo(const FlowField& w, const std::filesystem::path& path)
{
    std::vector<unsigned char> buf;
    buf.reserve(12 + 8 * w.pixel_count());
    buf.insert(buf.end(), kMagic, kMagic + 4);
    put_u32_le(buf, static_cast<std::uint32_t>(w.width()));
    put_u32_le(buf, static_cast<std::uint32_t>(w.height()));
    for (int r = 0; r < w.height(); ++r) {
        for (int c = 0; c < w.width(); ++c) {
            put_u32_le(buf, std::bit_cast<std::uint32_t>(static_cast<float>(w.d_col(r, c))));
            put_u32_le(buf, std::bit_cast<std::uint32_t>(static_cast<float>(w.d_row(r, c))));
        }
    }
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!out)
        throw IoError("write failed: " + path.string());
}

FlowField read_flo(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open " + path.string());
    std::vector<unsigned char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (buf.size() < 12)
        throw FormatError(path.string() + ": file shorter than .flo header");
    if (std::memcmp(buf.data(), kMagic, 4) != 0)
        throw FormatError(path.string() + ": bad .flo magic");
    const auto width = static_cast<std::int32_t>(get_u32_le(buf.data() + 4));
    const auto height = static_cast<std::int32_t>(get_u32_le(buf.data() + 8));
    if (width < 0 || height < 0)
        throw FormatError(path.string() + ": negative .flo dimensions");
    const std::size_t expected = 12 + 8 * static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    if (buf.size() != expected)
        throw FormatError(path.string() + ": payload size does not match .flo header");

    FlowField w(height, width);
    const unsigned char* p = buf.data() + 12;
    for (int r = 0; r < height; ++r) {
        for (int c = 0; c < width; ++c) {
            w.d_col(r, c) = std::bit_cast<float>(get_u32_le(p));
            w.d_row(r, c) = std::bit_cast<float>(get_u32_le(p + 4));
            p += 8;
        }
    }
    return w;
}

} // namespace deturb
