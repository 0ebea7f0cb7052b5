#include "deturb/image.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>

#include "deturb/errors.hpp"
#include "deturb/flow.hpp"

namespace deturb {

namespace fs = std::filesystem;

Image::Image(int height, int width, int channels, double fill)
    : height_(height), width_(width), channels_(channels),
      data_(static_cast<std::size_t>(height) * width * channels, fill)
{
    if (height < 0 || width < 0 || channels < 1)
        throw InvalidInput("Image: bad dimensions");
}

Image::Image(int height, int width, int channels, std::vector<double> data)
    : height_(height), width_(width), channels_(channels), data_(std::move(data))
{
    if (height < 0 || width < 0 || channels < 1)
        throw InvalidInput("Image: bad dimensions");
    if (data_.size() != static_cast<std::size_t>(height) * width * channels)
        throw InvalidInput("Image: data length does not match dimensions");
}

Image Image::channel(int k) const
{
    if (k < 0 || k >= channels_)
        throw InvalidInput("Image::channel: index out of range");
    Image out(height_, width_, 1);
    for (std::size_t i = 0; i < pixel_count(); ++i)
        out.data_[i] = data_[i * channels_ + k];
    return out;
}

void Image::set_channel(int k, const Image& gray)
{
    if (k < 0 || k >= channels_ || gray.channels_ != 1 || gray.height_ != height_ || gray.width_ != width_)
        throw InvalidInput("Image::set_channel: shape mismatch");
    for (std::size_t i = 0; i < pixel_count(); ++i)
        data_[i * channels_ + k] = gray.data_[i];
}

namespace {

std::string lower_extension(const fs::path& path)
{
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char ch) { return std::tolower(ch); });
    return ext;
}

std::uint8_t quantize(double v)
{
    v = std::clamp(v, 0.0, 1.0);
    return static_cast<std::uint8_t>(std::lround(v * 255.0));
}

// Next whitespace-delimited header token, skipping '#' comments.
std::string pnm_token(std::istream& in)
{
    std::string tok;
    int ch;
    while ((ch = in.get()) != EOF) {
        if (ch == '#') {
            while ((ch = in.get()) != EOF && ch != '\n') {}
            continue;
        }
        if (std::isspace(ch)) {
            if (!tok.empty())
                return tok;
            continue;
        }
        tok.push_back(static_cast<char>(ch));
    }
    return tok;
}

Image load_pnm(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open " + path.string());
    const std::string magic = pnm_token(in);
    int channels = 0;
    if (magic == "P5")
        channels = 1;
    else if (magic == "P6")
        channels = 3;
    else
        throw FormatError(path.string() + ": not a binary PGM/PPM file");

    int width = 0, height = 0, maxval = 0;
    try {
        width = std::stoi(pnm_token(in));
        height = std::stoi(pnm_token(in));
        maxval = std::stoi(pnm_token(in));
    } catch (const std::exception&) {
        throw IoError(path.string() + ": truncated or malformed header");
    }
    if (width <= 0 || height <= 0)
        throw FormatError(path.string() + ": bad dimensions");
    if (maxval != 255)
        throw FormatError(path.string() + ": only maxval 255 is supported");

    // pnm_token consumed exactly one whitespace byte after maxval.
    std::vector<unsigned char> raw(static_cast<std::size_t>(width) * height * channels);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (in.gcount() != static_cast<std::streamsize>(raw.size()))
        throw IoError(path.string() + ": truncated pixel data");

    std::vector<double> data(raw.size());
    std::transform(raw.begin(), raw.end(), data.begin(), [](unsigned char b) { return b / 255.0; });
    return Image(height, width, channels, std::move(data));
}

void save_pnm(const Image& img, const fs::path& path, int channels)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot write " + path.string());
    out << (channels == 1 ? "P5" : "P6") << '\n' << img.width() << ' ' << img.height() << "\n255\n";
    std::vector<unsigned char> raw(img.pixel_count() * channels);
    const auto src = img.data();
    for (std::size_t i = 0; i < raw.size(); ++i)
        raw[i] = quantize(src[i]);
    out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!out)
        throw IoError("write failed: " + path.string());
}

struct FileCloser {
    void operator()(std::FILE* f) const noexcept { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

// libpng reports through these instead of writing to stderr; the message is
// kept for the exception thrown after the longjmp.
void png_quiet_error(png_structp png, png_const_charp msg)
{
    if (auto* out = static_cast<std::string*>(png_get_error_ptr(png)))
        *out = msg;
    png_longjmp(png, 1);
}

void png_quiet_warning(png_structp, png_const_charp) {}

Image load_png(const fs::path& path)
{
    FilePtr file(std::fopen(path.c_str(), "rb"));
    if (!file)
        throw IoError("cannot open " + path.string());
    unsigned char sig[8];
    if (std::fread(sig, 1, 8, file.get()) != 8)
        throw IoError(path.string() + ": truncated file");
    if (png_sig_cmp(sig, 0, 8) != 0)
        throw FormatError(path.string() + ": not a PNG file");

    std::string png_message;
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &png_message, png_quiet_error, png_quiet_warning);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("libpng initialization failed");
    }
    std::vector<unsigned char> pixels;
    std::vector<png_bytep> rows;
    png_uint_32 width = 0, height = 0;
    int channels = 0;

    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError(path.string() + ": corrupt or truncated PNG (" + png_message + ")");
    }
    png_init_io(png, file.get());
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);

    width = png_get_image_width(png, info);
    height = png_get_image_height(png, info);
    const int color = png_get_color_type(png, info);
    const int depth = png_get_bit_depth(png, info);

    if (depth == 16)
        png_set_strip_16(png);
    if (color == PNG_COLOR_TYPE_PALETTE)
        png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8)
        png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS))
        png_set_tRNS_to_alpha(png);
    if (color & PNG_COLOR_MASK_ALPHA || png_get_valid(png, info, PNG_INFO_tRNS))
        png_set_strip_alpha(png);
    png_read_update_info(png, info);

    channels = png_get_channels(png, info);
    const std::size_t stride = png_get_rowbytes(png, info);
    pixels.resize(stride * height);
    rows.resize(height);
    for (png_uint_32 r = 0; r < height; ++r)
        rows[r] = pixels.data() + r * stride;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    if (channels != 1 && channels != 3)
        throw FormatError(path.string() + ": unsupported PNG channel layout");

    Image img(static_cast<int>(height), static_cast<int>(width), channels);
    auto dst = img.data();
    for (png_uint_32 r = 0; r < height; ++r)
        for (std::size_t i = 0; i < static_cast<std::size_t>(width) * channels; ++i)
            dst[r * width * channels + i] = rows[r][i] / 255.0;
    return img;
}

void save_png(const Image& img, const fs::path& path, int channels)
{
    FilePtr file(std::fopen(path.c_str(), "wb"));
    if (!file)
        throw IoError("cannot write " + path.string());
    std::string png_message;
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &png_message, png_quiet_error, png_quiet_warning);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        throw IoError("libpng initialization failed");
    }
    std::vector<unsigned char> raw(img.pixel_count() * channels);
    const auto src = img.data();
    for (std::size_t i = 0; i < raw.size(); ++i)
        raw[i] = quantize(src[i]);
    std::vector<png_bytep> rows(img.height());
    for (int r = 0; r < img.height(); ++r)
        rows[r] = raw.data() + static_cast<std::size_t>(r) * img.width() * channels;

    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("write failed: " + path.string() + " (" + png_message + ")");
    }
    png_init_io(png, file.get());
    png_set_IHDR(png, info, img.width(), img.height(), 8,
                 channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

// Portable float map: "Pf" (gray) or "PF" (RGB), width height, scale whose
// sign gives the byte order, then float32 rows stored bottom to top.
Image load_pfm(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open " + path.string());
    const std::string magic = pnm_token(in);
    int channels = 0;
    if (magic == "Pf")
        channels = 1;
    else if (magic == "PF")
        channels = 3;
    else
        throw FormatError(path.string() + ": not a PFM file");
    int width = 0, height = 0;
    double scale = 0.0;
    try {
        width = std::stoi(pnm_token(in));
        height = std::stoi(pnm_token(in));
        scale = std::stod(pnm_token(in));
    } catch (const std::exception&) {
        throw IoError(path.string() + ": truncated or malformed header");
    }
    if (width <= 0 || height <= 0 || scale == 0.0)
        throw FormatError(path.string() + ": bad PFM header");
    const bool little = scale < 0.0;

    const std::size_t row_len = static_cast<std::size_t>(width) * channels;
    std::vector<unsigned char> raw(row_len * height * 4);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (in.gcount() != static_cast<std::streamsize>(raw.size()))
        throw IoError(path.string() + ": truncated pixel data");

    Image img(height, width, channels);
    auto dst = img.data();
    for (int r = 0; r < height; ++r) {
        const unsigned char* row = raw.data() + static_cast<std::size_t>(height - 1 - r) * row_len * 4;
        for (std::size_t i = 0; i < row_len; ++i) {
            const unsigned char* b = row + 4 * i;
            const std::uint32_t bits = little ? (std::uint32_t(b[0]) | std::uint32_t(b[1]) << 8 |
                                                 std::uint32_t(b[2]) << 16 | std::uint32_t(b[3]) << 24)
                                              : (std::uint32_t(b[3]) | std::uint32_t(b[2]) << 8 |
                                                 std::uint32_t(b[1]) << 16 | std::uint32_t(b[0]) << 24);
            float v;
            std::memcpy(&v, &bits, sizeof v);
            if (!std::isfinite(v))
                throw FormatError(path.string() + ": non-finite sample");
            dst[static_cast<std::size_t>(r) * row_len + i] = v;
        }
    }
    return img;
}

void save_pfm(const Image& img, const fs::path& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot write " + path.string());
    out << (img.channels() == 1 ? "Pf" : "PF") << '\n' << img.width() << ' ' << img.height() << "\n-1.0\n";
    const std::size_t row_len = static_cast<std::size_t>(img.width()) * img.channels();
    std::vector<unsigned char> raw(row_len * img.height() * 4);
    const auto src = img.data();
    for (int r = 0; r < img.height(); ++r)
        for (std::size_t i = 0; i < row_len; ++i) {
            const float v = static_cast<float>(std::clamp(src[static_cast<std::size_t>(r) * row_len + i], 0.0, 1.0));
            std::uint32_t bits;
            std::memcpy(&bits, &v, sizeof bits);
            unsigned char* b = raw.data() + (static_cast<std::size_t>(img.height() - 1 - r) * row_len + i) * 4;
            for (int k = 0; k < 4; ++k)
                b[k] = static_cast<unsigned char>(bits >> (8 * k));
        }
    out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!out)
        throw IoError("write failed: " + path.string());
}

// NumPy .npy, version 1.0, C order, shape (H, W) or (H, W, C). Reads
// little-endian float64/float32/uint8 (uint8 scaled by 1/255), writes float64.
Image load_npy(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open " + path.string());
    char magic[8];
    if (!in.read(magic, 8))
        throw IoError(path.string() + ": truncated file");
    if (std::memcmp(magic, "\x93NUMPY", 6) != 0)
        throw FormatError(path.string() + ": not a .npy file");
    std::uint32_t header_len = 0;
    if (magic[6] == 1) {
        unsigned char b[2];
        if (!in.read(reinterpret_cast<char*>(b), 2))
            throw IoError(path.string() + ": truncated header");
        header_len = b[0] | b[1] << 8;
    } else {
        unsigned char b[4];
        if (!in.read(reinterpret_cast<char*>(b), 4))
            throw IoError(path.string() + ": truncated header");
        header_len = b[0] | b[1] << 8 | b[2] << 16 | std::uint32_t(b[3]) << 24;
    }
    std::string header(header_len, '\0');
    if (!in.read(header.data(), header_len))
        throw IoError(path.string() + ": truncated header");

    auto field = [&](const std::string& key) {
        const auto pos = header.find("'" + key + "'");
        if (pos == std::string::npos)
            throw FormatError(path.string() + ": header lacks " + key);
        return header.substr(header.find(':', pos) + 1);
    };
    const std::string descr_field = field("descr");
    const auto q0 = descr_field.find('\'');
    const std::string descr = descr_field.substr(q0 + 1, descr_field.find('\'', q0 + 1) - q0 - 1);
    const std::string order = field("fortran_order");
    if (order.substr(0, order.find_first_of(",}")).find("False") == std::string::npos)
        throw FormatError(path.string() + ": Fortran-ordered arrays are not supported");
    const std::string shape_field = field("shape");
    const std::string shape_text = shape_field.substr(shape_field.find('(') + 1,
                                                      shape_field.find(')') - shape_field.find('(') - 1);
    std::vector<long long> shape;
    std::stringstream ss(shape_text);
    for (std::string tok; std::getline(ss, tok, ',');) {
        if (tok.find_first_not_of(" ") == std::string::npos)
            continue;
        shape.push_back(std::stoll(tok));
    }
    if (shape.size() < 2 || shape.size() > 3 || (shape.size() == 3 && shape[2] != 1 && shape[2] != 3))
        throw FormatError(path.string() + ": expected shape (H, W) or (H, W, 1|3)");
    const int height = static_cast<int>(shape[0]), width = static_cast<int>(shape[1]);
    const int channels = shape.size() == 3 ? static_cast<int>(shape[2]) : 1;

    int item = 0;
    if (descr == "<f8")
        item = 8;
    else if (descr == "<f4")
        item = 4;
    else if (descr == "|u1" || descr == "<u1")
        item = 1;
    else
        throw FormatError(path.string() + ": unsupported dtype " + descr);

    Image img(height, width, channels);
    auto dst = img.data();
    std::vector<unsigned char> raw(dst.size() * item);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (in.gcount() != static_cast<std::streamsize>(raw.size()))
        throw IoError(path.string() + ": truncated array data");
    for (std::size_t i = 0; i < dst.size(); ++i) {
        const unsigned char* b = raw.data() + i * item;
        double v = 0.0;
        if (item == 8) {
            std::uint64_t bits = 0;
            for (int k = 0; k < 8; ++k)
                bits |= std::uint64_t(b[k]) << (8 * k);
            std::memcpy(&v, &bits, sizeof v);
        } else if (item == 4) {
            std::uint32_t bits = 0;
            for (int k = 0; k < 4; ++k)
                bits |= std::uint32_t(b[k]) << (8 * k);
            float f;
            std::memcpy(&f, &bits, sizeof f);
            v = f;
        } else {
            v = b[0] / 255.0;
        }
        if (!std::isfinite(v))
            throw FormatError(path.string() + ": non-finite sample");
        dst[i] = v;
    }
    return img;
}

void save_npy(const Image& img, const fs::path& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot write " + path.string());
    std::string header = "{'descr': '<f8', 'fortran_order': False, 'shape': (" + std::to_string(img.height()) +
                         ", " + std::to_string(img.width()) +
                         (img.channels() == 1 ? std::string(")") : ", " + std::to_string(img.channels()) + ")") +
                         ", }";
    // Pad so the data starts on a 64-byte boundary; the header ends in '\n'.
    const std::size_t total = 10 + header.size() + 1;
    header.append((64 - total % 64) % 64, ' ');
    header.push_back('\n');
    out.write("\x93NUMPY\x01\x00", 8);
    const auto len = static_cast<std::uint16_t>(header.size());
    const char len_bytes[2] = {static_cast<char>(len & 0xff), static_cast<char>(len >> 8)};
    out.write(len_bytes, 2);
    out.write(header.data(), static_cast<std::streamsize>(header.size()));
    const auto src = img.data();
    std::vector<unsigned char> raw(src.size() * 8);
    for (std::size_t i = 0; i < src.size(); ++i) {
        const double v = std::clamp(src[i], 0.0, 1.0);
        std::uint64_t bits;
        std::memcpy(&bits, &v, sizeof bits);
        for (int k = 0; k < 8; ++k)
            raw[8 * i + k] = static_cast<unsigned char>(bits >> (8 * k));
    }
    out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!out)
        throw IoError("write failed: " + path.string());
}

bool is_image_extension(const std::string& ext)
{
    return ext == ".pgm" || ext == ".ppm" || ext == ".pnm" || ext == ".png" || ext == ".pfm" || ext == ".npy";
}

} // namespace

Image load_image(const fs::path& path)
{
    std::error_code ec;
    if (!fs::is_regular_file(path, ec))
        throw IoError("not a readable file: " + path.string());
    const std::string ext = lower_extension(path);
    if (ext == ".png")
        return load_png(path);
    if (ext == ".pgm" || ext == ".ppm" || ext == ".pnm")
        return load_pnm(path);
    if (ext == ".pfm")
        return load_pfm(path);
    if (ext == ".npy")
        return load_npy(path);
    throw FormatError("unsupported image format: " + path.string());
}

void save_image(const Image& img, const fs::path& path)
{
    if (img.channels() != 1 && img.channels() != 3)
        throw InvalidInput("save_image: only 1 or 3 channels can be written");
    std::error_code ec;
    if (fs::is_directory(path, ec))
        throw IoError("path is a directory: " + path.string());
    const std::string ext = lower_extension(path);
    if (ext == ".png") {
        save_png(img, path, img.channels());
    } else if (ext == ".pgm" || ext == ".ppm" || ext == ".pnm") {
        if (ext == ".pgm" && img.channels() != 1)
            throw InvalidInput("save_image: .pgm requires a gray image");
        if (ext == ".ppm" && img.channels() != 3)
            throw InvalidInput("save_image: .ppm requires an RGB image");
        save_pnm(img, path, img.channels());
    } else if (ext == ".pfm") {
        save_pfm(img, path);
    } else if (ext == ".npy") {
        save_npy(img, path);
    } else {
        throw FormatError("unsupported image format: " + path.string());
    }
}

std::vector<fs::path> list_frames(const fs::path& dir)
{
    std::error_code ec;
    if (!fs::is_directory(dir, ec))
        throw IoError("not a directory: " + dir.string());
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && is_image_extension(lower_extension(entry.path())))
            files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end(),
              [](const fs::path& a, const fs::path& b) { return a.filename().string() < b.filename().string(); });
    return files;
}

std::vector<Image> load_frames(const fs::path& dir)
{
    std::vector<Image> frames;
    for (const auto& p : list_frames(dir))
        frames.push_back(load_image(p));
    return frames;
}

Image to_gray(const Image& img)
{
    if (img.channels() == 1)
        return img;
    if (img.channels() != 3)
        throw InvalidInput("to_gray: expected 1 or 3 channels");
    Image out(img.height(), img.width(), 1);
    const auto src = img.data();
    auto dst = out.data();
    for (std::size_t i = 0; i < img.pixel_count(); ++i)
        dst[i] = 0.299 * src[3 * i] + 0.587 * src[3 * i + 1] + 0.114 * src[3 * i + 2];
    return out;
}

namespace {

struct BilinearTap {
    int r0, c0, r1, c1;
    double fr, fc;
};

// Clamp to the grid, then locate the cell. On the last row/column the cell is
// the one ending there, with fraction 1, so integer positions are exact.
inline BilinearTap bilinear_tap(int height, int width, double row, double col) noexcept
{
    row = std::clamp(row, 0.0, static_cast<double>(height - 1));
    col = std::clamp(col, 0.0, static_cast<double>(width - 1));
    BilinearTap t;
    t.r0 = std::min(static_cast<int>(row), std::max(height - 2, 0));
    t.c0 = std::min(static_cast<int>(col), std::max(width - 2, 0));
    t.r1 = std::min(t.r0 + 1, height - 1);
    t.c1 = std::min(t.c0 + 1, width - 1);
    t.fr = row - t.r0;
    t.fc = col - t.c0;
    return t;
}

inline double interpolate(const Image& img, const BilinearTap& t, int k) noexcept
{
    // Convex form: exact at integer positions, including the last row and column.
    const double top = (1.0 - t.fc) * img.at(t.r0, t.c0, k) + t.fc * img.at(t.r0, t.c1, k);
    const double bottom = (1.0 - t.fc) * img.at(t.r1, t.c0, k) + t.fc * img.at(t.r1, t.c1, k);
    return (1.0 - t.fr) * top + t.fr * bottom;
}

} // namespace

double bilinear_sample(const Image& img, double row, double col, int channel)
{
    if (img.empty())
        throw InvalidInput("bilinear_sample: empty image");
    return interpolate(img, bilinear_tap(img.height(), img.width(), row, col), channel);
}

std::vector<double> bilinear_sample(const Image& img, std::array<double, 2> pos)
{
    if (img.empty())
        throw InvalidInput("bilinear_sample: empty image");
    const auto tap = bilinear_tap(img.height(), img.width(), pos[0], pos[1]);
    std::vector<double> out(img.channels());
    for (int k = 0; k < img.channels(); ++k)
        out[k] = interpolate(img, tap, k);
    return out;
}

Image warp_image(const Image& img, const FlowField& w)
{
    if (!w.matches(img))
        throw InvalidInput("warp_image: flow and image dimensions differ");
    Image out(img.height(), img.width(), img.channels());
    for (int r = 0; r < img.height(); ++r) {
        for (int c = 0; c < img.width(); ++c) {
            const auto tap = bilinear_tap(img.height(), img.width(), r + w.d_row(r, c), c + w.d_col(r, c));
            for (int k = 0; k < img.channels(); ++k)
                out.at(r, c, k) = interpolate(img, tap, k);
        }
    }
    return out;
}

Image mean_image(std::span<const Image> images)
{
    if (images.empty())
        throw InvalidInput("mean_image: no images");
    Image acc = images[0];
    auto dst = acc.data();
    for (std::size_t t = 1; t < images.size(); ++t) {
        if (!images[t].same_shape(acc))
            throw InvalidInput("mean_image: shape mismatch");
        const auto src = images[t].data();
        const double n = static_cast<double>(t + 1);
        for (std::size_t i = 0; i < dst.size(); ++i)
            dst[i] += (src[i] - dst[i]) / n;
    }
    return acc;
}

Image clamp(Image img, double lo, double hi)
{
    for (auto& v : img.data())
        v = std::clamp(v, lo, hi);
    return img;
}

} // namespace deturb
