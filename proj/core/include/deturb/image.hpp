#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

namespace deturb {

class FlowField;

/// Row-major H x W x C image with real intensities, nominally in [0, 1].
///
/// Pixel (r, c) channel k lives at data[(r * width + c) * channels + k].
/// Coordinates are (row, col) with the origin at the top-left pixel centre.
class Image {
public:
    Image() = default;
    Image(int height, int width, int channels, double fill = 0.0);
    Image(int height, int width, int channels, std::vector<double> data);

    int height() const noexcept { return height_; }
    int width() const noexcept { return width_; }
    int channels() const noexcept { return channels_; }
    std::size_t pixel_count() const noexcept { return static_cast<std::size_t>(height_) * width_; }
    bool empty() const noexcept { return data_.empty(); }

    double& at(int r, int c, int k = 0) noexcept { return data_[index(r, c, k)]; }
    double at(int r, int c, int k = 0) const noexcept { return data_[index(r, c, k)]; }

    std::span<double> data() noexcept { return data_; }
    std::span<const double> data() const noexcept { return data_; }
    std::vector<double>& storage() noexcept { return data_; }

    bool same_shape(const Image& other) const noexcept
    {
        return height_ == other.height_ && width_ == other.width_ && channels_ == other.channels_;
    }

    /// Single channel `k` as a gray image.
    Image channel(int k) const;
    void set_channel(int k, const Image& gray);

    friend bool operator==(const Image&, const Image&) = default;

private:
    std::size_t index(int r, int c, int k) const noexcept
    {
        return (static_cast<std::size_t>(r) * width_ + c) * channels_ + k;
    }

    int height_ = 0;
    int width_ = 0;
    int channels_ = 0;
    std::vector<double> data_;
};

/// Loads binary PGM (P5), PPM (P6) or 8-bit PNG, scaled to [0, 1]. Portable
/// float maps (.pfm) and NumPy arrays (.npy, float) are read unscaled.
Image load_image(const std::filesystem::path& path);

/// Writes the format implied by the extension: 8-bit .pgm, .ppm, .png,
/// float32 .pfm or float64 .npy. Values are clamped to [0, 1] first.
void save_image(const Image& img, const std::filesystem::path& path);

/// Image files in `dir` sorted lexicographically by filename.
std::vector<std::filesystem::path> list_frames(const std::filesystem::path& dir);
std::vector<Image> load_frames(const std::filesystem::path& dir);

/// Rec.601 luminance for RGB input, identity for gray input.
Image to_gray(const Image& img);

/// Bilinear interpolation at real (row, col). Coordinates are clamped to the
/// pixel grid first, so the function is total.
double bilinear_sample(const Image& img, double row, double col, int channel = 0);
std::vector<double> bilinear_sample(const Image& img, std::array<double, 2> pos);

/// Backward warp: out(x) = img(x + w(x)).
Image warp_image(const Image& img, const FlowField& w);

/// Pointwise mean of equally shaped images (running mean in list order, so
/// identical inputs average to themselves exactly).
Image mean_image(std::span<const Image> images);

/// Clamp every value to [lo, hi].
Image clamp(Image img, double lo = 0.0, double hi = 1.0);

} // namespace deturb
