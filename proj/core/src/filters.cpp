#include "filters.hpp"

#include <algorithm>
#include <cmath>

namespace deturb::detail {

std::vector<double> gaussian_taps(double sigma, int radius)
{
    if (radius < 0)
        radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> taps(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        taps[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
        sum += taps[i + radius];
    }
    for (auto& t : taps)
        t /= sum;
    return taps;
}

Image gaussian_blur(const Image& img, double sigma)
{
    if (sigma <= 0.0 || img.empty())
        return img;
    const auto taps = gaussian_taps(sigma);
    const int radius = static_cast<int>(taps.size() / 2);
    const int h = img.height(), w = img.width(), ch = img.channels();
    const std::size_t row_len = static_cast<std::size_t>(w) * ch;

    // Horizontal pass over a replicate-padded copy of each row.
    Image tmp(h, w, ch);
    std::vector<double> padded(static_cast<std::size_t>(w + 2 * radius) * ch);
    for (int r = 0; r < h; ++r) {
        for (int c = -radius; c < w + radius; ++c)
            for (int k = 0; k < ch; ++k)
                padded[static_cast<std::size_t>(c + radius) * ch + k] = img.at(r, std::clamp(c, 0, w - 1), k);
        double* dst = &tmp.at(r, 0, 0);
        for (std::size_t i = 0; i < row_len; ++i) {
            double acc = 0.0;
            for (int t = 0; t <= 2 * radius; ++t)
                acc += taps[t] * padded[i + static_cast<std::size_t>(t) * ch];
            dst[i] = acc;
        }
    }

    // Vertical pass as weighted sums of whole rows.
    Image out(h, w, ch);
    for (int r = 0; r < h; ++r) {
        double* dst = &out.at(r, 0, 0);
        for (int t = -radius; t <= radius; ++t) {
            const double* src = &tmp.at(std::clamp(r + t, 0, h - 1), 0, 0);
            const double weight = taps[t + radius];
            for (std::size_t i = 0; i < row_len; ++i)
                dst[i] += weight * src[i];
        }
    }
    return out;
}

Image resize_bilinear(const Image& img, int height, int width)
{
    Image out(height, width, img.channels());
    const double sr = static_cast<double>(img.height()) / height;
    const double sc = static_cast<double>(img.width()) / width;
    for (int r = 0; r < height; ++r) {
        const double y = (r + 0.5) * sr - 0.5;
        for (int c = 0; c < width; ++c) {
            const double x = (c + 0.5) * sc - 0.5;
            for (int k = 0; k < img.channels(); ++k)
                out.at(r, c, k) = bilinear_sample(img, y, x, k);
        }
    }
    return out;
}

} // namespace deturb::detail
