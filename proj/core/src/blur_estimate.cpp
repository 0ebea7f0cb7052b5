#include <algorithm>
#include <cmath>
#include <vector>

#include "deturb/deconv.hpp"
#include "deturb/errors.hpp"
#include "filters.hpp"

namespace deturb {

namespace {

// Re-blur scale. For a step edge blurred by s, the gradient peak ratio
// between the image and its re-blurred copy is sqrt(s^2 + a^2) / s.
constexpr double kReblurSigma = 1.0;
constexpr double kEdgeFraction = 0.3;
constexpr double kEdgePercentile = 0.995;
constexpr int kMargin = 6;

struct Gradients {
    std::vector<double> gr, gc, mag;
};

Gradients central_gradients(const Image& img)
{
    const int h = img.height(), w = img.width();
    Gradients g{std::vector<double>(img.pixel_count(), 0.0), std::vector<double>(img.pixel_count(), 0.0),
                std::vector<double>(img.pixel_count(), 0.0)};
    for (int r = 1; r + 1 < h; ++r)
        for (int c = 1; c + 1 < w; ++c) {
            const std::size_t i = static_cast<std::size_t>(r) * w + c;
            g.gr[i] = 0.5 * (img.at(r + 1, c) - img.at(r - 1, c));
            g.gc[i] = 0.5 * (img.at(r, c + 1) - img.at(r, c - 1));
            g.mag[i] = std::hypot(g.gr[i], g.gc[i]);
        }
    return g;
}

double sample(const std::vector<double>& v, int h, int w, double r, double c)
{
    r = std::clamp(r, 0.0, h - 1.0);
    c = std::clamp(c, 0.0, w - 1.0);
    const int r0 = std::min(static_cast<int>(r), h - 2), c0 = std::min(static_cast<int>(c), w - 2);
    const double fr = r - r0, fc = c - c0;
    const auto at = [&](int rr, int cc) { return v[static_cast<std::size_t>(rr) * w + cc]; };
    const double top = at(r0, c0) + fc * (at(r0, c0 + 1) - at(r0, c0));
    const double bot = at(r0 + 1, c0) + fc * (at(r0 + 1, c0 + 1) - at(r0 + 1, c0));
    return top + fr * (bot - top);
}

// Median over edge pixels of the apparent blur variance (intrinsic
// discretization blur included).
std::optional<double> raw_blur_variance(const Image& gray)
{
    const int h = gray.height(), w = gray.width();
    if (h < 2 * kMargin + 3 || w < 2 * kMargin + 3)
        return std::nullopt;
    const Gradients g0 = central_gradients(gray);
    const Gradients g1 = central_gradients(detail::gaussian_blur(gray, kReblurSigma));

    std::vector<double> sorted = g0.mag;
    const auto nth = sorted.begin() + static_cast<std::ptrdiff_t>(kEdgePercentile * (sorted.size() - 1));
    std::nth_element(sorted.begin(), nth, sorted.end());
    const double threshold = kEdgeFraction * *nth;
    if (!(threshold > 0.0))
        return std::nullopt;

    std::vector<double> variances;
    for (int r = kMargin; r < h - kMargin; ++r)
        for (int c = kMargin; c < w - kMargin; ++c) {
            const std::size_t i = static_cast<std::size_t>(r) * w + c;
            const double m = g0.mag[i];
            if (m <= threshold)
                continue;
            // Non-maximum suppression along the gradient direction.
            const double ur = g0.gr[i] / m, uc = g0.gc[i] / m;
            if (m < sample(g0.mag, h, w, r + ur, c + uc) || m <= sample(g0.mag, h, w, r - ur, c - uc))
                continue;
            const double ratio = std::max(m / std::max(g1.mag[i], 1e-12), 1.0 + 1e-4);
            variances.push_back(kReblurSigma * kReblurSigma / (ratio * ratio - 1.0));
        }
    if (variances.empty())
        return std::nullopt;
    const auto mid = variances.begin() + static_cast<std::ptrdiff_t>(variances.size() / 2);
    std::nth_element(variances.begin(), mid, variances.end());
    return *mid;
}

// Apparent blur variance of a pixel-sharp edge: an antialiased disk rendered
// by supersampling, measured with the same estimator.
double intrinsic_blur_variance()
{
    static const double value = [] {
        constexpr int size = 96;
        constexpr int ss = 16;
        constexpr double radius = 30.0;
        const double cy = size / 2.0 + 0.37, cx = size / 2.0 + 0.21;
        Image chart(size, size, 1);
        for (int r = 0; r < size; ++r)
            for (int c = 0; c < size; ++c) {
                int inside = 0;
                for (int a = 0; a < ss; ++a)
                    for (int b = 0; b < ss; ++b) {
                        const double y = r + (a + 0.5) / ss - cy;
                        const double x = c + (b + 0.5) / ss - cx;
                        inside += (y * y + x * x < radius * radius);
                    }
                chart.at(r, c) = 0.2 + 0.6 * inside / double(ss * ss);
            }
        return raw_blur_variance(chart).value_or(0.0);
    }();
    return value;
}

} // namespace

std::optional<double> estimate_blur_sigma(const Image& img)
{
    if (img.channels() != 1)
        throw InvalidInput("estimate_blur_sigma: expected a single-channel image");
    const auto raw = raw_blur_variance(img);
    if (!raw)
        return std::nullopt;
    return std::sqrt(std::max(0.0, *raw - intrinsic_blur_variance()));
}

} // namespace deturb
