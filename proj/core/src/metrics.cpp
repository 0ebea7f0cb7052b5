#include "deturb/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "deturb/errors.hpp"
#include "filters.hpp"

namespace deturb {

double psnr(const Image& a, const Image& b, double peak)
{
    if (!a.same_shape(b))
        throw InvalidInput("psnr: image shapes differ");
    if (!(peak > 0.0))
        throw InvalidInput("psnr: peak must be positive");
    if (a.empty())
        throw InvalidInput("psnr: empty images");
    double sum = 0.0;
    const auto av = a.data(), bv = b.data();
    for (std::size_t i = 0; i < av.size(); ++i) {
        const double d = av[i] - bv[i];
        sum += d * d;
    }
    const double mse = sum / static_cast<double>(av.size());
    if (mse == 0.0)
        return kPsnrCap;
    return std::min(kPsnrCap, 10.0 * std::log10(peak * peak / mse));
}

namespace {

// Weighted window sums at every valid position (separable, no padding).
std::vector<double> valid_filter(const std::vector<double>& img, int h, int w, const std::vector<double>& taps)
{
    const int n = static_cast<int>(taps.size());
    const int oh = h - n + 1, ow = w - n + 1;
    std::vector<double> tmp(static_cast<std::size_t>(h) * ow);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < ow; ++c) {
            double s = 0.0;
            for (int t = 0; t < n; ++t)
                s += taps[t] * img[static_cast<std::size_t>(r) * w + c + t];
            tmp[static_cast<std::size_t>(r) * ow + c] = s;
        }
    std::vector<double> out(static_cast<std::size_t>(oh) * ow);
    for (int r = 0; r < oh; ++r)
        for (int c = 0; c < ow; ++c) {
            double s = 0.0;
            for (int t = 0; t < n; ++t)
                s += taps[t] * tmp[static_cast<std::size_t>(r + t) * ow + c];
            out[static_cast<std::size_t>(r) * ow + c] = s;
        }
    return out;
}

} // namespace

double ssim(const Image& a, const Image& b, const SsimParams& p)
{
    if (!a.same_shape(b))
        throw InvalidInput("ssim: image shapes differ");
    if (p.window < 1 || p.window % 2 == 0)
        throw InvalidInput("ssim: window must be odd");
    if (a.height() < p.window || a.width() < p.window)
        throw InvalidInput("ssim: image smaller than the window");

    const Image ga = to_gray(a), gb = to_gray(b);
    const int h = ga.height(), w = ga.width();
    const auto taps = detail::gaussian_taps(p.window_sigma, p.window / 2);

    const std::vector<double> x(ga.data().begin(), ga.data().end());
    const std::vector<double> y(gb.data().begin(), gb.data().end());
    std::vector<double> xx(x.size()), yy(x.size()), xy(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        xx[i] = x[i] * x[i];
        yy[i] = y[i] * y[i];
        xy[i] = x[i] * y[i];
    }
    const auto mx = valid_filter(x, h, w, taps);
    const auto my = valid_filter(y, h, w, taps);
    const auto mxx = valid_filter(xx, h, w, taps);
    const auto myy = valid_filter(yy, h, w, taps);
    const auto mxy = valid_filter(xy, h, w, taps);

    const double c1 = (p.k1 * p.dynamic_range) * (p.k1 * p.dynamic_range);
    const double c2 = (p.k2 * p.dynamic_range) * (p.k2 * p.dynamic_range);
    double total = 0.0;
    for (std::size_t i = 0; i < mx.size(); ++i) {
        const double vx = mxx[i] - mx[i] * mx[i];
        const double vy = myy[i] - my[i] * my[i];
        const double cov = mxy[i] - mx[i] * my[i];
        total += ((2 * mx[i] * my[i] + c1) * (2 * cov + c2)) /
                 ((mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2));
    }
    return total / static_cast<double>(mx.size());
}

} // namespace deturb
