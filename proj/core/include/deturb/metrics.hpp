#pragma once

#include "deturb/image.hpp"

namespace deturb {

/// Reported PSNR for identical images.
inline constexpr double kPsnrCap = 99.0;

/// 10 log10(peak^2 / MSE) over all pixels and channels, capped at kPsnrCap.
double psnr(const Image& a, const Image& b, double peak = 1.0);

struct SsimParams {
    int window = 11;
    double window_sigma = 1.5;
    double k1 = 0.01;
    double k2 = 0.03;
    double dynamic_range = 1.0;
};

/// Mean SSIM over valid (fully inside) Gaussian-window positions, computed on
/// luminance.
double ssim(const Image& a, const Image& b, const SsimParams& params = {});

} // namespace deturb
