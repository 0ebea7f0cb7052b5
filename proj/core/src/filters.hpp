#pragma once

#include <vector>

#include "deturb/image.hpp"

// Internal helpers shared by the flow solver and the simulator.
namespace deturb::detail {

/// Normalized 1-D Gaussian taps on [-radius, radius]; radius = ceil(3 sigma)
/// unless given.
std::vector<double> gaussian_taps(double sigma, int radius = -1);

/// Separable Gaussian blur per channel, replicate boundary. sigma <= 0 is a no-op.
Image gaussian_blur(const Image& img, double sigma);

/// Bilinear resize with pixel-centre alignment.
Image resize_bilinear(const Image& img, int height, int width);

} // namespace deturb::detail
