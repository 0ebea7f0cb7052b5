#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <vector>

#include "deturb/flow.hpp"
#include "deturb/image.hpp"

namespace deturb {

/// Forward-model parameters for synthetic turbulence sequences.
struct TurbulenceParams {
    double amplitude = 2.0;          ///< RMS warp displacement, px
    double correlation_length = 10.0; ///< std of the smoothing Gaussian, px
    double blur_sigma_mean = 1.0;
    double blur_sigma_jitter = 0.0;  ///< sigma_t ~ uniform(mean - jitter, mean + jitter)
    double noise_sigma = 0.01;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Zero-mean Gaussian random displacement field: white noise smoothed by a
/// Gaussian of std `correlation_length`, rescaled to RMS magnitude `amplitude`.
FlowField random_smooth_flow(std::uint64_t seed, int height, int width, double amplitude,
                             double correlation_length);

struct SimulatedSequence {
    std::vector<Image> frames;
    /// d_t with frame_t(y) = blur(gt)(y + d_t(y)) before noise.
    std::vector<FlowField> true_flows;
    std::vector<double> blur_sigmas;
};

/// frame_t = clamp(G_{sigma_t} (x) warp_image(gt, d_t) + noise), d_t drawn with seed + t.
SimulatedSequence simulate_sequence(const Image& gt, int frame_count, const TurbulenceParams& params);

/// Deterministic procedural test scene in [0.05, 0.95]: smooth random
/// background, antialiased disks and bars, and fine texture.
Image make_test_scene(std::uint64_t seed, int height, int width, int channels = 1);

/// Pupil-plane model for instantaneous PSFs. Aperture coordinates u are
/// normalized so the aperture is |u| <= 1; phases are in radians.
struct WavefrontParams {
    int grid_size = 64;             ///< pupil samples per side (zero-padded x2 for the DFT)
    double aperture_radius = 0.25;  ///< fraction of grid_size
    std::array<double, 2> tilt{0.0, 0.0};
    double defocus = 0.0;
    double higher_order_sigma = 0.0; ///< std of each higher-order coefficient
    double tilt_sigma = 0.0;         ///< per-draw tilt jitter (std, each component)
    double defocus_sigma = 0.0;      ///< per-draw defocus jitter (std)
    /// Noll indices of the >= 3rd order Zernike modes making up V(u).
    std::vector<int> higher_order_modes{7, 8, 9, 10, 11};

    void validate() const;
};

/// One random instance of the wavefront coefficients.
struct WavefrontDraw {
    std::array<double, 2> tilt{0.0, 0.0};
    double defocus = 0.0;
    /// One coefficient per WavefrontParams::higher_order_modes entry; empty means all zero.
    std::vector<double> higher_order;
};

WavefrontDraw draw_wavefront(const WavefrontParams& wp, std::mt19937_64& rng);

/// |DFT(A(u) exp(i W(u)))|^2, zero frequency at (M/2, M/2) with M = 2 grid_size,
/// normalized to unit sum.
Image wavefront_psf(const WavefrontParams& wp, const WavefrontDraw& draw);

/// Unnormalized total PSF energy (sum of |DFT|^2), for Parseval checks.
double wavefront_psf_energy(const WavefrontParams& wp, const WavefrontDraw& draw);

/// Unit-sum average of `draws` instantaneous PSFs.
Image average_wavefront_psf(const WavefrontParams& wp, int draws, std::uint64_t seed);

struct GaussianFit {
    std::array<double, 2> mu{0.0, 0.0}; ///< centroid relative to (H/2, W/2)
    double sigma = 0.0;
    double residual = 0.0;              ///< ||psf - G|| / ||psf||
};

/// Moment-based isotropic Gaussian fit of a nonnegative grid.
GaussianFit fit_gaussian_psf(const Image& psf);

/// Unit-sum sampled Gaussian on an H x W grid centred at (H/2, W/2) + mu.
Image sampled_gaussian(int height, int width, std::array<double, 2> mu, double sigma);

} // namespace deturb
