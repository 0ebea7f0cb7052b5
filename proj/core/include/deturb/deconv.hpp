#pragma once

#include <array>
#include <optional>
#include <vector>

#include "deturb/image.hpp"

namespace deturb {

/// Parametric blur kernel G(x - shift; sigma) on [-radius, radius]^2.
struct GaussianKernel {
    double sigma = 1.0;
    std::array<double, 2> shift{0.0, 0.0};
    int radius = 3;

    /// Smallest radius satisfying the support invariant, ceil(3 sigma).
    static int default_radius(double sigma);
};

/// Below this sigma a kernel is materialized as a discrete delta.
inline constexpr double kDeltaSigma = 0.05;

/// Materialized (2r+1) x (2r+1) kernel. Gaussian kernels are separable and
/// also keep their 1-D factors, which the convolution routines use.
class Kernel {
public:
    Kernel() = default;
    /// General kernel from row-major values; size must be odd and square.
    Kernel(int size, std::vector<double> values);
    /// Separable kernel: values(i, j) = row_taps[i] * col_taps[j].
    Kernel(std::vector<double> row_taps, std::vector<double> col_taps);

    static Kernel delta();

    int size() const noexcept { return size_; }
    int radius() const noexcept { return size_ / 2; }
    /// Offsets i, j in [-radius, radius].
    double at(int i, int j) const noexcept { return values_[(i + radius()) * size_ + (j + radius())]; }
    const std::vector<double>& values() const noexcept { return values_; }
    double sum() const noexcept;

    bool separable() const noexcept { return !row_taps_.empty(); }
    const std::vector<double>& row_taps() const noexcept { return row_taps_; }
    const std::vector<double>& col_taps() const noexcept { return col_taps_; }

private:
    int size_ = 0;
    std::vector<double> values_;
    std::vector<double> row_taps_;
    std::vector<double> col_taps_;
};

/// Samples G((i, j) - shift; sigma), normalized to unit sum. sigma below
/// kDeltaSigma yields a delta at round(shift).
Kernel make_kernel(double sigma, std::array<double, 2> shift = {0.0, 0.0}, int radius = -1);
Kernel make_kernel(const GaussianKernel& g);

/// d(make_kernel)/d(sigma), as a sum of two separable terms (row-derivative
/// and column-derivative parts). Zero in the delta regime.
std::array<Kernel, 2> kernel_sigma_derivative(double sigma, std::array<double, 2> shift, int radius);

/// out(x) = sum_u k(u) img(x - u) per channel, replicate padding.
Image convolve(const Image& img, const Kernel& k);

/// Adjoint of convolve() under the same replicate boundary:
/// <convolve(u, k), v> == <u, correlate_adjoint(v, k)>.
Image correlate_adjoint(const Image& img, const Kernel& k);

/// sum |template - k (x) I|^2 + alpha * sum sqrt(I_r^2 + I_c^2 + eps^2),
/// forward differences with replicate boundary.
double tv_objective(const Image& latent, const Image& observed, const Kernel& k, double alpha, double tv_epsilon);

struct ObjectiveGradient {
    Image wrt_image;
    double wrt_sigma = 0.0;
};

/// Analytic gradient of tv_objective with respect to the latent image and to
/// the sigma of the Gaussian kernel (sigma, shift) that `k` materializes.
ObjectiveGradient tv_objective_grad(const Image& latent, const Image& observed, const GaussianKernel& g,
                                    double alpha, double tv_epsilon);

struct DeconvConfig {
    double alpha = 0.005;
    int max_iterations = 300;
    double step_size = 0.5;
    double backtrack_factor = 0.5;
    double tv_epsilon = 1e-3;
    double sigma_init = 1.0;
    bool estimate_sigma = true;
    std::array<double, 2> shift{0.0, 0.0};
    /// Stop after three consecutive accepted steps whose relative objective
    /// decrease is below this.
    double tolerance = 1e-10;

    void validate() const;
};

struct DeconvResult {
    Image restored;
    double sigma = 0.0;
    int iterations = 0;
    /// Set when backtracking could not find a decrease before max_iterations.
    bool stalled = false;
    /// Objective after each accepted step, starting with the initial value.
    std::vector<double> objective_history;
};

/// Scale-space estimate of a global Gaussian blur sigma from strong edges.
/// Returns nullopt when the image has no usable edges.
std::optional<double> estimate_blur_sigma(const Image& img);

/// TV-regularized deconvolution of `observed` with a Gaussian kernel whose
/// sigma is estimated from the image (or taken from cfg.sigma_init).
DeconvResult blind_deconv(const Image& observed, const DeconvConfig& cfg = {});

} // namespace deturb
