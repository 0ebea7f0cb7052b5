#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "deturb/image.hpp"

namespace deturb {

/// Dense displacement field in pixel units, stored as interleaved
/// (d_row, d_col) pairs in row-major order.
///
/// A field w from frame A to frame B assigns each grid point x of A the
/// displacement such that x + w(x) is the corresponding location in B, so
/// warp_image(B, w) pulls B back onto the grid of A.
class FlowField {
public:
    FlowField() = default;
    FlowField(int height, int width);
    FlowField(int height, int width, std::vector<double> data);

    /// Constant displacement everywhere.
    static FlowField constant(int height, int width, double d_row, double d_col);

    int height() const noexcept { return height_; }
    int width() const noexcept { return width_; }
    std::size_t pixel_count() const noexcept { return static_cast<std::size_t>(height_) * width_; }

    double& d_row(int r, int c) noexcept { return data_[index(r, c)]; }
    double& d_col(int r, int c) noexcept { return data_[index(r, c) + 1]; }
    double d_row(int r, int c) const noexcept { return data_[index(r, c)]; }
    double d_col(int r, int c) const noexcept { return data_[index(r, c) + 1]; }

    std::span<double> data() noexcept { return data_; }
    std::span<const double> data() const noexcept { return data_; }

    bool same_shape(const FlowField& other) const noexcept
    {
        return height_ == other.height_ && width_ == other.width_;
    }
    bool matches(const Image& img) const noexcept
    {
        return height_ == img.height() && width_ == img.width();
    }

    /// Displacement at a real position, bilinear with clamp-to-edge.
    std::array<double, 2> sample(double row, double col) const noexcept;

    friend bool operator==(const FlowField&, const FlowField&) = default;

private:
    std::size_t index(int r, int c) const noexcept
    {
        return 2 * (static_cast<std::size_t>(r) * width_ + c);
    }

    int height_ = 0;
    int width_ = 0;
    std::vector<double> data_;
};

/// Splatting accumulator of the inversion; a weight of exactly 0 is a hole.
class WeightMask {
public:
    WeightMask() = default;
    WeightMask(int height, int width, double fill = 0.0)
        : height_(height), width_(width), data_(static_cast<std::size_t>(height) * width, fill)
    {}

    int height() const noexcept { return height_; }
    int width() const noexcept { return width_; }
    double& at(int r, int c) noexcept { return data_[static_cast<std::size_t>(r) * width_ + c]; }
    double at(int r, int c) const noexcept { return data_[static_cast<std::size_t>(r) * width_ + c]; }
    std::span<const double> data() const noexcept { return data_; }

    std::size_t hole_count() const noexcept;

private:
    int height_ = 0;
    int width_ = 0;
    std::vector<double> data_;
};

struct HornSchunckParams {
    /// alpha^2 of the classic Jacobi update
    /// u <- u_bar - I_x (I_x u_bar + I_y v_bar + I_t) / (alpha^2 + I_x^2 + I_y^2).
    double smoothness = 0.01;
    int iterations_per_level = 100;
    int pyramid_levels = 4;
    double pyramid_scale = 0.5;
    /// Re-linearizations per pyramid level; the Jacobi iterations are split
    /// evenly between them.
    int warps_per_level = 5;

    void validate() const;
};

/// Coarse-to-fine Horn-Schunck flow from `ref` to `tgt` (both single channel).
FlowField horn_schunck(const Image& ref, const Image& tgt, const HornSchunckParams& params = {});

/// result(x) = first(x) + second(x + first(x)); maps A->C given A->B, B->C.
FlowField compose_flow(const FlowField& first, const FlowField& second);

/// Pointwise mean (running mean in list order; mean of copies of w is w).
FlowField mean_flow(std::span<const FlowField> flows);

struct InversionResult {
    FlowField inverse;
    WeightMask weights;
};

/// Inverse field by forward splatting of negated displacements onto the four
/// grid neighbours of each endpoint with weight (2 - L1 distance), weighted
/// averaging, and harmonic inpainting of unassigned points.
FlowField invert_flow(const FlowField& w);
InversionResult invert_flow_detailed(const FlowField& w);

/// Fills mask==0 points by harmonic diffusion; other points are unchanged.
FlowField inpaint_flow(const FlowField& w, const WeightMask& mask);

/// Mean Euclidean norm of a - b.
double flow_endpoint_error(const FlowField& a, const FlowField& b);

/// Root mean square displacement magnitude, optionally ignoring a border.
double flow_rms(const FlowField& w, int margin = 0);

/// Mean endpoint error restricted to points at least `margin` from the border.
double flow_endpoint_error_interior(const FlowField& a, const FlowField& b, int margin);

/// Middlebury .flo I/O.
FlowField read_flo(const std::filesystem::path& path);
void write_flo(const FlowField& w, const std::filesystem::path& path);

} // namespace deturb
