#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include "deturb/deconv.hpp"
#include "deturb/flow.hpp"
#include "deturb/image.hpp"
#include "deturb/turbsim.hpp"

namespace deturb::testing {

inline Image random_image(std::uint64_t seed, int h, int w, int channels = 1, double lo = 0.0, double hi = 1.0)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(lo, hi);
    Image img(h, w, channels);
    for (auto& v : img.data())
        v = u(rng);
    return img;
}

inline FlowField random_field(std::uint64_t seed, int h, int w, double scale)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-scale, scale);
    FlowField f(h, w);
    for (auto& v : f.data())
        v = u(rng);
    return f;
}

/// Procedural scene, pre-blurred so that flow estimation is well posed.
inline Image smooth_scene(std::uint64_t seed, int h, int w, double sigma = 1.5)
{
    return convolve(make_test_scene(seed, h, w), make_kernel(sigma));
}

inline double max_abs_diff(const Image& a, const Image& b)
{
    double m = 0.0;
    for (std::size_t i = 0; i < a.data().size(); ++i)
        m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
    return m;
}

inline double max_abs_diff(const FlowField& a, const FlowField& b)
{
    double m = 0.0;
    for (std::size_t i = 0; i < a.data().size(); ++i)
        m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
    return m;
}

inline double variance(const Image& img)
{
    double mean = 0.0;
    for (double v : img.data())
        mean += v;
    mean /= static_cast<double>(img.data().size());
    double s = 0.0;
    for (double v : img.data())
        s += (v - mean) * (v - mean);
    return s / static_cast<double>(img.data().size());
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag)
    {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() /
                ("deturb_" + tag + "_" + std::to_string(rd()) + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir()
    {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const noexcept { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

} // namespace deturb::testing
