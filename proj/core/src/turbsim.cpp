#include "deturb/turbsim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "deturb/deconv.hpp"
#include "deturb/errors.hpp"
#include "filters.hpp"

namespace deturb {

void TurbulenceParams::validate() const
{
    if (!(amplitude >= 0.0) || !(blur_sigma_mean >= 0.0) || !(blur_sigma_jitter >= 0.0) || !(noise_sigma >= 0.0))
        throw InvalidInput("TurbulenceParams: parameters must be nonnegative");
    if (!(correlation_length >= 1.0))
        throw InvalidInput("TurbulenceParams: correlation_length must be >= 1");
}

namespace {

// Independent stream for (seed, stream) pairs.
std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream)
{
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    return std::mt19937_64(seq);
}

// White noise on a padded domain, smoothed, then cropped, so the field is
// statistically stationary up to the border.
Image smooth_noise(std::mt19937_64& rng, int height, int width, double correlation_length)
{
    const int pad = static_cast<int>(std::ceil(3.0 * correlation_length));
    Image noise(height + 2 * pad, width + 2 * pad, 1);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (auto& v : noise.data())
        v = normal(rng);
    const Image smooth = detail::gaussian_blur(noise, correlation_length);
    Image out(height, width, 1);
    for (int r = 0; r < height; ++r)
        for (int c = 0; c < width; ++c)
            out.at(r, c) = smooth.at(r + pad, c + pad);
    return out;
}

} // namespace

FlowField random_smooth_flow(std::uint64_t seed, int height, int width, double amplitude,
                             double correlation_length)
{
    if (height <= 0 || width <= 0)
        throw InvalidInput("random_smooth_flow: bad dimensions");
    if (!(amplitude >= 0.0))
        throw InvalidInput("random_smooth_flow: amplitude must be nonnegative");
    if (!(correlation_length > 0.0))
        throw InvalidInput("random_smooth_flow: correlation_length must be positive");
    FlowField w(height, width);
    if (amplitude == 0.0)
        return w;

    auto rng = make_rng(seed, 0x666c6f77);
    const Image rows = smooth_noise(rng, height, width, correlation_length);
    const Image cols = smooth_noise(rng, height, width, correlation_length);
    double sum2 = 0.0;
    for (std::size_t i = 0; i < w.pixel_count(); ++i)
        sum2 += rows.data()[i] * rows.data()[i] + cols.data()[i] * cols.data()[i];
    const double scale = amplitude / std::sqrt(sum2 / static_cast<double>(w.pixel_count()));
    for (int r = 0; r < height; ++r)
        for (int c = 0; c < width; ++c) {
            w.d_row(r, c) = scale * rows.at(r, c);
            w.d_col(r, c) = scale * cols.at(r, c);
        }
    return w;
}

SimulatedSequence simulate_sequence(const Image& gt, int frame_count, const TurbulenceParams& params)
{
    params.validate();
    if (frame_count < 1)
        throw InvalidInput("simulate_sequence: frame_count must be >= 1");
    if (gt.empty())
        throw InvalidInput("simulate_sequence: empty ground truth");

    SimulatedSequence seq;
    for (int t = 0; t < frame_count; ++t) {
        const std::uint64_t frame_seed = params.seed + static_cast<std::uint64_t>(t);
        FlowField d = random_smooth_flow(frame_seed, gt.height(), gt.width(), params.amplitude,
                                         params.correlation_length);
        auto rng = make_rng(frame_seed, 0x6e6f697365);

        double sigma = params.blur_sigma_mean;
        if (params.blur_sigma_jitter > 0.0) {
            std::uniform_real_distribution<double> jitter(-params.blur_sigma_jitter, params.blur_sigma_jitter);
            sigma = std::max(0.0, sigma + jitter(rng));
        }

        Image frame = warp_image(gt, d);
        if (sigma >= kDeltaSigma)
            frame = convolve(frame, make_kernel(sigma));
        if (params.noise_sigma > 0.0) {
            std::normal_distribution<double> noise(0.0, params.noise_sigma);
            for (auto& v : frame.data())
                v += noise(rng);
        }
        seq.frames.push_back(clamp(std::move(frame)));
        seq.true_flows.push_back(std::move(d));
        seq.blur_sigmas.push_back(sigma);
    }
    return seq;
}

Image make_test_scene(std::uint64_t seed, int height, int width, int channels)
{
    if (height <= 0 || width <= 0 || (channels != 1 && channels != 3))
        throw InvalidInput("make_test_scene: bad dimensions");
    auto rng = make_rng(seed, 0x7363656e65);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    const auto normalized = [](Image f) {
        double mean = 0.0, sq = 0.0;
        for (double v : f.data())
            mean += v;
        mean /= static_cast<double>(f.pixel_count());
        for (double v : f.data())
            sq += (v - mean) * (v - mean);
        const double sd = std::sqrt(sq / static_cast<double>(f.pixel_count()));
        for (auto& v : f.data())
            v = (v - mean) / sd;
        return f;
    };
    const double scale = std::min(height, width) / 256.0;
    const Image background = normalized(smooth_noise(rng, height, width, 24.0 * scale));
    const Image texture = normalized(smooth_noise(rng, height, width, 1.2));

    Image scene(height, width, channels);
    for (int r = 0; r < height; ++r)
        for (int c = 0; c < width; ++c)
            for (int k = 0; k < channels; ++k)
                scene.at(r, c, k) = 0.5 + 0.1 * background.at(r, c) + 0.03 * texture.at(r, c);

    constexpr int shapes = 20;
    constexpr int ss = 4;
    for (int s = 0; s < shapes; ++s) {
        const double cy = unit(rng) * height, cx = unit(rng) * width;
        const double size = (6.0 + 30.0 * unit(rng)) * scale;
        const double angle = unit(rng) * std::numbers::pi;
        const double aspect = 0.25 + 0.5 * unit(rng);
        std::array<double, 3> level{};
        const double base = (unit(rng) < 0.5 ? -1.0 : 1.0) * (0.12 + 0.2 * unit(rng));
        for (int k = 0; k < 3; ++k)
            level[k] = base * (channels == 3 ? 0.6 + 0.8 * unit(rng) : 1.0);
        const bool disk = (s % 2) == 0;
        const double ca = std::cos(angle), sa = std::sin(angle);

        const int r0 = std::max(0, static_cast<int>(cy - size - 2)), r1 = std::min(height - 1, static_cast<int>(cy + size + 2));
        const int c0 = std::max(0, static_cast<int>(cx - size - 2)), c1 = std::min(width - 1, static_cast<int>(cx + size + 2));
        for (int r = r0; r <= r1; ++r)
            for (int c = c0; c <= c1; ++c) {
                int inside = 0;
                for (int a = 0; a < ss; ++a)
                    for (int b = 0; b < ss; ++b) {
                        const double y = r + (a + 0.5) / ss - 0.5 - cy;
                        const double x = c + (b + 0.5) / ss - 0.5 - cx;
                        if (disk) {
                            inside += (y * y + x * x < size * size);
                        } else {
                            const double u = y * ca + x * sa, v = -y * sa + x * ca;
                            inside += (std::abs(u) < size && std::abs(v) < size * aspect);
                        }
                    }
                if (inside == 0)
                    continue;
                const double cover = inside / double(ss * ss);
                for (int k = 0; k < channels; ++k)
                    scene.at(r, c, k) += cover * level[k];
            }
    }

    double lo = scene.data()[0], hi = lo;
    for (double v : scene.data()) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    for (auto& v : scene.data())
        v = 0.05 + 0.9 * (v - lo) / (hi - lo);
    return scene;
}

} // namespace deturb
