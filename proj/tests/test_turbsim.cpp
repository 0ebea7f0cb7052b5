#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "deturb/errors.hpp"
#include "deturb/metrics.hpp"
#include "deturb/turbsim.hpp"
#include "support.hpp"

using namespace deturb;

namespace {

std::array<double, 2> centroid(const Image& psf)
{
    double sr = 0.0, sc = 0.0, s = 0.0;
    for (int r = 0; r < psf.height(); ++r)
        for (int c = 0; c < psf.width(); ++c) {
            s += psf.at(r, c);
            sr += r * psf.at(r, c);
            sc += c * psf.at(r, c);
        }
    return {sr / s - psf.height() / 2, sc / s - psf.width() / 2};
}

} // namespace

TEST(RandomSmoothFlow, ZeroAmplitudeIsExactlyZero)
{
    const FlowField f = random_smooth_flow(3, 40, 50, 0.0, 8.0);
    for (double v : f.data())
        EXPECT_EQ(v, 0.0);
}

TEST(RandomSmoothFlow, DeterministicAndRescaled)
{
    const FlowField a = random_smooth_flow(11, 64, 48, 2.0, 6.0);
    EXPECT_EQ(a, random_smooth_flow(11, 64, 48, 2.0, 6.0));
    EXPECT_NE(a, random_smooth_flow(12, 64, 48, 2.0, 6.0));
    EXPECT_NEAR(flow_rms(a), 2.0, 1e-9);
}

TEST(RandomSmoothFlow, EnsembleIsZeroMean)
{
    const int n = 200, h = 48, w = 48;
    const double amp = 2.0;
    std::vector<double> mean(static_cast<std::size_t>(h) * w * 2, 0.0);
    for (int seed = 0; seed < n; ++seed) {
        const FlowField f = random_smooth_flow(1000 + seed, h, w, amp, 8.0);
        for (std::size_t i = 0; i < mean.size(); ++i)
            mean[i] += f.data()[i] / n;
    }
    double sq = 0.0;
    std::size_t inside = 0;
    for (std::size_t i = 0; i < mean.size(); i += 2) {
        sq += mean[i] * mean[i] + mean[i + 1] * mean[i + 1];
        const double bound = 3.0 * amp / std::sqrt(static_cast<double>(n));
        inside += std::abs(mean[i]) < bound && std::abs(mean[i + 1]) < bound;
    }
    EXPECT_LT(std::sqrt(sq / (h * w)), amp / 10.0);
    EXPECT_GE(static_cast<double>(inside) / (h * w), 0.99);
}

TEST(SimulateSequence, IdentityForwardModel)
{
    const Image gt = make_test_scene(4, 40, 40, 3);
    TurbulenceParams p;
    p.amplitude = 0.0;
    p.blur_sigma_mean = 0.0;
    p.noise_sigma = 0.0;
    const SimulatedSequence seq = simulate_sequence(gt, 4, p);
    ASSERT_EQ(seq.frames.size(), 4u);
    ASSERT_EQ(seq.true_flows.size(), 4u);
    for (const Image& f : seq.frames)
        EXPECT_EQ(f, gt);
}

TEST(SimulateSequence, NoiseOnlyPsnr)
{
    const Image gt(256, 256, 1, 0.5);
    TurbulenceParams p;
    p.amplitude = 0.0;
    p.blur_sigma_mean = 0.0;
    p.noise_sigma = 0.01;
    const SimulatedSequence seq = simulate_sequence(gt, 3, p);
    for (const Image& f : seq.frames)
        EXPECT_NEAR(psnr(f, gt), 40.0, 0.5);
}

TEST(SimulateSequence, DeterministicAndFramesFollowTheirFlows)
{
    const Image gt = make_test_scene(5, 64, 64);
    TurbulenceParams p;
    p.amplitude = 1.5;
    p.correlation_length = 6.0;
    p.blur_sigma_mean = 0.0;
    p.noise_sigma = 0.0;
    p.seed = 42;
    const SimulatedSequence a = simulate_sequence(gt, 3, p);
    const SimulatedSequence b = simulate_sequence(gt, 3, p);
    for (int t = 0; t < 3; ++t) {
        EXPECT_EQ(a.frames[t], b.frames[t]);
        EXPECT_EQ(a.true_flows[t], random_smooth_flow(42 + t, 64, 64, 1.5, 6.0));
        EXPECT_LE(deturb::testing::max_abs_diff(a.frames[t], warp_image(gt, a.true_flows[t])), 1e-12);
    }
}

TEST(SimulateSequence, BlurSigmasStayInRange)
{
    TurbulenceParams p;
    p.blur_sigma_mean = 1.0;
    p.blur_sigma_jitter = 0.3;
    const SimulatedSequence seq = simulate_sequence(Image(24, 24, 1, 0.5), 20, p);
    for (double s : seq.blur_sigmas) {
        EXPECT_GE(s, 0.7);
        EXPECT_LE(s, 1.3);
    }
}

TEST(TurbulenceParams, Validation)
{
    TurbulenceParams p;
    p.correlation_length = 0.5;
    EXPECT_THROW(p.validate(), InvalidInput);
    p = {};
    p.noise_sigma = -0.1;
    EXPECT_THROW(p.validate(), InvalidInput);
    p = {};
    p.amplitude = -1.0;
    EXPECT_THROW(p.validate(), InvalidInput);
    EXPECT_THROW(simulate_sequence(Image(8, 8, 1), 0, {}), InvalidInput);
}

TEST(MakeTestScene, RangeAndDeterminism)
{
    const Image a = make_test_scene(7, 50, 60, 3);
    EXPECT_EQ(a, make_test_scene(7, 50, 60, 3));
    for (double v : a.data()) {
        EXPECT_GE(v, 0.05 - 1e-12);
        EXPECT_LE(v, 0.95 + 1e-12);
    }
}

// ---------------------------------------------------------------- wavefront PSF

TEST(WavefrontPsf, UnaberratedIsCentredAiry)
{
    const WavefrontParams wp;
    const Image psf = wavefront_psf(wp, WavefrontDraw{});
    const int m = 2 * wp.grid_size;
    ASSERT_EQ(psf.height(), m);
    const auto peak = std::max_element(psf.data().begin(), psf.data().end());
    EXPECT_EQ(std::distance(psf.data().begin(), peak), static_cast<std::ptrdiff_t>(m / 2) * m + m / 2);
    // Point symmetric about the centre (the unpaired Nyquist row and column aside).
    const double peak_value = *peak;
    for (int i = 1 - m / 2; i < m / 2; ++i)
        for (int j = 1 - m / 2; j < m / 2; ++j)
            ASSERT_NEAR(psf.at(m / 2 + i, m / 2 + j), psf.at(m / 2 - i, m / 2 - j), 1e-12 * peak_value);
}

TEST(WavefrontPsf, TiltTranslatesProportionally)
{
    const WavefrontParams wp;
    WavefrontDraw d1, d2;
    d1.tilt = {1.5, -0.75};
    d2.tilt = {3.0, -1.5};
    const auto c1 = centroid(wavefront_psf(wp, d1));
    const auto c2 = centroid(wavefront_psf(wp, d2));
    ASSERT_GT(std::hypot(c1[0], c1[1]), 0.1);
    EXPECT_NEAR(c2[0] / c1[0], 2.0, 0.05);
    EXPECT_NEAR(c2[1] / c1[1], 2.0, 0.05);
    EXPECT_NEAR(c1[0] / c1[1], -2.0, 0.05);
}

TEST(WavefrontPsf, NonnegativeUnitSumForRandomDraws)
{
    WavefrontParams wp;
    wp.higher_order_sigma = 1.0;
    wp.tilt_sigma = 2.0;
    wp.defocus_sigma = 0.5;
    std::mt19937_64 rng(5);
    for (int i = 0; i < 10; ++i) {
        const Image psf = wavefront_psf(wp, draw_wavefront(wp, rng));
        double s = 0.0;
        for (double v : psf.data()) {
            EXPECT_GE(v, 0.0);
            s += v;
        }
        EXPECT_NEAR(s, 1.0, 1e-12);
    }
}

TEST(WavefrontPsf, EnergyIsInvariantToTilt)
{
    const WavefrontParams wp;
    const double e0 = wavefront_psf_energy(wp, WavefrontDraw{});
    for (double a : {0.5, 2.0, 7.0}) {
        WavefrontDraw d;
        d.tilt = {a, -0.3 * a};
        EXPECT_NEAR(wavefront_psf_energy(wp, d) / e0, 1.0, 1e-10);
    }
}

TEST(WavefrontPsf, InvalidParameters)
{
    WavefrontParams wp;
    wp.aperture_radius = 0.6;
    EXPECT_THROW(wavefront_psf(wp, {}), InvalidInput);
    wp = {};
    wp.grid_size = 0;
    EXPECT_THROW(wavefront_psf(wp, {}), InvalidInput);
}

TEST(FitGaussianPsf, SelfFit)
{
    const GaussianFit fit = fit_gaussian_psf(sampled_gaussian(64, 64, {0.0, 0.0}, 2.0));
    EXPECT_NEAR(fit.sigma, 2.0, 0.04);
    EXPECT_LT(fit.residual, 0.02);
}

TEST(FitGaussianPsf, ShiftedCentroid)
{
    const GaussianFit fit = fit_gaussian_psf(sampled_gaussian(64, 64, {3.0, -2.0}, 2.5));
    EXPECT_NEAR(fit.mu[0], 3.0, 0.1);
    EXPECT_NEAR(fit.mu[1], -2.0, 0.1);
    EXPECT_THROW(fit_gaussian_psf(Image(8, 8, 1)), InvalidInput);
}

TEST(FitGaussianPsf, InstantaneousSpeckleFitsWorseThanAverage)
{
    WavefrontParams wp;
    wp.tilt_sigma = 4.0;
    wp.defocus_sigma = 0.5;
    wp.higher_order_sigma = 2.0;
    wp.higher_order_modes = {7, 8, 9, 10, 11, 12, 13, 14, 15};
    std::mt19937_64 rng(9);
    const double single = fit_gaussian_psf(wavefront_psf(wp, draw_wavefront(wp, rng))).residual;
    wp.higher_order_sigma = 0.3;
    const double averaged = fit_gaussian_psf(average_wavefront_psf(wp, 30, 9)).residual;
    EXPECT_GT(single, 1.5 * averaged);
}
