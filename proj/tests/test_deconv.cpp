#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "deturb/deconv.hpp"
#include "deturb/errors.hpp"
#include "deturb/metrics.hpp"
#include "deturb/turbsim.hpp"
#include "support.hpp"

using namespace deturb;
using deturb::testing::random_image;

namespace {

// out(x) = sum_u k(u) img(clamp(x - u)), straight from the definition.
Image brute_convolve(const Image& img, const Kernel& k)
{
    const int h = img.height(), w = img.width(), rad = k.radius();
    Image out(h, w, img.channels());
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c)
            for (int ch = 0; ch < img.channels(); ++ch) {
                double s = 0.0;
                for (int i = -rad; i <= rad; ++i)
                    for (int j = -rad; j <= rad; ++j) {
                        const int rr = std::clamp(r - i, 0, h - 1);
                        const int cc = std::clamp(c - j, 0, w - 1);
                        s += k.at(i, j) * img.at(rr, cc, ch);
                    }
                out.at(r, c, ch) = s;
            }
    return out;
}

double brute_objective(const Image& x, const Image& y, const Kernel& k, double alpha, double eps)
{
    const Image kx = brute_convolve(x, k);
    double data = 0.0, tv = 0.0;
    for (std::size_t i = 0; i < kx.data().size(); ++i)
        data += (kx.data()[i] - y.data()[i]) * (kx.data()[i] - y.data()[i]);
    const int h = x.height(), w = x.width();
    for (int ch = 0; ch < x.channels(); ++ch)
        for (int r = 0; r < h; ++r)
            for (int c = 0; c < w; ++c) {
                const double gr = x.at(std::min(r + 1, h - 1), c, ch) - x.at(r, c, ch);
                const double gc = x.at(r, std::min(c + 1, w - 1), ch) - x.at(r, c, ch);
                tv += std::sqrt(gr * gr + gc * gc + eps * eps);
            }
    return data + alpha * tv;
}

double dot(const Image& a, const Image& b)
{
    double s = 0.0;
    for (std::size_t i = 0; i < a.data().size(); ++i)
        s += a.data()[i] * b.data()[i];
    return s;
}

Kernel random_general_kernel(std::uint64_t seed, int size)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> v(static_cast<std::size_t>(size) * size);
    for (auto& x : v)
        x = u(rng);
    return Kernel(size, v);
}

} // namespace

// ---------------------------------------------------------------- kernels

TEST(MakeKernel, CentreValueForUnitSigmaRadiusThree)
{
    const Kernel k = make_kernel(1.0, {0.0, 0.0}, 3);
    ASSERT_EQ(k.size(), 7);
    double z = 0.0;
    for (int i = -3; i <= 3; ++i)
        z += std::exp(-0.5 * i * i);
    EXPECT_NEAR(k.at(0, 0), 1.0 / (z * z), 1e-15);
    EXPECT_NEAR(k.at(0, 0), 0.159241, 1e-6);
    for (int i = -3; i <= 3; ++i)
        for (int j = -3; j <= 3; ++j) {
            EXPECT_DOUBLE_EQ(k.at(i, j), k.at(-i, j));
            EXPECT_DOUBLE_EQ(k.at(i, j), k.at(j, i));
        }
}

TEST(MakeKernel, SmallSigmaIsDeltaAtRoundedShift)
{
    const Kernel k = make_kernel(0.01, {1.4, -0.6}, 2);
    for (int i = -2; i <= 2; ++i)
        for (int j = -2; j <= 2; ++j)
            EXPECT_EQ(k.at(i, j), (i == 1 && j == -1) ? 1.0 : 0.0);
    const Image img = random_image(1, 8, 8);
    EXPECT_EQ(convolve(img, make_kernel(0.01)), img);
    EXPECT_THROW(make_kernel(0.0), InvalidInput);
}

TEST(MakeKernel, UnitSumAndNonnegativeForManyParameters)
{
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> sig(0.05, 4.0), sh(-1.5, 1.5);
    for (int t = 0; t < 200; ++t) {
        const double s = sig(rng);
        const Kernel k = make_kernel(s, {sh(rng), sh(rng)}, GaussianKernel::default_radius(s) + t % 3);
        EXPECT_NEAR(k.sum(), 1.0, 1e-12);
        for (double v : k.values())
            EXPECT_GE(v, 0.0);
    }
}

TEST(MakeKernel, Errors)
{
    EXPECT_THROW(make_kernel(-1.0), InvalidInput);
    EXPECT_THROW(make_kernel(2.0, {0.0, 0.0}, 5), InvalidInput);
    EXPECT_EQ(GaussianKernel::default_radius(2.0), 6);
    EXPECT_EQ(GaussianKernel::default_radius(1.1), 4);
    EXPECT_THROW(Kernel(4, std::vector<double>(16, 1.0 / 16)), InvalidInput);
    EXPECT_THROW(Kernel(3, std::vector<double>(8, 0.1)), InvalidInput);
}

// ---------------------------------------------------------------- convolution

TEST(Convolve, DeltaIsIdentityAndConstantIsPreserved)
{
    const Image img = random_image(3, 10, 12, 3);
    EXPECT_EQ(convolve(img, Kernel::delta()), img);
    const Image flat(10, 12, 1, 0.42);
    const Image out = convolve(flat, make_kernel(1.7, {0.3, -0.2}));
    for (double v : out.data())
        EXPECT_NEAR(v, 0.42, 1e-14);
}

TEST(Convolve, MatchesNestedLoops)
{
    for (int seed = 0; seed < 5; ++seed) {
        const Image img = random_image(10 + seed, 9, 9, seed % 2 ? 3 : 1);
        const Kernel sep = make_kernel(0.6 + 0.4 * seed, {0.25 * seed, -0.3});
        EXPECT_LE(deturb::testing::max_abs_diff(convolve(img, sep), brute_convolve(img, sep)), 1e-10);
        const Kernel gen = random_general_kernel(20 + seed, 5);
        EXPECT_LE(deturb::testing::max_abs_diff(convolve(img, gen), brute_convolve(img, gen)), 1e-10);
    }
}

TEST(Convolve, KernelLargerThanImage)
{
    const Image img = random_image(4, 3, 4);
    const Kernel k = make_kernel(2.5);
    EXPECT_LE(deturb::testing::max_abs_diff(convolve(img, k), brute_convolve(img, k)), 1e-10);
}

TEST(CorrelateAdjoint, InnerProductIdentity)
{
    for (int seed = 0; seed < 10; ++seed) {
        const int h = 7 + seed, w = 12 - seed / 2;
        const Image u = random_image(100 + seed, h, w), v = random_image(200 + seed, h, w);
        const Kernel k = seed % 2 ? make_kernel(0.5 + 0.3 * seed, {0.4, -0.7}) : random_general_kernel(seed, 7);
        EXPECT_NEAR(dot(convolve(u, k), v), dot(u, correlate_adjoint(v, k)), 1e-8);
    }
}

// ---------------------------------------------------------------- objective

TEST(TvObjective, PerfectFitIsZero)
{
    const Image img = random_image(5, 8, 8);
    EXPECT_EQ(tv_objective(img, img, Kernel::delta(), 0.0, 1e-3), 0.0);
}

TEST(TvObjective, ConstantImageTvTerm)
{
    const Image flat(6, 9, 1, 0.3);
    const Kernel k = make_kernel(1.0);
    const double alpha = 0.7, eps = 1e-3;
    EXPECT_NEAR(tv_objective(flat, convolve(flat, k), k, alpha, eps), alpha * eps * 54, 1e-15);
}

TEST(TvObjective, MatchesScalarRecomputation)
{
    for (int seed = 0; seed < 5; ++seed) {
        const Image x = random_image(30 + seed, 8, 8), y = random_image(40 + seed, 8, 8);
        const Kernel k = make_kernel(0.8 + 0.2 * seed, {0.1 * seed, 0.0});
        EXPECT_NEAR(tv_objective(x, y, k, 0.05, 1e-3), brute_objective(x, y, k, 0.05, 1e-3), 1e-10);
    }
    EXPECT_THROW(tv_objective(Image(4, 4, 1), Image(4, 5, 1), Kernel::delta(), 0.1, 1e-3), InvalidInput);
}

TEST(TvGradient, ZeroAtPerfectFit)
{
    const Image img = random_image(6, 8, 8);
    GaussianKernel g;
    g.sigma = 0.01;
    g.radius = 1;
    const ObjectiveGradient grad = tv_objective_grad(img, img, g, 0.0, 1e-3);
    for (double v : grad.wrt_image.data())
        EXPECT_EQ(v, 0.0);
}

TEST(TvGradient, ImageGradientMatchesFiniteDifferences)
{
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> sig(0.6, 2.0), alpha(0.001, 0.2);
    const double h = 1e-5;
    for (int inst = 0; inst < 20; ++inst) {
        const Image x = random_image(500 + inst, 8, 8), y = random_image(600 + inst, 8, 8);
        GaussianKernel g;
        g.sigma = sig(rng);
        g.radius = GaussianKernel::default_radius(g.sigma);
        const double a = alpha(rng), eps = 1e-3;
        const Kernel k = make_kernel(g);
        const Image grad = tv_objective_grad(x, y, g, a, eps).wrt_image;
        double max_err = 0.0, max_g = 0.0;
        for (std::size_t i = 0; i < x.data().size(); ++i) {
            Image xp = x, xm = x;
            xp.data()[i] += h;
            xm.data()[i] -= h;
            const double fd = (tv_objective(xp, y, k, a, eps) - tv_objective(xm, y, k, a, eps)) / (2 * h);
            max_err = std::max(max_err, std::abs(fd - grad.data()[i]));
            max_g = std::max(max_g, std::abs(grad.data()[i]));
        }
        EXPECT_LT(max_err / max_g, 1e-4) << "instance " << inst;
    }
}

TEST(TvGradient, SigmaGradientMatchesFiniteDifferences)
{
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> sig(0.5, 2.0), sh(-0.5, 0.5);
    const double h = 1e-5;
    for (int inst = 0; inst < 20; ++inst) {
        const Image x = random_image(700 + inst, 8, 8), y = random_image(800 + inst, 8, 8);
        GaussianKernel g;
        g.sigma = sig(rng);
        g.shift = {sh(rng), sh(rng)};
        g.radius = GaussianKernel::default_radius(g.sigma + h) + 1;
        const double got = tv_objective_grad(x, y, g, 0.01, 1e-3).wrt_sigma;
        const double fp = tv_objective(x, y, make_kernel(g.sigma + h, g.shift, g.radius), 0.01, 1e-3);
        const double fm = tv_objective(x, y, make_kernel(g.sigma - h, g.shift, g.radius), 0.01, 1e-3);
        const double fd = (fp - fm) / (2 * h);
        EXPECT_LT(std::abs(fd - got) / std::max(std::abs(fd), 1e-12), 1e-3) << "instance " << inst;
    }
}

// ---------------------------------------------------------------- blind deconvolution

TEST(BlindDeconv, SharpInputIsPreserved)
{
    const Image sharp = make_test_scene(21, 128, 128);
    const DeconvResult r = blind_deconv(sharp);
    EXPECT_LT(r.sigma, 0.3);
    EXPECT_GE(psnr(r.restored, sharp), 40.0);
}

TEST(BlindDeconv, KnownBlurIsRecovered)
{
    const Image gt = make_test_scene(22, 128, 128);
    const Image blurred = convolve(gt, make_kernel(1.5));
    const DeconvResult r = blind_deconv(blurred);
    EXPECT_GE(r.sigma, 1.2);
    EXPECT_LE(r.sigma, 1.8);
    EXPECT_GT(psnr(r.restored, gt), psnr(blurred, gt) + 0.5);
}

TEST(BlindDeconv, LargeAlphaFlattensTheImage)
{
    const Image img = make_test_scene(23, 48, 48);
    DeconvConfig cfg;
    cfg.alpha = 10.0;
    cfg.max_iterations = 2000;
    const DeconvResult r = blind_deconv(img, cfg);
    EXPECT_LT(deturb::testing::variance(r.restored), deturb::testing::variance(img) / 10.0);
}

TEST(BlindDeconv, ObjectiveNeverIncreasesAndOutputIsClamped)
{
    const Image gt = make_test_scene(24, 64, 64);
    Image noisy = convolve(gt, make_kernel(1.2));
    std::mt19937_64 rng(3);
    std::normal_distribution<double> n(0.0, 0.03);
    for (auto& v : noisy.data())
        v += n(rng);
    DeconvConfig cfg;
    cfg.max_iterations = 120;
    const DeconvResult r = blind_deconv(noisy, cfg);
    ASSERT_GE(r.objective_history.size(), 2u);
    for (std::size_t i = 1; i < r.objective_history.size(); ++i)
        EXPECT_LE(r.objective_history[i], r.objective_history[i - 1]);
    for (double v : r.restored.data()) {
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
    }
}

TEST(BlindDeconv, FixedSigmaUsesInitialValue)
{
    const Image img = make_test_scene(25, 48, 48);
    DeconvConfig cfg;
    cfg.estimate_sigma = false;
    cfg.sigma_init = 0.8;
    cfg.max_iterations = 10;
    EXPECT_EQ(blind_deconv(img, cfg).sigma, 0.8);
}

TEST(BlindDeconv, ColorImagesKeepTheirShape)
{
    const Image rgb = random_image(9, 24, 24, 3, 0.2, 0.8);
    DeconvConfig cfg;
    cfg.max_iterations = 5;
    EXPECT_TRUE(blind_deconv(rgb, cfg).restored.same_shape(rgb));
}

TEST(DeconvConfig, Validation)
{
    DeconvConfig c;
    c.alpha = 0.0;
    EXPECT_THROW(c.validate(), InvalidInput);
    c = {};
    c.tv_epsilon = 0.0;
    EXPECT_THROW(c.validate(), InvalidInput);
    c = {};
    c.sigma_init = -1.0;
    EXPECT_THROW(c.validate(), InvalidInput);
    c = {};
    c.max_iterations = 0;
    EXPECT_THROW(c.validate(), InvalidInput);
    EXPECT_THROW(blind_deconv(Image(8, 8, 1), c), InvalidInput);
}

TEST(EstimateBlurSigma, FlatImageHasNoEdges)
{
    EXPECT_FALSE(estimate_blur_sigma(Image(32, 32, 1, 0.5)).has_value());
}
