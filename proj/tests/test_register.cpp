#include <gtest/gtest.h>

#include <cmath>

#include "deturb/errors.hpp"
#include "deturb/metrics.hpp"
#include "deturb/register.hpp"
#include "deturb/turbsim.hpp"
#include "support.hpp"

using namespace deturb;
using deturb::testing::max_abs_diff;

namespace {

std::vector<Image> synthetic(const Image& gt, int frames, double amplitude, double blur, std::uint64_t seed)
{
    TurbulenceParams p;
    p.amplitude = amplitude;
    p.correlation_length = 10.0;
    p.blur_sigma_mean = blur;
    p.noise_sigma = 0.01;
    p.seed = seed;
    return simulate_sequence(gt, frames, p).frames;
}

double rms_diff(const Image& a, const Image& b)
{
    double s = 0.0;
    for (std::size_t i = 0; i < a.data().size(); ++i)
        s += (a.data()[i] - b.data()[i]) * (a.data()[i] - b.data()[i]);
    return std::sqrt(s / static_cast<double>(a.data().size()));
}

} // namespace

TEST(BuildTemplate, SingleFrameIsReturnedExactly)
{
    const std::vector<Image> frames{make_test_scene(1, 48, 40, 3)};
    const RegistrationResult r = build_template(frames, {});
    EXPECT_EQ(r.template_image, frames[0]);
    EXPECT_EQ(r.mean_flow, FlowField(48, 40));
    ASSERT_EQ(r.registered_frames.size(), 1u);
}

TEST(BuildTemplate, IdenticalFramesGiveThatFrame)
{
    const Image img = deturb::testing::smooth_scene(2, 64, 64);
    const std::vector<Image> frames(6, img);
    EXPECT_LT(rms_diff(build_template(frames, {}).template_image, img), 1e-3);
}

TEST(BuildTemplate, TemplateIsMeanOfRegisteredFrames)
{
    const std::vector<Image> frames = synthetic(make_test_scene(3, 64, 64), 6, 1.5, 1.0, 7);
    const RegistrationResult r = build_template(frames, {});
    ASSERT_EQ(r.registered_frames.size(), frames.size());
    ASSERT_EQ(r.per_frame_flows.size(), frames.size());
    EXPECT_EQ(r.template_image, mean_image(r.registered_frames));
    for (double v : r.per_frame_flows[0].data())
        EXPECT_EQ(v, 0.0);
}

TEST(BuildTemplate, LiteralTemplateFormula)
{
    const Image gt = make_test_scene(4, 64, 64, 3);
    const std::vector<Image> frames = synthetic(gt, 5, 1.5, 1.0, 8);
    PipelineConfig cfg;
    cfg.keyframe_index = 2;
    const RegistrationResult r = build_template(frames, cfg);

    std::vector<FlowField> w;
    for (std::size_t t = 0; t < frames.size(); ++t)
        w.push_back(t == 2 ? FlowField(64, 64) : horn_schunck(to_gray(frames[2]), to_gray(frames[t])));
    const FlowField inv = invert_flow(mean_flow(w));
    Image sum(64, 64, 3);
    for (std::size_t t = 0; t < frames.size(); ++t) {
        const Image reg = warp_image(frames[t], compose_flow(inv, w[t]));
        for (std::size_t i = 0; i < sum.data().size(); ++i)
            sum.data()[i] += reg.data()[i];
    }
    for (auto& v : sum.data())
        v /= static_cast<double>(frames.size());
    EXPECT_LE(max_abs_diff(r.template_image, sum), 1e-12);
    EXPECT_EQ(r.inverse_mean_flow, inv);
}

TEST(BuildTemplate, SharperThanTemporalMean)
{
    const Image gt = make_test_scene(5, 128, 128);
    const std::vector<Image> frames = synthetic(gt, 50, 2.0, 1.0, 9);
    const double p_template = psnr(build_template(frames, {}).template_image, gt);
    const double p_mean = psnr(temporal_mean(frames), gt);
    EXPECT_GE(p_template, p_mean + 1.0);
}

TEST(BuildTemplate, ThreadCountDoesNotChangeTheResult)
{
    const std::vector<Image> frames = synthetic(make_test_scene(6, 64, 64), 7, 1.5, 1.0, 10);
    PipelineConfig one, four;
    four.threads = 4;
    EXPECT_EQ(build_template(frames, one).template_image, build_template(frames, four).template_image);
}

TEST(BuildTemplate, LowMemoryModeMatches)
{
    const std::vector<Image> frames = synthetic(make_test_scene(7, 64, 64, 3), 7, 1.5, 1.0, 11);
    PipelineConfig cfg;
    cfg.keyframe_index = 3;
    cfg.threads = 2;
    const RegistrationResult full = build_template(frames, cfg);
    cfg.low_memory = true;
    const RegistrationResult lean = build_template(frames, cfg);
    EXPECT_LE(max_abs_diff(full.template_image, lean.template_image), 1e-12);
    EXPECT_TRUE(lean.per_frame_flows.empty());
    EXPECT_TRUE(lean.registered_frames.empty());
}

TEST(BuildTemplate, ExplicitReferenceEstimatesEveryFlow)
{
    const Image gt = make_test_scene(8, 64, 64);
    const std::vector<Image> frames = synthetic(gt, 4, 1.5, 1.0, 12);
    const RegistrationResult r = build_template_from_reference(frames, gt, {});
    ASSERT_EQ(r.per_frame_flows.size(), 4u);
    EXPECT_GT(flow_rms(r.per_frame_flows[0]), 0.1);
    EXPECT_THROW(build_template_from_reference(frames, Image(32, 32, 1), {}), InvalidInput);
}

TEST(BuildTemplate, Validation)
{
    const std::vector<Image> none;
    EXPECT_THROW(build_template(none, {}), InvalidInput);
    const std::vector<Image> mixed{Image(8, 8, 1), Image(8, 9, 1)};
    EXPECT_THROW(build_template(mixed, {}), InvalidInput);
    const std::vector<Image> two(2, Image(16, 16, 1, 0.5));
    PipelineConfig cfg;
    cfg.keyframe_index = 2;
    EXPECT_THROW(build_template(two, cfg), InvalidInput);
    cfg = {};
    cfg.outer_iterations = 0;
    EXPECT_THROW(build_template(two, cfg), InvalidInput);
    cfg = {};
    cfg.threads = 0;
    EXPECT_THROW(build_template(two, cfg), InvalidInput);
}

TEST(RunPipeline, ZeroTurbulenceIsPreserved)
{
    const Image gt = make_test_scene(13, 96, 96);
    const std::vector<Image> frames(5, gt);
    EXPECT_GE(psnr(run_pipeline(frames, {}).restored, gt), 40.0);
}

TEST(RunPipeline, DeconvolutionImprovesTheTemplate)
{
    const Image gt = make_test_scene(14, 128, 128);
    const std::vector<Image> frames = synthetic(gt, 20, 1.5, 1.0, 15);
    const PipelineResult r = run_pipeline(frames, {});
    EXPECT_GE(psnr(r.restored, gt), psnr(r.registration.template_image, gt) + 0.5);
    for (const char* stage : {"flow", "invert", "warp", "deconv"})
        EXPECT_TRUE(r.timings.contains(stage)) << stage;
}

TEST(RunPipeline, SecondOuterIterationIsNotWorse)
{
    const Image gt = make_test_scene(16, 128, 128);
    const std::vector<Image> frames = synthetic(gt, 20, 1.5, 1.0, 17);
    PipelineConfig cfg;
    const double once = psnr(run_pipeline(frames, cfg).restored, gt);
    cfg.outer_iterations = 2;
    const double twice = psnr(run_pipeline(frames, cfg).restored, gt);
    EXPECT_GE(twice, once - 0.2);
}
