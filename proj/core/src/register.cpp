#include "deturb/register.hpp"

#include <chrono>
#include <optional>

#include "deturb/errors.hpp"
#include "deturb/parallel.hpp"

namespace deturb {

void PipelineConfig::validate(std::size_t frame_count) const
{
    if (frame_count == 0)
        throw InvalidInput("pipeline: no frames");
    if (keyframe_index < 0 || static_cast<std::size_t>(keyframe_index) >= frame_count)
        throw InvalidInput("pipeline: keyframe_index out of range");
    if (outer_iterations < 1)
        throw InvalidInput("pipeline: outer_iterations must be >= 1");
    if (threads < 1)
        throw InvalidInput("pipeline: threads must be >= 1");
    flow_params.validate();
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start)
{
    return std::chrono::duration<double>(Clock::now() - start).count();
}

void check_frames(std::span<const Image> frames)
{
    for (const auto& f : frames)
        if (!f.same_shape(frames[0]) || f.empty())
            throw InvalidInput("pipeline: frames have mixed or empty dimensions");
}

// Running mean identical in arithmetic to mean_flow()/mean_image().
template <class T>
void accumulate_mean(std::optional<T>& acc, const T& x, std::size_t count_so_far)
{
    if (!acc) {
        acc = x;
        return;
    }
    auto dst = acc->data();
    const auto src = x.data();
    const double n = static_cast<double>(count_so_far + 1);
    for (std::size_t i = 0; i < dst.size(); ++i)
        dst[i] += (src[i] - dst[i]) / n;
}

RegistrationResult register_frames(std::span<const Image> frames, const Image* explicit_ref,
                                   const PipelineConfig& cfg, std::map<std::string, double>* timings)
{
    cfg.validate(frames.size());
    check_frames(frames);
    if (explicit_ref &&
        (explicit_ref->height() != frames[0].height() || explicit_ref->width() != frames[0].width()))
        throw InvalidInput("pipeline: reference image dimensions differ from frames");

    const std::size_t count = frames.size();
    const auto k = static_cast<std::size_t>(cfg.keyframe_index);
    const Image ref_gray = to_gray(explicit_ref ? *explicit_ref : frames[k]);
    const int h = frames[0].height(), w = frames[0].width();

    auto estimate = [&](std::size_t t) {
        if (!explicit_ref && t == k)
            return FlowField(h, w);
        return horn_schunck(ref_gray, to_gray(frames[t]), cfg.flow_params);
    };

    RegistrationResult res;
    auto start = Clock::now();

    // Batches of `threads` frames bound the flows held at once in low-memory mode.
    const std::size_t batch = cfg.low_memory ? static_cast<std::size_t>(cfg.threads) : count;

    std::optional<FlowField> mean;
    std::vector<FlowField> flows;
    for (std::size_t b0 = 0; b0 < count; b0 += batch) {
        const std::size_t n = std::min(batch, count - b0);
        std::vector<FlowField> part(n);
        parallel_for(n, cfg.threads, [&](std::size_t i) { part[i] = estimate(b0 + i); });
        for (std::size_t i = 0; i < n; ++i) {
            accumulate_mean(mean, part[i], b0 + i);
            if (!cfg.low_memory)
                flows.push_back(std::move(part[i]));
        }
    }
    if (timings)
        (*timings)["flow"] += seconds_since(start);

    start = Clock::now();
    res.mean_flow = std::move(*mean);
    res.inverse_mean_flow = invert_flow(res.mean_flow);
    if (timings)
        (*timings)["invert"] += seconds_since(start);

    start = Clock::now();
    std::optional<Image> tmpl;
    if (!cfg.low_memory) {
        res.registered_frames.resize(count);
        parallel_for(count, cfg.threads, [&](std::size_t t) {
            res.registered_frames[t] = warp_image(frames[t], compose_flow(res.inverse_mean_flow, flows[t]));
        });
        res.template_image = mean_image(res.registered_frames);
        res.per_frame_flows = std::move(flows);
    } else {
        for (std::size_t b0 = 0; b0 < count; b0 += batch) {
            const std::size_t n = std::min(batch, count - b0);
            std::vector<Image> part(n);
            parallel_for(n, cfg.threads, [&](std::size_t i) {
                part[i] = warp_image(frames[b0 + i], compose_flow(res.inverse_mean_flow, estimate(b0 + i)));
            });
            for (std::size_t i = 0; i < n; ++i)
                accumulate_mean(tmpl, part[i], b0 + i);
        }
        res.template_image = std::move(*tmpl);
    }
    if (timings)
        (*timings)["warp"] += seconds_since(start);
    return res;
}

} // namespace

RegistrationResult build_template(std::span<const Image> frames, const PipelineConfig& cfg)
{
    return register_frames(frames, nullptr, cfg, nullptr);
}

RegistrationResult build_template_from_reference(std::span<const Image> frames, const Image& reference,
                                                 const PipelineConfig& cfg)
{
    return register_frames(frames, &reference, cfg, nullptr);
}

PipelineResult run_pipeline(std::span<const Image> frames, const PipelineConfig& cfg)
{
    cfg.validate(frames.size());
    cfg.deconv.validate();
    PipelineResult out;
    std::optional<Image> reference;
    for (int pass = 0; pass < cfg.outer_iterations; ++pass) {
        out.registration = register_frames(frames, reference ? &*reference : nullptr, cfg, &out.timings);
        const auto start = Clock::now();
        auto dec = blind_deconv(out.registration.template_image, cfg.deconv);
        out.timings["deconv"] += seconds_since(start);
        out.sigma = dec.sigma;
        out.deconv_stalled = dec.stalled;
        out.restored = std::move(dec.restored);
        // The frames are blurred, so the restoration is compared against them
        // through the estimated kernel to keep brightness constancy.
        reference = out.sigma > 0.0 ? convolve(out.restored, make_kernel(out.sigma, cfg.deconv.shift)) : out.restored;
    }
    return out;
}

Image temporal_mean(std::span<const Image> frames)
{
    return mean_image(frames);
}

} // namespace deturb
