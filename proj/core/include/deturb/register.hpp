#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "deturb/deconv.hpp"
#include "deturb/flow.hpp"
#include "deturb/image.hpp"

namespace deturb {

struct PipelineConfig {
    int keyframe_index = 0;
    HornSchunckParams flow_params;
    DeconvConfig deconv;
    /// Passes of register + deconvolve; passes after the first use the
    /// previous restoration, re-blurred by the estimated kernel, as the
    /// reference image.
    int outer_iterations = 1;
    /// Workers for per-frame flow estimation and warping.
    int threads = 1;
    /// Do not retain per-frame flows and registered frames; flows are
    /// recomputed in a second pass instead.
    bool low_memory = false;

    void validate(std::size_t frame_count) const;
};

struct RegistrationResult {
    Image template_image;
    std::vector<FlowField> per_frame_flows;   ///< reference -> frame t
    FlowField mean_flow;
    FlowField inverse_mean_flow;              ///< estimate of the keyframe's own warp
    std::vector<Image> registered_frames;
};

/// Registers every frame to the latent template without an explicit one:
/// w_t = flow(ref, frame_t), w_bar = mean(w_t), w_hat_t = compose(invert(w_bar), w_t),
/// template = mean_t warp_image(frame_t, w_hat_t).
RegistrationResult build_template(std::span<const Image> frames, const PipelineConfig& cfg);

/// Same, with an explicit reference image in place of frames[keyframe]
/// (every frame then gets an estimated flow, including the keyframe).
RegistrationResult build_template_from_reference(std::span<const Image> frames, const Image& reference,
                                                 const PipelineConfig& cfg);

struct PipelineResult {
    Image restored;
    RegistrationResult registration;
    double sigma = 0.0;
    bool deconv_stalled = false;
    /// Wall-clock seconds per stage, summed over outer iterations.
    std::map<std::string, double> timings;
};

/// Template registration followed by blind deconvolution, repeated
/// cfg.outer_iterations times.
PipelineResult run_pipeline(std::span<const Image> frames, const PipelineConfig& cfg);

/// Plain temporal average (baseline).
Image temporal_mean(std::span<const Image> frames);

} // namespace deturb
