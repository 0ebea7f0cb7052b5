#include "commands.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "deturb/deconv.hpp"
#include "deturb/errors.hpp"
#include "deturb/flow.hpp"
#include "deturb/image.hpp"
#include "deturb/manifest.hpp"
#include "deturb/metrics.hpp"
#include "deturb/register.hpp"
#include "deturb/turbsim.hpp"

namespace deturb::cli {

namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0)
{
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string numbered(const std::string& stem, std::size_t index, std::size_t count, const std::string& ext)
{
    int digits = 4;
    for (std::size_t n = count; n >= 10000; n /= 10)
        ++digits;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%0*zu", digits, index);
    return stem + buf + ext;
}

fs::path manifest_path(const CommonOptions& common, const fs::path& fallback)
{
    return common.manifest.empty() ? fallback : fs::path(common.manifest);
}

fs::path beside(const std::string& out)
{
    return fs::path(out + ".manifest.txt");
}

void ensure_dir(const fs::path& dir)
{
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (!fs::is_directory(dir))
        throw IoError("cannot create directory " + dir.string());
}

void check_threads(int threads)
{
    if (threads < 1)
        throw UsageError("--threads must be >= 1");
}

void record_common(RunManifest& m, const std::string& command, const CommonOptions& c)
{
    m.set("command", command);
    m.set("threads", c.threads);
    m.set("seed", static_cast<long long>(c.seed));
}

HornSchunckParams flow_params(const FlowOptions& f)
{
    HornSchunckParams p;
    p.smoothness = f.smoothness;
    p.iterations_per_level = f.iterations;
    p.pyramid_levels = f.levels;
    p.pyramid_scale = f.scale;
    p.warps_per_level = f.warps;
    try {
        p.validate();
    } catch (const InvalidInput& e) {
        throw UsageError(e.what());
    }
    return p;
}

DeconvConfig deconv_config(const DeconvOptions& d)
{
    DeconvConfig c;
    c.alpha = d.alpha;
    c.max_iterations = d.iterations;
    c.step_size = d.step;
    c.backtrack_factor = d.backtrack;
    c.tv_epsilon = d.epsilon;
    c.sigma_init = d.sigma_init;
    c.estimate_sigma = !d.fixed_sigma;
    c.tolerance = d.tolerance;
    try {
        c.validate();
    } catch (const InvalidInput& e) {
        throw UsageError(e.what());
    }
    return c;
}

void record_flow(RunManifest& m, const HornSchunckParams& p)
{
    m.set("flow_smoothness", p.smoothness);
    m.set("flow_iterations_per_level", p.iterations_per_level);
    m.set("flow_pyramid_levels", p.pyramid_levels);
    m.set("flow_pyramid_scale", p.pyramid_scale);
    m.set("flow_warps_per_level", p.warps_per_level);
}

void record_deconv(RunManifest& m, const DeconvConfig& c)
{
    m.set("deconv_alpha", c.alpha);
    m.set("deconv_max_iterations", c.max_iterations);
    m.set("deconv_step_size", c.step_size);
    m.set("deconv_backtrack_factor", c.backtrack_factor);
    m.set("deconv_tv_epsilon", c.tv_epsilon);
    m.set("deconv_sigma_init", c.sigma_init);
    m.set("deconv_estimate_sigma", c.estimate_sigma);
    m.set("deconv_tolerance", c.tolerance);
}

int resolve_keyframe(const std::string& spec, std::size_t frame_count)
{
    const auto n = static_cast<long long>(frame_count);
    long long k = 0;
    if (spec == "first") {
        k = 0;
    } else if (spec == "middle") {
        k = n / 2;
    } else if (spec == "last") {
        k = n - 1;
    } else {
        std::size_t used = 0;
        try {
            k = std::stoll(spec, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != spec.size())
            throw UsageError("--keyframe must be an index or one of first, middle, last");
    }
    if (k < 0 || k >= n)
        throw UsageError("--keyframe " + spec + " is out of range for " + std::to_string(n) + " frames");
    return static_cast<int>(k);
}

struct LoadedFrames {
    std::vector<fs::path> paths;
    std::vector<Image> images;
};

LoadedFrames load_input_frames(const std::string& dir)
{
    std::error_code ec;
    if (!fs::is_directory(dir, ec))
        throw UsageError("--input must be a directory of frames: " + dir);
    LoadedFrames f;
    f.paths = list_frames(dir);
    if (f.paths.empty())
        throw UsageError("no frames found in " + dir);
    for (const auto& p : f.paths)
        f.images.push_back(load_image(p));
    for (const auto& img : f.images)
        if (!img.same_shape(f.images.front()))
            throw FormatError("frames in " + dir + " differ in size or channel count");
    return f;
}

PipelineConfig pipeline_config(const RegisterOptions& o, std::size_t frame_count)
{
    check_threads(o.common.threads);
    PipelineConfig cfg;
    cfg.keyframe_index = resolve_keyframe(o.keyframe, frame_count);
    cfg.flow_params = flow_params(o.flow);
    cfg.threads = o.common.threads;
    cfg.low_memory = o.low_memory;
    if (o.low_memory && (!o.flows_dir.empty() || !o.registered_dir.empty()))
        throw UsageError("--low-memory cannot be combined with --flows-dir or --registered-dir");
    return cfg;
}

void record_register(RunManifest& m, const RegisterOptions& o, const PipelineConfig& cfg, const LoadedFrames& f)
{
    m.set("input_dir", o.input);
    m.set("frame_count", static_cast<long long>(f.paths.size()));
    m.set("keyframe_index", cfg.keyframe_index);
    m.set("keyframe_file", f.paths[static_cast<std::size_t>(cfg.keyframe_index)].filename().string());
    m.set("low_memory", cfg.low_memory);
    record_flow(m, cfg.flow_params);
}

void write_registration_artifacts(const RegisterOptions& o, const RegistrationResult& reg, RunManifest& m)
{
    const std::size_t n = reg.per_frame_flows.size();
    if (!o.flows_dir.empty()) {
        ensure_dir(o.flows_dir);
        for (std::size_t t = 0; t < n; ++t)
            write_flo(reg.per_frame_flows[t], fs::path(o.flows_dir) / numbered("flow_", t, n, ".flo"));
        write_flo(reg.mean_flow, fs::path(o.flows_dir) / "mean_flow.flo");
        write_flo(reg.inverse_mean_flow, fs::path(o.flows_dir) / "inverse_mean_flow.flo");
        m.set("flows_dir", o.flows_dir);
    }
    if (!o.registered_dir.empty()) {
        ensure_dir(o.registered_dir);
        std::string ext = fs::path(o.out).extension().string();
        if (ext.empty())
            ext = ".png";
        for (std::size_t t = 0; t < reg.registered_frames.size(); ++t)
            save_image(reg.registered_frames[t],
                       fs::path(o.registered_dir) / numbered("registered_", t, reg.registered_frames.size(), ext));
        m.set("registered_dir", o.registered_dir);
    }
}

} // namespace

int cmd_simulate(const SimulateOptions& o)
{
    const auto t0 = Clock::now();
    check_threads(o.common.threads);
    if (o.frames < 1)
        throw UsageError("--frames must be >= 1");
    TurbulenceParams p;
    p.amplitude = o.amplitude;
    p.correlation_length = o.correlation;
    p.blur_sigma_mean = o.blur;
    p.blur_sigma_jitter = o.blur_jitter;
    p.noise_sigma = o.noise;
    p.seed = o.common.seed;
    try {
        p.validate();
    } catch (const InvalidInput& e) {
        throw UsageError(e.what());
    }

    const Image gt = load_image(o.gt);
    std::string ext = o.ext.empty() ? fs::path(o.gt).extension().string() : o.ext;
    if (!ext.empty() && ext.front() != '.')
        ext.insert(ext.begin(), '.');
    const double load_time = seconds_since(t0);

    auto t1 = Clock::now();
    const SimulatedSequence seq = simulate_sequence(gt, o.frames, p);
    const double sim_time = seconds_since(t1);

    t1 = Clock::now();
    ensure_dir(o.out);
    RunManifest m;
    record_common(m, "simulate", o.common);
    m.set("gt", fs::path(o.gt).filename().string());
    m.set("gt_path", fs::absolute(o.gt).string());
    m.set("frames", o.frames);
    m.set("height", gt.height());
    m.set("width", gt.width());
    m.set("channels", gt.channels());
    m.set("amplitude", p.amplitude);
    m.set("correlation_length", p.correlation_length);
    m.set("blur_sigma_mean", p.blur_sigma_mean);
    m.set("blur_sigma_jitter", p.blur_sigma_jitter);
    m.set("noise_sigma", p.noise_sigma);
    m.set("output_dir", o.out);
    m.set("frame_format", ext);
    m.set("write_flows", o.write_flows);
    const std::size_t n = seq.frames.size();
    for (std::size_t t = 0; t < n; ++t) {
        const std::string name = numbered("frame_", t, n, ext);
        save_image(seq.frames[t], fs::path(o.out) / name);
        m.set(numbered("frame_", t, n, ""), name);
        m.set(numbered("blur_sigma_", t, n, ""), seq.blur_sigmas[t]);
        if (o.write_flows)
            write_flo(seq.true_flows[t], fs::path(o.out) / numbered("true_flow_", t, n, ".flo"));
    }
    m.set("time_load", load_time);
    m.set("time_simulate", sim_time);
    m.set("time_write", seconds_since(t1));
    m.set("time_total", seconds_since(t0));
    m.write(manifest_path(o.common, fs::path(o.out) / "manifest.txt"));
    return 0;
}

int cmd_register(const RegisterOptions& o)
{
    const auto t0 = Clock::now();
    const LoadedFrames frames = load_input_frames(o.input);
    const PipelineConfig cfg = pipeline_config(o, frames.images.size());
    const double load_time = seconds_since(t0);

    auto t1 = Clock::now();
    const RegistrationResult reg = build_template(frames.images, cfg);
    const double register_time = seconds_since(t1);

    t1 = Clock::now();
    save_image(reg.template_image, o.out);
    RunManifest m;
    record_common(m, "register", o.common);
    record_register(m, o, cfg, frames);
    m.set("output", o.out);
    write_registration_artifacts(o, reg, m);
    m.set("time_load", load_time);
    m.set("time_register", register_time);
    m.set("time_write", seconds_since(t1));
    m.set("time_total", seconds_since(t0));
    m.write(manifest_path(o.common, beside(o.out)));
    return 0;
}

int cmd_deconv(const DeconvCommandOptions& o)
{
    const auto t0 = Clock::now();
    check_threads(o.common.threads);
    const DeconvConfig cfg = deconv_config(o.deconv);
    const Image input = load_image(o.input);
    const double load_time = seconds_since(t0);

    auto t1 = Clock::now();
    const DeconvResult r = blind_deconv(input, cfg);
    const double deconv_time = seconds_since(t1);

    t1 = Clock::now();
    save_image(r.restored, o.out);
    RunManifest m;
    record_common(m, "deconv", o.common);
    m.set("input", o.input);
    m.set("output", o.out);
    record_deconv(m, cfg);
    m.set("sigma_hat", r.sigma);
    m.set("iterations", r.iterations);
    m.set("stalled", r.stalled);
    if (!r.objective_history.empty()) {
        m.set("objective_initial", r.objective_history.front());
        m.set("objective_final", r.objective_history.back());
    }
    m.set("time_load", load_time);
    m.set("time_deconv", deconv_time);
    m.set("time_write", seconds_since(t1));
    m.set("time_total", seconds_since(t0));
    m.write(manifest_path(o.common, beside(o.out)));
    return 0;
}

int cmd_run(const RunOptions& o)
{
    const auto t0 = Clock::now();
    const LoadedFrames frames = load_input_frames(o.reg.input);
    PipelineConfig cfg = pipeline_config(o.reg, frames.images.size());
    cfg.deconv = deconv_config(o.deconv);
    if (o.outer_iterations < 1)
        throw UsageError("--outer-iterations must be >= 1");
    cfg.outer_iterations = o.outer_iterations;
    const double load_time = seconds_since(t0);

    auto t1 = Clock::now();
    const PipelineResult r = run_pipeline(frames.images, cfg);
    const double pipeline_time = seconds_since(t1);

    t1 = Clock::now();
    save_image(r.restored, o.reg.out);
    RunManifest m;
    record_common(m, "run", o.reg.common);
    record_register(m, o.reg, cfg, frames);
    record_deconv(m, cfg.deconv);
    m.set("outer_iterations", cfg.outer_iterations);
    m.set("output", o.reg.out);
    if (!o.template_out.empty()) {
        save_image(r.registration.template_image, o.template_out);
        m.set("template_output", o.template_out);
    }
    write_registration_artifacts(o.reg, r.registration, m);
    m.set("sigma_hat", r.sigma);
    m.set("deconv_stalled", r.deconv_stalled);
    m.set("time_load", load_time);
    for (const auto& [stage, seconds] : r.timings)
        m.set("time_" + stage, seconds);
    m.set("time_pipeline", pipeline_time);
    m.set("time_write", seconds_since(t1));
    m.set("time_total", seconds_since(t0));
    m.write(manifest_path(o.reg.common, beside(o.reg.out)));
    return 0;
}

int cmd_metrics(const MetricsOptions& o)
{
    const auto t0 = Clock::now();
    if (!(o.peak > 0.0))
        throw UsageError("--peak must be positive");
    Image a = load_image(o.reference);
    Image b = load_image(o.test);
    if (a.height() != b.height() || a.width() != b.width())
        throw FormatError("images differ in size");
    if (a.channels() != b.channels()) {
        a = to_gray(a);
        b = to_gray(b);
    }
    // Files are read into [0, 1]; a larger peak compares them on its own scale.
    for (auto& v : a.data())
        v *= o.peak;
    for (auto& v : b.data())
        v *= o.peak;
    const double p = psnr(a, b, o.peak);
    SsimParams sp;
    sp.dynamic_range = o.peak;
    const double s = ssim(a, b, sp);
    std::printf("PSNR: %.4f dB\nSSIM: %.6f\n", p, s);

    if (!o.common.manifest.empty()) {
        RunManifest m;
        record_common(m, "metrics", o.common);
        m.set("reference", o.reference);
        m.set("test", o.test);
        m.set("peak", o.peak);
        m.set("psnr_db", p);
        m.set("ssim", s);
        m.set("time_total", seconds_since(t0));
        m.write(o.common.manifest);
    }
    return 0;
}

int cmd_invert_flow(const InvertFlowOptions& o)
{
    const auto t0 = Clock::now();
    check_threads(o.common.threads);
    const FlowField w = read_flo(o.input);
    auto t1 = Clock::now();
    const InversionResult inv = invert_flow_detailed(w);
    const double invert_time = seconds_since(t1);
    write_flo(inv.inverse, o.out);

    RunManifest m;
    record_common(m, "invert-flow", o.common);
    m.set("input", o.input);
    m.set("output", o.out);
    m.set("height", w.height());
    m.set("width", w.width());
    m.set("holes", static_cast<long long>(inv.weights.hole_count()));
    if (!o.weights_out.empty()) {
        Image weights(w.height(), w.width(), 1);
        for (int r = 0; r < w.height(); ++r)
            for (int c = 0; c < w.width(); ++c)
                weights.at(r, c) = inv.weights.at(r, c) / 4.0;
        save_image(weights, o.weights_out);
        m.set("weights_output", o.weights_out);
    }
    m.set("time_invert", invert_time);
    m.set("time_total", seconds_since(t0));
    m.write(manifest_path(o.common, beside(o.out)));
    return 0;
}

} // namespace deturb::cli
