#include <CLI11.hpp>

#include <algorithm>
#include <exception>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include "commands.hpp"
#include "deturb/errors.hpp"
#include "deturb/manifest.hpp"

using namespace deturb::cli;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

const char* const kFrameHelp =
    "Frame directories are read in lexicographic filename order, so number\n"
    "frames with zero padding (frame_0000.png, frame_0001.png, ...).\n"
    "Supported images: binary PGM/PPM (maxval 255), 8-bit PNG, float PFM and\n"
    "NumPy .npy (float64, lossless; use it for intermediate templates).\n"
    "Exit codes: 0 success, 1 runtime or I/O failure, 2 usage error.";

void add_common(CLI::App* sub, CommonOptions& c)
{
    sub->add_option("--config", "key=value file of long flag names; explicit flags take precedence");
    sub->add_option("--threads", c.threads, "Worker threads")->capture_default_str();
    sub->add_option("--seed", c.seed, "Random seed")->capture_default_str();
    sub->add_option("--manifest", c.manifest, "Manifest path (default: next to the output)");
}

void add_flow(CLI::App* sub, FlowOptions& f)
{
    sub->add_option("--smoothness", f.smoothness, "Horn-Schunck smoothness weight")->capture_default_str();
    sub->add_option("--hs-iterations", f.iterations, "Jacobi iterations per pyramid level")->capture_default_str();
    sub->add_option("--pyramid-levels", f.levels, "Pyramid levels")->capture_default_str();
    sub->add_option("--pyramid-scale", f.scale, "Scale between pyramid levels")->capture_default_str();
    sub->add_option("--warps", f.warps, "Re-linearizations per level")->capture_default_str();
}

void add_deconv(CLI::App* sub, DeconvOptions& d)
{
    sub->add_option("--alpha", d.alpha, "TV weight")->capture_default_str();
    sub->add_option("--iterations", d.iterations, "Maximum descent iterations")->capture_default_str();
    sub->add_option("--step", d.step, "Initial step size")->capture_default_str();
    sub->add_option("--backtrack", d.backtrack, "Backtracking factor")->capture_default_str();
    sub->add_option("--epsilon", d.epsilon, "TV smoothing epsilon")->capture_default_str();
    sub->add_option("--sigma-init", d.sigma_init, "Blur sigma used when estimation fails or is disabled")
        ->capture_default_str();
    sub->add_flag("--fixed-sigma", d.fixed_sigma, "Use --sigma-init instead of estimating sigma");
    sub->add_option("--tolerance", d.tolerance, "Relative objective decrease treated as converged")
        ->capture_default_str();
}

void add_register(CLI::App* sub, RegisterOptions& r)
{
    add_common(sub, r.common);
    sub->add_option("--input", r.input, "Directory of frames")->required();
    sub->add_option("--out", r.out, "Output image")->required();
    sub->add_option("--keyframe", r.keyframe, "Reference frame: index, first, middle or last")
        ->capture_default_str();
    add_flow(sub, r.flow);
    sub->add_flag("--low-memory", r.low_memory, "Recompute flows instead of keeping them in memory");
    sub->add_option("--flows-dir", r.flows_dir, "Write per-frame, mean and inverse mean flows (.flo) here");
    sub->add_option("--registered-dir", r.registered_dir, "Write registered frames here");
}

bool given(const std::vector<std::string>& args, const std::string& flag)
{
    return std::any_of(args.begin(), args.end(),
                       [&](const std::string& a) { return a == flag || a.rfind(flag + "=", 0) == 0; });
}

// Removes --config FILE from args and appends "--key value" for every entry
// of FILE whose flag was not given explicitly.
void merge_config(CLI::App& app, std::vector<std::string>& args)
{
    std::string file;
    for (auto it = args.begin(); it != args.end(); ++it) {
        if (*it == "--config") {
            if (std::next(it) == args.end())
                throw UsageError("--config requires a file");
            file = *std::next(it);
            args.erase(it, it + 2);
            break;
        }
        if (it->rfind("--config=", 0) == 0) {
            file = it->substr(9);
            args.erase(it);
            break;
        }
    }
    if (file.empty())
        return;
    const auto name = std::find_if(args.begin(), args.end(), [](const std::string& a) { return a.front() != '-'; });
    CLI::App* sub = name == args.end() ? nullptr : app.get_subcommand_no_throw(*name);
    if (sub == nullptr)
        throw UsageError("--config must follow a subcommand");

    deturb::RunManifest config;
    try {
        config = deturb::RunManifest::read(file);
    } catch (const std::exception& e) {
        throw UsageError(std::string("cannot use config file: ") + e.what());
    }
    std::vector<std::string> extra;
    for (const auto& [key, value] : config.entries()) {
        const std::string flag = "--" + key;
        const CLI::Option* opt = sub->get_option_no_throw(flag);
        if (opt == nullptr || key == "config")
            throw UsageError("unknown key in " + file + ": " + key);
        if (given(args, flag))
            continue;
        if (opt->get_expected_min() == 0) {
            if (value == "true" || value == "1" || value == "yes")
                extra.push_back(flag);
            else if (value != "false" && value != "0" && value != "no")
                throw UsageError("flag " + key + " in " + file + " needs true or false");
        } else {
            extra.push_back(flag);
            extra.push_back(value);
        }
    }
    args.insert(args.end(), extra.begin(), extra.end());
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Turbulence mitigation by template registration and blind deconvolution"};
    app.footer(kFrameHelp);
    app.require_subcommand(1);

    std::function<int()> action;

    SimulateOptions sim;
    auto* s = app.add_subcommand("simulate", "Synthesize a turbulent sequence from a ground-truth image");
    add_common(s, sim.common);
    s->add_option("--gt", sim.gt, "Ground-truth image")->required();
    s->add_option("--frames", sim.frames, "Number of frames")->required();
    s->add_option("--out", sim.out, "Output directory")->required();
    s->add_option("--amp", sim.amplitude, "RMS warp amplitude (px)")->capture_default_str();
    s->add_option("--corr", sim.correlation, "Warp correlation length (px)")->capture_default_str();
    s->add_option("--blur", sim.blur, "Mean blur sigma (px)")->capture_default_str();
    s->add_option("--blur-jitter", sim.blur_jitter, "Half-width of the uniform blur sigma range")
        ->capture_default_str();
    s->add_option("--noise", sim.noise, "Noise standard deviation")->capture_default_str();
    s->add_option("--ext", sim.ext, "Frame file extension (default: same as --gt)");
    s->add_flag("--write-flows", sim.write_flows, "Also write the true displacement of each frame (.flo)");
    s->callback([&] { action = [&] { return cmd_simulate(sim); }; });

    RegisterOptions reg;
    auto* r = app.add_subcommand("register", "Build the registration template of a frame directory");
    add_register(r, reg);
    r->callback([&] { action = [&] { return cmd_register(reg); }; });

    DeconvCommandOptions dec;
    auto* d = app.add_subcommand("deconv", "Blind TV deconvolution of a single image");
    add_common(d, dec.common);
    d->add_option("--input", dec.input, "Input image")->required();
    d->add_option("--out", dec.out, "Output image")->required();
    add_deconv(d, dec.deconv);
    d->callback([&] { action = [&] { return cmd_deconv(dec); }; });

    RunOptions run;
    auto* u = app.add_subcommand("run", "Registration followed by blind deconvolution");
    add_register(u, run.reg);
    add_deconv(u, run.deconv);
    u->add_option("--outer-iterations", run.outer_iterations, "Passes using the restored image as reference")
        ->capture_default_str();
    u->add_option("--template-out", run.template_out, "Also write the last registration template");
    u->callback([&] { action = [&] { return cmd_run(run); }; });

    MetricsOptions met;
    auto* m = app.add_subcommand("metrics", "PSNR and SSIM of a test image against a reference");
    add_common(m, met.common);
    m->add_option("--reference,reference", met.reference, "Reference image")->required();
    m->add_option("--test,test", met.test, "Test image")->required();
    m->add_option("--peak", met.peak, "Peak value for PSNR (use 255 for 8-bit units)")->capture_default_str();
    m->callback([&] { action = [&] { return cmd_metrics(met); }; });

    InvertFlowOptions inv;
    auto* i = app.add_subcommand("invert-flow", "Invert a displacement field (.flo)");
    add_common(i, inv.common);
    i->add_option("--input", inv.input, "Input .flo")->required();
    i->add_option("--out", inv.out, "Output .flo")->required();
    i->add_option("--weights-out", inv.weights_out, "Write splat weights / 4 as an image");
    i->callback([&] { action = [&] { return cmd_invert_flow(inv); }; });

    std::vector<std::string> args(argv + 1, argv + argc);
    try {
        merge_config(app, args);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kExitUsage;
    }
    std::reverse(args.begin(), args.end());

    try {
        app.parse(args);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        return action();
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\nRun with --help for usage.\n";
        return kExitUsage;
    } catch (const deturb::IoError& e) {
        std::cerr << "I/O error: " << e.what() << '\n';
    } catch (const deturb::FormatError& e) {
        std::cerr << "format error: " << e.what() << '\n';
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
    }
    return kExitFailure;
}
