#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace deturb::cli {

/// Raised for bad flag values that CLI11 cannot catch on its own; mapped to
/// exit code 2.
class UsageError : public std::runtime_error {
public:
    explicit UsageError(const std::string& what) : std::runtime_error(what) {}
};

struct CommonOptions {
    int threads = 1;
    std::uint64_t seed = 0;
    std::string manifest;   // empty: default location next to the output
};

struct FlowOptions {
    double smoothness = 0.01;
    int iterations = 100;
    int levels = 4;
    double scale = 0.5;
    int warps = 5;
};

struct DeconvOptions {
    double alpha = 0.005;
    int iterations = 300;
    double step = 0.5;
    double backtrack = 0.5;
    double epsilon = 1e-3;
    double sigma_init = 1.0;
    bool fixed_sigma = false;
    double tolerance = 1e-10;
};

struct SimulateOptions {
    CommonOptions common;
    std::string gt;
    int frames = 0;
    std::string out;
    double amplitude = 2.0;
    double correlation = 10.0;
    double blur = 1.0;
    double blur_jitter = 0.0;
    double noise = 0.01;
    std::string ext;        // empty: same as the ground truth
    bool write_flows = false;
};

struct RegisterOptions {
    CommonOptions common;
    std::string input;
    std::string out;
    std::string keyframe = "0";
    FlowOptions flow;
    bool low_memory = false;
    std::string flows_dir;
    std::string registered_dir;
};

struct DeconvCommandOptions {
    CommonOptions common;
    std::string input;
    std::string out;
    DeconvOptions deconv;
};

struct RunOptions {
    RegisterOptions reg;
    DeconvOptions deconv;
    int outer_iterations = 1;
    std::string template_out;
};

struct MetricsOptions {
    CommonOptions common;
    std::string reference;
    std::string test;
    double peak = 1.0;
};

struct InvertFlowOptions {
    CommonOptions common;
    std::string input;
    std::string out;
    std::string weights_out;
};

int cmd_simulate(const SimulateOptions& o);
int cmd_register(const RegisterOptions& o);
int cmd_deconv(const DeconvCommandOptions& o);
int cmd_run(const RunOptions& o);
int cmd_metrics(const MetricsOptions& o);
int cmd_invert_flow(const InvertFlowOptions& o);

} // namespace deturb::cli
