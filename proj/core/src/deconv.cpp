#include "deturb/deconv.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "deturb/errors.hpp"

namespace deturb {

int GaussianKernel::default_radius(double sigma)
{
    return std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
}

Kernel::Kernel(int size, std::vector<double> values) : size_(size), values_(std::move(values))
{
    if (size <= 0 || size % 2 == 0)
        throw InvalidInput("Kernel: size must be odd and positive");
    if (values_.size() != static_cast<std::size_t>(size) * size)
        throw InvalidInput("Kernel: value count does not match size");
}

Kernel::Kernel(std::vector<double> row_taps, std::vector<double> col_taps)
    : size_(static_cast<int>(row_taps.size())), row_taps_(std::move(row_taps)), col_taps_(std::move(col_taps))
{
    if (size_ <= 0 || size_ % 2 == 0 || col_taps_.size() != row_taps_.size())
        throw InvalidInput("Kernel: separable taps must share an odd length");
    values_.resize(static_cast<std::size_t>(size_) * size_);
    for (int i = 0; i < size_; ++i)
        for (int j = 0; j < size_; ++j)
            values_[i * size_ + j] = row_taps_[i] * col_taps_[j];
}

Kernel Kernel::delta()
{
    return Kernel(std::vector<double>{1.0}, std::vector<double>{1.0});
}

double Kernel::sum() const noexcept
{
    return std::accumulate(values_.begin(), values_.end(), 0.0);
}

namespace {

struct Taps1d {
    std::vector<double> value;
    std::vector<double> d_sigma;
};

// Normalized 1-D Gaussian samples at offsets -radius..radius minus `mu`, and
// their derivative with respect to sigma (quotient rule through the sum).
Taps1d gaussian_taps_1d(double sigma, double mu, int radius)
{
    const int n = 2 * radius + 1;
    Taps1d t{std::vector<double>(n), std::vector<double>(n, 0.0)};
    if (sigma < kDeltaSigma) {
        const long center = std::lround(mu);
        if (center < -radius || center > radius)
            throw InvalidInput("make_kernel: delta shift outside kernel support");
        t.value[center + radius] = 1.0;
        return t;
    }
    std::vector<double> g(n), dg(n);
    double s = 0.0, ds = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = (i - radius) - mu;
        g[i] = std::exp(-0.5 * x * x / (sigma * sigma));
        dg[i] = g[i] * x * x / (sigma * sigma * sigma);
        s += g[i];
        ds += dg[i];
    }
    if (!(s > 0.0))
        throw InvalidInput("make_kernel: shift leaves no mass inside the support");
    for (int i = 0; i < n; ++i) {
        t.value[i] = g[i] / s;
        t.d_sigma[i] = dg[i] / s - g[i] * ds / (s * s);
    }
    return t;
}

void check_kernel_args(double sigma, int radius)
{
    if (!(sigma > 0.0) || !std::isfinite(sigma))
        throw InvalidInput("make_kernel: sigma must be positive");
    if (sigma >= kDeltaSigma && radius < static_cast<int>(std::ceil(3.0 * sigma)))
        throw InvalidInput("make_kernel: radius must be at least ceil(3 sigma)");
}

} // namespace

Kernel make_kernel(double sigma, std::array<double, 2> shift, int radius)
{
    if (radius < 0)
        radius = GaussianKernel::default_radius(sigma);
    check_kernel_args(sigma, radius);
    auto rows = gaussian_taps_1d(sigma, shift[0], radius);
    auto cols = gaussian_taps_1d(sigma, shift[1], radius);
    return Kernel(std::move(rows.value), std::move(cols.value));
}

Kernel make_kernel(const GaussianKernel& g)
{
    return make_kernel(g.sigma, g.shift, g.radius);
}

std::array<Kernel, 2> kernel_sigma_derivative(double sigma, std::array<double, 2> shift, int radius)
{
    if (radius < 0)
        radius = GaussianKernel::default_radius(sigma);
    check_kernel_args(sigma, radius);
    auto rows = gaussian_taps_1d(sigma, shift[0], radius);
    auto cols = gaussian_taps_1d(sigma, shift[1], radius);
    return {Kernel(rows.d_sigma, cols.value), Kernel(rows.value, cols.d_sigma)};
}

namespace {

// One 1-D pass along rows (axis 0) or columns (axis 1).
Image convolve_axis(const Image& img, const std::vector<double>& taps, int axis)
{
    const int h = img.height(), w = img.width(), ch = img.channels();
    const int radius = static_cast<int>(taps.size() / 2);
    Image out(h, w, ch);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c)
            for (int k = 0; k < ch; ++k) {
                double s = 0.0;
                for (int t = -radius; t <= radius; ++t) {
                    const double tap = taps[t + radius];
                    if (tap == 0.0)
                        continue;
                    s += tap * (axis == 0 ? img.at(std::clamp(r - t, 0, h - 1), c, k)
                                          : img.at(r, std::clamp(c - t, 0, w - 1), k));
                }
                out.at(r, c, k) = s;
            }
    return out;
}

// Adjoint of convolve_axis: scatter each output back to its clamped sources.
Image scatter_axis(const Image& img, const std::vector<double>& taps, int axis)
{
    const int h = img.height(), w = img.width(), ch = img.channels();
    const int radius = static_cast<int>(taps.size() / 2);
    Image out(h, w, ch);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c)
            for (int k = 0; k < ch; ++k) {
                const double v = img.at(r, c, k);
                for (int t = -radius; t <= radius; ++t) {
                    const double tap = taps[t + radius];
                    if (tap == 0.0)
                        continue;
                    if (axis == 0)
                        out.at(std::clamp(r - t, 0, h - 1), c, k) += tap * v;
                    else
                        out.at(r, std::clamp(c - t, 0, w - 1), k) += tap * v;
                }
            }
    return out;
}

} // namespace

Image convolve(const Image& img, const Kernel& k)
{
    if (k.size() % 2 == 0 || k.size() == 0)
        throw InvalidInput("convolve: kernel must be odd-sized");
    if (k.separable())
        return convolve_axis(convolve_axis(img, k.col_taps(), 1), k.row_taps(), 0);

    const int h = img.height(), w = img.width(), ch = img.channels();
    const int radius = k.radius();
    Image out(h, w, ch);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c)
            for (int q = 0; q < ch; ++q) {
                double s = 0.0;
                for (int i = -radius; i <= radius; ++i)
                    for (int j = -radius; j <= radius; ++j)
                        s += k.at(i, j) * img.at(std::clamp(r - i, 0, h - 1), std::clamp(c - j, 0, w - 1), q);
                out.at(r, c, q) = s;
            }
    return out;
}

Image correlate_adjoint(const Image& img, const Kernel& k)
{
    if (k.size() % 2 == 0 || k.size() == 0)
        throw InvalidInput("correlate_adjoint: kernel must be odd-sized");
    if (k.separable())
        return scatter_axis(scatter_axis(img, k.row_taps(), 0), k.col_taps(), 1);

    const int h = img.height(), w = img.width(), ch = img.channels();
    const int radius = k.radius();
    Image out(h, w, ch);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c)
            for (int q = 0; q < ch; ++q) {
                const double v = img.at(r, c, q);
                for (int i = -radius; i <= radius; ++i)
                    for (int j = -radius; j <= radius; ++j)
                        out.at(std::clamp(r - i, 0, h - 1), std::clamp(c - j, 0, w - 1), q) += k.at(i, j) * v;
            }
    return out;
}

namespace {

void check_objective_args(const Image& latent, const Image& observed, double tv_epsilon)
{
    if (!latent.same_shape(observed))
        throw InvalidInput("tv_objective: latent and observed shapes differ");
    if (!(tv_epsilon > 0.0))
        throw InvalidInput("tv_objective: tv_epsilon must be positive");
}

// Smoothed TV value; when `grad` is non-null, adds alpha * d(TV)/dI into it.
double smoothed_tv(const Image& img, double eps, double alpha, Image* grad)
{
    const int h = img.height(), w = img.width(), ch = img.channels();
    double total = 0.0;
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c)
            for (int k = 0; k < ch; ++k) {
                const double v = img.at(r, c, k);
                const double gr = r + 1 < h ? img.at(r + 1, c, k) - v : 0.0;
                const double gc = c + 1 < w ? img.at(r, c + 1, k) - v : 0.0;
                const double mag = std::sqrt(gr * gr + gc * gc + eps * eps);
                total += mag;
                if (grad) {
                    const double pr = alpha * gr / mag;
                    const double pc = alpha * gc / mag;
                    grad->at(r, c, k) -= pr + pc;
                    if (r + 1 < h)
                        grad->at(r + 1, c, k) += pr;
                    if (c + 1 < w)
                        grad->at(r, c + 1, k) += pc;
                }
            }
    return total;
}

double sum_squares(std::span<const double> v)
{
    double s = 0.0;
    for (double x : v)
        s += x * x;
    return s;
}

double dot(std::span<const double> a, std::span<const double> b)
{
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        s += a[i] * b[i];
    return s;
}

Image residual(const Image& latent, const Image& observed, const Kernel& k)
{
    Image r = convolve(latent, k);
    auto rv = r.data();
    const auto ov = observed.data();
    for (std::size_t i = 0; i < rv.size(); ++i)
        rv[i] -= ov[i];
    return r;
}

// Objective and image gradient for a fixed kernel.
double objective_and_gradient(const Image& latent, const Image& observed, const Kernel& k, double alpha,
                              double eps, Image* grad)
{
    const Image r = residual(latent, observed, k);
    const double data = sum_squares(r.data());
    if (!grad)
        return data + alpha * smoothed_tv(latent, eps, 0.0, nullptr);
    *grad = correlate_adjoint(r, k);
    for (auto& g : grad->data())
        g *= 2.0;
    return data + alpha * smoothed_tv(latent, eps, alpha, grad);
}

} // namespace

double tv_objective(const Image& latent, const Image& observed, const Kernel& k, double alpha, double tv_epsilon)
{
    check_objective_args(latent, observed, tv_epsilon);
    return objective_and_gradient(latent, observed, k, alpha, tv_epsilon, nullptr);
}

ObjectiveGradient tv_objective_grad(const Image& latent, const Image& observed, const GaussianKernel& g,
                                    double alpha, double tv_epsilon)
{
    check_objective_args(latent, observed, tv_epsilon);
    const Kernel k = make_kernel(g);
    ObjectiveGradient out;
    const Image r = residual(latent, observed, k);
    out.wrt_image = correlate_adjoint(r, k);
    for (auto& v : out.wrt_image.data())
        v *= 2.0;
    smoothed_tv(latent, tv_epsilon, alpha, &out.wrt_image);

    if (g.sigma >= kDeltaSigma) {
        const auto dk = kernel_sigma_derivative(g.sigma, g.shift, g.radius);
        double d = 0.0;
        for (const auto& part : dk)
            d += dot(r.data(), convolve(latent, part).data());
        out.wrt_sigma = 2.0 * d;
    }
    return out;
}

void DeconvConfig::validate() const
{
    if (!(alpha > 0.0))
        throw InvalidInput("DeconvConfig: alpha must be positive");
    if (max_iterations < 1)
        throw InvalidInput("DeconvConfig: max_iterations must be >= 1");
    if (!(step_size > 0.0))
        throw InvalidInput("DeconvConfig: step_size must be positive");
    if (!(backtrack_factor > 0.0 && backtrack_factor < 1.0))
        throw InvalidInput("DeconvConfig: backtrack_factor must lie in (0, 1)");
    if (!(tv_epsilon > 0.0))
        throw InvalidInput("DeconvConfig: tv_epsilon must be positive");
    if (!(sigma_init > 0.0))
        throw InvalidInput("DeconvConfig: sigma_init must be positive");
    if (!(tolerance >= 0.0))
        throw InvalidInput("DeconvConfig: tolerance must be nonnegative");
}

DeconvResult blind_deconv(const Image& observed, const DeconvConfig& cfg)
{
    cfg.validate();
    if (observed.empty())
        throw InvalidInput("blind_deconv: empty image");

    DeconvResult result;
    result.sigma = cfg.sigma_init;
    if (cfg.estimate_sigma) {
        if (auto est = estimate_blur_sigma(to_gray(observed)))
            result.sigma = *est;
    }
    const double sigma = std::max(result.sigma, kDeltaSigma / 2);
    const Kernel k = make_kernel(sigma, cfg.shift,
                                 GaussianKernel::default_radius(sigma) +
                                     static_cast<int>(std::ceil(std::max(std::abs(cfg.shift[0]), std::abs(cfg.shift[1])))));

    constexpr double armijo = 1e-4;
    constexpr int max_backtracks = 40;

    Image x = observed;
    Image g;
    double f = objective_and_gradient(x, observed, k, cfg.alpha, cfg.tv_epsilon, &g);
    result.objective_history.push_back(f);

    Image prev_x, prev_g, trial, trial_g;
    double step = cfg.step_size;
    int flat_steps = 0;
    for (int iter = 0; iter < cfg.max_iterations; ++iter) {
        if (iter > 0) {
            // Barzilai-Borwein trial step from the last accepted move.
            double ss = 0.0, sy = 0.0;
            const auto xv = x.data(), pxv = prev_x.data(), gv = g.data(), pgv = prev_g.data();
            for (std::size_t i = 0; i < xv.size(); ++i) {
                const double s = xv[i] - pxv[i];
                const double y = gv[i] - pgv[i];
                ss += s * s;
                sy += s * y;
            }
            if (sy > 0.0 && ss > 0.0)
                step = ss / sy;
        }
        const double gnorm2 = sum_squares(g.data());
        if (gnorm2 == 0.0)
            break;

        bool accepted = false;
        double f_trial = f;
        for (int bt = 0; bt < max_backtracks; ++bt) {
            trial = x;
            auto tv = trial.data();
            const auto gv = g.data();
            for (std::size_t i = 0; i < tv.size(); ++i)
                tv[i] -= step * gv[i];
            f_trial = objective_and_gradient(trial, observed, k, cfg.alpha, cfg.tv_epsilon, &trial_g);
            if (f_trial <= f - armijo * step * gnorm2) {
                accepted = true;
                break;
            }
            step *= cfg.backtrack_factor;
        }
        if (!accepted) {
            result.stalled = true;
            break;
        }
        flat_steps = (f - f_trial) <= cfg.tolerance * std::max(1.0, std::abs(f)) ? flat_steps + 1 : 0;
        prev_x = std::move(x);
        prev_g = std::move(g);
        x = std::move(trial);
        g = std::move(trial_g);
        f = f_trial;
        result.objective_history.push_back(f);
        result.iterations = iter + 1;
        if (flat_steps >= 3)
            break;
    }

    result.restored = clamp(std::move(x));
    return result;
}

} // namespace deturb
