#include <fftw3.h>

#include <cmath>
#include <complex>
#include <algorithm>
#include <memory>
#include <mutex>
#include <numbers>

#include "deturb/errors.hpp"
#include "deturb/turbsim.hpp"

namespace deturb {

void WavefrontParams::validate() const
{
    if (grid_size < 8)
        throw InvalidInput("WavefrontParams: grid_size must be >= 8");
    if (!(aperture_radius > 0.0 && aperture_radius <= 0.5))
        throw InvalidInput("WavefrontParams: aperture_radius must lie in (0, 0.5]");
    if (!(higher_order_sigma >= 0.0) || !(tilt_sigma >= 0.0) || !(defocus_sigma >= 0.0))
        throw InvalidInput("WavefrontParams: standard deviations must be nonnegative");
    for (int m : higher_order_modes)
        if (m < 7 || m > 15)
            throw InvalidInput("WavefrontParams: higher-order modes must be Noll indices 7..15");
}

namespace {

// Noll-indexed Zernike polynomials of radial order 3 and 4.
double zernike(int noll, double rho, double theta)
{
    const double r2 = rho * rho, r3 = r2 * rho, r4 = r2 * r2;
    switch (noll) {
    case 7: return std::sqrt(8.0) * (3 * r3 - 2 * rho) * std::sin(theta);
    case 8: return std::sqrt(8.0) * (3 * r3 - 2 * rho) * std::cos(theta);
    case 9: return std::sqrt(8.0) * r3 * std::sin(3 * theta);
    case 10: return std::sqrt(8.0) * r3 * std::cos(3 * theta);
    case 11: return std::sqrt(5.0) * (6 * r4 - 6 * r2 + 1);
    case 12: return std::sqrt(10.0) * (4 * r4 - 3 * r2) * std::cos(2 * theta);
    case 13: return std::sqrt(10.0) * (4 * r4 - 3 * r2) * std::sin(2 * theta);
    case 14: return std::sqrt(10.0) * r4 * std::cos(4 * theta);
    case 15: return std::sqrt(10.0) * r4 * std::sin(4 * theta);
    default: throw InvalidInput("zernike: unsupported Noll index");
    }
}

struct FftwFree {
    void operator()(fftw_complex* p) const noexcept { fftw_free(p); }
};
// FFTW planning and plan destruction are not thread-safe; execution is.
std::mutex& fftw_planner_mutex()
{
    static std::mutex m;
    return m;
}

struct PlanDestroy {
    void operator()(fftw_plan_s* p) const noexcept
    {
        std::lock_guard lock(fftw_planner_mutex());
        fftw_destroy_plan(p);
    }
};

// Squared magnitude of the DFT of the padded pupil field, fftshifted.
Image raw_psf(const WavefrontParams& wp, const WavefrontDraw& draw)
{
    wp.validate();
    // An empty coefficient list stands for all higher-order terms being zero.
    if (!draw.higher_order.empty() && draw.higher_order.size() != wp.higher_order_modes.size())
        throw InvalidInput("wavefront_psf: draw does not match the mode list");
    const int n = wp.grid_size;
    const int m = 2 * n;
    const double radius_px = wp.aperture_radius * n;
    const double centre = n / 2.0;

    std::unique_ptr<fftw_complex, FftwFree> buf(
        static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * static_cast<std::size_t>(m) * m)));
    std::unique_ptr<fftw_plan_s, PlanDestroy> plan;
    {
        std::lock_guard lock(fftw_planner_mutex());
        plan.reset(fftw_plan_dft_2d(m, m, buf.get(), buf.get(), FFTW_FORWARD, FFTW_ESTIMATE));
    }
    auto* field = reinterpret_cast<std::complex<double>*>(buf.get());
    std::fill(field, field + static_cast<std::size_t>(m) * m, std::complex<double>(0.0, 0.0));

    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) {
            const double ur = (r - centre) / radius_px;
            const double uc = (c - centre) / radius_px;
            const double rho2 = ur * ur + uc * uc;
            if (rho2 > 1.0)
                continue;
            const double rho = std::sqrt(rho2);
            const double theta = std::atan2(ur, uc);
            double phase = draw.tilt[0] * ur + draw.tilt[1] * uc + draw.defocus * rho2;
            for (std::size_t k = 0; k < draw.higher_order.size(); ++k)
                phase += draw.higher_order[k] * zernike(wp.higher_order_modes[k], rho, theta);
            field[static_cast<std::size_t>(r) * m + c] = std::polar(1.0, phase);
        }

    fftw_execute(plan.get());

    Image psf(m, m, 1);
    for (int r = 0; r < m; ++r)
        for (int c = 0; c < m; ++c) {
            const auto v = field[static_cast<std::size_t>(r) * m + c];
            psf.at((r + m / 2) % m, (c + m / 2) % m) = std::norm(v);
        }
    return psf;
}

} // namespace

WavefrontDraw draw_wavefront(const WavefrontParams& wp, std::mt19937_64& rng)
{
    wp.validate();
    std::normal_distribution<double> normal(0.0, 1.0);
    WavefrontDraw d;
    d.tilt = wp.tilt;
    d.defocus = wp.defocus;
    d.tilt[0] += wp.tilt_sigma * normal(rng);
    d.tilt[1] += wp.tilt_sigma * normal(rng);
    d.defocus += wp.defocus_sigma * normal(rng);
    for (std::size_t k = 0; k < wp.higher_order_modes.size(); ++k)
        d.higher_order.push_back(wp.higher_order_sigma * normal(rng));
    return d;
}

Image wavefront_psf(const WavefrontParams& wp, const WavefrontDraw& draw)
{
    Image psf = raw_psf(wp, draw);
    double total = 0.0;
    for (double v : psf.data())
        total += v;
    if (!(total > 0.0))
        throw InvalidInput("wavefront_psf: empty aperture");
    for (auto& v : psf.data())
        v /= total;
    return psf;
}

double wavefront_psf_energy(const WavefrontParams& wp, const WavefrontDraw& draw)
{
    const Image psf = raw_psf(wp, draw);
    double total = 0.0;
    for (double v : psf.data())
        total += v;
    return total;
}

Image average_wavefront_psf(const WavefrontParams& wp, int draws, std::uint64_t seed)
{
    if (draws < 1)
        throw InvalidInput("average_wavefront_psf: draws must be >= 1");
    std::mt19937_64 rng(seed);
    Image acc;
    for (int t = 0; t < draws; ++t) {
        const Image p = wavefront_psf(wp, draw_wavefront(wp, rng));
        if (acc.empty()) {
            acc = p;
            continue;
        }
        auto dst = acc.data();
        const auto src = p.data();
        for (std::size_t i = 0; i < dst.size(); ++i)
            dst[i] += src[i];
    }
    for (auto& v : acc.data())
        v /= draws;
    return acc;
}

Image sampled_gaussian(int height, int width, std::array<double, 2> mu, double sigma)
{
    if (!(sigma > 0.0))
        throw InvalidInput("sampled_gaussian: sigma must be positive");
    Image g(height, width, 1);
    const double cr = height / 2 + mu[0], cc = width / 2 + mu[1];
    double total = 0.0;
    for (int r = 0; r < height; ++r)
        for (int c = 0; c < width; ++c) {
            const double dr = r - cr, dc = c - cc;
            g.at(r, c) = std::exp(-0.5 * (dr * dr + dc * dc) / (sigma * sigma));
            total += g.at(r, c);
        }
    for (auto& v : g.data())
        v /= total;
    return g;
}

GaussianFit fit_gaussian_psf(const Image& psf)
{
    if (psf.channels() != 1 || psf.empty())
        throw InvalidInput("fit_gaussian_psf: expected a non-empty single-channel grid");
    double mass = 0.0, mr = 0.0, mc = 0.0;
    for (int r = 0; r < psf.height(); ++r)
        for (int c = 0; c < psf.width(); ++c) {
            const double v = psf.at(r, c);
            if (v < 0.0)
                throw InvalidInput("fit_gaussian_psf: negative value");
            mass += v;
            mr += v * r;
            mc += v * c;
        }
    if (!(mass > 0.0))
        throw InvalidInput("fit_gaussian_psf: all-zero input");
    mr /= mass;
    mc /= mass;
    double srr = 0.0, scc = 0.0;
    for (int r = 0; r < psf.height(); ++r)
        for (int c = 0; c < psf.width(); ++c) {
            const double v = psf.at(r, c) / mass;
            srr += v * (r - mr) * (r - mr);
            scc += v * (c - mc) * (c - mc);
        }

    GaussianFit fit;
    fit.mu = {mr - psf.height() / 2, mc - psf.width() / 2};
    // Mean of the two principal moments is half the covariance trace.
    fit.sigma = std::sqrt(0.5 * (srr + scc));

    const Image g = sampled_gaussian(psf.height(), psf.width(), fit.mu, std::max(fit.sigma, 1e-6));
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < g.data().size(); ++i) {
        const double p = psf.data()[i] / mass;
        num += (p - g.data()[i]) * (p - g.data()[i]);
        den += p * p;
    }
    fit.residual = std::sqrt(num / den);
    return fit;
}

} // namespace deturb
