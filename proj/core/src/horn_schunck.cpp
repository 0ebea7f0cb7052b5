#include <algorithm>
#include <cmath>
#include <vector>

#include "deturb/errors.hpp"
#include "deturb/flow.hpp"
#include "filters.hpp"

namespace deturb {

void HornSchunckParams::validate() const
{
    if (!(smoothness > 0.0))
        throw InvalidInput("HornSchunckParams: smoothness must be positive");
    if (iterations_per_level < 1)
        throw InvalidInput("HornSchunckParams: iterations_per_level must be >= 1");
    if (pyramid_levels < 1)
        throw InvalidInput("HornSchunckParams: pyramid_levels must be >= 1");
    if (!(pyramid_scale > 0.0 && pyramid_scale < 1.0))
        throw InvalidInput("HornSchunckParams: pyramid_scale must lie in (0, 1)");
    if (warps_per_level < 1)
        throw InvalidInput("HornSchunckParams: warps_per_level must be >= 1");
}

namespace {

constexpr int kMinLevelSize = 16;

std::vector<Image> build_pyramid(const Image& img, int levels, double scale)
{
    std::vector<Image> pyr{img};
    // Anti-alias sigma for decimation by `scale`.
    const double sigma = 0.5 * std::sqrt(1.0 / (scale * scale) - 1.0);
    while (static_cast<int>(pyr.size()) < levels) {
        const Image& prev = pyr.back();
        const int h = static_cast<int>(std::lround(prev.height() * scale));
        const int w = static_cast<int>(std::lround(prev.width() * scale));
        if (std::min(h, w) < kMinLevelSize)
            break;
        pyr.push_back(detail::resize_bilinear(detail::gaussian_blur(prev, sigma), h, w));
    }
    return pyr;
}

FlowField upsample_flow(const FlowField& coarse, int height, int width)
{
    FlowField fine(height, width);
    const double sr = static_cast<double>(coarse.height()) / height;
    const double sc = static_cast<double>(coarse.width()) / width;
    for (int r = 0; r < height; ++r) {
        for (int c = 0; c < width; ++c) {
            const auto d = coarse.sample((r + 0.5) * sr - 0.5, (c + 0.5) * sc - 0.5);
            fine.d_row(r, c) = d[0] / sr;
            fine.d_col(r, c) = d[1] / sc;
        }
    }
    return fine;
}

// Central differences with replicate boundary (one-sided halves at edges).
void gradients(const Image& img, std::vector<double>& gr, std::vector<double>& gc)
{
    const int h = img.height(), w = img.width();
    gr.assign(img.pixel_count(), 0.0);
    gc.assign(img.pixel_count(), 0.0);
    for (int r = 0; r < h; ++r) {
        const int ru = std::max(r - 1, 0), rd = std::min(r + 1, h - 1);
        for (int c = 0; c < w; ++c) {
            const int cl = std::max(c - 1, 0), cr = std::min(c + 1, w - 1);
            gr[r * w + c] = 0.5 * (img.at(rd, c) - img.at(ru, c));
            gc[r * w + c] = 0.5 * (img.at(r, cr) - img.at(r, cl));
        }
    }
}

// Jacobi refinement of the full flow around the linearization point `w0`.
void refine_level(const Image& ref, const Image& tgt, FlowField& w, const HornSchunckParams& p, int iterations)
{
    const int h = ref.height(), wd = ref.width();
    const std::size_t n = ref.pixel_count();
    const Image warped = warp_image(tgt, w);

    std::vector<double> rr, rc, tr, tc;
    gradients(ref, rr, rc);
    gradients(warped, tr, tc);

    std::vector<double> iy(n), ix(n), it(n), denom(n);
    const auto ref_px = ref.data();
    const auto warped_px = warped.data();
    const double lambda = p.smoothness;
    for (std::size_t i = 0; i < n; ++i) {
        iy[i] = 0.5 * (rr[i] + tr[i]);
        ix[i] = 0.5 * (rc[i] + tc[i]);
        it[i] = warped_px[i] - ref_px[i];
        denom[i] = lambda + ix[i] * ix[i] + iy[i] * iy[i];
    }

    const FlowField w0 = w;
    FlowField next = w;
    for (int iter = 0; iter < iterations; ++iter) {
        for (int r = 0; r < h; ++r) {
            const int ru = std::max(r - 1, 0), rd = std::min(r + 1, h - 1);
            for (int c = 0; c < wd; ++c) {
                const int cl = std::max(c - 1, 0), cr = std::min(c + 1, wd - 1);
                const double vbar = 0.25 * (w.d_row(ru, c) + w.d_row(rd, c) + w.d_row(r, cl) + w.d_row(r, cr));
                const double ubar = 0.25 * (w.d_col(ru, c) + w.d_col(rd, c) + w.d_col(r, cl) + w.d_col(r, cr));
                const std::size_t i = static_cast<std::size_t>(r) * wd + c;
                const double resid =
                    it[i] + ix[i] * (ubar - w0.d_col(r, c)) + iy[i] * (vbar - w0.d_row(r, c));
                const double scale = resid / denom[i];
                next.d_row(r, c) = vbar - iy[i] * scale;
                next.d_col(r, c) = ubar - ix[i] * scale;
            }
        }
        std::swap(w, next);
    }
}

} // namespace

FlowField horn_schunck(const Image& ref, const Image& tgt, const HornSchunckParams& params)
{
    params.validate();
    if (ref.channels() != 1 || tgt.channels() != 1)
        throw InvalidInput("horn_schunck: expected single-channel images");
    if (!ref.same_shape(tgt))
        throw InvalidInput("horn_schunck: image dimensions differ");
    if (ref.empty())
        throw InvalidInput("horn_schunck: empty images");

    const auto ref_pyr = build_pyramid(ref, params.pyramid_levels, params.pyramid_scale);
    const auto tgt_pyr = build_pyramid(tgt, static_cast<int>(ref_pyr.size()), params.pyramid_scale);

    FlowField w(ref_pyr.back().height(), ref_pyr.back().width());
    for (int level = static_cast<int>(ref_pyr.size()) - 1; level >= 0; --level) {
        const Image& r = ref_pyr[level];
        const Image& t = tgt_pyr[level];
        if (!w.matches(r))
            w = upsample_flow(w, r.height(), r.width());
        const int warps = std::min(params.warps_per_level, params.iterations_per_level);
        int remaining = params.iterations_per_level;
        for (int k = 0; k < warps; ++k) {
            const int iters = remaining / (warps - k);
            remaining -= iters;
            refine_level(r, t, w, params, iters);
        }
    }
    return w;
}

} // namespace deturb
