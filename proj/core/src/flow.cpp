#include "deturb/flow.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "deturb/errors.hpp"

namespace deturb {

FlowField::FlowField(int height, int width)
    : height_(height), width_(width), data_(2 * static_cast<std::size_t>(height) * width, 0.0)
{
    if (height < 0 || width < 0)
        throw InvalidInput("FlowField: bad dimensions");
}

FlowField::FlowField(int height, int width, std::vector<double> data)
    : height_(height), width_(width), data_(std::move(data))
{
    if (height < 0 || width < 0)
        throw InvalidInput("FlowField: bad dimensions");
    if (data_.size() != 2 * static_cast<std::size_t>(height) * width)
        throw InvalidInput("FlowField: data length does not match dimensions");
}

FlowField FlowField::constant(int height, int width, double d_row, double d_col)
{
    FlowField w(height, width);
    for (std::size_t i = 0; i < w.pixel_count(); ++i) {
        w.data_[2 * i] = d_row;
        w.data_[2 * i + 1] = d_col;
    }
    return w;
}

std::array<double, 2> FlowField::sample(double row, double col) const noexcept
{
    row = std::clamp(row, 0.0, static_cast<double>(height_ - 1));
    col = std::clamp(col, 0.0, static_cast<double>(width_ - 1));
    const int r0 = std::min(static_cast<int>(row), std::max(height_ - 2, 0));
    const int c0 = std::min(static_cast<int>(col), std::max(width_ - 2, 0));
    const int r1 = std::min(r0 + 1, height_ - 1);
    const int c1 = std::min(c0 + 1, width_ - 1);
    const double fr = row - r0;
    const double fc = col - c0;
    std::array<double, 2> out{};
    for (int k = 0; k < 2; ++k) {
        const double a = data_[index(r0, c0) + k];
        const double b = data_[index(r0, c1) + k];
        const double c = data_[index(r1, c0) + k];
        const double d = data_[index(r1, c1) + k];
        const double top = (1.0 - fc) * a + fc * b;
        const double bottom = (1.0 - fc) * c + fc * d;
        out[k] = (1.0 - fr) * top + fr * bottom;
    }
    return out;
}

std::size_t WeightMask::hole_count() const noexcept
{
    return static_cast<std::size_t>(std::count(data_.begin(), data_.end(), 0.0));
}

FlowField compose_flow(const FlowField& first, const FlowField& second)
{
    if (!first.same_shape(second))
        throw InvalidInput("compose_flow: dimension mismatch");
    FlowField out(first.height(), first.width());
    for (int r = 0; r < first.height(); ++r) {
        for (int c = 0; c < first.width(); ++c) {
            const double dr = first.d_row(r, c);
            const double dc = first.d_col(r, c);
            const auto s = second.sample(r + dr, c + dc);
            out.d_row(r, c) = dr + s[0];
            out.d_col(r, c) = dc + s[1];
        }
    }
    return out;
}

FlowField mean_flow(std::span<const FlowField> flows)
{
    if (flows.empty())
        throw InvalidInput("mean_flow: empty list");
    FlowField acc = flows[0];
    auto dst = acc.data();
    // Running mean: exact when all inputs are equal, fixed summation order.
    for (std::size_t t = 1; t < flows.size(); ++t) {
        if (!flows[t].same_shape(acc))
            throw InvalidInput("mean_flow: dimension mismatch");
        const auto src = flows[t].data();
        const double n = static_cast<double>(t + 1);
        for (std::size_t i = 0; i < dst.size(); ++i)
            dst[i] += (src[i] - dst[i]) / n;
    }
    return acc;
}

InversionResult invert_flow_detailed(const FlowField& w)
{
    const int h = w.height();
    const int wd = w.width();
    for (double v : w.data())
        if (!std::isfinite(v))
            throw InvalidInput("invert_flow: non-finite displacement");

    FlowField inv(h, wd);
    WeightMask alpha(h, wd);
    auto acc = inv.data();

    for (int i = 0; i < h; ++i) {
        for (int j = 0; j < wd; ++j) {
            const double dr = w.d_row(i, j);
            const double dc = w.d_col(i, j);
            const double ei = i + dr;
            const double ej = j + dc;
            const double fi = std::floor(ei);
            const double fj = std::floor(ej);
            for (int a = 0; a < 2; ++a) {
                for (int b = 0; b < 2; ++b) {
                    const double ni = fi + a;
                    const double nj = fj + b;
                    if (ni < 0 || nj < 0 || ni > h - 1 || nj > wd - 1)
                        continue;
                    const double weight = 2.0 - (std::abs(ei - ni) + std::abs(ej - nj));
                    const auto ti = static_cast<int>(ni);
                    const auto tj = static_cast<int>(nj);
                    const std::size_t k = 2 * (static_cast<std::size_t>(ti) * wd + tj);
                    acc[k] += -dr * weight;
                    acc[k + 1] += -dc * weight;
                    alpha.at(ti, tj) += weight;
                }
            }
        }
    }

    for (int i = 0; i < h; ++i) {
        for (int j = 0; j < wd; ++j) {
            const double a = alpha.at(i, j);
            if (a != 0.0) {
                inv.d_row(i, j) /= a;
                inv.d_col(i, j) /= a;
            }
        }
    }

    if (alpha.hole_count() > 0)
        inv = inpaint_flow(inv, alpha);
    return {std::move(inv), std::move(alpha)};
}

FlowField invert_flow(const FlowField& w)
{
    return invert_flow_detailed(w).inverse;
}

FlowField inpaint_flow(const FlowField& w, const WeightMask& mask)
{
    const int h = w.height();
    const int wd = w.width();
    if (mask.height() != h || mask.width() != wd)
        throw InvalidInput("inpaint_flow: mask dimensions differ from flow");

    std::vector<int> holes;
    for (int i = 0; i < h * wd; ++i)
        if (mask.data()[i] == 0.0)
            holes.push_back(i);
    if (holes.empty())
        return w;
    if (holes.size() == static_cast<std::size_t>(h) * wd)
        throw InvalidInput("inpaint_flow: mask has no anchored values");

    FlowField out = w;
    auto v = out.data();
    constexpr int dr[4] = {-1, 1, 0, 0};
    constexpr int dc[4] = {0, 0, -1, 1};

    // Onion-peel initial guess: each ring of holes takes the mean of its
    // already-known neighbours. Diffusion then converges in few sweeps.
    std::vector<char> known(static_cast<std::size_t>(h) * wd, 1);
    for (int idx : holes)
        known[idx] = 0;
    std::vector<int> pending = holes;
    std::vector<int> ring;
    std::vector<int> next;
    while (!pending.empty()) {
        ring.clear();
        next.clear();
        for (int idx : pending) {
            const int r = idx / wd, c = idx % wd;
            double sr = 0, sc = 0;
            int n = 0;
            for (int k = 0; k < 4; ++k) {
                const int rr = r + dr[k], cc = c + dc[k];
                if (rr < 0 || cc < 0 || rr >= h || cc >= wd)
                    continue;
                const int nidx = rr * wd + cc;
                if (!known[nidx])
                    continue;
                sr += v[2 * nidx];
                sc += v[2 * nidx + 1];
                ++n;
            }
            if (n > 0) {
                v[2 * idx] = sr / n;
                v[2 * idx + 1] = sc / n;
                ring.push_back(idx);
            } else {
                next.push_back(idx);
            }
        }
        for (int idx : ring)
            known[idx] = 1;
        pending.swap(next);
    }

    // Harmonic diffusion over hole points (Gauss-Seidel, fixed order).
    constexpr int max_sweeps = 500;
    constexpr double tolerance = 1e-4;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double max_update = 0.0;
        for (int idx : holes) {
            const int r = idx / wd, c = idx % wd;
            double sr = 0, sc = 0;
            int n = 0;
            for (int k = 0; k < 4; ++k) {
                const int rr = r + dr[k], cc = c + dc[k];
                if (rr < 0 || cc < 0 || rr >= h || cc >= wd)
                    continue;
                const int nidx = rr * wd + cc;
                sr += v[2 * nidx];
                sc += v[2 * nidx + 1];
                ++n;
            }
            const double nr = sr / n, nc = sc / n;
            max_update = std::max({max_update, std::abs(nr - v[2 * idx]), std::abs(nc - v[2 * idx + 1])});
            v[2 * idx] = nr;
            v[2 * idx + 1] = nc;
        }
        if (max_update < tolerance)
            break;
    }
    return out;
}

double flow_endpoint_error(const FlowField& a, const FlowField& b)
{
    return flow_endpoint_error_interior(a, b, 0);
}

double flow_endpoint_error_interior(const FlowField& a, const FlowField& b, int margin)
{
    if (!a.same_shape(b))
        throw InvalidInput("flow_endpoint_error: dimension mismatch");
    double sum = 0.0;
    std::size_t n = 0;
    for (int r = margin; r < a.height() - margin; ++r) {
        for (int c = margin; c < a.width() - margin; ++c) {
            sum += std::hypot(a.d_row(r, c) - b.d_row(r, c), a.d_col(r, c) - b.d_col(r, c));
            ++n;
        }
    }
    if (n == 0)
        throw InvalidInput("flow_endpoint_error: margin leaves no pixels");
    return sum / static_cast<double>(n);
}

double flow_rms(const FlowField& w, int margin)
{
    double sum = 0.0;
    std::size_t n = 0;
    for (int r = margin; r < w.height() - margin; ++r) {
        for (int c = margin; c < w.width() - margin; ++c) {
            sum += w.d_row(r, c) * w.d_row(r, c) + w.d_col(r, c) * w.d_col(r, c);
            ++n;
        }
    }
    if (n == 0)
        throw InvalidInput("flow_rms: margin leaves no pixels");
    return std::sqrt(sum / static_cast<double>(n));
}

} // namespace deturb
