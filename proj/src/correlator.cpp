#include "specklepair/correlator.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "specklepair/errors.hpp"
#include "specklepair/parallel.hpp"

namespace specklepair {

namespace {

// Per-pixel lit counts across the stack for one plane.
RealImage occupancy(const FrameStack& stack, int plane)
{
    RealImage counts = RealImage::Zero(stack.n, stack.n);
    for (int f = 0; f < stack.frames; ++f)
        for (int y = 0; y < stack.n; ++y)
            for (int x = 0; x < stack.n; ++x)
                if (stack.get(f, plane, y, x))
                    counts(y, x) += 1.0;
    return counts / static_cast<double>(stack.frames);
}

RealImage make_weights(const RealImage& mean_occupancy, int frames)
{
    const double floor = 0.5 / frames;
    RealImage w(mean_occupancy.rows(), mean_occupancy.cols());
    for (int y = 0; y < mean_occupancy.rows(); ++y)
        for (int x = 0; x < mean_occupancy.cols(); ++x)
            w(y, x) = 1.0 / std::max(1.0 - mean_occupancy(y, x), floor);
    return w;
}

// Zero-padded spectrum of one weighted frame plane.
ComplexImage padded_spectrum(const FrameStack& stack, int frame, int plane,
                             const RealImage& weights)
{
    const int n = stack.n;
    ComplexImage padded = ComplexImage::Zero(2 * n, 2 * n);
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x)
            if (stack.get(frame, plane, y, x))
                padded(y, x) = weights(y, x);
    return raw_dft(padded, -1);
}

RealImage real_convolution_block(const ComplexImage& spectrum_product, int n)
{
    const ComplexImage full = raw_dft(spectrum_product, 1);
    const double scale = 1.0 / (4.0 * n * n);
    RealImage out(2 * n - 1, 2 * n - 1);
    for (int y = 0; y < 2 * n - 1; ++y)
        for (int x = 0; x < 2 * n - 1; ++x)
            out(y, x) = full(y, x).real() * scale;
    return out;
}

} // namespace

CorrelationMap correlate(const FrameStack& stack, const CorrelatorOptions& options)
{
    if (stack.frames <= 0 || stack.n <= 0)
        throw ValueError("correlate: empty frame stack");
    if (options.subtraction == Subtraction::Shifted && stack.frames < 2)
        throw ValueError("correlate: shifted subtraction needs two frames");

    const int n = stack.n;
    const int frames = stack.frames;

    RealImage w_signal, w_idler;
    if (options.occupancy_weights) {
        w_signal = make_weights(occupancy(stack, 0), frames);
        w_idler = make_weights(occupancy(stack, 1), frames);
    } else {
        w_signal = RealImage::Ones(n, n);
        w_idler = RealImage::Ones(n, n);
    }

    // Frame spectra are produced in parallel chunks, but every accumulation
    // runs in strict frame order so the result does not depend on the
    // worker count. The shifted accidental term pairs frame f with frame
    // f+1 (cyclically), so the last product of a chunk waits for the next
    // chunk's first idler spectrum.
    const int chunk = std::max(
        1, std::min(16, static_cast<int>(268435456 / (64LL * n * n) / 2)));
    ComplexImage acc_prompt = ComplexImage::Zero(2 * n, 2 * n);
    ComplexImage acc_shifted = ComplexImage::Zero(2 * n, 2 * n);
    ComplexImage idler_first;
    ComplexImage pending_signal; // spectrum of the last frame of the chunk
    bool have_pending = false;

    std::vector<ComplexImage> sig_spec(static_cast<std::size_t>(chunk));
    std::vector<ComplexImage> idl_spec(static_cast<std::size_t>(chunk));

    for (int start = 0; start < frames; start += chunk) {
        const int count = std::min(chunk, frames - start);
        parallel_for_blocks(count, [&](std::int64_t c) {
            const int f = start + static_cast<int>(c);
            sig_spec[static_cast<std::size_t>(c)] =
                padded_spectrum(stack, f, 0, w_signal);
            idl_spec[static_cast<std::size_t>(c)] =
                padded_spectrum(stack, f, 1, w_idler);
        });
        if (start == 0 && options.subtraction == Subtraction::Shifted)
            idler_first = idl_spec[0];
        if (have_pending) {
            acc_shifted.array() += pending_signal.array() * idl_spec[0].array();
            have_pending = false;
        }
        for (int c = 0; c < count; ++c) {
            acc_prompt.array() += sig_spec[static_cast<std::size_t>(c)].array() *
                                  idl_spec[static_cast<std::size_t>(c)].array();
            if (options.subtraction == Subtraction::Shifted) {
                if (c + 1 < count) {
                    acc_shifted.array() +=
                        sig_spec[static_cast<std::size_t>(c)].array() *
                        idl_spec[static_cast<std::size_t>(c) + 1].array();
                } else {
                    pending_signal = sig_spec[static_cast<std::size_t>(c)];
                    have_pending = true;
                }
            }
        }
    }
    if (have_pending)
        acc_shifted.array() += pending_signal.array() * idler_first.array();

    CorrelationMap result;
    result.n = n;
    result.freq_pitch = stack.freq_pitch;
    result.frames_used = frames;
    result.normalization = options.normalization;
    result.subtraction = options.subtraction;
    result.lambda_pairs = stack.lambda_pairs;

    RealImage map = real_convolution_block(acc_prompt, n) / frames;
    if (options.subtraction == Subtraction::Shifted) {
        map -= real_convolution_block(acc_shifted, n) / frames;
    } else if (options.subtraction == Subtraction::MeanProduct) {
        ComplexImage mean_sig = ComplexImage::Zero(2 * n, 2 * n);
        ComplexImage mean_idl = ComplexImage::Zero(2 * n, 2 * n);
        for (int f = 0; f < frames; ++f)
            for (int y = 0; y < n; ++y)
                for (int x = 0; x < n; ++x) {
                    if (stack.get(f, 0, y, x))
                        mean_sig(y, x) += w_signal(y, x);
                    if (stack.get(f, 1, y, x))
                        mean_idl(y, x) += w_idler(y, x);
                }
        mean_sig /= static_cast<double>(frames);
        mean_idl /= static_cast<double>(frames);
        const ComplexImage prod =
            (raw_dft(mean_sig, -1).array() * raw_dft(mean_idl, -1).array())
                .matrix();
        map -= real_convolution_block(prod, n);
    }
    if (options.normalization == Normalization::PairRate) {
        if (!(stack.lambda_pairs > 0.0))
            throw ValueError("correlate: pair-rate normalization needs a "
                             "positive pair rate");
        map /= stack.lambda_pairs;
    }
    result.map = std::move(map);
    return result;
}

PeakStats peak_stats(const CorrelationMap& map, const PeakStatsOptions& options)
{
    const int size = static_cast<int>(map.map.rows());
    const int center = map.center();
    if (size != 2 * map.n - 1 || map.map.cols() != size)
        throw DimensionError("peak_stats: malformed correlation map");
    if (options.search_half < 1 || options.window_half < 1 ||
        options.guard < 0 ||
        options.annulus_outer <= options.window_half + options.guard)
        throw ValueError("peak_stats: inconsistent window layout");
    const int scx = center + options.center_dx;
    const int scy = center + options.center_dy;
    if (scy - options.search_half < 0 || scy + options.search_half >= size ||
        scx - options.search_half < 0 || scx + options.search_half >= size)
        throw ValueError("peak_stats: search region exceeds the map");

    PeakStats stats;
    stats.frames_used = map.frames_used;

    // Peak search confined to the configured region around the search center.
    int py = scy;
    int px = scx;
    double best = map.map(scy, scx);
    for (int y = scy - options.search_half; y <= scy + options.search_half; ++y)
        for (int x = scx - options.search_half; x <= scx + options.search_half;
             ++x)
            if (map.map(y, x) > best) {
                best = map.map(y, x);
                py = y;
                px = x;
            }
    stats.on_boundary = (std::abs(py - scy) == options.search_half ||
                         std::abs(px - scx) == options.search_half);

    // Background ring around the peak, separated by the guard margin.
    const int inner = options.window_half + options.guard;
    double bg_sum = 0.0;
    double bg_sq = 0.0;
    int bg_count = 0;
    for (int y = std::max(0, py - options.annulus_outer);
         y <= std::min(size - 1, py + options.annulus_outer); ++y)
        for (int x = std::max(0, px - options.annulus_outer);
             x <= std::min(size - 1, px + options.annulus_outer); ++x) {
            const int d = std::max(std::abs(y - py), std::abs(x - px));
            if (d <= inner)
                continue;
            bg_sum += map.map(y, x);
            bg_sq += map.map(y, x) * map.map(y, x);
            ++bg_count;
        }
    const double bg_mean = (bg_count > 0) ? bg_sum / bg_count : 0.0;
    double bg_var = 0.0;
    if (bg_count > 1)
        bg_var = std::max(0.0, (bg_sq - bg_sum * bg_sum / bg_count) /
                                   (bg_count - 1));
    const double bg_std = std::sqrt(bg_var);

    stats.amplitude = best - bg_mean;
    stats.contrast = (bg_std > 0.0) ? stats.amplitude / bg_std : 0.0;
    // Scale-aware floor so a constant map (amplitude at rounding level)
    // does not register as a peak.
    stats.found = stats.amplitude > 1e-12 * map.map.abs().maxCoeff();

    // Moments over the window, background subtracted and clamped so noisy
    // negative pixels do not destabilize the centroid.
    double mass = 0.0;
    double mx = 0.0;
    double my = 0.0;
    double mxx = 0.0;
    double myy = 0.0;
    double window_sum = 0.0;
    int window_count = 0;
    for (int y = std::max(0, py - options.window_half);
         y <= std::min(size - 1, py + options.window_half); ++y)
        for (int x = std::max(0, px - options.window_half);
             x <= std::min(size - 1, px + options.window_half); ++x) {
            window_sum += map.map(y, x);
            ++window_count;
            const double v = std::max(0.0, map.map(y, x) - bg_mean);
            mass += v;
            mx += v * x;
            my += v * y;
        }
    stats.integral = window_sum - bg_mean * window_count;
    if (mass > 0.0) {
        const double cx = mx / mass;
        const double cy = my / mass;
        for (int y = std::max(0, py - options.window_half);
             y <= std::min(size - 1, py + options.window_half); ++y)
            for (int x = std::max(0, px - options.window_half);
                 x <= std::min(size - 1, px + options.window_half); ++x) {
                const double v = std::max(0.0, map.map(y, x) - bg_mean);
                mxx += v * (x - cx) * (x - cx);
                myy += v * (y - cy) * (y - cy);
            }
        stats.centroid_x = (cx - center) * map.freq_pitch;
        stats.centroid_y = (cy - center) * map.freq_pitch;
        stats.sigma_x = std::sqrt(mxx / mass) * map.freq_pitch;
        stats.sigma_y = std::sqrt(myy / mass) * map.freq_pitch;
    } else {
        stats.centroid_x = (px - center) * map.freq_pitch;
        stats.centroid_y = (py - center) * map.freq_pitch;
        stats.found = false;
    }
    return stats;
}

double pair_count_estimate(const CorrelationMap& map, const PeakStats& stats)
{
    const double per_frame = (map.normalization == Normalization::PairRate)
                                 ? stats.integral * map.lambda_pairs
                                 : stats.integral;
    return per_frame * map.frames_used;
}

RealImage fold_torus(const CorrelationMap& map)
{
    const int n = map.n;
    const int size = 2 * n - 1;
    if (map.map.rows() != size || map.map.cols() != size)
        throw DimensionError("fold_torus: malformed correlation map");
    const int half = n / 2;
    RealImage out = RealImage::Zero(size, size);
    for (int iy = 0; iy < size; ++iy) {
        const int ry = ((iy - n + half) % n + n) % n - half;
        for (int ix = 0; ix < size; ++ix) {
            const int rx = ((ix - n + half) % n + n) % n - half;
            out(n + ry, n + rx) += map.map(iy, ix);
        }
    }
    return out;
}

} // namespace specklepair
