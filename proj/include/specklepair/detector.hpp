#pragma once

#include <cstdint>
#include <vector>

#include "specklepair/biphoton.hpp"

namespace specklepair {

struct DetectorConfig {
    double eta_signal = 0.48;        // signal detection efficiency
    double eta_idler = 0.48;         // idler detection efficiency
    double signal_transmission = 1.0; // medium intensity transmission
    double fill = 0.15;              // target lit fraction of an idler frame
    double spurious = 0.005;         // per-pixel false-count probability
    int frames = 200;
    std::uint64_t seed = 0;          // root seed for the frame streams
};

// Stack of binary camera frames. Each frame stores the signal plane then
// the idler plane, one bit per pixel, rows packed LSB-first.
struct FrameStack {
    int n = 0;
    int frames = 0;
    double freq_pitch = 0.0; // 1/mm per camera pixel
    double lambda_pairs = 0.0; // mean generated pairs per frame
    DetectorConfig config;
    std::uint64_t generated_pairs_total = 0;
    std::uint64_t detected_pairs_total = 0; // same-pair double detections
    std::vector<std::uint8_t> bits;

    std::size_t row_bytes() const
    {
        return (static_cast<std::size_t>(n) + 7) / 8;
    }
    std::size_t plane_bytes() const { return row_bytes() * n; }
    std::size_t frame_bytes() const { return 2 * plane_bytes(); }

    bool get(int frame, int plane, int y, int x) const
    {
        const std::size_t idx = static_cast<std::size_t>(frame) * frame_bytes() +
                                static_cast<std::size_t>(plane) * plane_bytes() +
                                static_cast<std::size_t>(y) * row_bytes() +
                                static_cast<std::size_t>(x >> 3);
        return (bits[idx] >> (x & 7)) & 1u;
    }
    void set(int frame, int plane, int y, int x)
    {
        const std::size_t idx = static_cast<std::size_t>(frame) * frame_bytes() +
                                static_cast<std::size_t>(plane) * plane_bytes() +
                                static_cast<std::size_t>(y) * row_bytes() +
                                static_cast<std::size_t>(x >> 3);
        bits[idx] |= static_cast<std::uint8_t>(1u << (x & 7));
    }
};

// Probability that both photons of a generated pair are recorded:
// eta_signal * signal_transmission * eta_idler.
double pair_survival_rate(const DetectorConfig& config);

// Mean pairs per frame that lights the requested fraction of the idler
// frame, found by bisection on the idler-arm occupancy. Independent of the
// signal-arm scenario, so matched acquisitions share one pair rate.
double calibrate_lambda_pairs(const BiphotonModel& model,
                              const DetectorConfig& config);

// Draw a stack of frames. Pairs are sampled idler-first: idler pixel from
// the model marginals, detection thinning, then the signal pixel from the
// conditional field pushed through the bench (mask/screen may be null).
// Five uniforms per pair in fixed order plus one frame stream per frame
// keep the output bit-identical for any worker count.
FrameStack sample_frames(const BiphotonModel& model, const BenchGeometry& geom,
                         const PhaseMask* mask, const DiffuserScreen* screen,
                         const DetectorConfig& config);

// Same acquisition with a mask sequence cycled frame by frame (frame f uses
// masks[f % masks.size()]); an empty sequence means no mask. Frame f of the
// result is bit-identical to frame f of a single-mask run with its mask.
FrameStack sample_frames(const BiphotonModel& model, const BenchGeometry& geom,
                         const std::vector<PhaseMask>& masks,
                         const DiffuserScreen* screen,
                         const DetectorConfig& config);

} // namespace specklepair
