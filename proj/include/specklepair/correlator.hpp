#pragma once

#include "specklepair/detector.hpp"

namespace specklepair {

enum class Normalization : unsigned char { PairRate = 0, Raw = 1 };
enum class Subtraction : unsigned char { Shifted = 0, MeanProduct = 1, None = 2 };

// Sum-coordinate coincidence map: entry (n + qy, n + qx) holds the
// correlation signal at momentum sum (qx, qy) * freq_pitch.
struct CorrelationMap {
    RealImage map; // (2n-1) x (2n-1)
    int n = 0;
    double freq_pitch = 0.0;
    int frames_used = 0;
    Normalization normalization = Normalization::PairRate;
    Subtraction subtraction = Subtraction::Shifted;
    double lambda_pairs = 0.0;

    int center() const { return n; }
};

struct CorrelatorOptions {
    Normalization normalization = Normalization::PairRate;
    Subtraction subtraction = Subtraction::Shifted;
    // Divide each pixel stream by its empty fraction to undo the
    // saturation of binary frames under Poisson pixel loads.
    bool occupancy_weights = true;
};

// Frame-by-frame sum-coordinate correlation: accumulate the convolution of
// the (weighted) signal and idler planes, subtract the accidental estimate
// per the chosen mode, normalize per frame and per generated pair.
CorrelationMap correlate(const FrameStack& stack,
                         const CorrelatorOptions& options = {});

struct PeakStatsOptions {
    int search_half = 5;   // px around the search center scanned for the peak
    int window_half = 3;   // half width of the moment window
    int guard = 2;         // px between window and background ring
    int annulus_outer = 9; // outer half width of the background ring
    // Search-center offset from the map center, in px. Lets callers isolate
    // one peak of a multi-spot map by searching around its expected location.
    int center_dx = 0;
    int center_dy = 0;
};

struct PeakStats {
    double centroid_x = 0.0; // 1/mm, relative to zero momentum sum
    double centroid_y = 0.0;
    double sigma_x = 0.0; // 1/mm
    double sigma_y = 0.0;
    double amplitude = 0.0; // peak value above the background mean
    double integral = 0.0;  // background-subtracted sum over the window
    double contrast = 0.0;  // amplitude over the background deviation
    int frames_used = 0;
    bool on_boundary = false; // peak pinned to the search-region edge
    bool found = true;        // false when nothing rises above background
};

PeakStats peak_stats(const CorrelationMap& map,
                     const PeakStatsOptions& options = {});

// Detected-pair count implied by the peak integral.
double pair_count_estimate(const CorrelationMap& map, const PeakStats& stats);

// Fold the linear-correlation map onto the camera torus: every entry is
// added to its residue representative q in [-n/2, n/2 - 1]. The result
// shares the (2n-1)^2 frame (zeros outside the central block) and is
// directly comparable to the analytic sum map.
RealImage fold_torus(const CorrelationMap& map);

} // namespace specklepair
