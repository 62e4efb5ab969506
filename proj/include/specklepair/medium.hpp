#pragma once

#include <cstdint>

#include "specklepair/field.hpp"

namespace specklepair {

// Thin random phase screen. `phase` holds radians on the full grid;
// `corr_length_mm` is the transmitted-phasor autocorrelation FWHM.
struct DiffuserScreen {
    RealImage phase;
    double pitch_mm = 0.0;
    double corr_length_mm = 0.0;
    std::uint64_t seed = 0;

    int size() const { return static_cast<int>(phase.rows()); }
};

// Gaussian-correlated random phase screen: white complex Gaussian noise
// shaped by a Gaussian spectral filter, phase = arg of the filtered field.
// An infinite correlation length degenerates to a constant screen.
// Requires corr_length_mm >= 2 * pitch_mm so the screen is resolved.
DiffuserScreen make_diffuser(int n, double pitch_mm, double corr_length_mm,
                             std::uint64_t seed);

FieldGrid apply_screen(const FieldGrid& in, const DiffuserScreen& screen);

// Optical bench layout: full simulation grid, SLM region carved into
// macropixels, camera region in the far-field plane.
struct BenchGeometry {
    int grid_n = 0;
    double pitch_mm = 0.0;
    RoiSpec slm_roi;
    int macropixel = 1;
    RoiSpec cam_roi;
    double wavelength_nm = 0.0;
    double focal_mm = 0.0;

    double freq_pitch() const { return 1.0 / (grid_n * pitch_mm); }
    int macro_rows() const { return slm_roi.h / macropixel; }
    int macro_cols() const { return slm_roi.w / macropixel; }
    int n_inputs() const { return macro_rows() * macro_cols(); }
    int n_outputs() const { return cam_roi.w * cam_roi.h; }

    void validate() const;
};

// One pass through the bench: phase mask at the SLM plane, inverting 4f
// relay onto the diffuser, phase screen, 2f lens to the far field.
// Both mask and screen may be null (absent element). The train is
// lossless; detector losses are applied later, at detection.
FieldGrid forward_train(const FieldGrid& input, const BenchGeometry& geom,
                        const PhaseMask* mask, const DiffuserScreen* screen);

// Effective pointwise transmittance t with forward_train(u) equal to the
// 2f transform of u * t followed by the grid inversion: t(y) combines the
// mask phase at y with the screen phase at the relayed point -y.
ComplexImage train_transmittance(const BenchGeometry& geom,
                                 const PhaseMask* mask,
                                 const DiffuserScreen* screen);

// Exact transmission matrix of the bench: column k holds the camera-ROI
// response (row-major) to unit illumination of SLM macropixel k (row-major
// over the macropixel grid).
ComplexMatrix ground_truth_tm(const BenchGeometry& geom,
                              const DiffuserScreen* screen);

} // namespace specklepair
