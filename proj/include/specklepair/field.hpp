#pragma once

#include <complex>

#include "specklepair/fft.hpp"

namespace specklepair {

enum class Domain : unsigned char { Position = 0, Frequency = 1 };

// Rectangular region of interest in grid pixels: origin (x0, y0), size w x h.
struct RoiSpec {
    int x0 = 0;
    int y0 = 0;
    int w = 0;
    int h = 0;

    bool contains(int x, int y) const
    {
        return x >= x0 && x < x0 + w && y >= y0 && y < y0 + h;
    }
};

// Sampled complex field on a square grid. `pitch` is the sample spacing:
// mm in the position domain, 1/mm in the frequency domain. `lambda_f_mm2`
// records the lambda*f product of the last 2f stage (0 when unset) so the
// physical coordinate of a frequency sample, x = lambda*f*nu, stays
// recoverable from the stored grid.
struct FieldGrid {
    ComplexImage values;
    double pitch = 0.0;
    Domain domain = Domain::Position;
    double wavelength_nm = 0.0;
    double lambda_f_mm2 = 0.0;

    int rows() const { return static_cast<int>(values.rows()); }
    int cols() const { return static_cast<int>(values.cols()); }

    static FieldGrid zeros(int n, double pitch, Domain domain = Domain::Position);
};

// Phase-only mask on a coarse macropixel grid. Each entry of `phases`
// (radians) covers a `macropixel` x `macropixel` block of fine grid pixels;
// the block of macropixels is anchored at fine-pixel (x0, y0). Pixels
// outside the mask area are passed through unchanged.
struct PhaseMask {
    RealImage phases;
    int macropixel = 1;
    int x0 = 0;
    int y0 = 0;

    int rows() const { return static_cast<int>(phases.rows()); }
    int cols() const { return static_cast<int>(phases.cols()); }

    static PhaseMask flat(int my, int mx, int macropixel, int x0, int y0);
};

// One 2f lens stage: forward Fourier transform between conjugate planes.
// Position -> frequency (or the reverse) with the sampling theorem pitch
// 1/(N*pitch); applying it twice reproduces the inverted relay image.
FieldGrid fourier_2f(const FieldGrid& in, double focal_mm);

// Ideal 4f relay. orientation +1 copies, -1 applies the grid inversion
// v(i, j) -> v((N - i) mod N, (N - j) mod N).
FieldGrid relay_image(const FieldGrid& in, int orientation);

FieldGrid apply_mask(const FieldGrid& in, const PhaseMask& mask);

FieldGrid crop_field(const FieldGrid& in, const RoiSpec& roi);

// Zero the field outside the ROI (used to confine illumination).
FieldGrid confine_roi(const FieldGrid& in, const RoiSpec& roi);

RealImage intensity(const FieldGrid& field);

// Sum intensity over factor x factor blocks (photodetector pixel binning).
RealImage bin_intensity(const RealImage& img, int factor);

// Sum of |v|^2 * pitch^2 over the grid.
double total_power(const FieldGrid& field);

} // namespace specklepair
