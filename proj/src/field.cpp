#include "specklepair/field.hpp"

#include <cmath>
#include <complex>

#include "specklepair/errors.hpp"

namespace specklepair {

FieldGrid FieldGrid::zeros(int n, double pitch, Domain domain)
{
    if (n <= 0 || n % 2 != 0)
        throw DimensionError("FieldGrid::zeros: grid size must be positive and even");
    if (pitch <= 0.0)
        throw ValueError("FieldGrid::zeros: pitch must be positive");
    FieldGrid f;
    f.values = ComplexImage::Zero(n, n);
    f.pitch = pitch;
    f.domain = domain;
    return f;
}

PhaseMask PhaseMask::flat(int my, int mx, int macropixel, int x0, int y0)
{
    if (my <= 0 || mx <= 0)
        throw DimensionError("PhaseMask::flat: mask dimensions must be positive");
    if (macropixel <= 0)
        throw ValueError("PhaseMask::flat: macropixel must be positive");
    PhaseMask m;
    m.phases = RealImage::Zero(my, mx);
    m.macropixel = macropixel;
    m.x0 = x0;
    m.y0 = y0;
    return m;
}

FieldGrid fourier_2f(const FieldGrid& in, double focal_mm)
{
    const int n = in.rows();
    if (n != in.cols())
        throw DimensionError("fourier_2f: grid must be square");
    if (in.pitch <= 0.0)
        throw ValueError("fourier_2f: field pitch must be positive");
    if (focal_mm <= 0.0)
        throw ValueError("fourier_2f: focal length must be positive");

    FieldGrid out;
    // Riemann factor pitch^2 on top of the unitary DFT's 1/sqrt(N^2): the
    // combination pitch^2 * N keeps Parseval exact between the two planes.
    const double scale = in.pitch * in.pitch * n;
    out.values = centered_dft(in.values, -1) * scale;
    out.pitch = 1.0 / (n * in.pitch);
    out.domain = (in.domain == Domain::Position) ? Domain::Frequency : Domain::Position;
    out.wavelength_nm = in.wavelength_nm;
    out.lambda_f_mm2 = in.wavelength_nm * 1e-6 * focal_mm;
    return out;
}

FieldGrid relay_image(const FieldGrid& in, int orientation)
{
    if (orientation == 1)
        return in;
    if (orientation != -1)
        throw ValueError("relay_image: orientation must be +1 or -1");

    const int ny = in.rows();
    const int nx = in.cols();
    FieldGrid out = in;
    for (int i = 0; i < ny; ++i) {
        const int si = (ny - i) % ny;
        for (int j = 0; j < nx; ++j)
            out.values(i, j) = in.values(si, (nx - j) % nx);
    }
    return out;
}

FieldGrid apply_mask(const FieldGrid& in, const PhaseMask& mask)
{
    if (in.domain != Domain::Position)
        throw ValueError("apply_mask: mask planes live in the position domain");
    const int m = mask.macropixel;
    if (m <= 0)
        throw ValueError("apply_mask: macropixel must be positive");
    const int span_y = mask.rows() * m;
    const int span_x = mask.cols() * m;
    if (mask.x0 < 0 || mask.y0 < 0 || mask.x0 + span_x > in.cols() ||
        mask.y0 + span_y > in.rows())
        throw DimensionError("apply_mask: mask area exceeds the grid");

    FieldGrid out = in;
    for (int a = 0; a < mask.rows(); ++a) {
        for (int b = 0; b < mask.cols(); ++b) {
            const std::complex<double> factor =
                std::polar(1.0, mask.phases(a, b));
            for (int dy = 0; dy < m; ++dy) {
                const int y = mask.y0 + a * m + dy;
                for (int dx = 0; dx < m; ++dx)
                    out.values(y, mask.x0 + b * m + dx) *= factor;
            }
        }
    }
    return out;
}

FieldGrid crop_field(const FieldGrid& in, const RoiSpec& roi)
{
    if (roi.w <= 0 || roi.h <= 0 || roi.x0 < 0 || roi.y0 < 0 ||
        roi.x0 + roi.w > in.cols() || roi.y0 + roi.h > in.rows())
        throw DimensionError("crop_field: roi exceeds the grid");
    FieldGrid out = in;
    out.values = in.values.block(roi.y0, roi.x0, roi.h, roi.w).eval();
    return out;
}

FieldGrid confine_roi(const FieldGrid& in, const RoiSpec& roi)
{
    if (roi.w <= 0 || roi.h <= 0 || roi.x0 < 0 || roi.y0 < 0 ||
        roi.x0 + roi.w > in.cols() || roi.y0 + roi.h > in.rows())
        throw DimensionError("confine_roi: roi exceeds the grid");
    FieldGrid out = in;
    out.values.setZero();
    out.values.block(roi.y0, roi.x0, roi.h, roi.w) =
        in.values.block(roi.y0, roi.x0, roi.h, roi.w);
    return out;
}

RealImage intensity(const FieldGrid& field)
{
    return field.values.abs2();
}

RealImage bin_intensity(const RealImage& img, int factor)
{
    const int ny = static_cast<int>(img.rows());
    const int nx = static_cast<int>(img.cols());
    if (factor <= 0 || ny % factor != 0 || nx % factor != 0)
        throw DimensionError("bin_intensity: factor must divide both grid sizes");
    RealImage out = RealImage::Zero(ny / factor, nx / factor);
    for (int i = 0; i < ny; ++i)
        for (int j = 0; j < nx; ++j)
            out(i / factor, j / factor) += img(i, j);
    return out;
}

double total_power(const FieldGrid& field)
{
    return field.values.abs2().sum() * field.pitch * field.pitch;
}

} // namespace specklepair
