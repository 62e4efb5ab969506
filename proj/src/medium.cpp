#include "specklepair/medium.hpp"

#include <cmath>
#include <limits>

#include "specklepair/errors.hpp"
#include "specklepair/rng.hpp"

namespace specklepair {

DiffuserScreen make_diffuser(int n, double pitch_mm, double corr_length_mm,
                             std::uint64_t seed)
{
    if (n <= 0 || n % 2 != 0)
        throw DimensionError("make_diffuser: grid size must be positive and even");
    if (pitch_mm <= 0.0)
        throw ValueError("make_diffuser: pitch must be positive");

    DiffuserScreen screen;
    screen.pitch_mm = pitch_mm;
    screen.corr_length_mm = corr_length_mm;
    screen.seed = seed;

    Rng rng(seed);
    if (std::isinf(corr_length_mm)) {
        const double value = rng.uniform(0.0, 2.0 * M_PI);
        screen.phase = RealImage::Constant(n, n, value);
        return screen;
    }
    if (!(corr_length_mm >= 2.0 * pitch_mm))
        throw ValueError("make_diffuser: correlation length below two pitches "
                         "cannot be represented on the grid");

    // White complex Gaussian amplitude drawn directly in the frequency
    // domain (row-major draw order fixes the realization for a given seed),
    // shaped by the Gaussian amplitude filter exp(-pi^2 s^2 nu^2) with
    // s = corr_length / 2. The resulting transmitted-phasor autocorrelation
    // reaches 1/2 at a displacement of corr_length / 2 per side.
    ComplexImage spectrum(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            spectrum(i, j) = rng.normal_complex();

    const double s = corr_length_mm / 2.0;
    const double dnu = 1.0 / (n * pitch_mm);
    for (int i = 0; i < n; ++i) {
        const double nu_y = (i - n / 2) * dnu;
        for (int j = 0; j < n; ++j) {
            const double nu_x = (j - n / 2) * dnu;
            const double r2 = nu_x * nu_x + nu_y * nu_y;
            spectrum(i, j) *= std::exp(-M_PI * M_PI * s * s * r2);
        }
    }

    const ComplexImage field = centered_dft(spectrum, 1);
    screen.phase = RealImage(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            screen.phase(i, j) = std::arg(field(i, j));
    return screen;
}

FieldGrid apply_screen(const FieldGrid& in, const DiffuserScreen& screen)
{
    if (in.domain != Domain::Position)
        throw ValueError("apply_screen: screen planes live in the position domain");
    if (in.rows() != screen.size() || in.cols() != screen.size())
        throw DimensionError("apply_screen: screen and field grids differ");

    FieldGrid out = in;
    const int n = in.rows();
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            out.values(i, j) *= std::polar(1.0, screen.phase(i, j));
    return out;
}

void BenchGeometry::validate() const
{
    if (grid_n <= 0 || grid_n % 2 != 0)
        throw ConfigError("geometry: grid size must be positive and even");
    if (pitch_mm <= 0.0)
        throw ConfigError("geometry: pitch must be positive");
    if (macropixel <= 0)
        throw ConfigError("geometry: macropixel must be positive");
    if (slm_roi.w <= 0 || slm_roi.h <= 0 || slm_roi.x0 < 0 || slm_roi.y0 < 0 ||
        slm_roi.x0 + slm_roi.w > grid_n || slm_roi.y0 + slm_roi.h > grid_n)
        throw ConfigError("geometry: slm roi exceeds the grid");
    if (cam_roi.w <= 0 || cam_roi.h <= 0 || cam_roi.x0 < 0 || cam_roi.y0 < 0 ||
        cam_roi.x0 + cam_roi.w > grid_n || cam_roi.y0 + cam_roi.h > grid_n)
        throw ConfigError("geometry: camera roi exceeds the grid");
    if (slm_roi.w % macropixel != 0 || slm_roi.h % macropixel != 0)
        throw ConfigError("geometry: macropixel must divide the slm roi");
    if (wavelength_nm <= 0.0)
        throw ConfigError("geometry: wavelength must be positive");
    if (focal_mm <= 0.0)
        throw ConfigError("geometry: focal length must be positive");
}

FieldGrid forward_train(const FieldGrid& input, const BenchGeometry& geom,
                        const PhaseMask* mask, const DiffuserScreen* screen)
{
    if (input.rows() != geom.grid_n || input.cols() != geom.grid_n)
        throw DimensionError("forward_train: field does not match the geometry");
    if (input.domain != Domain::Position)
        throw ValueError("forward_train: input must be a position-domain field");

    FieldGrid stage = (mask != nullptr) ? apply_mask(input, *mask) : input;
    stage = relay_image(stage, -1);
    if (screen != nullptr)
        stage = apply_screen(stage, *screen);
    stage.wavelength_nm = geom.wavelength_nm;
    return fourier_2f(stage, geom.focal_mm);
}

ComplexImage train_transmittance(const BenchGeometry& geom,
                                 const PhaseMask* mask,
                                 const DiffuserScreen* screen)
{
    const int n = geom.grid_n;
    if (screen != nullptr && screen->size() != n)
        throw DimensionError("train_transmittance: screen does not match the geometry");

    ComplexImage t = ComplexImage::Constant(n, n, std::complex<double>(1.0, 0.0));
    if (mask != nullptr) {
        FieldGrid unit = FieldGrid::zeros(n, geom.pitch_mm);
        unit.values.setConstant(std::complex<double>(1.0, 0.0));
        t = apply_mask(unit, *mask).values;
    }
    if (screen != nullptr) {
        for (int i = 0; i < n; ++i) {
            const int si = (n - i) % n;
            for (int j = 0; j < n; ++j)
                t(i, j) *= std::polar(1.0, screen->phase(si, (n - j) % n));
        }
    }
    return t;
}

ComplexMatrix ground_truth_tm(const BenchGeometry& geom,
                              const DiffuserScreen* screen)
{
    geom.validate();
    const int mrows = geom.macro_rows();
    const int mcols = geom.macro_cols();
    ComplexMatrix tm(geom.n_outputs(), geom.n_inputs());

    for (int a = 0; a < mrows; ++a) {
        for (int b = 0; b < mcols; ++b) {
            FieldGrid probe = FieldGrid::zeros(geom.grid_n, geom.pitch_mm);
            for (int dy = 0; dy < geom.macropixel; ++dy)
                for (int dx = 0; dx < geom.macropixel; ++dx)
                    probe.values(geom.slm_roi.y0 + a * geom.macropixel + dy,
                                 geom.slm_roi.x0 + b * geom.macropixel + dx) = 1.0;
            const FieldGrid out = forward_train(probe, geom, nullptr, screen);
            const int column = a * mcols + b;
            for (int y = 0; y < geom.cam_roi.h; ++y)
                for (int x = 0; x < geom.cam_roi.w; ++x)
                    tm(y * geom.cam_roi.w + x, column) =
                        out.values(geom.cam_roi.y0 + y, geom.cam_roi.x0 + x);
        }
    }
    return tm;
}

} // namespace specklepair
