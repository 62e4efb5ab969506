// Diffuser screens, the optical train, and transmission-matrix probing.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "specklepair/errors.hpp"
#include "specklepair/fft.hpp"
#include "specklepair/field.hpp"
#include "specklepair/medium.hpp"
#include "specklepair/probe.hpp"
#include "specklepair/rng.hpp"

using namespace specklepair;
using cplx = std::complex<double>;

namespace {

BenchGeometry small_bench()
{
    BenchGeometry geom;
    geom.grid_n = 64;
    geom.pitch_mm = 0.01;
    geom.slm_roi = {16, 16, 32, 32};
    geom.macropixel = 4;
    geom.cam_roi = {24, 24, 16, 16};
    geom.wavelength_nm = 710.0;
    geom.focal_mm = 100.0;
    return geom;
}

FieldGrid uniform_slm_field(const BenchGeometry& geom)
{
    FieldGrid field = FieldGrid::zeros(geom.grid_n, geom.pitch_mm);
    for (int y = geom.slm_roi.y0; y < geom.slm_roi.y0 + geom.slm_roi.h; ++y)
        for (int x = geom.slm_roi.x0; x < geom.slm_roi.x0 + geom.slm_roi.w; ++x)
            field.values(y, x) = 1.0;
    return field;
}

double row_correlation(const ComplexMatrix& a, const ComplexMatrix& b, int row)
{
    const cplx dot = (a.row(row).conjugate().cwiseProduct(b.row(row))).sum();
    const double na = a.row(row).norm();
    const double nb = b.row(row).norm();
    if (na == 0.0 || nb == 0.0)
        return 0.0;
    return std::abs(dot) / (na * nb);
}

} // namespace

TEST_CASE("diffuser synthesis determinism and range")
{
    const DiffuserScreen a = make_diffuser(64, 0.01, 0.08, 7);
    const DiffuserScreen b = make_diffuser(64, 0.01, 0.08, 7);
    const DiffuserScreen c = make_diffuser(64, 0.01, 0.08, 8);
    CHECK((a.phase - b.phase).abs().maxCoeff() == 0.0);
    CHECK((a.phase - c.phase).abs().maxCoeff() > 0.1);
    CHECK(a.phase.abs().maxCoeff() <= M_PI + 1e-12);
    CHECK(a.size() == 64);
    CHECK_THROWS_AS(make_diffuser(64, 0.01, 0.01, 7), ValueError);
    CHECK_THROWS_AS(make_diffuser(0, 0.01, 0.08, 7), DimensionError);
}

TEST_CASE("infinite correlation length gives a constant screen")
{
    const DiffuserScreen screen =
        make_diffuser(32, 0.01, std::numeric_limits<double>::infinity(), 5);
    const double first = screen.phase(0, 0);
    CHECK((screen.phase - first).abs().maxCoeff() < 1e-12);
}

TEST_CASE("far-field speckle follows negative-exponential statistics")
{
    // Fix a few far-field points and sample across screen realizations;
    // a single screen has a non-stationary mean envelope of width ~1/L_c,
    // so pooling its pixels would mix different intensity scales.
    const int n = 64;
    const int c = n / 2;
    const int screens = 800;
    const std::array<std::pair<int, int>, 3> points = {
        {{c, c}, {c, c + 8}, {c - 12, c}}};
    std::array<std::vector<double>, 3> samples;
    for (auto& s : samples)
        s.reserve(screens);

    for (int trial = 0; trial < screens; ++trial) {
        const DiffuserScreen screen =
            make_diffuser(n, 0.01, 0.04, 1000 + trial);
        ComplexImage t(n, n);
        for (int y = 0; y < n; ++y)
            for (int x = 0; x < n; ++x)
                t(y, x) = std::polar(1.0, screen.phase(y, x));
        const ComplexImage far = centered_dft(t, -1);
        for (std::size_t p = 0; p < points.size(); ++p)
            samples[p].push_back(std::norm(far(points[p].first, points[p].second)));
    }

    // Normalize each point by its own ensemble mean, then pool.
    std::vector<double> pooled;
    pooled.reserve(3 * screens);
    for (auto& s : samples) {
        double mean = 0.0;
        for (double v : s)
            mean += v;
        mean /= s.size();
        for (double v : s)
            pooled.push_back(v / mean);
    }
    double sq = 0.0;
    for (double v : pooled)
        sq += (v - 1.0) * (v - 1.0);
    const double contrast = std::sqrt(sq / pooled.size());
    CHECK(contrast == doctest::Approx(1.0).epsilon(0.10));

    // Kolmogorov-Smirnov distance to Exp(1).
    std::sort(pooled.begin(), pooled.end());
    double ks = 0.0;
    for (std::size_t i = 0; i < pooled.size(); ++i) {
        const double cdf = 1.0 - std::exp(-pooled[i]);
        const double emp_lo = static_cast<double>(i) / pooled.size();
        const double emp_hi = static_cast<double>(i + 1) / pooled.size();
        ks = std::max({ks, std::abs(cdf - emp_lo), std::abs(cdf - emp_hi)});
    }
    CHECK(ks < 0.04);
}

TEST_CASE("screen phase is uniformly distributed")
{
    const int n = 256;
    const DiffuserScreen screen = make_diffuser(n, 0.01, 0.02, 77);
    cplx first = 0.0, second = 0.0;
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) {
            first += std::polar(1.0, screen.phase(y, x));
            second += std::polar(1.0, 2.0 * screen.phase(y, x));
        }
    CHECK(std::abs(first) / (n * n) < 0.05);
    CHECK(std::abs(second) / (n * n) < 0.05);
}

TEST_CASE("phasor autocorrelation width tracks the correlation length")
{
    const int n = 256;
    const double pitch = 0.01;
    const double corr = 0.32; // 32 px
    const DiffuserScreen screen = make_diffuser(n, pitch, corr, 13);
    ComplexImage t(n, n);
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x)
            t(y, x) = std::polar(1.0, screen.phase(y, x));

    // |<t(x) conj(t(x+d))>| along x, averaged over the grid.
    double half_px = 0.0;
    double prev = 1.0;
    for (int d = 1; d < n / 2; ++d) {
        cplx acc = 0.0;
        for (int y = 0; y < n; ++y)
            for (int x = 0; x + d < n; ++x)
                acc += t(y, x) * std::conj(t(y, x + d));
        const double c = std::abs(acc) / (static_cast<double>(n) * (n - d));
        if (c < 0.5) {
            half_px = (d - 1) + (prev - 0.5) / (prev - c);
            break;
        }
        prev = c;
    }
    REQUIRE(half_px > 0.0);
    const double fwhm_mm = 2.0 * half_px * pitch;
    CHECK(fwhm_mm == doctest::Approx(corr).epsilon(0.20));
}

TEST_CASE("transparent train is the lens plus inverting relay")
{
    const BenchGeometry geom = small_bench();
    FieldGrid in = uniform_slm_field(geom);
    Rng rng(3);
    for (int y = 0; y < geom.grid_n; ++y)
        for (int x = 0; x < geom.grid_n; ++x)
            in.values(y, x) *= rng.normal_complex();

    const FieldGrid out = forward_train(in, geom, nullptr, nullptr);
    const FieldGrid expect = fourier_2f(relay_image(in, -1), geom.focal_mm);
    CHECK((out.values - expect.values).abs().maxCoeff() < 1e-12);
    CHECK(out.domain == Domain::Frequency);
    // Lossless propagation.
    CHECK(total_power(out) == doctest::Approx(total_power(in)).epsilon(1e-10));
}

TEST_CASE("train linearity")
{
    const BenchGeometry geom = small_bench();
    const DiffuserScreen screen =
        make_diffuser(geom.grid_n, geom.pitch_mm, 0.08, 21);
    FieldGrid u1 = uniform_slm_field(geom);
    FieldGrid u2 = uniform_slm_field(geom);
    Rng rng(4);
    for (int y = 0; y < geom.grid_n; ++y)
        for (int x = 0; x < geom.grid_n; ++x) {
            u1.values(y, x) *= rng.normal_complex();
            u2.values(y, x) *= rng.normal_complex();
        }
    const cplx a(0.3, -1.1), b(-0.7, 0.2);
    FieldGrid combo = u1;
    combo.values = a * u1.values + b * u2.values;
    const FieldGrid direct = forward_train(combo, geom, nullptr, &screen);
    const FieldGrid split1 = forward_train(u1, geom, nullptr, &screen);
    const FieldGrid split2 = forward_train(u2, geom, nullptr, &screen);
    const ComplexImage sum = a * split1.values + b * split2.values;
    CHECK((direct.values - sum).abs().maxCoeff() < 1e-12);
}

TEST_CASE("mask built from the relayed screen phase cancels the screen")
{
    const BenchGeometry geom = small_bench();
    const int n = geom.grid_n;
    const DiffuserScreen screen = make_diffuser(n, geom.pitch_mm, 0.08, 9);

    PhaseMask cancel = PhaseMask::flat(n, n, 1, 0, 0);
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x)
            cancel.phases(y, x) = -screen.phase((n - y) % n, (n - x) % n);

    FieldGrid in = uniform_slm_field(geom);
    const FieldGrid masked = forward_train(in, geom, &cancel, &screen);
    const FieldGrid clear = forward_train(in, geom, nullptr, nullptr);
    CHECK((masked.values - clear.values).abs().maxCoeff() < 1e-12);
}

TEST_CASE("train transmittance matches the mask and relayed screen phases")
{
    const BenchGeometry geom = small_bench();
    const int n = geom.grid_n;
    const DiffuserScreen screen = make_diffuser(n, geom.pitch_mm, 0.08, 15);
    PhaseMask mask = PhaseMask::flat(geom.macro_rows(), geom.macro_cols(),
                                     geom.macropixel, geom.slm_roi.x0,
                                     geom.slm_roi.y0);
    Rng rng(8);
    for (int i = 0; i < mask.phases.rows(); ++i)
        for (int j = 0; j < mask.phases.cols(); ++j)
            mask.phases(i, j) = rng.uniform(-M_PI, M_PI);

    const ComplexImage t = train_transmittance(geom, &mask, &screen);
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) {
            double mask_phase = 0.0;
            if (mask.phases.rows() > 0 && geom.slm_roi.contains(x, y)) {
                const int my = (y - geom.slm_roi.y0) / geom.macropixel;
                const int mx = (x - geom.slm_roi.x0) / geom.macropixel;
                mask_phase = mask.phases(my, mx);
            }
            const double screen_phase = screen.phase((n - y) % n, (n - x) % n);
            const cplx expect = std::polar(1.0, mask_phase + screen_phase);
            CHECK(std::abs(t(y, x) - expect) < 1e-12);
        }

    // The train output is the 2f transform of input * t, grid-inverted.
    FieldGrid in = uniform_slm_field(geom);
    FieldGrid scaled = in;
    scaled.values = in.values * t;
    const FieldGrid direct = forward_train(in, geom, &mask, &screen);
    const FieldGrid composed =
        fourier_2f(relay_image(scaled, -1), geom.focal_mm);
    CHECK((direct.values - composed.values).abs().maxCoeff() < 1e-12);
}

TEST_CASE("ideal-reference canonical probing recovers the matrix exactly")
{
    const BenchGeometry geom = small_bench();
    const DiffuserScreen screen =
        make_diffuser(geom.grid_n, geom.pitch_mm, 0.08, 40);
    const ComplexMatrix truth = ground_truth_tm(geom, &screen);
    const TransmissionMatrix tm =
        measure_tm(geom, &screen, ProbeBasis::Canonical, ReferencePolicy::Ideal);
    REQUIRE(tm.t.rows() == truth.rows());
    REQUIRE(tm.t.cols() == truth.cols());
    CHECK((tm.t - truth).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("hadamard probing agrees with canonical probing")
{
    const BenchGeometry geom = small_bench();
    const DiffuserScreen screen =
        make_diffuser(geom.grid_n, geom.pitch_mm, 0.08, 41);
    const TransmissionMatrix had =
        measure_tm(geom, &screen, ProbeBasis::Hadamard, ReferencePolicy::Border);
    const TransmissionMatrix can = measure_tm(geom, &screen, ProbeBasis::Canonical,
                                              ReferencePolicy::Border);
    CHECK((had.t - can.t).cwiseAbs().maxCoeff() <
          1e-10 * can.t.cwiseAbs().maxCoeff());
}

TEST_CASE("border-reference rows match ground truth up to one factor per pixel")
{
    const BenchGeometry geom = small_bench();
    const DiffuserScreen screen =
        make_diffuser(geom.grid_n, geom.pitch_mm, 0.08, 42);
    const ComplexMatrix truth = ground_truth_tm(geom, &screen);
    const TransmissionMatrix tm =
        measure_tm(geom, &screen, ProbeBasis::Hadamard, ReferencePolicy::Border);

    for (int row = 0; row < tm.t.rows(); ++row) {
        CHECK(row_correlation(tm.t, truth, row) > 0.999);
        // The per-pixel factor is the conjugated reference: the elementwise
        // ratio to ground truth is constant along each row.
        cplx ratio = 0.0;
        for (int col = 0; col < tm.t.cols(); ++col)
            if (std::abs(truth(row, col)) > 1e-9) {
                ratio = tm.t(row, col) / truth(row, col);
                break;
            }
        for (int col = 0; col < tm.t.cols(); ++col)
            if (std::abs(truth(row, col)) > 1e-9)
                CHECK(std::abs(tm.t(row, col) / truth(row, col) - ratio) <
                      1e-6 * std::abs(ratio));
    }
}

TEST_CASE("walsh patterns are orthogonal and sequency ordered")
{
    const int m = 16;
    std::vector<std::vector<double>> rows;
    for (int k = 0; k < m; ++k)
        rows.push_back(walsh_vector(m, k));
    for (int i = 0; i < m; ++i) {
        int changes = 0;
        for (int j = 0; j < m; ++j) {
            CHECK(std::abs(std::abs(rows[i][j]) - 1.0) < 1e-15);
            if (j > 0 && rows[i][j] != rows[i][j - 1])
                ++changes;
        }
        CHECK(changes == i);
        for (int k = 0; k < m; ++k) {
            double dot = 0.0;
            for (int j = 0; j < m; ++j)
                dot += rows[i][j] * rows[k][j];
            CHECK(dot == doctest::Approx(i == k ? m : 0).epsilon(1e-12));
        }
    }
    CHECK_THROWS_AS(walsh_vector(12, 0), ValueError);
}

TEST_CASE("probe field placement")
{
    const BenchGeometry geom = small_bench();
    std::vector<double> amps(geom.n_inputs(), 0.0);
    amps[9] = 2.5; // macropixel row 1, col 1 of the 8x8 grid
    const FieldGrid probe = make_probe_field(geom, amps);
    for (int y = 0; y < geom.grid_n; ++y)
        for (int x = 0; x < geom.grid_n; ++x) {
            const bool inside = x >= geom.slm_roi.x0 + 4 &&
                                x < geom.slm_roi.x0 + 8 &&
                                y >= geom.slm_roi.y0 + 4 &&
                                y < geom.slm_roi.y0 + 8;
            CHECK(probe.values(y, x) == (inside ? cplx(2.5) : cplx(0.0)));
        }
}

TEST_CASE("camera target index mapping")
{
    const BenchGeometry geom = small_bench();
    // Zero frequency sits at grid center 32 -> camera pixel (8, 8).
    CHECK(target_to_output_index(geom, 0.0, 0.0) == 8 * geom.cam_roi.w + 8);
    // One frequency pitch to the right.
    CHECK(target_to_output_index(geom, geom.freq_pitch(), 0.0) ==
          8 * geom.cam_roi.w + 9);
    CHECK_THROWS_AS(target_to_output_index(geom, 100.0, 0.0), ValueError);
}

TEST_CASE("conjugation mask focuses and steers")
{
    const BenchGeometry geom = small_bench();
    const DiffuserScreen screen =
        make_diffuser(geom.grid_n, geom.pitch_mm, 0.08, 50);
    const TransmissionMatrix tm =
        measure_tm(geom, &screen, ProbeBasis::Hadamard, ReferencePolicy::Border);

    const int target = target_to_output_index(geom, 3.0, -3.0);
    const PhaseMask mask = conjugation_mask(tm, {target});
    const EnhancementResult result = enhancement(geom, &screen, mask, target);
    // Theory for N = 64 phase-only inputs: 1 + (pi/4)(N-1) ~ 50.5.
    CHECK(result.enhancement > 25.0);
    CHECK(result.enhancement < 90.0);

    // The focus lands on the targeted camera pixel.
    FieldGrid in = uniform_slm_field(geom);
    const FieldGrid out = forward_train(apply_mask(in, mask), geom, nullptr,
                                        &screen);
    const FieldGrid cam = crop_field(out, geom.cam_roi);
    const RealImage inten = intensity(cam);
    int by = 0, bx = 0;
    inten.maxCoeff(&by, &bx);
    CHECK(by * geom.cam_roi.w + bx == target);
}

TEST_CASE("multi-target mask ignores per-row scale factors")
{
    const BenchGeometry geom = small_bench();
    const DiffuserScreen screen =
        make_diffuser(geom.grid_n, geom.pitch_mm, 0.08, 51);
    TransmissionMatrix tm =
        measure_tm(geom, &screen, ProbeBasis::Hadamard, ReferencePolicy::Border);

    const int a = target_to_output_index(geom, 0.0, 0.0);
    const int b = target_to_output_index(geom, 3.0, -3.0);
    const PhaseMask before = conjugation_mask(tm, {a, b});

    // Each measured row is only defined up to one complex factor (the
    // reference arm), so rescaling rows must not move the combined mask.
    tm.t.row(a) *= std::complex<double>(0.031, -2.7);
    tm.t.row(b) *= std::complex<double>(-14.0, 5.5);
    const PhaseMask after = conjugation_mask(tm, {a, b});

    const double drift =
        (before.phases - after.phases).abs().maxCoeff();
    CHECK(drift < 1e-9);
}

TEST_CASE("per-target weights act on normalized rows")
{
    const BenchGeometry geom = small_bench();
    const DiffuserScreen screen =
        make_diffuser(geom.grid_n, geom.pitch_mm, 0.08, 52);
    const TransmissionMatrix tm =
        measure_tm(geom, &screen, ProbeBasis::Hadamard, ReferencePolicy::Border);
    const int a = target_to_output_index(geom, 0.0, 0.0);
    const int b = target_to_output_index(geom, 3.0, -3.0);
    using C = std::complex<double>;

    CHECK_THROWS_AS(conjugation_mask(tm, {a, b}, {C(1.0, 0.0)}), ValueError);

    // Zero weight on the second target leaves the first target's mask up
    // to one constant phase offset.
    const PhaseMask solo = conjugation_mask(tm, {a});
    const PhaseMask gated =
        conjugation_mask(tm, {a, b}, {C(1.0, 0.0), C(0.0, 0.0)});
    C mean = 0.0;
    for (int i = 0; i < solo.phases.rows(); ++i)
        for (int j = 0; j < solo.phases.cols(); ++j)
            mean += std::polar(1.0, gated.phases(i, j) - solo.phases(i, j));
    mean /= static_cast<double>(solo.phases.size());
    CHECK(std::abs(mean) == doctest::Approx(1.0).epsilon(1e-12));

    // Explicit unit weights reproduce the default combination.
    const PhaseMask expl =
        conjugation_mask(tm, {a, b}, {C(1.0, 0.0), C(1.0, 0.0)});
    const PhaseMask dflt = conjugation_mask(tm, {a, b});
    CHECK((expl.phases - dflt.phases).abs().maxCoeff() < 1e-12);
}

TEST_CASE("geometry validation")
{
    BenchGeometry geom = small_bench();
    CHECK_NOTHROW(geom.validate());
    geom.macropixel = 3; // does not divide the 32 px region
    CHECK_THROWS_AS(geom.validate(), ConfigError);
    geom = small_bench();
    geom.cam_roi.w = 80; // extends beyond the grid
    CHECK_THROWS_AS(geom.validate(), ConfigError);
}
