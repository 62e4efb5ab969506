#include "specklepair/probe.hpp"

#include <bit>
#include <cmath>
#include <complex>

#include "specklepair/errors.hpp"

namespace specklepair {

namespace {

constexpr std::complex<double> kI{0.0, 1.0};

bool is_power_of_two(unsigned v)
{
    return v != 0 && (v & (v - 1)) == 0;
}

int bit_reverse(int value, int bits)
{
    int out = 0;
    for (int i = 0; i < bits; ++i)
        if (value & (1 << i))
            out |= 1 << (bits - 1 - i);
    return out;
}

// Camera-ROI samples of the forward train response, as a flat vector.
ComplexVector roi_response(const FieldGrid& field, const BenchGeometry& geom)
{
    ComplexVector out(geom.n_outputs());
    for (int y = 0; y < geom.cam_roi.h; ++y)
        for (int x = 0; x < geom.cam_roi.w; ++x)
            out(y * geom.cam_roi.w + x) =
                field.values(geom.cam_roi.y0 + y, geom.cam_roi.x0 + x);
    return out;
}

} // namespace

std::complex<double> reconstruct_4phase(double i0, double i_half_pi,
                                        double i_pi, double i_3half_pi)
{
    return {(i0 - i_pi) / 4.0, (i_3half_pi - i_half_pi) / 4.0};
}

ComplexImage reconstruct_4phase(const RealImage& i0, const RealImage& i_half_pi,
                                const RealImage& i_pi,
                                const RealImage& i_3half_pi)
{
    if (i0.rows() != i_pi.rows() || i0.cols() != i_pi.cols() ||
        i0.rows() != i_half_pi.rows() || i0.cols() != i_half_pi.cols() ||
        i0.rows() != i_3half_pi.rows() || i0.cols() != i_3half_pi.cols())
        throw DimensionError("reconstruct_4phase: intensity frames differ in size");
    ComplexImage out(i0.rows(), i0.cols());
    for (int i = 0; i < i0.rows(); ++i)
        for (int j = 0; j < i0.cols(); ++j)
            out(i, j) = reconstruct_4phase(i0(i, j), i_half_pi(i, j), i_pi(i, j),
                                           i_3half_pi(i, j));
    return out;
}

std::vector<double> walsh_vector(int m, int k)
{
    if (m <= 0 || !is_power_of_two(static_cast<unsigned>(m)))
        throw ValueError("walsh_vector: length must be a power of two");
    if (k < 0 || k >= m)
        throw ValueError("walsh_vector: index out of range");

    const int bits = std::countr_zero(static_cast<unsigned>(m));
    const int gray = k ^ (k >> 1);
    const int row = bit_reverse(gray, bits);

    std::vector<double> out(static_cast<std::size_t>(m));
    for (int j = 0; j < m; ++j) {
        const int bitsum = std::popcount(static_cast<unsigned>(row & j));
        out[static_cast<std::size_t>(j)] = (bitsum & 1) ? -1.0 : 1.0;
    }
    return out;
}

FieldGrid make_probe_field(const BenchGeometry& geom,
                           const std::vector<double>& amplitudes)
{
    geom.validate();
    if (static_cast<int>(amplitudes.size()) != geom.n_inputs())
        throw DimensionError("make_probe_field: amplitude count does not match "
                             "the macropixel grid");

    FieldGrid field = FieldGrid::zeros(geom.grid_n, geom.pitch_mm);
    field.wavelength_nm = geom.wavelength_nm;
    const int m = geom.macropixel;
    for (int a = 0; a < geom.macro_rows(); ++a)
        for (int b = 0; b < geom.macro_cols(); ++b) {
            const double amp =
                amplitudes[static_cast<std::size_t>(a) * geom.macro_cols() + b];
            if (amp == 0.0)
                continue;
            for (int dy = 0; dy < m; ++dy)
                for (int dx = 0; dx < m; ++dx)
                    field.values(geom.slm_roi.y0 + a * m + dy,
                                 geom.slm_roi.x0 + b * m + dx) = amp;
        }
    return field;
}

TransmissionMatrix measure_tm(const BenchGeometry& geom,
                              const DiffuserScreen* screen,
                              ProbeBasis basis, ReferencePolicy policy)
{
    geom.validate();
    const int n_in = geom.n_inputs();
    const int n_out = geom.n_outputs();
    if (basis == ProbeBasis::Hadamard &&
        !is_power_of_two(static_cast<unsigned>(n_in)))
        throw UnsupportedError("measure_tm: hadamard basis needs a power-of-two "
                               "input count");

    // Reference arm, computed once. Border policy sends the plane outside
    // the SLM region through the same train.
    ComplexVector reference;
    if (policy == ReferencePolicy::Ideal) {
        reference = ComplexVector::Constant(n_out, std::complex<double>(1.0, 0.0));
    } else {
        FieldGrid border = FieldGrid::zeros(geom.grid_n, geom.pitch_mm);
        border.wavelength_nm = geom.wavelength_nm;
        border.values.setConstant(std::complex<double>(1.0, 0.0));
        border.values
            .block(geom.slm_roi.y0, geom.slm_roi.x0, geom.slm_roi.h, geom.slm_roi.w)
            .setZero();
        reference = roi_response(forward_train(border, geom, nullptr, screen), geom);
    }

    TransmissionMatrix tm;
    tm.t = ComplexMatrix::Zero(n_out, n_in);
    tm.geom = geom;
    tm.basis = basis;
    tm.policy = policy;
    tm.screen_seed = (screen != nullptr) ? screen->seed : 0;

    // Probes are accumulated in blocks so the Hadamard back-projection
    // T += Z * B^T runs as a matrix product instead of n_in rank-1 updates.
    constexpr int kBlock = 64;
    ComplexMatrix z_block(n_out, kBlock);
    ComplexMatrix b_block(n_in, kBlock);
    int filled = 0;

    auto flush = [&]() {
        if (filled == 0)
            return;
        tm.t.noalias() +=
            z_block.leftCols(filled) * b_block.leftCols(filled).transpose();
        filled = 0;
    };

    for (int v = 0; v < n_in; ++v) {
        std::vector<double> amplitudes;
        if (basis == ProbeBasis::Hadamard) {
            amplitudes = walsh_vector(n_in, v);
        } else {
            amplitudes.assign(static_cast<std::size_t>(n_in), 0.0);
            amplitudes[static_cast<std::size_t>(v)] = 1.0;
        }

        const FieldGrid probe = make_probe_field(geom, amplitudes);
        const ComplexVector s =
            roi_response(forward_train(probe, geom, nullptr, screen), geom);

        // Four camera exposures per probe; the probe arm is stepped in
        // phase while the reference stays fixed.
        ComplexVector z(n_out);
        for (int p = 0; p < n_out; ++p) {
            const std::complex<double> r = reference(p);
            const double ia0 = std::norm(r + s(p));
            const double ia1 = std::norm(r + kI * s(p));
            const double ia2 = std::norm(r - s(p));
            const double ia3 = std::norm(r - kI * s(p));
            z(p) = reconstruct_4phase(ia0, ia1, ia2, ia3);
        }

        if (basis == ProbeBasis::Canonical) {
            tm.t.col(v) = z;
        } else {
            for (int k = 0; k < n_in; ++k)
                b_block(k, filled) = amplitudes[static_cast<std::size_t>(k)];
            z_block.col(filled) = z;
            if (++filled == kBlock)
                flush();
        }
    }
    flush();

    if (basis == ProbeBasis::Hadamard)
        tm.t /= static_cast<double>(n_in);
    return tm;
}

int target_to_output_index(const BenchGeometry& geom, double nu_x_per_mm,
                           double nu_y_per_mm)
{
    const double dnu = geom.freq_pitch();
    const int kx = static_cast<int>(std::lround(nu_x_per_mm / dnu)) + geom.grid_n / 2;
    const int ky = static_cast<int>(std::lround(nu_y_per_mm / dnu)) + geom.grid_n / 2;
    if (!geom.cam_roi.contains(kx, ky))
        throw ValueError("target_to_output_index: target lies outside the "
                         "camera region");
    return (ky - geom.cam_roi.y0) * geom.cam_roi.w + (kx - geom.cam_roi.x0);
}

PhaseMask conjugation_mask(const TransmissionMatrix& tm,
                           const std::vector<int>& output_indices,
                           const std::vector<std::complex<double>>& weights)
{
    if (output_indices.empty())
        throw ValueError("conjugation_mask: need at least one target");
    for (int p : output_indices)
        if (p < 0 || p >= tm.t.rows())
            throw ValueError("conjugation_mask: output index out of range");
    if (!weights.empty() && weights.size() != output_indices.size())
        throw ValueError("conjugation_mask: one weight per target required");

    // Measured rows carry one arbitrary complex factor each (the reference
    // arm), so before the targets are combined every conjugated row is
    // divided by its norm and rotated so its largest entry comes out real
    // positive. User weights then act on these normalized rows, which
    // keeps the combined mask invariant under per-row rescaling. A lone
    // default-weight target skips the anchor and keeps the raw phases.
    const std::size_t m = output_indices.size();
    const bool plain = (m == 1 && weights.empty());
    std::vector<std::complex<double>> scale(m);
    for (std::size_t i = 0; i < m; ++i) {
        const auto row = tm.t.row(output_indices[i]);
        const double norm = row.norm();
        if (!(norm > 0.0))
            throw ValueError("conjugation_mask: target row is empty");
        Eigen::Index k_max = 0;
        row.cwiseAbs().maxCoeff(&k_max);
        const std::complex<double> anchor =
            row(k_max) / (std::abs(row(k_max)) * norm);
        scale[i] = plain ? std::complex<double>(1.0, 0.0)
                         : anchor * (weights.empty() ? 1.0 : weights[i]);
    }

    const BenchGeometry& geom = tm.geom;
    PhaseMask mask = PhaseMask::flat(geom.macro_rows(), geom.macro_cols(),
                                     geom.macropixel, geom.slm_roi.x0,
                                     geom.slm_roi.y0);
    for (int k = 0; k < tm.t.cols(); ++k) {
        std::complex<double> acc = 0.0;
        for (std::size_t i = 0; i < m; ++i)
            acc += std::conj(tm.t(output_indices[i], k)) * scale[i];
        mask.phases(k / geom.macro_cols(), k % geom.macro_cols()) =
            (acc == std::complex<double>(0.0, 0.0)) ? 0.0 : std::arg(acc);
    }
    return mask;
}

EnhancementResult enhancement(const BenchGeometry& geom,
                              const DiffuserScreen* screen,
                              const PhaseMask& mask, int target_index)
{
    geom.validate();
    if (target_index < 0 || target_index >= geom.n_outputs())
        throw ValueError("enhancement: target index out of range");

    std::vector<double> ones(static_cast<std::size_t>(geom.n_inputs()), 1.0);
    const FieldGrid illumination = make_probe_field(geom, ones);

    const ComplexVector focused =
        roi_response(forward_train(illumination, geom, &mask, screen), geom);
    const ComplexVector baseline =
        roi_response(forward_train(illumination, geom, nullptr, screen), geom);

    EnhancementResult result;
    result.focused_intensity = std::norm(focused(target_index));
    result.baseline_mean = baseline.squaredNorm() / baseline.size();
    result.enhancement =
        (result.baseline_mean > 0.0)
            ? result.focused_intensity / result.baseline_mean
            : 0.0;
    return result;
}

} // namespace specklepair
