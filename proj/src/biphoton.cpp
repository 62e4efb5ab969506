#include "specklepair/biphoton.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include <Eigen/Eigenvalues>

#include "specklepair/errors.hpp"

namespace specklepair {

namespace {

void check_widths(double u, double v)
{
    if (!(u > 0.0) || !(v > 0.0))
        throw ValueError("axis widths must be positive and finite");
}

// Wraparound coordinate inversion followed by the centered DFT: the
// transfer of the inverting relay plus 2f lens used by both arms.
ComplexVector arm_spectrum(const Eigen::VectorXd& mode)
{
    const int n = static_cast<int>(mode.size());
    ComplexVector flipped(n);
    for (int i = 0; i < n; ++i)
        flipped(i) = mode((n - i) % n);
    return centered_dft_1d(flipped, -1);
}

} // namespace

AxisParams AxisParams::from_widths(double u, double v)
{
    check_widths(u, v);
    return {u, v};
}

AxisParams AxisParams::from_sum_and_k(double u, double k)
{
    if (!(u > 0.0))
        throw ValueError("axis sum width must be positive");
    if (!(k >= 1.0))
        throw ValueError("schmidt number must be at least 1");
    return {u, u * (k + std::sqrt(k * k - 1.0))};
}

AxisParams AxisParams::from_position_and_marginal(double sigma_position_mm,
                                                  double sigma_marginal_per_mm)
{
    if (!(sigma_position_mm > 0.0) || !(sigma_marginal_per_mm > 0.0))
        throw ValueError("marginal widths must be positive");
    const double k = schmidt_number(sigma_position_mm, sigma_marginal_per_mm);
    if (k < 1.0)
        throw ValueError("marginal widths violate the uncertainty bound");
    const double sm2 = sigma_marginal_per_mm * sigma_marginal_per_mm;
    const double disc = sm2 * sm2 * std::max(0.0, 1.0 - 1.0 / (k * k));
    const double root = std::sqrt(disc);
    return {std::sqrt((sm2 - root) / 2.0), std::sqrt((sm2 + root) / 2.0)};
}

AxisParams AxisParams::from_sum_and_marginal(double u,
                                             double sigma_marginal_per_mm)
{
    if (!(u > 0.0))
        throw ValueError("axis sum width must be positive");
    const double sm2 = sigma_marginal_per_mm * sigma_marginal_per_mm;
    if (!(sm2 > u * u))
        throw ValueError("marginal width must exceed the sum width");
    return {u, std::sqrt(sm2 - u * u)};
}

double AxisParams::marginal_width() const
{
    return std::sqrt(u * u + v * v);
}

double AxisParams::position_width() const
{
    return std::sqrt(1.0 / (u * u) + 1.0 / (v * v)) / (2.0 * M_PI);
}

double AxisParams::schmidt_k() const
{
    return (u * u + v * v) / (2.0 * u * v);
}

double AxisParams::mode_ratio() const
{
    const double k = schmidt_k();
    return (k - 1.0) / (k + 1.0);
}

double schmidt_number(double sigma_position_mm, double sigma_marginal_per_mm)
{
    if (!(sigma_position_mm > 0.0) || !(sigma_marginal_per_mm > 0.0))
        throw ValueError("marginal widths must be positive");
    return M_PI * sigma_position_mm * sigma_marginal_per_mm;
}

Eigen::MatrixXd axis_kernel(const AxisParams& params, int n, double pitch_mm)
{
    check_widths(params.u, params.v);
    if (n <= 0 || n % 2 != 0)
        throw DimensionError("axis_kernel: grid size must be positive and even");
    if (pitch_mm <= 0.0)
        throw ValueError("axis_kernel: pitch must be positive");

    const double norm = 2.0 * std::sqrt(M_PI * params.u * params.v);
    const double cu = M_PI * M_PI * params.u * params.u;
    const double cv = M_PI * M_PI * params.v * params.v;
    Eigen::MatrixXd kernel(n, n);
    for (int i = 0; i < n; ++i) {
        const double xi = (i - n / 2) * pitch_mm;
        for (int j = 0; j <= i; ++j) {
            const double xj = (j - n / 2) * pitch_mm;
            const double sum = xi + xj;
            const double diff = xi - xj;
            const double value =
                norm * std::exp(-cu * sum * sum - cv * diff * diff) * pitch_mm;
            kernel(i, j) = value;
            kernel(j, i) = value;
        }
    }
    return kernel;
}

AxisSchmidt schmidt_decompose_axis(const AxisParams& params, int n,
                                   double pitch_mm, int n_modes)
{
    if (n_modes <= 0 || n_modes > n)
        throw ValueError("schmidt_decompose_axis: mode count out of range");

    const Eigen::MatrixXd kernel = axis_kernel(params, n, pitch_mm);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(kernel);
    if (solver.info() != Eigen::Success)
        throw Error("schmidt_decompose_axis: eigendecomposition failed");

    // Schmidt probabilities are the squared eigenvalues normalized over the
    // whole spectrum; order by probability (eigensolver returns ascending).
    const Eigen::VectorXd eigs = solver.eigenvalues();
    Eigen::VectorXd probs = eigs.array().square();
    const double trace = probs.sum();
    if (!(trace > 0.0))
        throw ValueError("schmidt_decompose_axis: state vanishes on the grid");
    probs /= trace;

    std::vector<int> order(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        order[static_cast<std::size_t>(i)] = i;
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return probs(a) > probs(b);
    });

    AxisSchmidt result;
    result.params = params;
    result.n = n;
    result.pitch_mm = pitch_mm;
    result.k_svd = 1.0 / probs.array().square().sum();
    result.lambdas.resize(n_modes);
    result.modes.resize(n, n_modes);
    double captured = 0.0;
    for (int m = 0; m < n_modes; ++m) {
        const int src = order[static_cast<std::size_t>(m)];
        result.lambdas(m) = probs(src);
        captured += probs(src);
        Eigen::VectorXd mode = solver.eigenvectors().col(src);
        // Deterministic sign: largest-magnitude component made positive.
        // A negative eigenvalue folds its sign into the mode instead, so
        // the kernel restricted to kept modes stays sum of +sqrt(lambda)
        // outer products.
        if (eigs(src) < 0.0)
            mode = -mode;
        int peak = 0;
        for (int i = 1; i < n; ++i)
            if (std::abs(mode(i)) > std::abs(mode(peak)))
                peak = i;
        if (mode(peak) < 0.0)
            mode = -mode;
        result.modes.col(m) = mode;
    }
    result.captured = captured;
    return result;
}

namespace {

void build_axis_tables(const AxisSchmidt& axis, ComplexMatrix& vt,
                       ComplexMatrix& w, RealImage& joint, RealVector& marginal)
{
    const int n = axis.n;
    const int kept = static_cast<int>(axis.lambdas.size());

    vt.resize(n, kept);
    for (int m = 0; m < kept; ++m)
        vt.col(m) = arm_spectrum(axis.modes.col(m));

    const Eigen::VectorXd amps = axis.lambdas.array().sqrt();
    const ComplexMatrix scaled_vt = vt * amps.asDiagonal();
    w = axis.modes.cast<std::complex<double>>() * scaled_vt.transpose();

    const ComplexMatrix sig = vt * amps.asDiagonal() * vt.transpose();
    joint = sig.array().abs2();

    marginal = (vt.array().abs2().matrix()) * axis.lambdas;
}

} // namespace

BiphotonModel build_biphoton_model(const DoubleGaussianState& state, int n,
                                   double pitch_mm, int n_modes, bool force,
                                   double min_capture)
{
    BiphotonModel model;
    model.state = state;
    model.n = n;
    model.pitch_mm = pitch_mm;
    model.ax = schmidt_decompose_axis(state.x, n, pitch_mm, n_modes);
    model.ay = schmidt_decompose_axis(state.y, n, pitch_mm, n_modes);

    if (!force && model.captured() < min_capture)
        throw ValueError("biphoton model: kept modes capture " +
                         std::to_string(model.captured()) +
                         " of the state; raise the mode count or force");

    build_axis_tables(model.ax, model.vt_x, model.w_x, model.signal_joint_x,
                      model.idler_marginal_x);
    build_axis_tables(model.ay, model.vt_y, model.w_y, model.signal_joint_y,
                      model.idler_marginal_y);
    return model;
}

ComplexImage conditional_position_field(const BiphotonModel& model, int jx,
                                        int jy)
{
    if (jx < 0 || jx >= model.n || jy < 0 || jy >= model.n)
        throw ValueError("conditional_position_field: idler pixel out of range");
    ComplexImage field(model.n, model.n);
    for (int iy = 0; iy < model.n; ++iy)
        for (int ix = 0; ix < model.n; ++ix)
            field(iy, ix) = model.w_y(iy, jy) * model.w_x(ix, jx);
    return field;
}

RealImage idler_camera_pmf(const BiphotonModel& model)
{
    RealImage pmf(model.n, model.n);
    for (int iy = 0; iy < model.n; ++iy)
        for (int ix = 0; ix < model.n; ++ix)
            pmf(iy, ix) = model.idler_marginal_y(iy) * model.idler_marginal_x(ix);
    return pmf;
}

namespace {

// Rows cyclically shifted down by d (row y of the result is row
// (y - d) mod n of the input).
Eigen::MatrixXd circular_shift_rows(const Eigen::MatrixXd& m, int d)
{
    const int n = static_cast<int>(m.rows());
    const int s = ((d % n) + n) % n;
    if (s == 0)
        return m;
    Eigen::MatrixXd out(n, m.cols());
    out.topRows(s) = m.bottomRows(s);
    out.bottomRows(n - s) = m.topRows(n - s);
    return out;
}

// The kept-mode kernel pins the idler within ~1/(pi v) of the signal
// position, so only small signal-to-idler offsets carry weight; offsets
// past the 1e-12 kernel tail are dropped (full range on small grids).
std::vector<int> offset_list(const AxisParams& params, int n, double pitch_mm)
{
    const double decay = M_PI * params.v * pitch_mm;
    const int needed =
        static_cast<int>(std::ceil(std::sqrt(std::log(1e12)) / decay));
    std::vector<int> offsets;
    if (2 * needed + 1 >= n) {
        for (int w = 0; w < n; ++w)
            offsets.push_back(w);
    } else {
        for (int w = -needed; w <= needed; ++w)
            offsets.push_back(w);
    }
    return offsets;
}

// Column j holds R(y, w_j) = sum_m sqrt(lambda_m) modes_m(y)
// modes_m((y + w_j) mod n): the kept-mode kernel sampled at signal
// position y and idler position y + w_j.
Eigen::MatrixXd offset_kernel(const AxisSchmidt& axis,
                              const std::vector<int>& offsets)
{
    const Eigen::VectorXd amps = axis.lambdas.array().sqrt();
    const Eigen::MatrixXd g = axis.modes * amps.asDiagonal();
    Eigen::MatrixXd r(axis.n, static_cast<int>(offsets.size()));
    for (std::size_t j = 0; j < offsets.size(); ++j)
        r.col(static_cast<int>(j)) =
            (g.array() * circular_shift_rows(axis.modes, -offsets[j]).array())
                .rowwise()
                .sum();
    return r;
}

} // namespace

RealImage analytic_sum_map(const BiphotonModel& model, const ComplexImage& t)
{
    const int n = model.n;
    const bool transparent = (t.size() == 0);
    if (!transparent && (t.rows() != n || t.cols() != n))
        throw DimensionError("analytic_sum_map: transmittance grid mismatch");

    const std::vector<int> wx = offset_list(model.state.x, n, model.pitch_mm);
    const std::vector<int> wy = offset_list(model.state.y, n, model.pitch_mm);
    const Eigen::MatrixXd rx = offset_kernel(model.ax, wx);
    const Eigen::MatrixXd ry = offset_kernel(model.ay, wy);

    // For each idler offset pair (wx, wy), the pair amplitude restricted to
    // idler = signal + offset is t weighted by the offset kernel; its DFT
    // magnitude squared, accumulated over offsets, is the momentum-sum
    // coincidence rate. Offsets beyond the kernel tail were dropped above,
    // so the accumulation is exact to that tail.
    RealImage acc = RealImage::Zero(n, n);
    ComplexImage weighted(n, n);
    for (int jy = 0; jy < ry.cols(); ++jy) {
        for (int jx = 0; jx < rx.cols(); ++jx) {
            for (int y2 = 0; y2 < n; ++y2) {
                const double row_w = ry(y2, jy);
                for (int y1 = 0; y1 < n; ++y1) {
                    const double w = row_w * rx(y1, jx);
                    weighted(y2, y1) = transparent ? std::complex<double>(w)
                                                   : t(y2, y1) * w;
                }
            }
            acc += raw_dft(weighted, 1).abs2();
        }
    }

    // Momentum sums live on the camera torus: the map holds one value per
    // residue class, at the representatives q in [-n/2, n/2 - 1] along each
    // axis of the full correlation frame, zeros elsewhere.
    const int half = n / 2;
    const double scale = 1.0 / (static_cast<double>(n) * n);
    RealImage map = RealImage::Zero(2 * n - 1, 2 * n - 1);
    for (int k2 = 0; k2 < n; ++k2) {
        const int q2 = ((k2 + half) % n) - half;
        for (int k1 = 0; k1 < n; ++k1) {
            const int q1 = ((k1 + half) % n) - half;
            map(n + q2, n + q1) = acc(k2, k1) * scale;
        }
    }
    return map;
}

} // namespace specklepair
