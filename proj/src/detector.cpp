#include "specklepair/detector.hpp"

#include <algorithm>
#include <cmath>

#include "specklepair/errors.hpp"
#include "specklepair/parallel.hpp"
#include "specklepair/rng.hpp"

namespace specklepair {

namespace {

void check_config(const DetectorConfig& cfg)
{
    if (cfg.frames <= 0)
        throw ConfigError("detector: frame count must be positive");
    if (cfg.eta_signal < 0.0 || cfg.eta_signal > 1.0 || cfg.eta_idler < 0.0 ||
        cfg.eta_idler > 1.0)
        throw ConfigError("detector: efficiencies must lie in [0, 1]");
    if (cfg.signal_transmission < 0.0 || cfg.signal_transmission > 1.0)
        throw ConfigError("detector: transmission must lie in [0, 1]");
    if (cfg.spurious < 0.0 || cfg.spurious >= 1.0)
        throw ConfigError("detector: spurious probability must lie in [0, 1)");
    if (!(cfg.fill > 0.0) || cfg.fill > 0.5)
        throw ConfigError("detector: fill must lie in (0, 0.5]");
    if (cfg.fill <= cfg.spurious)
        throw ConfigError("detector: fill target sits below the spurious floor");
}

// Prefix sums of a pmf for inverse-CDF draws; cdf[k] = sum of the first k.
std::vector<double> prefix(const RealVector& pmf)
{
    std::vector<double> cdf(static_cast<std::size_t>(pmf.size()) + 1, 0.0);
    for (Eigen::Index i = 0; i < pmf.size(); ++i)
        cdf[static_cast<std::size_t>(i) + 1] =
            cdf[static_cast<std::size_t>(i)] + pmf(i);
    return cdf;
}

int invert_cdf(const std::vector<double>& cdf, double target)
{
    const auto it = std::upper_bound(cdf.begin() + 1, cdf.end(), target);
    return static_cast<int>(std::distance(cdf.begin() + 1, it));
}

} // namespace

double pair_survival_rate(const DetectorConfig& config)
{
    return config.eta_signal * config.signal_transmission * config.eta_idler;
}

double calibrate_lambda_pairs(const BiphotonModel& model,
                              const DetectorConfig& config)
{
    check_config(config);
    const RealImage pmf = idler_camera_pmf(model);
    const double keep = 1.0 - config.spurious;

    auto occupancy = [&](double lambda) {
        double acc = 0.0;
        for (int i = 0; i < model.n; ++i)
            for (int j = 0; j < model.n; ++j)
                acc += 1.0 -
                       keep * std::exp(-lambda * config.eta_idler * pmf(i, j));
        return acc / (static_cast<double>(model.n) * model.n);
    };

    if (config.eta_idler <= 0.0)
        throw ConfigError("detector: fill calibration needs a nonzero idler "
                          "efficiency");

    double hi = 1.0;
    int guard = 0;
    while (occupancy(hi) < config.fill) {
        hi *= 2.0;
        if (++guard > 60)
            throw ConfigError("detector: fill target is unreachable");
    }
    double lo = 0.0;
    for (int iter = 0; iter < 80; ++iter) {
        const double mid = 0.5 * (lo + hi);
        if (occupancy(mid) < config.fill)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

FrameStack sample_frames(const BiphotonModel& model, const BenchGeometry& geom,
                         const PhaseMask* mask, const DiffuserScreen* screen,
                         const DetectorConfig& config)
{
    std::vector<PhaseMask> masks;
    if (mask != nullptr)
        masks.push_back(*mask);
    return sample_frames(model, geom, masks, screen, config);
}

FrameStack sample_frames(const BiphotonModel& model, const BenchGeometry& geom,
                         const std::vector<PhaseMask>& masks,
                         const DiffuserScreen* screen,
                         const DetectorConfig& config)
{
    check_config(config);
    geom.validate();
    if (geom.grid_n != model.n)
        throw DimensionError("sample_frames: model and geometry grids differ");

    FrameStack stack;
    stack.n = model.n;
    stack.frames = config.frames;
    stack.freq_pitch = geom.freq_pitch();
    stack.config = config;
    stack.lambda_pairs = calibrate_lambda_pairs(model, config);
    stack.bits.assign(static_cast<std::size_t>(config.frames) *
                          stack.frame_bytes(),
                      0);

    const int n = model.n;
    const std::vector<double> idler_cdf_x = prefix(model.idler_marginal_x);
    const std::vector<double> idler_cdf_y = prefix(model.idler_marginal_y);
    const double total_x = idler_cdf_x.back();
    const double total_y = idler_cdf_y.back();

    // Without bench elements the conditional signal distribution separates
    // per axis; per-idler-column CDFs of the joint tables replace the
    // per-pair transform.
    const bool separable = (masks.empty() && screen == nullptr);
    Eigen::MatrixXd cond_cdf_x, cond_cdf_y; // (n+1) x n, column = idler pixel
    if (separable) {
        cond_cdf_x = Eigen::MatrixXd::Zero(n + 1, n);
        cond_cdf_y = Eigen::MatrixXd::Zero(n + 1, n);
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) {
                cond_cdf_x(k + 1, j) = cond_cdf_x(k, j) + model.signal_joint_x(k, j);
                cond_cdf_y(k + 1, j) = cond_cdf_y(k, j) + model.signal_joint_y(k, j);
            }
    }

    // With bench elements the per-pair propagation reduces to one pointwise
    // multiply by the relay-flipped train transmittance plus one transform;
    // the flip is folded into the table lookups below. One transmittance
    // per mask in the cycle (a single element when only a screen is set).
    std::vector<ComplexImage> train_flips;
    if (!separable) {
        const std::size_t n_trains = masks.empty() ? 1 : masks.size();
        for (std::size_t mi = 0; mi < n_trains; ++mi) {
            const ComplexImage t = train_transmittance(
                geom, masks.empty() ? nullptr : &masks[mi], screen);
            ComplexImage flip(n, n);
            for (int i = 0; i < n; ++i) {
                const int si = (n - i) % n;
                for (int j = 0; j < n; ++j)
                    flip(i, j) = t(si, (n - j) % n);
            }
            train_flips.push_back(std::move(flip));
        }
    }

    const double p_signal = config.eta_signal * config.signal_transmission;
    std::vector<std::uint64_t> generated(static_cast<std::size_t>(config.frames));
    std::vector<std::uint64_t> detected(static_cast<std::size_t>(config.frames));

    parallel_for_blocks(config.frames, [&](std::int64_t frame) {
        const int f = static_cast<int>(frame);
        Rng rng(derive_seed(config.seed, seed_tag::frame,
                            static_cast<std::uint64_t>(f)));
        const int n_pairs = static_cast<int>(rng.poisson(stack.lambda_pairs));
        generated[static_cast<std::size_t>(f)] =
            static_cast<std::uint64_t>(n_pairs);
        std::uint64_t coincidences = 0;
        ComplexImage cond_buf;
        Eigen::VectorXcd wyf, wxf;
        const ComplexImage* train_flip = nullptr;
        if (!separable) {
            cond_buf = ComplexImage(n, n);
            wyf = Eigen::VectorXcd(n);
            wxf = Eigen::VectorXcd(n);
            train_flip = &train_flips[static_cast<std::size_t>(f) %
                                      train_flips.size()];
        }

        for (int pair = 0; pair < n_pairs; ++pair) {
            const double u_ix = rng.uniform();
            const double u_iy = rng.uniform();
            const double u_idet = rng.uniform();
            const double u_sdet = rng.uniform();
            const double u_place = rng.uniform();

            // Mode truncation leaves a small remainder of the state outside
            // the kept subspace; pairs drawn there are lost.
            if (u_ix >= total_x || u_iy >= total_y)
                continue;
            const int jx = invert_cdf(idler_cdf_x, u_ix);
            const int jy = invert_cdf(idler_cdf_y, u_iy);

            const bool idler_seen = u_idet < config.eta_idler;
            const bool signal_seen = u_sdet < p_signal;

            if (idler_seen)
                stack.set(f, 1, jy, jx);

            if (signal_seen) {
                int kx = 0;
                int ky = 0;
                if (separable) {
                    // Row-major inverse CDF of the product distribution:
                    // the y digit first, then the remainder places x.
                    const double ty = u_place * cond_cdf_y(n, jy);
                    auto col_y = cond_cdf_y.col(jy);
                    ky = static_cast<int>(
                             std::upper_bound(col_y.data() + 1, col_y.data() + n + 1,
                                              ty) -
                             (col_y.data() + 1));
                    ky = std::min(ky, n - 1);
                    const double wy = cond_cdf_y(ky + 1, jy) - cond_cdf_y(ky, jy);
                    double frac = (wy > 0.0) ? (ty - cond_cdf_y(ky, jy)) / wy : 0.0;
                    frac = std::clamp(frac, 0.0, 1.0 - 1e-16);
                    const double tx = frac * cond_cdf_x(n, jx);
                    auto col_x = cond_cdf_x.col(jx);
                    kx = static_cast<int>(
                             std::upper_bound(col_x.data() + 1, col_x.data() + n + 1,
                                              tx) -
                             (col_x.data() + 1));
                    kx = std::min(kx, n - 1);
                } else {
                    for (int i = 0; i < n; ++i)
                        wyf(i) = model.w_y((n - i) % n, jy);
                    for (int j = 0; j < n; ++j)
                        wxf(j) = model.w_x((n - j) % n, jx);
                    for (int i = 0; i < n; ++i) {
                        const std::complex<double> a = wyf(i);
                        for (int j = 0; j < n; ++j)
                            cond_buf(i, j) = (*train_flip)(i, j) * (a * wxf(j));
                    }
                    const ComplexImage spec = centered_dft(cond_buf, -1);
                    const std::complex<double>* data = spec.data();
                    const int count = n * n;
                    double total = 0.0;
                    for (int i = 0; i < count; ++i)
                        total += std::norm(data[i]);
                    const double target = u_place * total;
                    int flat = 0;
                    double acc = 0.0;
                    while (flat < count - 1) {
                        acc += std::norm(data[flat]);
                        if (acc > target)
                            break;
                        ++flat;
                    }
                    ky = flat / n;
                    kx = flat % n;
                }
                stack.set(f, 0, ky, kx);
                if (idler_seen)
                    ++coincidences;
            }
        }

        if (config.spurious > 0.0) {
            for (int plane = 0; plane < 2; ++plane)
                for (int y = 0; y < n; ++y)
                    for (int x = 0; x < n; ++x)
                        if (rng.uniform() < config.spurious)
                            stack.set(f, plane, y, x);
        }
        detected[static_cast<std::size_t>(f)] = coincidences;
    });

    for (int f = 0; f < config.frames; ++f) {
        stack.generated_pairs_total += generated[static_cast<std::size_t>(f)];
        stack.detected_pairs_total += detected[static_cast<std::size_t>(f)];
    }
    return stack;
}

} // namespace specklepair
