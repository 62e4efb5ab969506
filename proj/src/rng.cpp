#include "specklepair/rng.hpp"

#include <cmath>

#include "specklepair/errors.hpp"

namespace specklepair {

double Rng::normal()
{
    if (have_spare_) {
        have_spare_ = false;
        return spare_;
    }
    // u1 in (0, 1]: avoids log(0).
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double t = 2.0 * M_PI * u2;
    spare_ = r * std::sin(t);
    have_spare_ = true;
    return r * std::cos(t);
}

long long Rng::poisson(double mean)
{
    if (mean < 0.0 || !std::isfinite(mean))
        throw ValueError("poisson: mean must be finite and non-negative");
    if (mean == 0.0)
        return 0;

    if (mean < 10.0) {
        // Knuth product-of-uniforms.
        const double limit = std::exp(-mean);
        long long k = 0;
        double prod = uniform();
        while (prod > limit) {
            ++k;
            prod *= uniform();
        }
        return k;
    }

    // PTRD (Hormann 1993), valid for mean >= 10.
    const double smu = std::sqrt(mean);
    const double b = 0.931 + 2.53 * smu;
    const double a = -0.059 + 0.02483 * b;
    const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    const double v_r = 0.9277 - 3.6224 / (b - 2.0);

    for (;;) {
        double u = uniform() - 0.5;
        double v = uniform();
        const double us = 0.5 - std::fabs(u);
        const double kf = std::floor((2.0 * a / us + b) * u + mean + 0.43);
        if (us >= 0.07 && v <= v_r)
            return static_cast<long long>(kf);
        if (kf < 0.0 || (us < 0.013 && v > us))
            continue;
        const double k = kf;
        const double lhs = std::log(v * inv_alpha / (a / (us * us) + b));
        const double rhs = k * std::log(mean) - mean - std::lgamma(k + 1.0);
        if (lhs <= rhs)
            return static_cast<long long>(kf);
    }
}

} // namespace specklepair
