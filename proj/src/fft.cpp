#include "specklepair/fft.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <tuple>

#include <fftw3.h>

#include "specklepair/errors.hpp"

namespace specklepair {

namespace {

// FFTW planning is not thread-safe; executing a cached plan on fresh
// buffers is. Plans use FFTW_ESTIMATE so the chosen algorithm (and hence
// the exact floating-point result) does not depend on runtime timings.
std::mutex g_plan_mutex;
std::map<std::tuple<int, int, int>, fftw_plan> g_plans;

fftw_plan get_plan(int nx, int ny, int sign)
{
    std::lock_guard<std::mutex> lock(g_plan_mutex);
    const auto key = std::make_tuple(nx, ny, sign);
    auto it = g_plans.find(key);
    if (it != g_plans.end())
        return it->second;

    const std::size_t n = static_cast<std::size_t>(nx) * (ny > 0 ? ny : 1);
    fftw_complex* a = fftw_alloc_complex(n);
    fftw_complex* b = fftw_alloc_complex(n);
    fftw_plan plan;
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    if (ny > 0)
        plan = fftw_plan_dft_2d(ny, nx, a, b, sign, flags);
    else
        plan = fftw_plan_dft_1d(nx, a, b, sign, flags);
    fftw_free(a);
    fftw_free(b);
    if (!plan)
        throw Error("fftw plan creation failed");
    g_plans.emplace(key, plan);
    return plan;
}

// Per-dimension constant of the centered transform, exp(-i*pi*N/2) for the
// forward kernel; real (+1 or -1) for even N and independent of direction.
double centering_constant(int n)
{
    return (n % 4 == 0) ? 1.0 : -1.0;
}

} // namespace

ComplexImage centered_dft(const ComplexImage& in, int sign)
{
    const int ny = static_cast<int>(in.rows());
    const int nx = static_cast<int>(in.cols());
    if (nx <= 0 || ny <= 0 || nx % 2 != 0 || ny % 2 != 0)
        throw DimensionError("centered_dft: grid sizes must be positive and even");
    if (sign != -1 && sign != 1)
        throw ValueError("centered_dft: sign must be -1 or +1");

    ComplexImage tmp(ny, nx);
    for (int i = 0; i < ny; ++i)
        for (int j = 0; j < nx; ++j)
            tmp(i, j) = ((i + j) & 1) ? -in(i, j) : in(i, j);

    ComplexImage out(ny, nx);
    fftw_plan plan = get_plan(nx, ny, sign);
    fftw_execute_dft(plan,
                     reinterpret_cast<fftw_complex*>(tmp.data()),
                     reinterpret_cast<fftw_complex*>(out.data()));

    const double scale = centering_constant(nx) * centering_constant(ny) /
                         std::sqrt(static_cast<double>(nx) * ny);
    for (int i = 0; i < ny; ++i)
        for (int j = 0; j < nx; ++j)
            out(i, j) *= ((i + j) & 1) ? -scale : scale;
    return out;
}

ComplexImage raw_dft(const ComplexImage& in, int sign)
{
    const int ny = static_cast<int>(in.rows());
    const int nx = static_cast<int>(in.cols());
    if (nx <= 0 || ny <= 0 || nx % 2 != 0 || ny % 2 != 0)
        throw DimensionError("raw_dft: grid sizes must be positive and even");
    if (sign != -1 && sign != 1)
        throw ValueError("raw_dft: sign must be -1 or +1");

    ComplexImage tmp = in;
    ComplexImage out(ny, nx);
    fftw_plan plan = get_plan(nx, ny, sign);
    fftw_execute_dft(plan,
                     reinterpret_cast<fftw_complex*>(tmp.data()),
                     reinterpret_cast<fftw_complex*>(out.data()));
    return out;
}

ComplexVector centered_dft_1d(const ComplexVector& in, int sign)
{
    const int n = static_cast<int>(in.size());
    if (n <= 0 || n % 2 != 0)
        throw DimensionError("centered_dft_1d: length must be positive and even");
    if (sign != -1 && sign != 1)
        throw ValueError("centered_dft_1d: sign must be -1 or +1");

    ComplexVector tmp(n);
    for (int i = 0; i < n; ++i)
        tmp(i) = (i & 1) ? -in(i) : in(i);

    ComplexVector out(n);
    fftw_plan plan = get_plan(n, 0, sign);
    fftw_execute_dft(plan,
                     reinterpret_cast<fftw_complex*>(tmp.data()),
                     reinterpret_cast<fftw_complex*>(out.data()));

    const double scale = centering_constant(n) / std::sqrt(static_cast<double>(n));
    for (int i = 0; i < n; ++i)
        out(i) *= (i & 1) ? -scale : scale;
    return out;
}

void clear_plan_cache()
{
    std::lock_guard<std::mutex> lock(g_plan_mutex);
    for (auto& [key, plan] : g_plans)
        fftw_destroy_plan(plan);
    g_plans.clear();
}

} // namespace specklepair
