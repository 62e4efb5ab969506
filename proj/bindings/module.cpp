// Python bindings: a thin layer over the core operations. Arrays cross the
// boundary as NumPy arrays via Eigen; heavier orchestration stays in the CLI.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "specklepair/biphoton.hpp"
#include "specklepair/fft.hpp"
#include "specklepair/field.hpp"
#include "specklepair/medium.hpp"
#include "specklepair/probe.hpp"

namespace py = pybind11;
namespace sp = specklepair;

PYBIND11_MODULE(_specklepair, m)
{
    m.doc() = "Wave-optics core: centered transforms, diffusers, "
              "holographic reconstruction, Schmidt analysis";

    m.def("version", [] { return std::string("0.1.0"); });

    m.def(
        "centered_dft",
        [](const sp::ComplexImage& values, bool forward) {
            return sp::centered_dft(values, forward ? -1 : +1);
        },
        py::arg("values"), py::arg("forward") = true,
        "Unitary centered 2-D discrete Fourier transform");

    m.def(
        "fourier_2f",
        [](const sp::ComplexImage& values, double pitch_mm,
           double wavelength_nm, double focal_mm, bool to_frequency) {
            sp::FieldGrid field;
            field.values = values;
            field.pitch = pitch_mm;
            field.domain =
                to_frequency ? sp::Domain::Position : sp::Domain::Frequency;
            field.wavelength_nm = wavelength_nm;
            const sp::FieldGrid out = sp::fourier_2f(field, focal_mm);
            return py::make_tuple(out.values, out.pitch);
        },
        py::arg("values"), py::arg("pitch_mm"), py::arg("wavelength_nm") = 710.0,
        py::arg("focal_mm") = 100.0, py::arg("to_frequency") = true,
        "2f lens transform; returns (values, output_pitch)");

    m.def(
        "make_diffuser",
        [](int n, double pitch_mm, double corr_length_mm, std::uint64_t seed) {
            return sp::make_diffuser(n, pitch_mm, corr_length_mm, seed).phase;
        },
        py::arg("n"), py::arg("pitch_mm"), py::arg("corr_length_mm"),
        py::arg("seed"),
        "Random thin-diffuser phase screen with the given correlation length");

    m.def(
        "reconstruct_4phase",
        [](const sp::RealImage& i0, const sp::RealImage& i90,
           const sp::RealImage& i180, const sp::RealImage& i270) {
            return sp::reconstruct_4phase(i0, i90, i180, i270);
        },
        py::arg("i0"), py::arg("i90"), py::arg("i180"), py::arg("i270"),
        "Four-step phase-shifting reconstruction of conj(ref) * field");

    m.def("schmidt_number", &sp::schmidt_number, py::arg("sigma_position_mm"),
          py::arg("sigma_marginal_per_mm"),
          "Closed-form Schmidt number pi * sigma_x * sigma_nu");

    m.def(
        "schmidt_spectrum",
        [](double sigma_sum, double k, int n, double pitch_mm, int n_modes) {
            const sp::AxisParams params = sp::AxisParams::from_sum_and_k(sigma_sum, k);
            const sp::AxisSchmidt axis =
                sp::schmidt_decompose_axis(params, n, pitch_mm, n_modes);
            return py::make_tuple(axis.lambdas, axis.captured, axis.k_svd);
        },
        py::arg("sigma_sum"), py::arg("k"), py::arg("n"), py::arg("pitch_mm"),
        py::arg("n_modes"),
        "Discrete Schmidt probabilities for one axis; returns "
        "(lambdas, captured, k_svd)");

    m.def(
        "walsh_vector",
        [](int m, int k) { return sp::walsh_vector(m, k); }, py::arg("m"),
        py::arg("k"), "Sequency-ordered Walsh pattern of length m");
}
