#pragma once

#include <cstdint>
#include <vector>

#include "specklepair/medium.hpp"

namespace specklepair {

enum class ProbeBasis : unsigned char { Canonical = 0, Hadamard = 1 };

// Reference arm used for phase-shifting interferometry. Border: the
// unmodulated plane outside the SLM region co-propagates through the bench
// and interferes with the probe at the camera. Ideal: a synthetic unit
// reference at every camera pixel (calibration aid).
enum class ReferencePolicy : unsigned char { Border = 0, Ideal = 1 };

struct TransmissionMatrix {
    ComplexMatrix t; // n_outputs x n_inputs, row-major pixel/macropixel order
    BenchGeometry geom;
    ProbeBasis basis = ProbeBasis::Canonical;
    ReferencePolicy policy = ReferencePolicy::Border;
    std::uint64_t screen_seed = 0;
};

// Four-step phase-shifting reconstruction: from intensities of
// |R + e^{i a} S|^2 at a = 0, pi/2, pi, 3pi/2 recover conj(R) * S exactly.
std::complex<double> reconstruct_4phase(double i0, double i_half_pi,
                                        double i_pi, double i_3half_pi);
ComplexImage reconstruct_4phase(const RealImage& i0, const RealImage& i_half_pi,
                                const RealImage& i_pi,
                                const RealImage& i_3half_pi);

// Sequency-ordered Walsh vector: row k of the Sylvester-Hadamard matrix
// permuted to sequency order; entries are +1/-1. m must be a power of two.
std::vector<double> walsh_vector(int m, int k);

// Probe illumination: amplitude[k] on SLM macropixel k, zero elsewhere.
FieldGrid make_probe_field(const BenchGeometry& geom,
                           const std::vector<double>& amplitudes);

// Measure the bench transmission matrix with 4-step phase shifting over
// the chosen probe basis. One forward pass per probe plus one for the
// reference arm; intensities are evaluated on the camera ROI only.
TransmissionMatrix measure_tm(const BenchGeometry& geom,
                              const DiffuserScreen* screen,
                              ProbeBasis basis = ProbeBasis::Hadamard,
                              ReferencePolicy policy = ReferencePolicy::Border);

// Map a target in frequency coordinates (1/mm) to a camera-ROI output
// index; throws if the target falls outside the camera region.
int target_to_output_index(const BenchGeometry& geom, double nu_x_per_mm,
                           double nu_y_per_mm);

// Phase-conjugation mask for one or more camera targets: macropixel k gets
// arg of the weighted sum of conjugated matrix entries over the targets.
// Weights default to one per target. Each measured row is normalized and
// phase-anchored before weighting, so the combination depends only on the
// row's direction, never on its arbitrary reference-arm factor; a single
// target with default weight keeps the raw conjugated phases.
PhaseMask conjugation_mask(const TransmissionMatrix& tm,
                           const std::vector<int>& output_indices,
                           const std::vector<std::complex<double>>& weights = {});

struct EnhancementResult {
    double focused_intensity = 0.0;
    double baseline_mean = 0.0;
    double enhancement = 0.0;
};

// Focus quality at one camera pixel: intensity with the mask over the mean
// camera-ROI intensity without it, both under uniform illumination
// confined to the SLM region.
EnhancementResult enhancement(const BenchGeometry& geom,
                              const DiffuserScreen* screen,
                              const PhaseMask& mask, int target_index);

} // namespace specklepair
