#pragma once

#include <string>
#include <vector>

#include "specklepair/io.hpp"

namespace specklepair {

enum class Scenario { NoDiffuser, SlmOff, Center, Offset, Dual };

Scenario scenario_from_string(const std::string& name);
std::string scenario_name(Scenario scenario);

struct AxisStateConfig {
    double sigma_sum_per_mm = 0.0; // sum-coordinate momentum width u
    double sigma_nu_per_mm = 0.0;  // single-photon momentum marginal (1/e field)
    double sigma_x_mm = 0.0;       // single-photon position marginal (1/e field)
};

struct AnalysisConfig {
    int search_half_px = 5;
    int window_half_px = 3;
    int guard_px = 2;
    int annulus_outer_px = 9;
};

struct ExperimentConfig {
    std::string preset = "desk";
    std::uint64_t seed = 20260825;
    std::string output_dir = "out";

    // geometry
    int grid_n = 0;
    double pitch_mm = 0.0;
    double wavelength_nm = 0.0;
    double focal_mm = 0.0;
    RoiSpec slm_roi;
    int macropixel = 1;
    RoiSpec cam_roi;

    // medium
    double corr_length_mm = 0.0;
    double signal_transmission = 1.0;

    // state
    AxisStateConfig state_x;
    AxisStateConfig state_y;
    int n_modes = 0;

    // detector
    int frames = 0;
    double fill = 0.15;
    double eta_signal = 0.48;
    double eta_idler = 0.48;
    double spurious = 0.005;

    std::vector<std::array<double, 2>> targets_per_mm;
    AnalysisConfig analysis;

    static ExperimentConfig desk();
    static ExperimentConfig paper();
    static ExperimentConfig preset_by_name(const std::string& name);

    BenchGeometry geometry() const;
    AxisParams axis_x() const;
    AxisParams axis_y() const;
    DetectorConfig detector(Scenario scenario) const;
    void validate() const;

    std::string to_json() const;
    static ExperimentConfig from_json(const std::string& text);
    static ExperimentConfig load(const std::string& path);
    void save(const std::string& path) const;

    // SPECKLEPAIR_SEED and SPECKLEPAIR_OUTPUT_DIR, when set, replace the
    // corresponding fields.
    void apply_env_overrides();
};

struct RunReport {
    std::string directory;
    Scenario scenario = Scenario::NoDiffuser;
    PeakStats stats;
    double lambda_pairs = 0.0;
    std::vector<double> enhancements; // focusing check, one per target
    std::string stats_path;
    std::string corr_path;
};

// Full pipeline for one scenario: screen synthesis, TM measurement and
// mask synthesis where the scenario calls for them, a focusing check, the
// analytic pair distribution, frame acquisition, correlation and peak
// statistics. Artifacts land in <output_dir>/<scenario>/.
RunReport run_experiment(const ExperimentConfig& config, Scenario scenario);

struct CompareReport {
    PeakStats a;
    PeakStats b;
    double width_ratio_x = 0.0; // a.sigma_x / b.sigma_x
    double width_ratio_y = 0.0;
    double amplitude_ratio = 0.0;
    double centroid_distance = 0.0;
};

// Side-by-side peak statistics of two run directories (same geometry).
CompareReport compare_runs(const std::string& dir_a, const std::string& dir_b);

} // namespace specklepair
