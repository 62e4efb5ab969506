#include "specklepair/pipeline.hpp"

#include <array>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "specklepair/errors.hpp"
#include "specklepair/rng.hpp"

namespace specklepair {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

Scenario scenario_from_string(const std::string& name)
{
    if (name == "no_diffuser")
        return Scenario::NoDiffuser;
    if (name == "slm_off")
        return Scenario::SlmOff;
    if (name == "center")
        return Scenario::Center;
    if (name == "offset")
        return Scenario::Offset;
    if (name == "dual")
        return Scenario::Dual;
    throw ConfigError("unknown scenario: " + name);
}

std::string scenario_name(Scenario scenario)
{
    switch (scenario) {
    case Scenario::NoDiffuser:
        return "no_diffuser";
    case Scenario::SlmOff:
        return "slm_off";
    case Scenario::Center:
        return "center";
    case Scenario::Offset:
        return "offset";
    case Scenario::Dual:
        return "dual";
    }
    throw ConfigError("unknown scenario value");
}

namespace {

int scenario_index(Scenario scenario)
{
    return static_cast<int>(scenario);
}

AxisStateConfig axis_config_from(const AxisParams& params)
{
    AxisStateConfig out;
    out.sigma_sum_per_mm = params.u;
    out.sigma_nu_per_mm = params.marginal_width();
    out.sigma_x_mm = params.position_width();
    return out;
}

} // namespace

ExperimentConfig ExperimentConfig::desk()
{
    ExperimentConfig cfg;
    cfg.preset = "desk";
    cfg.grid_n = 128;
    cfg.pitch_mm = 0.01;
    cfg.wavelength_nm = 710.0;
    cfg.focal_mm = 100.0;
    cfg.slm_roi = {32, 32, 64, 64};
    cfg.macropixel = 4;
    cfg.cam_roi = {48, 48, 32, 32};
    cfg.corr_length_mm = 0.08;
    cfg.signal_transmission = 0.22;
    cfg.state_x = axis_config_from(AxisParams::from_sum_and_k(0.89, 20.0));
    cfg.state_y = axis_config_from(AxisParams::from_sum_and_k(0.80, 20.0));
    cfg.n_modes = 64;
    cfg.frames = 200;
    cfg.fill = 0.15;
    cfg.eta_signal = 0.48;
    cfg.eta_idler = 0.48;
    cfg.spurious = 0.005;
    cfg.targets_per_mm = {{3.0, -3.0}};
    return cfg;
}

ExperimentConfig ExperimentConfig::paper()
{
    ExperimentConfig cfg = desk();
    cfg.preset = "paper";
    cfg.grid_n = 512;
    cfg.pitch_mm = 0.005;
    cfg.slm_roi = {128, 128, 256, 256};
    cfg.macropixel = 4;
    cfg.cam_roi = {206, 206, 100, 100};
    cfg.state_x =
        axis_config_from(AxisParams::from_position_and_marginal(0.707, 38.8));
    cfg.state_y =
        axis_config_from(AxisParams::from_position_and_marginal(0.796, 37.0));
    cfg.n_modes = 256;
    cfg.frames = 500;
    return cfg;
}

ExperimentConfig ExperimentConfig::preset_by_name(const std::string& name)
{
    if (name == "desk")
        return desk();
    if (name == "paper")
        return paper();
    throw ConfigError("unknown preset: " + name);
}

BenchGeometry ExperimentConfig::geometry() const
{
    BenchGeometry geom;
    geom.grid_n = grid_n;
    geom.pitch_mm = pitch_mm;
    geom.slm_roi = slm_roi;
    geom.macropixel = macropixel;
    geom.cam_roi = cam_roi;
    geom.wavelength_nm = wavelength_nm;
    geom.focal_mm = focal_mm;
    return geom;
}

AxisParams ExperimentConfig::axis_x() const
{
    return AxisParams::from_sum_and_marginal(state_x.sigma_sum_per_mm,
                                             state_x.sigma_nu_per_mm);
}

AxisParams ExperimentConfig::axis_y() const
{
    return AxisParams::from_sum_and_marginal(state_y.sigma_sum_per_mm,
                                             state_y.sigma_nu_per_mm);
}

DetectorConfig ExperimentConfig::detector(Scenario scenario) const
{
    DetectorConfig det;
    det.eta_signal = eta_signal;
    det.eta_idler = eta_idler;
    det.signal_transmission =
        (scenario == Scenario::NoDiffuser) ? 1.0 : signal_transmission;
    det.fill = fill;
    det.spurious = spurious;
    det.frames = frames;
    det.seed = derive_seed(seed, seed_tag::frame,
                           static_cast<std::uint64_t>(scenario_index(scenario)));
    return det;
}

void ExperimentConfig::validate() const
{
    geometry().validate();
    const auto check_axis = [](const AxisStateConfig& axis, const char* tag) {
        if (!(axis.sigma_sum_per_mm > 0.0) || !(axis.sigma_nu_per_mm > 0.0))
            throw ConfigError(std::string("state ") + tag +
                              ": widths must be positive");
        const AxisParams params = AxisParams::from_sum_and_marginal(
            axis.sigma_sum_per_mm, axis.sigma_nu_per_mm);
        if (axis.sigma_x_mm > 0.0 &&
            std::abs(params.position_width() - axis.sigma_x_mm) >
                0.01 * axis.sigma_x_mm)
            throw ConfigError(std::string("state ") + tag +
                              ": sigma_x_mm disagrees with the other widths");
    };
    check_axis(state_x, "x");
    check_axis(state_y, "y");
    if (n_modes <= 0 || n_modes > grid_n)
        throw ConfigError("n_modes must lie in [1, grid_n]");
    if (frames < 2)
        throw ConfigError("frames must be at least 2");
    if (!(corr_length_mm > 0.0))
        throw ConfigError("corr_length_mm must be positive");
    if (analysis.search_half_px < 1 || analysis.window_half_px < 1 ||
        analysis.guard_px < 0 ||
        analysis.annulus_outer_px <=
            analysis.window_half_px + analysis.guard_px)
        throw ConfigError("analysis window layout is inconsistent");
}

namespace {

ordered_json roi_to_json(const RoiSpec& roi)
{
    return ordered_json{{"x0", roi.x0}, {"y0", roi.y0}, {"w", roi.w}, {"h", roi.h}};
}

RoiSpec roi_from_json(const ordered_json& j)
{
    return {j.at("x0").get<int>(), j.at("y0").get<int>(), j.at("w").get<int>(),
            j.at("h").get<int>()};
}

ordered_json axis_to_json(const AxisStateConfig& axis)
{
    return ordered_json{{"sigma_sum_mm_inv", axis.sigma_sum_per_mm},
                        {"sigma_nu_mm_inv", axis.sigma_nu_per_mm},
                        {"sigma_x_mm", axis.sigma_x_mm}};
}

AxisStateConfig axis_from_json(const ordered_json& j)
{
    AxisStateConfig axis;
    axis.sigma_sum_per_mm = j.at("sigma_sum_mm_inv").get<double>();
    axis.sigma_nu_per_mm = j.at("sigma_nu_mm_inv").get<double>();
    axis.sigma_x_mm = j.at("sigma_x_mm").get<double>();
    return axis;
}

} // namespace

std::string ExperimentConfig::to_json() const
{
    ordered_json j;
    j["preset"] = preset;
    j["seed"] = seed;
    j["output_dir"] = output_dir;
    j["geometry"] = ordered_json{{"grid_n", grid_n},
                                 {"pitch_mm", pitch_mm},
                                 {"wavelength_nm", wavelength_nm},
                                 {"focal_mm", focal_mm},
                                 {"slm_roi_px", roi_to_json(slm_roi)},
                                 {"macropixel_px", macropixel},
                                 {"cam_roi_px", roi_to_json(cam_roi)}};
    j["medium"] = ordered_json{{"corr_length_mm", corr_length_mm},
                               {"signal_transmission", signal_transmission}};
    j["state"] = ordered_json{{"x", axis_to_json(state_x)},
                              {"y", axis_to_json(state_y)},
                              {"n_modes", n_modes}};
    j["detector"] = ordered_json{{"frames", frames},
                                 {"fill", fill},
                                 {"eta_signal", eta_signal},
                                 {"eta_idler", eta_idler},
                                 {"spurious", spurious}};
    ordered_json targets = ordered_json::array();
    for (const auto& t : targets_per_mm)
        targets.push_back(ordered_json::array({t[0], t[1]}));
    j["targets_mm_inv"] = targets;
    j["analysis"] = ordered_json{{"search_half_px", analysis.search_half_px},
                                 {"window_half_px", analysis.window_half_px},
                                 {"guard_px", analysis.guard_px},
                                 {"annulus_outer_px", analysis.annulus_outer_px}};
    return j.dump(2) + "\n";
}

ExperimentConfig ExperimentConfig::from_json(const std::string& text)
{
    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config parse failure: ") + e.what());
    }
    try {
        ExperimentConfig cfg;
        cfg.preset = j.at("preset").get<std::string>();
        cfg.seed = j.at("seed").get<std::uint64_t>();
        cfg.output_dir = j.at("output_dir").get<std::string>();
        const auto& geom = j.at("geometry");
        cfg.grid_n = geom.at("grid_n").get<int>();
        cfg.pitch_mm = geom.at("pitch_mm").get<double>();
        cfg.wavelength_nm = geom.at("wavelength_nm").get<double>();
        cfg.focal_mm = geom.at("focal_mm").get<double>();
        cfg.slm_roi = roi_from_json(geom.at("slm_roi_px"));
        cfg.macropixel = geom.at("macropixel_px").get<int>();
        cfg.cam_roi = roi_from_json(geom.at("cam_roi_px"));
        const auto& medium = j.at("medium");
        cfg.corr_length_mm = medium.at("corr_length_mm").get<double>();
        cfg.signal_transmission = medium.at("signal_transmission").get<double>();
        const auto& state = j.at("state");
        cfg.state_x = axis_from_json(state.at("x"));
        cfg.state_y = axis_from_json(state.at("y"));
        cfg.n_modes = state.at("n_modes").get<int>();
        const auto& det = j.at("detector");
        cfg.frames = det.at("frames").get<int>();
        cfg.fill = det.at("fill").get<double>();
        cfg.eta_signal = det.at("eta_signal").get<double>();
        cfg.eta_idler = det.at("eta_idler").get<double>();
        cfg.spurious = det.at("spurious").get<double>();
        cfg.targets_per_mm.clear();
        for (const auto& t : j.at("targets_mm_inv"))
            cfg.targets_per_mm.push_back({t.at(0).get<double>(), t.at(1).get<double>()});
        const auto& analysis = j.at("analysis");
        cfg.analysis.search_half_px = analysis.at("search_half_px").get<int>();
        cfg.analysis.window_half_px = analysis.at("window_half_px").get<int>();
        cfg.analysis.guard_px = analysis.at("guard_px").get<int>();
        cfg.analysis.annulus_outer_px =
            analysis.at("annulus_outer_px").get<int>();
        return cfg;
    } catch (const ordered_json::exception& e) {
        throw ConfigError(std::string("config field failure: ") + e.what());
    }
}

ExperimentConfig ExperimentConfig::load(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return from_json(buffer.str());
}

void ExperimentConfig::save(const std::string& path) const
{
    std::ofstream out(path, std::ios::trunc);
    if (!out)
        throw IoError("cannot create " + path);
    out << to_json();
    if (!out)
        throw IoError("short write to " + path);
}

void ExperimentConfig::apply_env_overrides()
{
    if (const char* seed_env = std::getenv("SPECKLEPAIR_SEED")) {
        try {
            seed = std::stoull(seed_env);
        } catch (const std::exception&) {
            throw ConfigError("SPECKLEPAIR_SEED is not an integer");
        }
    }
    if (const char* dir_env = std::getenv("SPECKLEPAIR_OUTPUT_DIR"))
        output_dir = dir_env;
}

namespace {

class StageTimer {
public:
    explicit StageTimer(std::vector<std::pair<std::string, std::string>>& sink)
        : sink_(sink)
    {
    }

    template <typename Fn> auto run(const std::string& stage, Fn&& fn)
    {
        const auto start = std::chrono::steady_clock::now();
        try {
            if constexpr (std::is_void_v<decltype(fn())>) {
                fn();
                finish(stage, start);
            } else {
                auto value = fn();
                finish(stage, start);
                return value;
            }
        } catch (const ConfigError&) {
            throw;
        } catch (const Error& e) {
            throw Error("stage " + stage + ": " + e.what());
        } catch (const std::exception& e) {
            throw Error("stage " + stage + ": " + e.what());
        }
    }

private:
    void finish(const std::string& stage,
                std::chrono::steady_clock::time_point start)
    {
        const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
            std::chrono::steady_clock::now() - start);
        timings_.emplace_back("time_" + stage + "_ms",
                              std::to_string(elapsed.count()));
    }

    std::vector<std::pair<std::string, std::string>>& sink_;
    std::vector<std::pair<std::string, std::string>> timings_;

public:
    void flush_timings()
    {
        for (auto& entry : timings_)
            sink_.push_back(std::move(entry));
        timings_.clear();
    }
};

std::string format_double(double value)
{
    char buffer[64];
    std::snprintf(buffer, sizeof(buffer), "%.17g", value);
    return buffer;
}

std::string format_hash(std::uint64_t hash)
{
    char buffer[32];
    std::snprintf(buffer, sizeof(buffer), "%016llx",
                  static_cast<unsigned long long>(hash));
    return buffer;
}

RealImage phase_preview(const RealImage& phase)
{
    return (phase + M_PI) / (2.0 * M_PI);
}

} // namespace

RunReport run_experiment(const ExperimentConfig& config, Scenario scenario)
{
    config.validate();
    const bool with_diffuser = scenario != Scenario::NoDiffuser;
    const bool with_mask = scenario == Scenario::Center ||
                           scenario == Scenario::Offset ||
                           scenario == Scenario::Dual;
    if ((scenario == Scenario::Offset || scenario == Scenario::Dual) &&
        config.targets_per_mm.empty())
        throw ConfigError("scenario needs at least one steering target");

    const BenchGeometry geom = config.geometry();
    const fs::path dir = fs::path(config.output_dir) / scenario_name(scenario);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec)
        throw IoError("cannot create output directory " + dir.string());

    RunReport report;
    report.directory = dir.string();
    report.scenario = scenario;

    std::vector<std::pair<std::string, std::string>> manifest;
    std::vector<std::pair<std::string, std::string>> artifacts;
    StageTimer timer(manifest);
    manifest.emplace_back("format_version", "1");
    manifest.emplace_back("tool_version", "0.1.0");
    manifest.emplace_back("preset", config.preset);
    manifest.emplace_back("scenario", scenario_name(scenario));
    manifest.emplace_back("seed", std::to_string(config.seed));

    auto record = [&](const std::string& name, const fs::path& path) {
        artifacts.emplace_back("hash_" + name, format_hash(fnv1a64_file(path.string())));
    };

    DiffuserScreen screen;
    if (with_diffuser) {
        timer.run("screen", [&] {
            screen = make_diffuser(config.grid_n, config.pitch_mm,
                                   config.corr_length_mm,
                                   derive_seed(config.seed, seed_tag::screen, 0));
            write_screen((dir / "screen.bin").string(), screen);
            write_pgm((dir / "screen.pgm").string(), phase_preview(screen.phase));
        });
        manifest.emplace_back("screen_seed", std::to_string(screen.seed));
        record("screen_bin", dir / "screen.bin");
    }

    TransmissionMatrix tm;
    std::vector<PhaseMask> masks;
    if (with_mask) {
        timer.run("tm", [&] {
            tm = measure_tm(geom, &screen, ProbeBasis::Hadamard,
                            ReferencePolicy::Border);
            write_tm((dir / "tm.bin").string(), tm);
        });
        record("tm_bin", dir / "tm.bin");

        timer.run("mask", [&] {
            std::vector<int> indices;
            if (scenario == Scenario::Center || scenario == Scenario::Dual)
                indices.push_back(target_to_output_index(geom, 0.0, 0.0));
            if (scenario == Scenario::Offset || scenario == Scenario::Dual)
                indices.push_back(target_to_output_index(
                    geom, config.targets_per_mm[0][0], config.targets_per_mm[0][1]));
            // Multi-spot runs time-multiplex one single-target mask per
            // spot (frame f uses masks[f % m]).  That splits the detected
            // flux evenly between the spots no matter how the screen
            // weights the individual matrix rows, which a one-shot
            // combined mask cannot guarantee on smooth screens.
            for (int index : indices)
                masks.push_back(conjugation_mask(tm, {index}));
            write_mask((dir / "mask.bin").string(), masks[0], config.pitch_mm);
            write_pgm((dir / "mask.pgm").string(), phase_preview(masks[0].phases));
            if (masks.size() > 1) {
                write_mask((dir / "mask2.bin").string(), masks[1],
                           config.pitch_mm);
                write_pgm((dir / "mask2.pgm").string(),
                          phase_preview(masks[1].phases));
            }
            for (std::size_t i = 0; i < indices.size(); ++i) {
                // Per-spot enhancement is a time average over the mask
                // cycle: a spot is driven by its own mask 1/m of the time
                // and sits near baseline the rest.
                double mean = 0.0;
                for (const PhaseMask& cycled : masks)
                    mean += enhancement(geom, &screen, cycled, indices[i])
                                .enhancement;
                mean /= static_cast<double>(masks.size());
                report.enhancements.push_back(mean);
                manifest.emplace_back("enhancement_" + std::to_string(i),
                                      format_double(mean));
            }
        });
        record("mask_bin", dir / "mask.bin");
        if (masks.size() > 1)
            record("mask2_bin", dir / "mask2.bin");
    }

    BiphotonModel model = timer.run("model", [&] {
        return build_biphoton_model({config.axis_x(), config.axis_y()},
                                    config.grid_n, config.pitch_mm,
                                    config.n_modes);
    });
    manifest.emplace_back("captured", format_double(model.captured()));

    timer.run("analytic", [&] {
        CorrelationMap analytic;
        if (masks.empty()) {
            ComplexImage t;
            if (with_diffuser)
                t = train_transmittance(geom, nullptr, &screen);
            analytic.map = analytic_sum_map(model, t);
        } else {
            // Time-multiplexed masks contribute equal shares to the
            // expected map; one mask reduces to its plain map.
            RealImage total;
            for (std::size_t i = 0; i < masks.size(); ++i) {
                const ComplexImage t = train_transmittance(
                    geom, &masks[i], with_diffuser ? &screen : nullptr);
                const RealImage part = analytic_sum_map(model, t);
                if (i == 0)
                    total = part;
                else
                    total += part;
            }
            analytic.map = total / static_cast<double>(masks.size());
        }
        analytic.n = config.grid_n;
        analytic.freq_pitch = geom.freq_pitch();
        analytic.frames_used = 0;
        analytic.normalization = Normalization::Raw;
        analytic.subtraction = Subtraction::None;
        analytic.lambda_pairs = 0.0;
        write_corr((dir / "analytic.bin").string(), analytic);
    });
    record("analytic_bin", dir / "analytic.bin");

    const FrameStack stack = timer.run("frames", [&] {
        return sample_frames(model, geom, masks,
                             with_diffuser ? &screen : nullptr,
                             config.detector(scenario));
    });
    timer.run("frames_io", [&] {
        write_frames((dir / "frames.bin").string(), stack);
    });
    report.lambda_pairs = stack.lambda_pairs;
    manifest.emplace_back("lambda_pairs", format_double(stack.lambda_pairs));
    manifest.emplace_back("pair_survival",
                          format_double(pair_survival_rate(stack.config)));
    manifest.emplace_back("generated_pairs_total",
                          std::to_string(stack.generated_pairs_total));
    manifest.emplace_back("detected_pairs_total",
                          std::to_string(stack.detected_pairs_total));
    record("frames_bin", dir / "frames.bin");

    const CorrelationMap map = timer.run("correlate", [&] {
        CorrelationMap built = correlate(stack);
        write_corr((dir / "corr.bin").string(), built);
        RealImage preview = built.map.max(0.0);
        write_pgm((dir / "corr.pgm").string(), preview);
        return built;
    });
    record("corr_bin", dir / "corr.bin");

    timer.run("stats", [&] {
        PeakStatsOptions options;
        options.search_half = config.analysis.search_half_px;
        options.window_half = config.analysis.window_half_px;
        options.guard = config.analysis.guard_px;
        options.annulus_outer = config.analysis.annulus_outer_px;
        report.stats = peak_stats(map, options);
        write_stats_csv((dir / "stats.csv").string(), report.stats);
    });
    record("stats_csv", dir / "stats.csv");

    report.stats_path = (dir / "stats.csv").string();
    report.corr_path = (dir / "corr.bin").string();

    config.save((dir / "config.json").string());
    record("config_json", dir / "config.json");

    for (auto& entry : artifacts)
        manifest.push_back(std::move(entry));
    timer.flush_timings();
    write_manifest((dir / "run.manifest").string(), manifest);
    return report;
}

CompareReport compare_runs(const std::string& dir_a, const std::string& dir_b)
{
    const CorrelationMap map_a =
        read_corr((fs::path(dir_a) / "corr.bin").string());
    const CorrelationMap map_b =
        read_corr((fs::path(dir_b) / "corr.bin").string());
    if (map_a.n != map_b.n ||
        std::abs(map_a.freq_pitch - map_b.freq_pitch) >
            1e-12 * std::abs(map_b.freq_pitch))
        throw DimensionError("compare_runs: geometry mismatch");

    CompareReport report;
    report.a = read_stats_csv((fs::path(dir_a) / "stats.csv").string());
    report.b = read_stats_csv((fs::path(dir_b) / "stats.csv").string());
    report.width_ratio_x =
        (report.b.sigma_x != 0.0) ? report.a.sigma_x / report.b.sigma_x : 0.0;
    report.width_ratio_y =
        (report.b.sigma_y != 0.0) ? report.a.sigma_y / report.b.sigma_y : 0.0;
    report.amplitude_ratio =
        (report.b.amplitude != 0.0) ? report.a.amplitude / report.b.amplitude
                                    : 0.0;
    report.centroid_distance =
        std::hypot(report.a.centroid_x - report.b.centroid_x,
                   report.a.centroid_y - report.b.centroid_y);
    return report;
}

} // namespace specklepair
