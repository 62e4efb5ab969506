// specklepair — command line front end.
//
// Subcommands:
//   run        full scenario pipeline (screen -> TM -> mask -> frames -> map)
//   config     write a preset configuration file
//   tm         transmission-matrix tools (measure / focus / enhance)
//   acquire    sample photon-count frame stacks
//   biphoton   analytic momentum-sum map for a medium + mask
//   correlate  build the correlation map from a frame stack
//   compare    diff the stats of two finished runs
//
// Exit codes: 0 success, 2 configuration error, 3 stage failure.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "specklepair/biphoton.hpp"
#include "specklepair/correlator.hpp"
#include "specklepair/detector.hpp"
#include "specklepair/errors.hpp"
#include "specklepair/field.hpp"
#include "specklepair/io.hpp"
#include "specklepair/medium.hpp"
#include "specklepair/parallel.hpp"
#include "specklepair/pipeline.hpp"
#include "specklepair/probe.hpp"
#include "specklepair/rng.hpp"

namespace sp = specklepair;
namespace fs = std::filesystem;

namespace {

struct CommonConfig {
    std::string config_path;
    std::string preset = "desk";
    std::optional<std::uint64_t> seed;
    std::optional<std::string> output_dir;

    sp::ExperimentConfig resolve() const
    {
        sp::ExperimentConfig cfg = config_path.empty()
                                       ? sp::ExperimentConfig::preset_by_name(preset)
                                       : sp::ExperimentConfig::load(config_path);
        cfg.apply_env_overrides();
        if (seed)
            cfg.seed = *seed;
        if (output_dir)
            cfg.output_dir = *output_dir;
        return cfg;
    }
};

void add_common_options(CLI::App* cmd, CommonConfig& common)
{
    cmd->add_option("--config", common.config_path,
                    "Configuration file (JSON); overrides --preset")
        ->check(CLI::ExistingFile);
    cmd->add_option("--preset", common.preset,
                    "Built-in parameter set: desk or paper")
        ->check(CLI::IsMember({"desk", "paper"}));
    cmd->add_option_function<std::uint64_t>(
        "--seed", [&common](std::uint64_t v) { common.seed = v; },
        "Override the global seed");
    cmd->add_option_function<std::string>(
        "--output", [&common](const std::string& v) { common.output_dir = v; },
        "Override the output directory");
}

std::vector<std::array<double, 2>>
parse_targets(const std::vector<std::string>& raw)
{
    std::vector<std::array<double, 2>> targets;
    for (const std::string& item : raw) {
        std::string text;
        for (char c : item)
            if (c != '(' && c != ')' && c != ' ')
                text.push_back(c);
        const auto comma = text.find(',');
        if (comma == std::string::npos)
            throw sp::ConfigError("target must look like \"(x,y)\": " + item);
        try {
            targets.push_back({std::stod(text.substr(0, comma)),
                               std::stod(text.substr(comma + 1))});
        } catch (const std::exception&) {
            throw sp::ConfigError("target must hold two numbers: " + item);
        }
    }
    return targets;
}

sp::DiffuserScreen screen_for(const sp::ExperimentConfig& cfg,
                              const std::string& screen_path)
{
    if (!screen_path.empty())
        return sp::read_screen(screen_path);
    return sp::make_diffuser(cfg.grid_n, cfg.pitch_mm, cfg.corr_length_mm,
                             sp::derive_seed(cfg.seed, sp::seed_tag::screen, 0));
}

void print_report(const sp::RunReport& report)
{
    std::printf("scenario       %s\n", sp::scenario_name(report.scenario).c_str());
    std::printf("output         %s\n", report.directory.c_str());
    std::printf("lambda_pairs   %.6g\n", report.lambda_pairs);
    for (std::size_t i = 0; i < report.enhancements.size(); ++i)
        std::printf("enhancement_%zu  %.4g\n", i, report.enhancements[i]);
    const sp::PeakStats& s = report.stats;
    std::printf("peak centroid  (%.4g, %.4g) 1/mm\n", s.centroid_x, s.centroid_y);
    std::printf("peak sigma     (%.4g, %.4g) 1/mm\n", s.sigma_x, s.sigma_y);
    std::printf("peak amplitude %.6g\n", s.amplitude);
    std::printf("peak integral  %.6g\n", s.integral);
    std::printf("peak contrast  %.4g\n", s.contrast);
    std::printf("found          %s\n", s.found ? "yes" : "no");
}

int cmd_run(const CommonConfig& common, const std::vector<std::string>& scenarios)
{
    const sp::ExperimentConfig cfg = common.resolve();
    std::vector<sp::Scenario> order;
    for (const std::string& name : scenarios) {
        if (name == "all") {
            order = {sp::Scenario::NoDiffuser, sp::Scenario::SlmOff,
                     sp::Scenario::Center, sp::Scenario::Offset,
                     sp::Scenario::Dual};
            break;
        }
        order.push_back(sp::scenario_from_string(name));
    }
    for (sp::Scenario scenario : order) {
        const sp::RunReport report = sp::run_experiment(cfg, scenario);
        print_report(report);
        std::printf("\n");
    }
    return 0;
}

int cmd_config_init(const CommonConfig& common, const std::string& out)
{
    const sp::ExperimentConfig cfg = common.resolve();
    cfg.validate();
    cfg.save(out);
    std::printf("wrote %s\n", out.c_str());
    return 0;
}

int cmd_tm_measure(const CommonConfig& common, const std::string& screen_path,
                   const std::string& basis_name,
                   const std::string& policy_name, const std::string& out,
                   const std::string& save_screen)
{
    const sp::ExperimentConfig cfg = common.resolve();
    cfg.validate();
    const sp::BenchGeometry geom = cfg.geometry();
    const sp::DiffuserScreen screen = screen_for(cfg, screen_path);
    if (!save_screen.empty())
        sp::write_screen(save_screen, screen);
    const sp::ProbeBasis basis = (basis_name == "canonical")
                                     ? sp::ProbeBasis::Canonical
                                     : sp::ProbeBasis::Hadamard;
    const sp::ReferencePolicy policy = (policy_name == "ideal")
                                           ? sp::ReferencePolicy::Ideal
                                           : sp::ReferencePolicy::Border;
    const sp::TransmissionMatrix tm = sp::measure_tm(geom, &screen, basis, policy);
    sp::write_tm(out, tm);
    std::printf("wrote %s (%d x %d)\n", out.c_str(),
                static_cast<int>(tm.t.rows()), static_cast<int>(tm.t.cols()));
    return 0;
}

int cmd_tm_focus(const std::string& tm_path,
                 const std::vector<std::string>& raw_targets,
                 const std::vector<std::string>& raw_weights,
                 const std::string& out)
{
    const sp::TransmissionMatrix tm = sp::read_tm(tm_path);
    const auto targets = parse_targets(raw_targets);
    if (targets.empty())
        throw sp::ConfigError("tm focus needs at least one --targets entry");
    std::vector<int> indices;
    for (const auto& t : targets)
        indices.push_back(sp::target_to_output_index(tm.geom, t[0], t[1]));
    // Weights reuse the "(re,im)" pair syntax of --targets.
    std::vector<std::complex<double>> weights;
    for (const auto& w : parse_targets(raw_weights))
        weights.emplace_back(w[0], w[1]);
    const sp::PhaseMask mask = sp::conjugation_mask(tm, indices, weights);
    sp::write_mask(out, mask, tm.geom.pitch_mm);
    sp::write_pgm(out + ".pgm", (mask.phases + M_PI) / (2.0 * M_PI));
    std::printf("wrote %s (%d x %d macropixels)\n", out.c_str(),
                static_cast<int>(mask.phases.rows()),
                static_cast<int>(mask.phases.cols()));
    return 0;
}

int cmd_tm_enhance(const CommonConfig& common, const std::string& screen_path,
                   const std::string& mask_path,
                   const std::vector<std::string>& raw_targets)
{
    const sp::ExperimentConfig cfg = common.resolve();
    cfg.validate();
    const sp::BenchGeometry geom = cfg.geometry();
    const sp::DiffuserScreen screen = screen_for(cfg, screen_path);
    double pitch = 0.0;
    const sp::PhaseMask mask = sp::read_mask(mask_path, &pitch);
    const auto targets = parse_targets(raw_targets);
    if (targets.empty())
        throw sp::ConfigError("tm enhance needs at least one --targets entry");
    for (const auto& t : targets) {
        const int index = sp::target_to_output_index(geom, t[0], t[1]);
        const sp::EnhancementResult result =
            sp::enhancement(geom, &screen, mask, index);
        std::printf("target (%g, %g) 1/mm: enhancement %.4g "
                    "(focus %.6g, background %.6g)\n",
                    t[0], t[1], result.enhancement, result.focused_intensity,
                    result.baseline_mean);
    }
    return 0;
}

int cmd_acquire(const CommonConfig& common, const std::string& scenario_name_in,
                const std::string& mask_path, const std::string& screen_path,
                std::optional<int> frames, std::optional<double> fill,
                const std::string& out)
{
    sp::ExperimentConfig cfg = common.resolve();
    if (frames)
        cfg.frames = *frames;
    if (fill)
        cfg.fill = *fill;
    cfg.validate();
    const sp::Scenario scenario = sp::scenario_from_string(scenario_name_in);
    const bool with_diffuser = scenario != sp::Scenario::NoDiffuser;
    const bool with_mask = scenario == sp::Scenario::Center ||
                           scenario == sp::Scenario::Offset ||
                           scenario == sp::Scenario::Dual;

    std::optional<sp::DiffuserScreen> screen;
    if (with_diffuser || !screen_path.empty())
        screen = screen_for(cfg, screen_path);
    std::optional<sp::PhaseMask> mask;
    if (!mask_path.empty()) {
        double pitch = 0.0;
        mask = sp::read_mask(mask_path, &pitch);
    } else if (with_mask) {
        throw sp::ConfigError("scenario " + scenario_name_in +
                              " needs --mask (see `tm focus`)");
    }

    const sp::BiphotonModel model = sp::build_biphoton_model(
        {cfg.axis_x(), cfg.axis_y()}, cfg.grid_n, cfg.pitch_mm, cfg.n_modes);
    const sp::FrameStack stack = sp::sample_frames(
        model, cfg.geometry(), mask ? &*mask : nullptr,
        screen ? &*screen : nullptr, cfg.detector(scenario));
    sp::write_frames(out, stack);
    std::printf("wrote %s: %d frames, %llu pairs generated, %llu detected\n",
                out.c_str(), stack.frames,
                static_cast<unsigned long long>(stack.generated_pairs_total),
                static_cast<unsigned long long>(stack.detected_pairs_total));
    return 0;
}

int cmd_biphoton_pdf(const CommonConfig& common, const std::string& mask_path,
                     const std::string& screen_path, const std::string& out)
{
    const sp::ExperimentConfig cfg = common.resolve();
    cfg.validate();
    const sp::BenchGeometry geom = cfg.geometry();
    std::optional<sp::DiffuserScreen> screen;
    if (!screen_path.empty())
        screen = sp::read_screen(screen_path);
    std::optional<sp::PhaseMask> mask;
    if (!mask_path.empty()) {
        double pitch = 0.0;
        mask = sp::read_mask(mask_path, &pitch);
    }

    const sp::BiphotonModel model = sp::build_biphoton_model(
        {cfg.axis_x(), cfg.axis_y()}, cfg.grid_n, cfg.pitch_mm, cfg.n_modes);
    sp::ComplexImage t;
    if (mask || screen)
        t = sp::train_transmittance(geom, mask ? &*mask : nullptr,
                                    screen ? &*screen : nullptr);
    sp::CorrelationMap map;
    map.map = sp::analytic_sum_map(model, t);
    map.n = cfg.grid_n;
    map.freq_pitch = geom.freq_pitch();
    map.frames_used = 0;
    map.normalization = sp::Normalization::Raw;
    map.subtraction = sp::Subtraction::None;
    map.lambda_pairs = 0.0;
    sp::write_corr(out, map);
    sp::write_pgm(out + ".pgm", map.map.max(0.0));
    std::printf("wrote %s (total weight %.6g)\n", out.c_str(), map.map.sum());
    return 0;
}

int cmd_correlate(const std::string& stack_path, const std::string& out,
                  const std::string& stats_path,
                  const std::string& normalization_name,
                  const std::string& subtraction_name, bool no_weights)
{
    const sp::FrameStack stack = sp::read_frames(stack_path);
    sp::CorrelatorOptions options;
    options.normalization = (normalization_name == "raw")
                                ? sp::Normalization::Raw
                                : sp::Normalization::PairRate;
    if (subtraction_name == "mean_product")
        options.subtraction = sp::Subtraction::MeanProduct;
    else if (subtraction_name == "none")
        options.subtraction = sp::Subtraction::None;
    else
        options.subtraction = sp::Subtraction::Shifted;
    options.occupancy_weights = !no_weights;
    const sp::CorrelationMap map = sp::correlate(stack, options);
    sp::write_corr(out, map);
    sp::write_pgm(out + ".pgm", map.map.max(0.0));
    if (!stats_path.empty()) {
        const sp::PeakStats stats = sp::peak_stats(map);
        sp::write_stats_csv(stats_path, stats);
        std::printf("peak amplitude %.6g, integral %.6g, contrast %.4g\n",
                    stats.amplitude, stats.integral, stats.contrast);
    }
    std::printf("wrote %s from %d frames\n", out.c_str(), map.frames_used);
    return 0;
}

int cmd_compare(const std::string& dir_a, const std::string& dir_b)
{
    const sp::CompareReport report = sp::compare_runs(dir_a, dir_b);
    std::printf("%-12s %14s %14s\n", "stat", "A", "B");
    const auto row = [](const char* name, double a, double b) {
        std::printf("%-12s %14.6g %14.6g\n", name, a, b);
    };
    row("centroid_x", report.a.centroid_x, report.b.centroid_x);
    row("centroid_y", report.a.centroid_y, report.b.centroid_y);
    row("sigma_x", report.a.sigma_x, report.b.sigma_x);
    row("sigma_y", report.a.sigma_y, report.b.sigma_y);
    row("amplitude", report.a.amplitude, report.b.amplitude);
    row("integral", report.a.integral, report.b.integral);
    row("contrast", report.a.contrast, report.b.contrast);
    std::printf("width_ratio_x      %.6g\n", report.width_ratio_x);
    std::printf("width_ratio_y      %.6g\n", report.width_ratio_y);
    std::printf("amplitude_ratio    %.6g\n", report.amplitude_ratio);
    std::printf("centroid_distance  %.6g 1/mm\n", report.centroid_distance);
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Photon-pair correlation experiments through scattering media"};
    app.require_subcommand(1);
    std::optional<int> workers;
    app.add_option_function<int>(
           "--workers", [&workers](int v) { workers = v; },
           "Worker thread count (default: SPECKLEPAIR_THREADS or hardware)")
        ->check(CLI::PositiveNumber);

    // run
    CommonConfig run_common;
    std::vector<std::string> run_scenarios;
    CLI::App* run = app.add_subcommand("run", "Run a full experiment scenario");
    add_common_options(run, run_common);
    run->add_option("--scenario", run_scenarios,
                    "no_diffuser, slm_off, center, offset, dual, or all")
        ->required();

    // config init
    CLI::App* config = app.add_subcommand("config", "Configuration helpers");
    config->require_subcommand(1);
    CommonConfig config_common;
    std::string config_out = "exp.cfg";
    CLI::App* config_init =
        config->add_subcommand("init", "Write a preset configuration file");
    add_common_options(config_init, config_common);
    config_init->add_option("--out", config_out, "Output path");

    // tm measure / focus / enhance
    CLI::App* tm = app.add_subcommand("tm", "Transmission-matrix tools");
    tm->require_subcommand(1);

    CommonConfig tm_measure_common;
    std::string tm_measure_screen, tm_measure_save_screen;
    std::string tm_measure_basis = "hadamard";
    std::string tm_measure_policy = "border";
    std::string tm_measure_out = "tm.bin";
    CLI::App* tm_measure =
        tm->add_subcommand("measure", "Measure the transmission matrix");
    add_common_options(tm_measure, tm_measure_common);
    tm_measure->add_option("--screen", tm_measure_screen,
                           "Diffuser screen file (default: synthesize)");
    tm_measure->add_option("--save-screen", tm_measure_save_screen,
                           "Also write the synthesized screen here");
    tm_measure->add_option("--basis", tm_measure_basis, "hadamard or canonical")
        ->check(CLI::IsMember({"hadamard", "canonical"}));
    tm_measure->add_option("--policy", tm_measure_policy, "border or ideal")
        ->check(CLI::IsMember({"border", "ideal"}));
    tm_measure->add_option("--out", tm_measure_out, "Output matrix file");

    std::string tm_focus_tm = "tm.bin";
    std::string tm_focus_out = "mask.bin";
    std::vector<std::string> tm_focus_targets;
    std::vector<std::string> tm_focus_weights;
    CLI::App* tm_focus =
        tm->add_subcommand("focus", "Build a phase-conjugation mask");
    tm_focus->add_option("--tm", tm_focus_tm, "Transmission matrix file")
        ->check(CLI::ExistingFile);
    tm_focus
        ->add_option("--targets", tm_focus_targets,
                     "Target \"(x,y)\" in 1/mm; repeatable")
        ->required();
    tm_focus->add_option("--weights", tm_focus_weights,
                         "Complex weight \"(re,im)\" per target; repeatable "
                         "(default: equal weights)");
    tm_focus->add_option("--out", tm_focus_out, "Output mask file");

    CommonConfig tm_enhance_common;
    std::string tm_enhance_screen, tm_enhance_mask = "mask.bin";
    std::vector<std::string> tm_enhance_targets;
    CLI::App* tm_enhance =
        tm->add_subcommand("enhance", "Report focusing enhancement");
    add_common_options(tm_enhance, tm_enhance_common);
    tm_enhance->add_option("--screen", tm_enhance_screen,
                           "Diffuser screen file (default: synthesize)");
    tm_enhance->add_option("--mask", tm_enhance_mask, "Phase mask file")
        ->check(CLI::ExistingFile);
    tm_enhance
        ->add_option("--targets", tm_enhance_targets,
                     "Target \"(x,y)\" in 1/mm; repeatable")
        ->required();

    // acquire
    CommonConfig acquire_common;
    std::string acquire_scenario = "no_diffuser";
    std::string acquire_mask, acquire_screen;
    std::string acquire_out = "frames.bin";
    std::optional<int> acquire_frames;
    std::optional<double> acquire_fill;
    CLI::App* acquire = app.add_subcommand("acquire", "Sample photon frames");
    add_common_options(acquire, acquire_common);
    acquire->add_option("--scenario", acquire_scenario,
                        "no_diffuser, slm_off, center, offset, dual");
    acquire->add_option("--mask", acquire_mask, "Phase mask file")
        ->check(CLI::ExistingFile);
    acquire->add_option("--screen", acquire_screen,
                        "Diffuser screen file (default: synthesize)");
    acquire->add_option_function<int>(
        "--frames", [&acquire_frames](int v) { acquire_frames = v; },
        "Frame count override");
    acquire->add_option_function<double>(
        "--fill", [&acquire_fill](double v) { acquire_fill = v; },
        "Mean fill-fraction override");
    acquire->add_option("--out", acquire_out, "Output frame stack");

    // biphoton pdf
    CLI::App* biphoton = app.add_subcommand("biphoton", "Two-photon state tools");
    biphoton->require_subcommand(1);
    CommonConfig pdf_common;
    std::string pdf_mask, pdf_screen;
    std::string pdf_out = "c.bin";
    CLI::App* pdf = biphoton->add_subcommand(
        "pdf", "Analytic momentum-sum correlation map");
    add_common_options(pdf, pdf_common);
    pdf->add_option("--mask", pdf_mask, "Phase mask file")
        ->check(CLI::ExistingFile);
    pdf->add_option("--screen", pdf_screen, "Diffuser screen file")
        ->check(CLI::ExistingFile);
    pdf->add_option("--out", pdf_out, "Output map file");

    // correlate
    std::string corr_stack, corr_out = "map.bin", corr_stats;
    std::string corr_norm = "pair_rate";
    std::string corr_sub = "shifted";
    bool corr_no_weights = false;
    CLI::App* correlate =
        app.add_subcommand("correlate", "Correlate a frame stack");
    correlate->add_option("--stack", corr_stack, "Frame stack file")
        ->required()
        ->check(CLI::ExistingFile);
    correlate->add_option("--out", corr_out, "Output map file");
    correlate->add_option("--stats", corr_stats, "Also write peak stats CSV");
    correlate->add_option("--normalization", corr_norm, "pair_rate or raw")
        ->check(CLI::IsMember({"pair_rate", "raw"}));
    correlate
        ->add_option("--subtraction", corr_sub,
                     "shifted, mean_product, or none")
        ->check(CLI::IsMember({"shifted", "mean_product", "none"}));
    correlate->add_flag("--no-occupancy-weights", corr_no_weights,
                        "Skip the binary-saturation correction");

    // compare
    std::string compare_a, compare_b;
    CLI::App* compare = app.add_subcommand("compare", "Diff two run directories");
    compare->add_option("dir_a", compare_a, "First run directory")
        ->required()
        ->check(CLI::ExistingDirectory);
    compare->add_option("dir_b", compare_b, "Second run directory")
        ->required()
        ->check(CLI::ExistingDirectory);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0)
            return app.exit(e);
        app.exit(e);
        return 2;
    }

    try {
        if (workers)
            sp::set_worker_count(*workers);
        if (run->parsed())
            return cmd_run(run_common, run_scenarios);
        if (config_init->parsed())
            return cmd_config_init(config_common, config_out);
        if (tm_measure->parsed())
            return cmd_tm_measure(tm_measure_common, tm_measure_screen,
                                  tm_measure_basis, tm_measure_policy,
                                  tm_measure_out, tm_measure_save_screen);
        if (tm_focus->parsed())
            return cmd_tm_focus(tm_focus_tm, tm_focus_targets,
                                tm_focus_weights, tm_focus_out);
        if (tm_enhance->parsed())
            return cmd_tm_enhance(tm_enhance_common, tm_enhance_screen,
                                  tm_enhance_mask, tm_enhance_targets);
        if (acquire->parsed())
            return cmd_acquire(acquire_common, acquire_scenario, acquire_mask,
                               acquire_screen, acquire_frames, acquire_fill,
                               acquire_out);
        if (pdf->parsed())
            return cmd_biphoton_pdf(pdf_common, pdf_mask, pdf_screen, pdf_out);
        if (correlate->parsed())
            return cmd_correlate(corr_stack, corr_out, corr_stats, corr_norm,
                                 corr_sub, corr_no_weights);
        if (compare->parsed())
            return cmd_compare(compare_a, compare_b);
    } catch (const sp::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
    return 0;
}
