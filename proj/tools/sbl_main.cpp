#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sbl/experiment.hpp"
#include "sbl/io.hpp"
#include "sbl/rng.hpp"
#include "sbl/synthesis.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfigError = 2;
constexpr int kExitRuntimeError = 3;

sbl::ExperimentConfig load_config(const std::string& path, std::optional<std::uint64_t> seed,
                                  std::optional<std::string> out_dir) {
    sbl::ExperimentConfig cfg = sbl::load_experiment_config(path);
    if (seed) cfg.seed = *seed;
    if (out_dir) cfg.output_dir = *out_dir;
    return cfg;
}

int cmd_run(const std::string& config_path, std::optional<std::uint64_t> seed,
            std::optional<std::string> out_dir) {
    const auto cfg = load_config(config_path, seed, out_dir);
    const sbl::RunReport report = sbl::run_experiment(cfg);
    sbl::write_report(report, cfg.output_dir);
    std::cout << sbl::summary_json(report);
    std::cout << "wrote " << cfg.output_dir.string() << "/{summary.json,fit.json,g2_tau.csv,pn_*.csv}\n";
    return kExitOk;
}

int cmd_table1(const std::string& config_path, std::vector<double> targets,
               std::optional<std::uint64_t> seed, std::optional<std::string> out_dir,
               unsigned workers) {
    auto base = load_config(config_path, seed, out_dir);
    if (targets.empty()) targets = {1.89, 2.38, 2.80, 3.12};
    const auto configs = sbl::calibrate_targets(base, targets);
    const auto table = sbl::run_table1(configs, workers);

    fs::create_directories(base.output_dir);
    sbl::write_file_atomic(base.output_dir / "table1.json", sbl::table1_json(table));
    sbl::write_file_atomic(base.output_dir / "table1.txt", sbl::table1_text(table));
    for (const auto& row : table.rows) sbl::write_report(row, base.output_dir / row.config.name);
    std::cout << sbl::table1_text(table);
    return kExitOk;
}

int cmd_calibrate(const std::string& config_path, std::vector<double> targets,
                  std::optional<std::uint64_t> seed, std::optional<std::string> out_dir) {
    auto base = load_config(config_path, seed, out_dir);
    if (targets.empty()) targets = {1.89, 2.38, 2.80, 3.12};
    const auto configs = sbl::calibrate_targets(base, targets);
    fs::create_directories(base.output_dir);
    for (const auto& cfg : configs) {
        sbl::write_file_atomic(base.output_dir / ("config_" + cfg.name + ".json"),
                               sbl::experiment_config_json(cfg));
    }
    sbl::write_file_atomic(base.output_dir / "calibration.json", sbl::calibration_json(configs));
    std::cout << sbl::calibration_json(configs);
    return kExitOk;
}

int cmd_import(const std::string& in_path, const std::string& format,
               std::optional<std::string> out_dir, double window_width,
               std::uint64_t n_windows) {
    const sbl::PhotonStream stream = format == "binary"
                                         ? sbl::import_timetags_binary(in_path)
                                         : sbl::import_timetags_text(in_path);
    std::cout << "imported " << stream.size() << " events, channel " << stream.channel_id()
              << ", span [" << stream.span_begin() << ", " << stream.span_end() << "] s\n";
    if (window_width > 0.0 && n_windows > 0) {
        const auto hist = sbl::count_windows(stream, window_width, n_windows);
        const auto g2 = sbl::g2_from_histogram(hist);
        std::printf("mean photons per window: %.6f\n", hist.mean());
        std::printf("g2_c(0) = %.4f +- %.4f\n", g2.value, g2.stderror);
        if (out_dir) {
            fs::create_directories(*out_dir);
            sbl::write_file_atomic(fs::path(*out_dir) / "pn_imported.csv",
                                   sbl::histogram_csv(hist));
        }
    }
    return kExitOk;
}

int cmd_export(const std::string& config_path, const std::string& what, const std::string& format,
               std::optional<std::uint64_t> seed, const std::string& out_path) {
    auto cfg = load_config(config_path, seed, std::nullopt);
    // Rebuild the configured source trace; the stream is the HBT-arm input.
    sbl::FieldTrace field = sbl::gen_speckle_field(cfg.speckle, cfg.duration, cfg.effective_dt(),
                                                   sbl::derive_seed(cfg.seed, 1));
    sbl::IntensityTrace source = sbl::mix_coherent_background(field, cfg.mix);
    if (cfg.modulation) {
        source = sbl::multiply_traces(
            sbl::gen_modulation_intensity(*cfg.modulation, cfg.duration, cfg.effective_dt(),
                                          sbl::derive_seed(cfg.seed, 2)),
            source);
    }
    source = sbl::rescale_to_mean(source, cfg.mean_rate_target);

    if (what == "trace") {
        if (format == "binary")
            sbl::export_trace_binary(source, out_path);
        else
            sbl::export_trace_csv(source, out_path);
    } else {
        const sbl::PhotonStream stream =
            sbl::sample_arrivals(source, cfg.detector.efficiency, sbl::derive_seed(cfg.seed, 3));
        if (format == "binary")
            sbl::export_timetags_binary(stream, out_path);
        else
            sbl::export_timetags_text(stream, out_path);
    }
    std::cout << "wrote " << out_path << "\n";
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Monte Carlo simulator and statistics toolkit for superbunching "
                 "pseudothermal light"};
    app.require_subcommand(1);

    std::string config_path, in_path, out_path, what = "trace", format = "csv";
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    std::vector<double> targets;
    unsigned workers = 1;
    double window_width = 0.0;
    std::uint64_t n_windows = 0;

    auto* run = app.add_subcommand("run", "run one experiment end to end");
    run->add_option("--config", config_path, "experiment config JSON")->required();
    run->add_option("--seed", seed, "override the config seed");
    run->add_option("--out", out_dir, "override the output directory");

    auto* table1 = app.add_subcommand("table1", "calibrated g2_m vs g2_c sweep");
    table1->add_option("--config", config_path, "base config JSON")->required();
    table1->add_option("--targets", targets, "target g2 values (default 1.89 2.38 2.80 3.12)");
    table1->add_option("--seed", seed, "override the config seed");
    table1->add_option("--out", out_dir, "override the output directory");
    table1->add_option("--workers", workers, "concurrent experiments");

    auto* calibrate = app.add_subcommand("calibrate", "emit configs matching target g2 values");
    calibrate->add_option("--config", config_path, "base config JSON")->required();
    calibrate->add_option("--targets", targets, "target g2 values");
    calibrate->add_option("--seed", seed, "override the config seed");
    calibrate->add_option("--out", out_dir, "override the output directory");

    auto* import = app.add_subcommand("import", "import and validate time tags");
    import->add_option("--in", in_path, "time-tag file")->required();
    import->add_option("--format", format, "text or binary")
        ->check(CLI::IsMember({"text", "binary"}));
    import->add_option("--out", out_dir, "directory for derived CSVs");
    import->add_option("--window-width", window_width, "counting window width in seconds");
    import->add_option("--windows", n_windows, "number of counting windows");

    auto* exp = app.add_subcommand("export", "synthesize and export a trace or photon stream");
    exp->add_option("--config", config_path, "experiment config JSON")->required();
    exp->add_option("--what", what, "trace or stream")->check(CLI::IsMember({"trace", "stream"}));
    exp->add_option("--format", format, "csv, text or binary")
        ->check(CLI::IsMember({"csv", "text", "binary"}));
    exp->add_option("--seed", seed, "override the config seed");
    exp->add_option("--out", out_path, "output file")->required();

    try {
        app.parse(argc, argv);
        if (run->parsed()) return cmd_run(config_path, seed, out_dir);
        if (table1->parsed()) return cmd_table1(config_path, targets, seed, out_dir, workers);
        if (calibrate->parsed()) return cmd_calibrate(config_path, targets, seed, out_dir);
        if (import->parsed())
            return cmd_import(in_path, format, out_dir, window_width, n_windows);
        if (exp->parsed()) return cmd_export(config_path, what, format, seed, out_path);
        return kExitConfigError;
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfigError;
    } catch (const sbl::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntimeError;
    }
}
