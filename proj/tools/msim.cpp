// Command-line surface: simulate / ensemble / sweep / analyze / girsanov-check.
// Exit codes: 0 success, 2 validation error, 3 numerical failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "msim/config.hpp"
#include "msim/ensemble.hpp"
#include "msim/kernels.hpp"
#include "msim/measure.hpp"
#include "msim/rng.hpp"
#include "msim/runner.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitNumerical = 3;

void write_file(const fs::path& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << contents;
}

void write_run(const fs::path& dir, const std::string& stem, const msim::RunRecord& rec) {
    std::ostringstream csv;
    msim::write_run_csv(csv, rec.rows);
    write_file(dir / (stem + ".csv"), csv.str());
    write_file(dir / (stem + ".summary.txt"), msim::serialize_summary(rec.summary));
}

int cmd_simulate(const std::string& config_path, std::uint64_t seed, bool seed_set,
                 std::string out_dir) {
    auto cfg = msim::RunConfig::from_file(config_path);
    if (seed_set) cfg = cfg.with("seed", std::to_string(seed));
    if (out_dir.empty()) out_dir = cfg.out_dir;
    fs::create_directories(out_dir);
    const auto rec = msim::run_simulation(cfg, cfg.seed);
    write_run(out_dir, "run_" + std::to_string(cfg.seed), rec);
    std::cout << msim::serialize_summary(rec.summary);
    return 0;
}

int cmd_ensemble(const std::string& config_path, std::size_t runs, std::string out_dir,
                 unsigned threads) {
    const auto cfg = msim::RunConfig::from_file(config_path);
    if (out_dir.empty()) out_dir = cfg.out_dir;
    fs::create_directories(out_dir);
    const auto result = msim::run_ensemble(cfg, runs, threads);
    for (std::size_t r = 0; r < result.runs.size(); ++r)
        write_run(out_dir, "run_" + std::to_string(r), result.runs[r]);
    const auto text = msim::serialize_ensemble_summary(result.summary);
    write_file(fs::path(out_dir) / "ensemble.summary.txt", text);
    std::cout << text;
    return 0;
}

int cmd_sweep(const std::string& config_path, const std::string& param,
              const std::string& values_csv, std::size_t runs, std::string out_dir,
              unsigned threads) {
    const auto cfg = msim::RunConfig::from_file(config_path);
    if (out_dir.empty()) out_dir = cfg.out_dir;
    std::vector<std::string> values;
    std::size_t start = 0;
    while (start <= values_csv.size()) {
        const auto pos = values_csv.find(',', start);
        const auto piece = values_csv.substr(
            start, pos == std::string::npos ? std::string::npos : pos - start);
        if (!piece.empty()) values.push_back(piece);
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    const auto result = msim::sweep(cfg, param, values, runs, threads);
    fs::create_directories(out_dir);
    const auto text = msim::serialize_sweep(result);
    write_file(fs::path(out_dir) / "sweep.txt", text);
    std::cout << text;
    return 0;
}

int cmd_analyze(const std::vector<std::string>& inputs, const std::string& out_file,
                bool log_returns) {
    const auto report = msim::analyze_files(inputs, log_returns);
    const auto text = msim::serialize_analyze(report);
    if (!out_file.empty()) write_file(out_file, text);
    std::cout << text;
    return 0;
}

int cmd_girsanov(double drift, double h, double sigma, double z0, std::size_t n_paths,
                 std::size_t n_steps, double horizon, std::uint64_t seed) {
    const msim::TimeGrid grid(horizon, n_steps);
    const auto paths = msim::gen_semimartingale(grid, z0, drift, sigma, n_paths, seed);
    const std::size_t checkpoints[] = {n_steps / 2, n_steps};
    const auto report = msim::martingale_diagnostic(paths, h, checkpoints);

    std::printf("novikov E[exp(<L>_T/2)] = %.6f\n", msim::novikov_value(h, horizon));
    std::printf("%-6s %-10s %-14s %-12s %-6s %-14s %-12s %-6s\n", "k", "t", "E_Q[Z_t]",
                "se", "pass", "E_P[density]", "se", "pass");
    bool numerical_ok = true;
    for (const auto& row : report.rows) {
        std::printf("%-6zu %-10.4f %-14.8f %-12.3e %-6s %-14.8f %-12.3e %-6s\n", row.k,
                    row.time, row.weighted_mean_z, row.se_z,
                    row.drift_removed ? "yes" : "NO", row.mean_density, row.se_density,
                    row.density_unit ? "yes" : "NO");
        if (!std::isfinite(row.weighted_mean_z) || !std::isfinite(row.mean_density))
            numerical_ok = false;
    }
    std::printf("drift removal: %s\n", report.all_drift_removed() ? "PASS" : "FAIL");
    std::printf("density martingale: %s\n", report.all_density_unit() ? "PASS" : "FAIL");
    return numerical_ok ? 0 : kExitNumerical;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"incomplete-market simulator"};
    app.require_subcommand(1);

    std::string config_path, out_dir, out_file, param, values_csv;
    std::vector<std::string> inputs;
    std::uint64_t seed = 0;
    std::size_t runs = 1;
    unsigned threads = 0;
    bool log_returns = false;

    double g_drift = 0.0, g_h = 0.0, g_sigma = 1.0, g_z0 = 0.0, g_horizon = 1.0;
    std::size_t g_paths = 100000, g_steps = 100;
    std::uint64_t g_seed = 1;

    auto* sim = app.add_subcommand("simulate", "run one simulation");
    sim->add_option("--config", config_path)->required();
    auto* seed_opt = sim->add_option("--seed", seed, "override the config seed");
    sim->add_option("--out", out_dir);

    auto* ens = app.add_subcommand("ensemble", "run a seeded ensemble");
    ens->add_option("--config", config_path)->required();
    ens->add_option("--runs", runs)->required();
    ens->add_option("--out", out_dir);
    ens->add_option("--threads", threads);

    auto* swp = app.add_subcommand("sweep", "ensemble per parameter value");
    swp->add_option("--config", config_path)->required();
    swp->add_option("--param", param)->required();
    swp->add_option("--values", values_csv, "comma-separated values")->required();
    swp->add_option("--runs", runs);
    swp->add_option("--out", out_dir);
    swp->add_option("--threads", threads);

    auto* ana = app.add_subcommand("analyze", "recompute statistics from run CSVs");
    ana->add_option("--in", inputs, "run CSV file(s)")->required();
    ana->add_option("--out", out_file);
    ana->add_flag("--log-returns", log_returns);

    auto* gir = app.add_subcommand("girsanov-check", "measure-change diagnostics");
    gir->set_help_flag("--help", "print help");  // frees -h for the --h option
    gir->add_option("--drift", g_drift);
    gir->add_option("--h", g_h);
    gir->add_option("--sigma", g_sigma);
    gir->add_option("--z0", g_z0);
    gir->add_option("--paths", g_paths);
    gir->add_option("--steps", g_steps);
    gir->add_option("--horizon", g_horizon);
    gir->add_option("--seed", g_seed);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        app.exit(e);
        return kExitValidation;
    }

    try {
        if (sim->parsed())
            return cmd_simulate(config_path, seed, seed_opt->count() > 0, out_dir);
        if (ens->parsed()) return cmd_ensemble(config_path, runs, out_dir, threads);
        if (swp->parsed())
            return cmd_sweep(config_path, param, values_csv, runs, out_dir, threads);
        if (ana->parsed()) return cmd_analyze(inputs, out_file, log_returns);
        if (gir->parsed())
            return cmd_girsanov(g_drift, g_h, g_sigma, g_z0, g_paths, g_steps, g_horizon,
                                g_seed);
    } catch (const msim::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const std::invalid_argument& e) {
        std::cerr << "validation error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const msim::SolverError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitNumerical;
    }
    return 0;
}
