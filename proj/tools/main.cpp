// qdcool command line: detuning sweeps, mode comparison and self-checks.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <thread>

#include "qdcool/sweep.hpp"

namespace {

// nbar for the comparison report: explicit flag wins, otherwise the secular
// row closest to sweep value 0 (the thermal-equilibrium point of a detuning
// sweep).
double infer_nbar(const qdcool::SweepResult& result) {
    double best_x = 0.0, best_mean = 0.0;
    bool found = false;
    for (const auto& row : result.rows) {
        if (row.mode != qdcool::Mode::secular || row.failed) continue;
        if (!found || std::abs(row.sweep_value) < std::abs(best_x)) {
            best_x = row.sweep_value;
            best_mean = row.mean_n;
            found = true;
        }
    }
    if (!found) throw std::runtime_error("cannot infer nbar: no usable secular rows; pass --nbar");
    std::cerr << "note: nbar inferred as <n> at sweep value " << best_x << " = " << best_mean
              << " (pass --nbar to override)\n";
    return best_mean;
}

int run_command(const std::string& config_path, const std::string& output_override,
                const std::string& format_override, const std::vector<std::string>& mode_override,
                int points_override, int threads) {
    qdcool::RunConfig cfg = qdcool::RunConfig::from_file(config_path);
    if (!output_override.empty()) cfg.output = output_override;
    if (!format_override.empty()) cfg.format = format_override;
    if (points_override > 0) cfg.sweep_points = points_override;
    if (!mode_override.empty()) {
        cfg.modes.clear();
        for (const auto& m : mode_override) cfg.modes.push_back(qdcool::mode_from_name(m));
    }
    cfg.validate();

    std::ofstream out(cfg.output, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open output file: " + cfg.output);

    int failures = 0;
    if (cfg.format == "csv") {
        qdcool::CsvSink sink(out);
        for (const auto& row : qdcool::run(cfg, threads, &sink).rows) failures += row.failed;
    } else {
        qdcool::JsonSink sink(out);
        for (const auto& row : qdcool::run(cfg, threads, &sink).rows) failures += row.failed;
    }
    std::cerr << "wrote " << cfg.output;
    if (failures) std::cerr << " (" << failures << " point/mode failures recorded in-row)";
    std::cerr << "\n";
    return 0;
}

int compare_command(const std::string& input, double nbar_flag, bool nbar_given) {
    std::ifstream in(input, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open input file: " + input);
    const bool json = input.size() >= 5 && input.substr(input.size() - 5) == ".json";
    const qdcool::SweepResult result = json ? qdcool::read_json(in) : qdcool::read_csv(in);
    const double nbar = nbar_given ? nbar_flag : infer_nbar(result);
    qdcool::print_report(std::cout, qdcool::compare_modes(result, nbar));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Steady-state phonon statistics for a laser-driven quantum dot in an acoustic cavity"};
    app.require_subcommand(1);

    std::string config_path, output_override, format_override, compare_input;
    std::vector<std::string> mode_override;
    int points_override = 0;
    int threads = int(std::thread::hardware_concurrency());
    double nbar_flag = 0.0;

    auto* run_cmd = app.add_subcommand("run", "Sweep a parameter and write tabular results");
    run_cmd->add_option("--config", config_path, "Run configuration file")->required();
    run_cmd->add_option("--output", output_override, "Override the configured output path");
    run_cmd->add_option("--format", format_override, "Override the output format (csv|json)");
    run_cmd->add_option("--modes", mode_override, "Override the configured modes")->delimiter(',');
    run_cmd->add_option("--points", points_override, "Override the number of sweep points");
    run_cmd->add_option("--threads", threads, "Worker threads (output is identical for any count)");

    auto* compare_cmd = app.add_subcommand("compare", "Report secular/beyond-secular differences");
    compare_cmd->add_option("--input", compare_input, "Sweep output file (csv or json)")->required();
    auto* nbar_opt = compare_cmd->add_option("--nbar", nbar_flag, "Bath occupation for the cooling region");

    std::uint64_t seed = 20240917u;
    auto* selftest_cmd = app.add_subcommand("selftest", "Run the oracle-equivalence and thermal fixed-point suites");
    selftest_cmd->add_option("--seed", seed, "Seed for the randomized checks");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run_cmd->parsed())
            return run_command(config_path, output_override, format_override, mode_override,
                               points_override, threads);
        if (compare_cmd->parsed())
            return compare_command(compare_input, nbar_flag, nbar_opt->count() > 0);
        return qdcool::selftest(seed, std::cout) ? 0 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
