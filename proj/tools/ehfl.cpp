// Command-line driver: single runs, sweeps, and config validation.
//
// Exit codes: 0 success; 2 configuration/usage error; 3 training divergence;
// 1 any other runtime failure.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "ehfl/engine.hpp"
#include "ehfl/experiment.hpp"

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ehfl::ConfigError("cannot open config file: " + path);
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    out << content;
}

/// --out beats EHFL_OUT_DIR beats the config's out_dir.
std::string pick_out_dir(const std::string& cli_out, const std::string& config_out) {
    if (!cli_out.empty()) {
        return cli_out;
    }
    if (const char* env = std::getenv("EHFL_OUT_DIR"); env != nullptr && *env != '\0') {
        return env;
    }
    return config_out;
}

void write_run_outputs(const ehfl::SimConfig& config, const ehfl::RunResult& result,
                       const std::filesystem::path& dir, const std::string& format) {
    const std::string tag = ehfl::cell_tag(config);
    if (format == "json") {
        write_file(dir / (tag + "_metrics.json"), ehfl::metrics_json(result.log).dump(2) + "\n");
    } else {
        write_file(dir / (tag + "_metrics.csv"), ehfl::metrics_csv(result.log));
    }
    write_file(dir / (tag + "_summary.json"),
               ehfl::summary_json(config, result).dump(2) + "\n");
    const auto& last = result.log.epochs.back();
    std::cout << tag << ": epochs=" << result.log.epochs.size()
              << " accuracy=" << last.accuracy
              << " total_energy=" << (result.ledger.consumed_train + result.ledger.consumed_tx)
              << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Deterministic simulator of energy-harvesting federated learning"};
    app.footer("Exit codes: 0 success, 2 configuration error, 3 training divergence.");
    app.require_subcommand(1);

    std::string config_path;
    std::string out_override;
    std::string format = "csv";
    std::uint64_t seed_override = 0;

    CLI::App* cmd_run = app.add_subcommand("run", "Execute the single run a config describes");
    cmd_run->add_option("config", config_path, "JSON config file")->required();
    cmd_run->add_option("--out", out_override, "Output directory (beats EHFL_OUT_DIR and config)");
    CLI::Option* seed_opt = cmd_run->add_option("--seed", seed_override, "Root seed override");
    cmd_run->add_option("--format", format, "Metrics file format")
        ->check(CLI::IsMember({"csv", "json"}));

    CLI::App* cmd_sweep =
        app.add_subcommand("sweep", "Run every sweep cell, then the comparison table");
    cmd_sweep->add_option("config", config_path, "JSON config file")->required();
    cmd_sweep->add_option("--out", out_override, "Output directory (beats EHFL_OUT_DIR and config)");
    cmd_sweep->add_option("--format", format, "Metrics file format")
        ->check(CLI::IsMember({"csv", "json"}));

    CLI::App* cmd_validate =
        app.add_subcommand("validate", "Parse and validate a config without running it");
    cmd_validate->add_option("config", config_path, "JSON config file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;  // help exits clean; anything else is a usage error
    }

    try {
        ehfl::ExperimentSpec spec = ehfl::parse_config(read_file(config_path));

        if (cmd_validate->parsed()) {
            const std::vector<ehfl::SimConfig> runs = ehfl::expand(spec);
            std::cout << "ok: " << runs.size() << " run(s), out_dir=" << spec.out_dir << "\n";
            return 0;
        }

        if (seed_opt->count() > 0) {
            spec.base.seed = seed_override;
        }
        const std::filesystem::path dir = pick_out_dir(out_override, spec.out_dir);
        std::filesystem::create_directories(dir);
        const std::vector<ehfl::SimConfig> runs = ehfl::expand(spec);

        if (cmd_run->parsed()) {
            if (runs.size() != 1) {
                throw ehfl::ConfigError("config expands to " + std::to_string(runs.size()) +
                                        " runs; use the sweep command for multi-cell configs");
            }
            const ehfl::RunResult result = ehfl::run_simulation(runs.front());
            write_run_outputs(runs.front(), result, dir, format);
            return 0;
        }

        // sweep
        std::vector<ehfl::CellResult> cells;
        cells.reserve(runs.size());
        for (const ehfl::SimConfig& config : runs) {
            const ehfl::RunResult result = ehfl::run_simulation(config);
            write_run_outputs(config, result, dir, format);
            cells.push_back(
                {config, result.ledger.consumed_train + result.ledger.consumed_tx});
        }
        write_file(dir / "comparison.csv", ehfl::comparison_table_csv(cells));
        std::cout << "wrote " << (dir / "comparison.csv").string() << " (" << cells.size()
                  << " cells)\n";
        return 0;
    } catch (const ehfl::DivergenceError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const ehfl::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
