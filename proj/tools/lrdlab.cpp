// lrdlab: experiments on chains with heavy-tailed return times — convergence
// rates to stationarity, entropy series, visit-count variance, ergodicity
// classification, and trajectory simulation.  See README.md for the config
// format and the CSV artifacts each experiment writes.

#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "lrd/lrd.hpp"

namespace {

void emit_error(const std::string& kind, const std::string& message) {
    const nlohmann::json record{{"error", kind}, {"message", message}};
    std::cerr << record.dump() << "\n";
}

struct cli_options {
    std::vector<std::string> configs;
    std::string out;
    std::uint64_t seed = 0;
    std::string grid;
    std::string log_base;
    double tolerance = 0.0;
};

void add_common_options(CLI::App* cmd, cli_options& opt, bool multi_config) {
    auto* config = cmd->add_option("--config", opt.configs,
                                   "experiment config file (key = value lines)");
    config->required();
    if (!multi_config) config->expected(1);
    cmd->add_option("--out", opt.out, "override the output directory");
    cmd->add_option("--seed", opt.seed, "override the sampling seed");
    cmd->add_option("--grid", opt.grid, "override the horizon grid as MIN:MAX:POINTS");
    cmd->add_option("--log-base", opt.log_base, "entropy unit")
        ->check(CLI::IsMember({"nats", "bits"}));
    cmd->add_option("--tolerance", opt.tolerance,
                    "override the truncation-entropy tolerance");
}

void apply_grid_flag(lrd::experiment_config& cfg, const std::string& text) {
    const auto first = text.find(':');
    const auto second = first == std::string::npos ? std::string::npos
                                                   : text.find(':', first + 1);
    if (first == std::string::npos || second == std::string::npos ||
        text.find(':', second + 1) != std::string::npos) {
        throw lrd::config_error("invalid --grid '" + text + "': expected MIN:MAX:POINTS");
    }
    cfg.grid.n_min = lrd::detail::parse_config_u64("--grid", text.substr(0, first));
    cfg.grid.n_max =
        lrd::detail::parse_config_u64("--grid", text.substr(first + 1, second - first - 1));
    cfg.grid.points = lrd::detail::parse_config_u64("--grid", text.substr(second + 1));
}

void apply_overrides(lrd::experiment_config& cfg, const CLI::App* cmd,
                     const cli_options& opt) {
    if (cmd->count("--out") > 0) cfg.out_dir = opt.out;
    if (cmd->count("--seed") > 0) {
        cfg.seed = opt.seed;
        cfg.has_seed = true;
    }
    if (cmd->count("--grid") > 0) apply_grid_flag(cfg, opt.grid);
    if (cmd->count("--log-base") > 0) cfg.log_base = opt.log_base;
    if (cmd->count("--tolerance") > 0) cfg.tolerance = opt.tolerance;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"experiments on chains with heavy-tailed return times"};
    app.set_version_flag("--version", lrd::tool_name_version);
    app.require_subcommand(1);
    cli_options opt;

    CLI::App* run_cmd = app.add_subcommand("run", "run one experiment config");
    add_common_options(run_cmd, opt, false);
    CLI::App* compare_cmd =
        app.add_subcommand("compare", "run several configs and join their artifacts");
    add_common_options(compare_cmd, opt, true);
    CLI::App* classify_cmd =
        app.add_subcommand("classify", "print the convergence class of a chain");
    add_common_options(classify_cmd, opt, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help / --version
        emit_error("usage", e.what());
        return 2;
    }

    try {
        lrd::run_result result;
        if (run_cmd->parsed()) {
            lrd::experiment_config cfg = lrd::load_config(opt.configs.at(0));
            apply_overrides(cfg, run_cmd, opt);
            result = lrd::run_experiment(cfg);
        } else if (compare_cmd->parsed()) {
            if (opt.configs.size() < 2) {
                throw lrd::config_error("compare requires at least two --config files");
            }
            std::vector<lrd::experiment_config> cfgs;
            cfgs.reserve(opt.configs.size());
            for (const std::string& path : opt.configs) {
                lrd::experiment_config cfg = lrd::load_config(path);
                apply_overrides(cfg, compare_cmd, opt);
                cfgs.push_back(std::move(cfg));
            }
            result = lrd::run_compare(std::move(cfgs));
        } else {
            lrd::experiment_config cfg = lrd::load_config(opt.configs.at(0));
            apply_overrides(cfg, classify_cmd, opt);
            cfg.experiment = "classify";
            result = lrd::run_experiment(cfg);
        }
        if (!result.stdout_text.empty()) {
            std::cout << result.stdout_text << "\n";
        }
        return 0;
    } catch (const lrd::config_error& e) {
        emit_error("config", e.what());
        return 2;
    } catch (const lrd::certification_error& e) {
        emit_error("certification", e.what());
        return 3;
    } catch (const lrd::truncation_error& e) {
        emit_error("truncation", e.what());
        return 3;
    } catch (const lrd::no_stationary_error& e) {
        emit_error("no_stationary", e.what());
        return 3;
    } catch (const std::invalid_argument& e) {
        emit_error("config", e.what());
        return 2;
    } catch (const std::domain_error& e) {
        emit_error("config", e.what());
        return 2;
    } catch (const std::exception& e) {
        emit_error("internal", e.what());
        return 1;
    }
}
