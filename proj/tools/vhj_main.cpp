#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "vhj/cli.hpp"

namespace {

std::vector<double> parse_ladder(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (!tok.empty()) out.push_back(std::stod(tok));
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"vhj: entropy-penalised Hamilton-Jacobi solver and measurement-protocol emulator"};
    app.require_subcommand(1);

    std::string config_path, out_dir, axis, ladder_str, oracle_kind = "hopf_lax", report_dir;
    uint64_t seed = 0;
    bool seed_set = false;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "path to the JSON run configuration")->required();
        sub->add_option("--out", out_dir, "output directory (overrides config)");
        sub->add_option("--seed", seed, "RNG seed (overrides config)")->each([&](const std::string&) {
            seed_set = true;
        });
    };

    CLI::App* sub_run = app.add_subcommand("run", "execute one pipeline run with estimators");
    add_common(sub_run);

    CLI::App* sub_sweep = app.add_subcommand("sweep", "convergence sweep along one axis");
    add_common(sub_sweep);
    sub_sweep->add_option("--axis", axis, "sweep axis: nu, h, dx, kappa or shots")->required();
    sub_sweep->add_option("--ladder", ladder_str, "comma-separated ladder values, sorted ascending")
        ->required();

    CLI::App* sub_oracle = app.add_subcommand("oracle", "compute a brute-force reference table");
    add_common(sub_oracle);
    sub_oracle->add_option("--kind", oracle_kind, "hopf_lax, viscous, heat_exact or burgers");

    CLI::App* sub_report = app.add_subcommand("report", "summarise a run directory");
    sub_report->add_option("--out", report_dir, "run directory to summarise")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (sub_report->parsed()) {
            std::cout << vhj::report(report_dir);
            return 0;
        }
        vhj::RunConfig cfg = vhj::load_config(config_path);
        if (seed_set) cfg.seed = seed;
        if (sub_run->parsed()) {
            std::string dir = vhj::run(cfg, out_dir);
            std::cout << "run complete: " << dir << "\n";
        } else if (sub_sweep->parsed()) {
            auto ladder = parse_ladder(ladder_str);
            vhj::SweepResult res = vhj::sweep(cfg, axis, ladder, out_dir);
            std::cout << "sweep " << axis << ": fitted slope " << res.fitted_slope << "\n";
        } else if (sub_oracle->parsed()) {
            std::string dir = vhj::run_oracle(cfg, oracle_kind, out_dir);
            std::cout << "oracle written to " << dir << "\n";
        }
    } catch (const vhj::ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "numerical abort: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
