// parlr_cli run | compare | converge
//
// Exit status: 0 success, 2 usage/config error, 3 integration failure.

#include "parlr/harness.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <map>

namespace h = parlr::harness;

namespace {

// Flag name -> config key, applied after --config so flags win.
const std::vector<std::pair<std::string, std::string>> kFlags = {
    {"--problem", "problem"},       {"--integrator", "integrator"}, {"--theta-bar", "theta_bar"},
    {"--theta-mode", "theta_mode"}, {"--c-reject", "c_reject"},     {"--r-max", "r_max"},
    {"--nx", "nx"},                 {"--nmoments", "nmoments"},     {"--cfl", "cfl"},
    {"--t-end", "t_end"},           {"--h", "h"},                   {"--snapshots", "snapshots"},
    {"--seed", "seed"},             {"--output-dir", "output_dir"},
};

struct ConfigOptions {
    std::string config_file;
    std::map<std::string, std::string> flags;
    std::vector<std::string> sets;
};

void add_config_options(CLI::App* app, ConfigOptions& opts) {
    app->add_option("--config", opts.config_file, "key=value config file")->check(CLI::ExistingFile);
    for (const auto& [flag, key] : kFlags) {
        app->add_option(flag, opts.flags[key], "config key " + key);
    }
    app->add_option("--set", opts.sets, "extra key=value overrides (repeatable)");
}

h::RunConfig resolve(const ConfigOptions& opts, const std::string& config_file) {
    h::RunConfig config;
    if (!config_file.empty()) {
        config = h::load_config(config_file, config);
    }
    for (const auto& [flag, key] : kFlags) {
        const std::string& value = opts.flags.at(key);
        if (!value.empty()) {
            config.set(key, value);
        }
    }
    for (const auto& item : opts.sets) {
        h::apply_config_text(config, item, "--set");
    }
    config.validate();
    return config;
}

std::vector<double> parse_h_list(const std::string& text) {
    h::RunConfig scratch;
    scratch.t_end = 1e300;
    scratch.set("snapshots", text);
    return scratch.snapshot_times;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Parallel and BUG rank-adaptive low-rank integrators: benchmark driver"};
    app.set_help_flag("--help", "print this help and exit");
    app.require_subcommand(1);

    ConfigOptions run_opts;
    CLI::App* run_cmd = app.add_subcommand("run", "integrate one configuration and write CSV diagnostics");
    add_config_options(run_cmd, run_opts);

    ConfigOptions cmp_opts;
    std::string config_a, config_b, integrator_a, integrator_b, metric = "flux_l2_rel", report;
    CLI::App* cmp_cmd = app.add_subcommand("compare", "run two configurations and compare their snapshots");
    add_config_options(cmp_cmd, cmp_opts);
    cmp_cmd->add_option("--config-a", config_a, "config file for run A")->check(CLI::ExistingFile);
    cmp_cmd->add_option("--config-b", config_b, "config file for run B")->check(CLI::ExistingFile);
    cmp_cmd->add_option("--integrator-a", integrator_a, "integrator override for run A");
    cmp_cmd->add_option("--integrator-b", integrator_b, "integrator override for run B");
    cmp_cmd->add_option("--metric", metric, "flux_l2_rel | dense_l2_rel");
    cmp_cmd->add_option("--report", report, "report path (default <output_dir>/compare.csv)");

    ConfigOptions conv_opts;
    std::string h_list, theta_rule = "fixed";
    CLI::App* conv_cmd = app.add_subcommand("converge", "error against the reference for a list of step sizes");
    add_config_options(conv_cmd, conv_opts);
    conv_cmd->add_option("--h-list", h_list, "comma-separated, strictly decreasing")->required();
    conv_cmd->add_option("--theta-rule", theta_rule, "fixed | h_squared");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        if (run_cmd->parsed()) {
            const h::RunConfig config = resolve(run_opts, run_opts.config_file);
            const h::RunResult result = h::run(config);
            const auto& traj = result.trajectory;
            std::cout << "steps " << traj.size() - 1 << ", final rank " << traj.ranks.back() << ", wall "
                      << result.wall_seconds << " s\n";
            for (const auto& file : result.files) {
                std::cout << "wrote " << file.string() << '\n';
            }
            for (const auto& w : traj.warnings) {
                std::cerr << "warning: " << w << '\n';
            }
        } else if (cmp_cmd->parsed()) {
            h::RunConfig a = resolve(cmp_opts, config_a.empty() ? cmp_opts.config_file : config_a);
            h::RunConfig b = resolve(cmp_opts, config_b.empty() ? cmp_opts.config_file : config_b);
            const auto base_dir = a.output_dir;
            if (!integrator_a.empty()) {
                a.set("integrator", integrator_a);
            }
            if (!integrator_b.empty()) {
                b.set("integrator", integrator_b);
            }
            a.output_dir = base_dir / "a";
            b.output_dir = base_dir / "b";
            const std::filesystem::path out = report.empty() ? base_dir / "compare.csv" : std::filesystem::path(report);
            const auto rows = h::compare(a, b, h::parse_metric(metric), out);
            for (const auto& r : rows) {
                std::cout << "t=" << r.requested_time << "  a_vs_b " << r.a_vs_b << "  a_vs_ref " << r.a_vs_ref
                          << "  b_vs_ref " << r.b_vs_ref << '\n';
            }
            std::cout << "wrote " << out.string() << '\n';
        } else if (conv_cmd->parsed()) {
            const h::RunConfig base = resolve(conv_opts, conv_opts.config_file);
            const auto result = h::convergence_study(base, parse_h_list(h_list), h::parse_theta_rule(theta_rule));
            for (const auto& r : result.rows) {
                std::cout << "h " << r.h << "  error " << r.error << "  max_rank " << r.max_rank << '\n';
            }
            if (result.slope) {
                std::cout << "fitted slope " << *result.slope << '\n';
            }
            std::cout << "wrote " << (base.output_dir / "convergence.csv").string() << '\n';
        }
    } catch (const parlr::InvalidInput& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return 2;
    } catch (const parlr::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
    return 0;
}
