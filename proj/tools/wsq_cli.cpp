// Command-line front end: schedule synthesis tables, scenario runs, model
// comparisons, density-map figures, and the SI duration estimate.

#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "wsq/control.hpp"
#include "wsq/diagnostics.hpp"
#include "wsq/dynamics.hpp"
#include "wsq/scenario.hpp"
#include "wsq/target.hpp"
#include "wsq/welltrap.hpp"

namespace {

wsq::ScenarioConfig load_config(const std::string& config_path,
                                const std::string& scenario_name) {
    if (!config_path.empty() && !scenario_name.empty())
        throw wsq::validation_error("give either --config or --scenario, not both");
    if (!config_path.empty()) return wsq::ScenarioConfig::from_file(config_path);
    if (!scenario_name.empty()) {
        const auto& builtins = wsq::builtin_scenarios();
        const auto it = builtins.find(scenario_name);
        if (it == builtins.end())
            throw wsq::validation_error("unknown built-in scenario '" +
                                        scenario_name + "'");
        return wsq::ScenarioConfig::from_string(it->second);
    }
    throw wsq::validation_error("need --config FILE or --scenario NAME");
}

struct Prepared {
    wsq::WellSpec spec;
    wsq::SpectralVector target;
    wsq::CouplingMatrix couplings;
    wsq::ControlSchedule schedule;
};

Prepared prepare(const wsq::ScenarioConfig& cfg) {
    cfg.validate();
    wsq::WellSpec spec;
    spec.well_width = cfg.well_width;
    spec.particle_mass = cfg.mass;
    spec.hbar = cfg.hbar;
    spec.num_levels = 2;
    wsq::TargetSpec target_spec{cfg.sigma, cfg.x0};
    spec.num_levels =
        cfg.levels ? *cfg.levels : wsq::choose_truncation(target_spec, spec, *cfg.c_const);
    Prepared p{spec,
               wsq::target_coefficients(target_spec, spec),
               wsq::CouplingMatrix::build(spec, wsq::InhomogeneityProfile::linear()),
               {}};
    const double horizon =
        cfg.horizon ? *cfg.horizon
                    : wsq::duration_from_energy(p.target, p.couplings, spec, *cfg.e_tot);
    p.schedule = wsq::synthesize(p.target, p.couplings, spec, horizon);
    return p;
}

double parse_charge(const std::string& text) {
    if (text == "e" || text == "|e|") return 1.602176634e-19;
    return std::stod(text);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"analytic wave-packet squeezing in an infinite square well"};
    app.require_subcommand(1);

    std::string config_path, scenario_name, models_arg, out_prefix, model_arg;
    double si_field = 8.0e-2, si_length = 1e-6, si_sigma_ratio = 0.02,
           si_x0_ratio = 0.5;
    std::string si_charge = "e";
    int si_mode = 30, si_levels = 0;

    auto* synth = app.add_subcommand(
        "synth", "print the synthesized schedule table (k, omega_1k, B_k, V_k)");
    synth->add_option("--config", config_path, "scenario config file");
    synth->add_option("--scenario", scenario_name, "built-in scenario name");

    auto* run = app.add_subcommand("run", "run a scenario and persist results");
    run->add_option("--config", config_path, "scenario config file");
    run->add_option("--scenario", scenario_name, "built-in scenario name");
    std::string run_outdir;
    run->add_option("--outdir", run_outdir, "override the output directory");

    auto* compare = app.add_subcommand("compare",
                                       "run two models and print their deviation");
    compare->add_option("--models", models_arg, "comma-separated pair, e.g. rwa,reduced")
        ->required();
    compare->add_option("--config", config_path, "scenario config file");
    compare->add_option("--scenario", scenario_name, "built-in scenario name");

    auto* figure = app.add_subcommand("figure", "emit the density matrix and heat map");
    figure->add_option("--config", config_path, "scenario config file");
    figure->add_option("--scenario", scenario_name, "built-in scenario name");
    figure->add_option("--model", model_arg, "which model to render (default: first)");
    figure->add_option("--out", out_prefix, "output path prefix")->required();

    auto* si = app.add_subcommand("si-estimate",
                                  "squeezing duration for SI field/charge/length");
    si->add_option("--field", si_field, "electric field amplitude, V/m");
    si->add_option("--charge", si_charge, "particle charge in C, or 'e'");
    si->add_option("--length", si_length, "well width, m");
    si->add_option("--sigma-ratio", si_sigma_ratio, "target width / well width");
    si->add_option("--x0-ratio", si_x0_ratio, "target center / well width");
    si->add_option("--mode", si_mode, "level whose envelope saturates the field");
    si->add_option("--levels", si_levels, "basis truncation (default: mode)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (synth->parsed()) {
            const auto cfg = load_config(config_path, scenario_name);
            const Prepared p = prepare(cfg);
            std::printf("# schedule: %d modes, T = %s\n",
                        static_cast<int>(p.schedule.modes.size()),
                        wsq::detail::fmt17(p.schedule.horizon).c_str());
            std::printf("%4s %24s %24s %24s\n", "k", "omega_1k", "B_k", "V_k");
            for (const auto& m : p.schedule.modes)
                std::printf("%4d %24s %24s %24s\n", m.level,
                            wsq::detail::fmt17(m.carrier).c_str(),
                            wsq::detail::fmt17(m.envelope_slope).c_str(),
                            wsq::detail::fmt17(m.amplitude).c_str());
        } else if (run->parsed()) {
            auto cfg = load_config(config_path, scenario_name);
            if (!run_outdir.empty()) cfg.outdir = run_outdir;
            const auto report = wsq::run_scenario(cfg);
            std::printf("scenario %s: N = %d, T = %s, %d modes\n",
                        report.config.name.c_str(), report.levels,
                        wsq::detail::fmt17(report.horizon).c_str(),
                        report.schedule_modes);
            for (const auto& s : report.series)
                std::printf(
                    "  %-8s width %s -> %s, fidelity %s, width violations %d\n",
                    s.model.c_str(), wsq::detail::fmt17(s.width.front()).c_str(),
                    wsq::detail::fmt17(s.width.back()).c_str(),
                    wsq::detail::fmt17(s.final_fidelity).c_str(),
                    static_cast<int>(s.width_violations.size()));
            std::printf("  outputs in %s\n", cfg.resolved_outdir().c_str());
        } else if (compare->parsed()) {
            auto cfg = load_config(config_path, scenario_name);
            cfg.models = wsq::detail::split_csv(models_arg);
            if (cfg.models.size() != 2)
                throw wsq::validation_error("--models needs exactly two tags");
            const auto report = wsq::run_scenario_in_memory(cfg);
            const auto& dev = report.deviations.front();
            std::printf("%s vs %s: max deviation %s, in window [0, %s): %s\n",
                        dev.first.c_str(), dev.second.c_str(),
                        wsq::detail::fmt17(dev.report.max_deviation).c_str(),
                        wsq::detail::fmt17(report.window.end).c_str(),
                        wsq::detail::fmt17(dev.report.max_in_window).c_str());
        } else if (figure->parsed()) {
            auto cfg = load_config(config_path, scenario_name);
            if (!model_arg.empty()) cfg.models = {model_arg};
            const auto report = wsq::run_scenario_in_memory(cfg);
            wsq::WellSpec spec;
            spec.well_width = cfg.well_width;
            spec.particle_mass = cfg.mass;
            spec.hbar = cfg.hbar;
            spec.num_levels = report.levels;
            wsq::emit_density_map(report.trajectories.front(), spec, cfg.grid_m,
                                  out_prefix);
            std::printf("wrote %s_density.txt and %s_density.ppm\n",
                        out_prefix.c_str(), out_prefix.c_str());
        } else if (si->parsed()) {
            if (si_mode < 2) throw wsq::validation_error("--mode must be >= 2");
            wsq::WellSpec spec = wsq::WellSpec::internal_units(
                si_levels > 0 ? si_levels : si_mode);
            wsq::TargetSpec target_spec{si_sigma_ratio * spec.well_width,
                                        si_x0_ratio * spec.well_width};
            const auto target = wsq::target_coefficients(target_spec, spec);
            const auto couplings =
                wsq::CouplingMatrix::build(spec, wsq::InhomogeneityProfile::linear());
            const double seconds = wsq::estimate_si_duration(
                si_field, parse_charge(si_charge), si_length, target, couplings,
                si_mode);
            std::printf("T = %s s\n", wsq::detail::fmt17(seconds).c_str());
        }
    } catch (const wsq::validation_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const CLI::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return 2;
    }
    return 0;
}
