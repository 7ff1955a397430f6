#pragma once

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "wsq/control.hpp"
#include "wsq/diagnostics.hpp"
#include "wsq/dynamics.hpp"
#include "wsq/errors.hpp"
#include "wsq/target.hpp"
#include "wsq/welltrap.hpp"

namespace wsq {

namespace detail {

// shortest exact decimal for a double (17 significant digits round-trip)
inline std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_csv(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

} // namespace detail

// Flat key = value scenario description ('#' starts a comment).  Exactly one
// of {levels, c_const} picks the basis truncation and exactly one of
// {horizon, e_tot} picks the control duration.
struct ScenarioConfig {
    std::string name = "scenario";
    double well_width = 1.0;
    double mass = 1.0;
    double hbar = 1.0;
    double sigma = 0.0;
    double x0 = 0.0;
    std::optional<int> levels;
    std::optional<double> c_const;
    std::optional<double> horizon;
    std::optional<double> e_tot;
    std::vector<std::string> models;
    int grid_m = 2048;
    int samples = 200;
    double tolerance = 1e-10;
    double ripple_tol = 0.02;
    std::string resonances = "all"; // "all" | "ground-only"
    std::string outdir;

    static ScenarioConfig from_string(const std::string& text);
    static ScenarioConfig from_file(const std::string& path);

    void validate() const {
        if (name.empty()) throw validation_error("name: must not be empty");
        if (!(well_width > 0) || !(mass > 0) || !(hbar > 0))
            throw validation_error("L/m/hbar: must be positive");
        if (!(sigma > 0 && sigma < well_width))
            throw validation_error("sigma: need 0 < sigma < L");
        if (!(x0 > 0 && x0 < well_width))
            throw validation_error("x0: need 0 < x0 < L");
        if (levels.has_value() == c_const.has_value())
            throw validation_error("truncation: provide exactly one of levels, c_const");
        if (levels && *levels < 2) throw validation_error("levels: need >= 2");
        if (c_const && !(*c_const > 0 && *c_const < 1))
            throw validation_error("c_const: need 0 < c_const < 1");
        if (horizon.has_value() == e_tot.has_value())
            throw validation_error("duration: provide exactly one of horizon, e_tot");
        if (horizon && !(*horizon > 0)) throw validation_error("horizon: must be positive");
        if (e_tot && !(*e_tot > 0)) throw validation_error("e_tot: must be positive");
        if (models.empty()) throw validation_error("models: must not be empty");
        for (const auto& m : models)
            if (m != "full" && m != "rwa" && m != "reduced" && m != "analytic")
                throw validation_error("models: unknown model tag '" + m + "'");
        if (grid_m < 256) throw validation_error("grid_m: need >= 256");
        if (samples < 2) throw validation_error("samples: need >= 2");
        if (!(tolerance >= 1e-12 && tolerance <= 1e-4))
            throw validation_error("tolerance: need within [1e-12, 1e-4]");
        if (!(ripple_tol >= 0 && ripple_tol < 1))
            throw validation_error("ripple_tol: need within [0, 1)");
        if (resonances != "all" && resonances != "ground-only")
            throw validation_error("resonances: must be 'all' or 'ground-only'");
    }

    // Output directory: explicit key, else the WSQ_OUTDIR environment
    // variable (the single documented default).
    std::string resolved_outdir() const {
        if (!outdir.empty()) return outdir;
        if (const char* env = std::getenv("WSQ_OUTDIR"); env && *env) return env;
        throw validation_error("outdir: not set and WSQ_OUTDIR is empty");
    }
};

inline ScenarioConfig ScenarioConfig::from_string(const std::string& text) {
    ScenarioConfig cfg;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos)
            line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw validation_error("config line " + std::to_string(lineno) +
                                   ": expected key = value");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        try {
            if (key == "name") cfg.name = value;
            else if (key == "L") cfg.well_width = std::stod(value);
            else if (key == "m") cfg.mass = std::stod(value);
            else if (key == "hbar") cfg.hbar = std::stod(value);
            else if (key == "sigma") cfg.sigma = std::stod(value);
            else if (key == "x0") cfg.x0 = std::stod(value);
            else if (key == "levels") cfg.levels = std::stoi(value);
            else if (key == "c_const") cfg.c_const = std::stod(value);
            else if (key == "horizon") cfg.horizon = std::stod(value);
            else if (key == "e_tot") cfg.e_tot = std::stod(value);
            else if (key == "models") cfg.models = detail::split_csv(value);
            else if (key == "grid_m") cfg.grid_m = std::stoi(value);
            else if (key == "samples") cfg.samples = std::stoi(value);
            else if (key == "tolerance") cfg.tolerance = std::stod(value);
            else if (key == "ripple_tol") cfg.ripple_tol = std::stod(value);
            else if (key == "resonances") cfg.resonances = value;
            else if (key == "outdir") cfg.outdir = value;
            else
                throw validation_error("config line " + std::to_string(lineno) +
                                       ": unknown key '" + key + "'");
        } catch (const std::invalid_argument& e) {
            if (dynamic_cast<const validation_error*>(&e)) throw;
            throw validation_error("config line " + std::to_string(lineno) +
                                   ": bad value for '" + key + "'");
        }
    }
    return cfg;
}

inline ScenarioConfig ScenarioConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw validation_error("cannot open config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_string(ss.str());
}

// Built-in scenario texts.  fig1 is the N = 30, sigma = L/50 squeezing run;
// its horizon spans 199 revival periods (T_rev = 4 m L^2 / (pi hbar)) so
// that all 200 samples land on revivals, where the reconstructed density
// shows the slow control envelope instead of the fast free-evolution
// beating.  It keeps the ground-coupled resonances only: the well's
// degenerate level spacings put several excited pairs in exact resonance
// with low carriers (E_18 - E_17 = hbar omega_16 and friends), and the
// parasitic transfer those would add is exactly what the analytic control
// cannot model.  Set resonances = all to see that transfer instead.
inline const std::map<std::string, std::string>& builtin_scenarios() {
    static const std::map<std::string, std::string> table = {
        {"fig1",
         "name = fig1\n"
         "sigma = 0.02\n"
         "x0 = 0.5\n"
         "levels = 30\n"
         "horizon = 253.37466940229737   # 199 * 4/pi\n"
         "models = rwa,analytic\n"
         "samples = 200\n"
         "grid_m = 2048\n"
         "tolerance = 1e-10\n"
         "ripple_tol = 0.02\n"
         "resonances = ground-only\n"},
        {"smallsigma",
         "name = smallsigma\n"
         "sigma = 0.01\n"
         "x0 = 0.5\n"
         "c_const = 1e-3\n"
         "horizon = 100\n"
         "models = rwa,reduced\n"
         "samples = 200\n"
         "grid_m = 2048\n"
         "resonances = all\n"}};
    return table;
}

// ---------------------------------------------------------------------------

struct ModelSeries {
    std::string model;
    std::vector<double> times;
    std::vector<double> norm_sq;
    std::vector<double> width;
    std::vector<double> peak_density;
    std::vector<double> ground_population;
    std::vector<double> excited_population;
    double final_fidelity = 0.0;
    double norm_drift = 0.0;
    std::vector<int> width_violations;
    std::vector<int> peak_violations;
    IntegratorStats stats;
};

struct ModelPairDeviation {
    std::string first, second;
    DeviationReport report;
};

struct ScenarioReport {
    ScenarioConfig config;
    int levels = 0;       // resolved N
    double horizon = 0.0; // resolved T
    int schedule_modes = 0;
    double energy_b_convention = 0.0;
    double energy_envelope_convention = 0.0;
    double max_boundary_residual = 0.0;
    std::vector<double> boundary_residuals;
    double truncated_target_norm = 0.0; // s
    AdiabaticityReport adiabaticity;
    TimeInterval window;
    std::vector<ModelSeries> series;
    std::vector<ModelPairDeviation> deviations;
    std::vector<TrajectoryRecord> trajectories; // same order as series
};

namespace detail {

struct ReconstructionGrid {
    Eigen::VectorXd positions;
    Eigen::MatrixXd basis;      // grid_m x N, psi_j(x_i)
    Eigen::VectorXd energies;   // E_j
    double hbar = 1.0;

    ReconstructionGrid(const WellSpec& spec, int grid_m) {
        const int n = spec.num_levels;
        positions.resize(grid_m);
        basis.resize(grid_m, n);
        energies.resize(n);
        hbar = spec.hbar;
        for (int j = 1; j <= n; ++j) energies(j - 1) = eigenenergy(spec, j);
        for (int i = 0; i < grid_m; ++i) {
            positions(i) = spec.well_width * i / (grid_m - 1);
            for (int j = 1; j <= n; ++j)
                basis(i, j - 1) = eigenfunction(spec, j, positions(i));
        }
    }

    // density row at the sample's own time stamp (dynamical phases applied)
    Eigen::VectorXd density(const SpectralVector& a) const {
        Eigen::VectorXcd weighted(a.levels());
        for (int j = 0; j < a.levels(); ++j)
            weighted(j) = a.amplitudes(j) *
                          std::polar(1.0, -energies(j) * a.time / hbar);
        const Eigen::VectorXcd values = basis * weighted;
        return values.cwiseAbs2();
    }

    double width_of(const Eigen::VectorXd& dens) const {
        const int m = static_cast<int>(dens.size());
        const double h = positions(1) - positions(0);
        double w0 = 0, w1 = 0, w2 = 0;
        for (int i = 0; i < m; ++i) {
            const double w = (i == 0 || i == m - 1) ? 0.5 : 1.0;
            w0 += w * dens(i);
            w1 += w * dens(i) * positions(i);
            w2 += w * dens(i) * positions(i) * positions(i);
        }
        w0 *= h; w1 *= h; w2 *= h;
        const double mean = w1 / w0;
        const double var = w2 / w0 - mean * mean;
        return var > 0 ? std::sqrt(var) : 0.0;
    }
};

inline ModelSeries summarize(const TrajectoryRecord& traj,
                             const SpectralVector& target,
                             const ReconstructionGrid& grid,
                             double ripple_tol) {
    ModelSeries s;
    s.model = traj.model;
    s.times = traj.times;
    s.stats = traj.stats;
    for (const auto& state : traj.states) {
        const Eigen::VectorXd dens = grid.density(state);
        s.norm_sq.push_back(state.norm_sq());
        s.width.push_back(grid.width_of(dens));
        s.peak_density.push_back(dens.maxCoeff());
        s.ground_population.push_back(std::norm(state.amplitudes(0)));
        s.excited_population.push_back(state.norm_sq() -
                                       std::norm(state.amplitudes(0)));
        s.norm_drift = std::max(s.norm_drift, std::abs(state.norm_sq() - 1.0));
    }
    s.final_fidelity = fidelity(traj.back(), target);
    s.width_violations = monotonicity_report(s.width, ripple_tol);
    s.peak_violations = monotone_increase_report(s.peak_density, ripple_tol);
    return s;
}

} // namespace detail

// Synthesizes the schedule, runs every requested model, and derives the
// per-sample observables.  Distinct models propagate concurrently; nothing
// here touches the filesystem (see write_scenario_outputs).
inline ScenarioReport run_scenario_in_memory(const ScenarioConfig& cfg) {
    cfg.validate();

    WellSpec spec;
    spec.well_width = cfg.well_width;
    spec.particle_mass = cfg.mass;
    spec.hbar = cfg.hbar;
    spec.num_levels = 2; // placeholder until truncation is resolved

    TargetSpec target_spec;
    target_spec.width = cfg.sigma;
    target_spec.center = cfg.x0;

    spec.num_levels = cfg.levels ? *cfg.levels
                                 : choose_truncation(target_spec, spec, *cfg.c_const);
    spec.validate();

    const SpectralVector target = target_coefficients(target_spec, spec);
    const CouplingMatrix couplings =
        CouplingMatrix::build(spec, InhomogeneityProfile::linear());
    const double horizon =
        cfg.horizon ? *cfg.horizon
                    : duration_from_energy(target, couplings, spec, *cfg.e_tot);
    const ControlSchedule schedule = synthesize(target, couplings, spec, horizon);
    ResonanceTable table = build_resonance_table(spec);
    if (cfg.resonances == "ground-only") table = table.ground_connected();

    const SpectralVector psi0 = ground_state(spec);

    ScenarioReport report;
    report.config = cfg;
    report.levels = spec.num_levels;
    report.horizon = horizon;
    report.schedule_modes = static_cast<int>(schedule.modes.size());
    report.energy_b_convention = total_energy(schedule);
    report.energy_envelope_convention = total_energy_envelope(schedule);
    const Eigen::VectorXd residuals =
        check_boundary_condition(schedule, target, couplings, spec);
    report.boundary_residuals.assign(residuals.data(),
                                     residuals.data() + residuals.size());
    report.max_boundary_residual =
        residuals.size() ? residuals.maxCoeff() : 0.0;
    report.truncated_target_norm = target.excited_norm();
    report.adiabaticity = adiabaticity_check(schedule, couplings, spec);
    report.window = validity_window(cfg.sigma, cfg.well_width, horizon);

    const auto run_model = [&](const std::string& model) -> TrajectoryRecord {
        if (model == "full")
            return propagate_full(schedule, couplings, spec, psi0,
                                  cfg.tolerance, cfg.samples);
        if (model == "rwa")
            return propagate_rwa(schedule, couplings, table, spec, psi0,
                                 cfg.samples);
        if (model == "reduced")
            return propagate_reduced(schedule, couplings, spec, psi0,
                                     cfg.samples);
        // analytic: closed form evaluated on the sample grid
        TrajectoryRecord rec;
        rec.model = "analytic";
        rec.times = detail::sample_times(horizon, cfg.samples);
        for (const double t : rec.times)
            rec.states.push_back(analytic_amplitudes(schedule, couplings, spec, t));
        return rec;
    };

    std::vector<std::future<TrajectoryRecord>> futures;
    futures.reserve(cfg.models.size());
    for (const auto& model : cfg.models)
        futures.push_back(std::async(std::launch::async, run_model, model));
    for (auto& f : futures) report.trajectories.push_back(f.get());

    const detail::ReconstructionGrid grid(spec, cfg.grid_m);
    for (const auto& traj : report.trajectories)
        report.series.push_back(
            detail::summarize(traj, target, grid, cfg.ripple_tol));

    for (std::size_t i = 0; i < report.trajectories.size(); ++i)
        for (std::size_t j = i + 1; j < report.trajectories.size(); ++j) {
            ModelPairDeviation dev;
            dev.first = report.trajectories[i].model;
            dev.second = report.trajectories[j].model;
            dev.report = compare_models(report.trajectories[i],
                                        report.trajectories[j],
                                        report.window.begin, report.window.end);
            report.deviations.push_back(std::move(dev));
        }
    return report;
}

// ---------------------------------------------------------------------------
// Persistence.  All numbers go through fmt17, so identical configs produce
// byte-identical files.

inline nlohmann::ordered_json report_to_json(const ScenarioReport& r) {
    nlohmann::ordered_json j;
    j["name"] = r.config.name;
    auto& cfg = j["config"];
    cfg["name"] = r.config.name;
    cfg["L"] = r.config.well_width;
    cfg["m"] = r.config.mass;
    cfg["hbar"] = r.config.hbar;
    cfg["sigma"] = r.config.sigma;
    cfg["x0"] = r.config.x0;
    if (r.config.levels) cfg["levels"] = *r.config.levels;
    if (r.config.c_const) cfg["c_const"] = *r.config.c_const;
    if (r.config.horizon) cfg["horizon"] = *r.config.horizon;
    if (r.config.e_tot) cfg["e_tot"] = *r.config.e_tot;
    cfg["models"] = r.config.models;
    cfg["grid_m"] = r.config.grid_m;
    cfg["samples"] = r.config.samples;
    cfg["tolerance"] = r.config.tolerance;
    cfg["ripple_tol"] = r.config.ripple_tol;
    cfg["resonances"] = r.config.resonances;
    cfg["outdir"] = r.config.outdir;

    j["levels"] = r.levels;
    j["horizon"] = r.horizon;
    j["schedule_modes"] = r.schedule_modes;
    j["energy"] = {{"b_convention", r.energy_b_convention},
                   {"envelope_convention", r.energy_envelope_convention}};
    j["truncated_target_norm"] = r.truncated_target_norm;
    j["boundary_residuals"] = {{"max", r.max_boundary_residual},
                               {"per_level", r.boundary_residuals}};
    j["adiabaticity"] = {
        {"envelope_criterion_by_construction",
         r.adiabaticity.envelope_criterion_by_construction},
        {"max_interior_envelope_derivative",
         r.adiabaticity.max_interior_envelope_derivative},
        {"rwa_scale_ratio", r.adiabaticity.rwa_scale_ratio},
        {"min_carrier_gap", r.adiabaticity.min_carrier_gap},
        {"weak_coupling", r.adiabaticity.weak_coupling}};
    j["validity_window"] = {{"begin", r.window.begin}, {"end", r.window.end}};

    auto& models = j["models"];
    models = nlohmann::ordered_json::object();
    for (const auto& s : r.series) {
        nlohmann::ordered_json m;
        m["final_fidelity"] = s.final_fidelity;
        m["norm_drift"] = s.norm_drift;
        m["width_first"] = s.width.front();
        m["width_last"] = s.width.back();
        m["width_min"] = *std::min_element(s.width.begin(), s.width.end());
        m["peak_first"] = s.peak_density.front();
        m["peak_last"] = s.peak_density.back();
        m["width_violations"] = s.width_violations;
        m["peak_violations"] = s.peak_violations;
        if (s.model == "full")
            m["integrator"] = {{"steps", s.stats.steps},
                               {"rejected", s.stats.rejected},
                               {"tolerance", s.stats.tolerance}};
        models[s.model] = std::move(m);
    }

    auto& devs = j["model_deviations"];
    devs = nlohmann::ordered_json::array();
    for (const auto& d : r.deviations)
        devs.push_back({{"pair", d.first + " vs " + d.second},
                        {"max", d.report.max_deviation},
                        {"max_in_window", d.report.max_in_window},
                        {"at_window_edge", d.report.at_window_edge}});
    return j;
}

inline void write_scenario_outputs(const ScenarioReport& r,
                                   const std::string& outdir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(outdir, ec);
    if (ec) throw numerical_error("cannot create output directory " + outdir);

    for (const auto& s : r.series) {
        const std::string path =
            (fs::path(outdir) / (r.config.name + "_" + s.model + ".csv")).string();
        std::ofstream out(path);
        if (!out) throw numerical_error("cannot open " + path);
        out << "t,norm,width,ground_population,excited_population\n";
        for (std::size_t i = 0; i < s.times.size(); ++i)
            out << detail::fmt17(s.times[i]) << ','
                << detail::fmt17(s.norm_sq[i]) << ','
                << detail::fmt17(s.width[i]) << ','
                << detail::fmt17(s.ground_population[i]) << ','
                << detail::fmt17(s.excited_population[i]) << '\n';
    }

    const std::string jpath =
        (fs::path(outdir) / (r.config.name + "_summary.json")).string();
    std::ofstream jout(jpath);
    if (!jout) throw numerical_error("cannot open " + jpath);
    jout << report_to_json(r).dump(2) << '\n';
}

inline ScenarioReport run_scenario(const ScenarioConfig& cfg) {
    ScenarioReport report = run_scenario_in_memory(cfg);
    write_scenario_outputs(report, cfg.resolved_outdir());
    return report;
}

// ---------------------------------------------------------------------------
// Density-map emission: a plain-text matrix of |Psi(x_i, t_s)|^2 plus a
// rendered heat map (time left to right, position bottom to top).

namespace detail {

// 5-anchor black-violet-red-orange-yellow ramp
inline void heat_color(double u, unsigned char rgb[3]) {
    static constexpr double anchors[5][3] = {{0.0, 0.0, 0.0},
                                             {0.28, 0.05, 0.42},
                                             {0.83, 0.22, 0.27},
                                             {0.98, 0.62, 0.13},
                                             {0.99, 0.99, 0.75}};
    u = std::clamp(u, 0.0, 1.0);
    const double pos = u * 4.0;
    const int lo = std::min(3, static_cast<int>(pos));
    const double frac = pos - lo;
    for (int c = 0; c < 3; ++c) {
        const double v = anchors[lo][c] * (1.0 - frac) + anchors[lo + 1][c] * frac;
        rgb[c] = static_cast<unsigned char>(std::lround(255.0 * std::clamp(v, 0.0, 1.0)));
    }
}

} // namespace detail

inline void emit_density_map(const TrajectoryRecord& traj, const WellSpec& spec,
                             int grid_m, const std::string& path_prefix) {
    if (traj.states.empty())
        throw validation_error("density map needs a nonempty trajectory");
    if (grid_m < 256) throw validation_error("grid too coarse (need M >= 256)");

    const int s_count = traj.samples();
    Eigen::MatrixXd density(grid_m, s_count);
    for (int sidx = 0; sidx < s_count; ++sidx) {
        const GridWavefunction g =
            reconstruct_wavefunction(traj.states[static_cast<std::size_t>(sidx)],
                                     spec, grid_m);
        density.col(sidx) = g.values.cwiseAbs2();
    }

    {
        std::ofstream out(path_prefix + "_density.txt");
        if (!out) throw numerical_error("cannot open " + path_prefix + "_density.txt");
        out << "# M=" << grid_m << " samples=" << s_count
            << " L=" << detail::fmt17(spec.well_width)
            << " T=" << detail::fmt17(traj.times.back()) << '\n';
        for (int sidx = 0; sidx < s_count; ++sidx) {
            for (int i = 0; i < grid_m; ++i)
                out << detail::fmt17(density(i, sidx)) << (i + 1 < grid_m ? " " : "");
            out << '\n';
        }
    }

    const double peak = density.maxCoeff();
    std::ofstream img(path_prefix + "_density.ppm", std::ios::binary);
    if (!img) throw numerical_error("cannot open " + path_prefix + "_density.ppm");
    img << "P6\n" << s_count << ' ' << grid_m << "\n255\n";
    std::vector<unsigned char> row(static_cast<std::size_t>(s_count) * 3);
    for (int i = grid_m - 1; i >= 0; --i) { // x increases upward
        for (int sidx = 0; sidx < s_count; ++sidx)
            detail::heat_color(peak > 0 ? density(i, sidx) / peak : 0.0,
                               &row[static_cast<std::size_t>(sidx) * 3]);
        img.write(reinterpret_cast<const char*>(row.data()),
                  static_cast<std::streamsize>(row.size()));
    }
}

} // namespace wsq
