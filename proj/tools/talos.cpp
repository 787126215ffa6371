// talos: command-line front end for the discipline analyses and the
// trajectory optimizer. Every subcommand writes CSV artifacts plus a run
// manifest; `talos rerun <manifest>` replays a recorded invocation.
//
// Exit codes: 0 success/converged, 2 usage or validation error,
// 3 optimizer did not converge, 4 runtime divergence.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "talos/attitude.hpp"
#include "talos/comms.hpp"
#include "talos/csv.hpp"
#include "talos/frames.hpp"
#include "talos/illumination.hpp"
#include "talos/mission.hpp"
#include "talos/orbit_dynamics.hpp"
#include "talos/surrogate.hpp"
#include "talos/trajopt.hpp"
#include "talos/version.hpp"

namespace {

using nlohmann::json;
using namespace talos;

std::string cache_dir_from_env() {
    if (const char* env = std::getenv("TALOSKIT_CACHE_DIR")) return env;
    return ".talos_cache";
}

struct RunContext {
    std::string subcommand;
    json params;                        // everything needed to replay the run
    std::vector<std::string> outputs;   // files written (absolute paths)
    TimeGrid grid;
    bool grid_set = false;
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

    void add_output(const std::string& path) {
        outputs.push_back(std::filesystem::absolute(path).string());
    }

    void write_manifest(const std::string& path) {
        const PhysicalConstants k = standard_earth_constants();
        json m;
        m["subcommand"] = subcommand;
        m["params"] = params;
        m["constants"] = {{"mu", k.mu},        {"Re", k.Re},   {"J2", k.J2},
                          {"J3", k.J3},        {"J4", k.J4},   {"g0", k.g0},
                          {"c", k.c},          {"k_B", k.k_B}, {"omega_E", k.omega_E}};
        if (grid_set) m["grid"] = {{"t0", grid.t0}, {"dt", grid.dt}, {"n", grid.n}};
        m["outputs"] = outputs;
        m["toolkit_version"] = kVersion;
        m["wall_time_s"] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::ofstream out(path);
        if (!out) throw std::runtime_error("cannot write manifest: " + path);
        out << m.dump(2) << "\n";
    }
};

void write_state_csv(const std::string& path, const Trajectory& traj, int stride = 1) {
    CsvWriter csv(path, {"t", "x", "y", "z", "vx", "vy", "vz"});
    for (std::int64_t i = 0; i <= traj.grid.n; i += stride) {
        const auto row = traj.states.row(i);
        csv.row({traj.grid.time(i), row[0], row[1], row[2], row[3], row[4], row[5]});
    }
}

TimeGrid grid_for_orbits(const PhysicalConstants& k, const StateVec6& state, double orbits,
                         double dt) {
    const double period = orbital_period(k, state);
    const auto n = static_cast<std::int64_t>(std::llround(orbits * period / dt));
    return TimeGrid(0.0, dt, std::max<std::int64_t>(n, 1));
}

// ---------------------------------------------------------------------- propagate

struct PropagateParams {
    std::string config;
    double duration_orbits = 1.0;
    double dt = 10.0;
    bool relative = false;
    std::string out;
};

int run_propagate(const PropagateParams& prm, RunContext& ctx) {
    const PhysicalConstants k = standard_earth_constants();
    ctx.params = {{"config", std::filesystem::absolute(prm.config).string()},
                  {"duration_orbits", prm.duration_orbits},
                  {"dt", prm.dt},
                  {"relative", prm.relative},
                  {"out", prm.out}};
    const MissionSpec spec = load_mission(prm.config);

    if (std::holds_alternative<CubesatSpec>(spec)) {
        const auto& cs = std::get<CubesatSpec>(spec);
        if (prm.relative || cs.orbit_model == OrbitModel::relative)
            throw SpecError("orbit_model",
                            "a standalone cubesat config propagates in absolute mode only "
                            "(relative mode needs a virtual telescope config)");
        ctx.grid = grid_for_orbits(k, cs.initial_orbit_state, prm.duration_orbits, prm.dt);
        ctx.grid_set = true;
        const OdeSystem sys = make_absolute_system(k, cs.dry_mass, cs.specific_impulse);
        const Trajectory traj = rk4_propagate(sys, cs.initial_orbit_state,
                                              Eigen::MatrixXd::Zero(ctx.grid.n, 3), ctx.grid);
        const std::string path = prm.out + "_" + cs.name + ".csv";
        write_state_csv(path, traj);
        ctx.add_output(path);
    } else {
        const auto& vt = std::get<VirtualTelescopeSpec>(spec);
        ctx.grid = grid_for_orbits(k, vt.reference_orbit_initial_state, prm.duration_orbits,
                                   prm.dt);
        ctx.grid_set = true;
        const ReferenceOrbit ref =
            precompute_reference(k, vt.reference_orbit_initial_state, ctx.grid,
                                 cache_dir_from_env());
        for (const CubesatSpec* cs : {&vt.optics_cubesat, &vt.detector_cubesat}) {
            Trajectory traj;
            if (prm.relative) {
                const OdeSystem sys =
                    make_relative_system(ref, k, cs->dry_mass, cs->specific_impulse);
                traj = rk4_propagate(sys, cs->initial_orbit_state,
                                     Eigen::MatrixXd::Zero(ctx.grid.n, 3), ctx.grid);
            } else {
                const OdeSystem sys = make_absolute_system(k, cs->dry_mass, cs->specific_impulse);
                const StateVec6 x0 = vt.reference_orbit_initial_state + cs->initial_orbit_state;
                traj = rk4_propagate(sys, x0, Eigen::MatrixXd::Zero(ctx.grid.n, 3), ctx.grid);
            }
            const std::string path = prm.out + "_" + cs->name + ".csv";
            write_state_csv(path, traj);
            ctx.add_output(path);
        }
        if (prm.relative) {
            // Reference samples are stored at half steps; emit the grid points.
            Trajectory ref_traj;
            ref_traj.grid = ctx.grid;
            ref_traj.states.resize(ctx.grid.n + 1, 6);
            for (std::int64_t i = 0; i <= ctx.grid.n; ++i)
                ref_traj.states.row(i) = ref.state_at(ctx.grid.time(i));
            const std::string path = prm.out + "_reference.csv";
            write_state_csv(path, ref_traj);
            ctx.add_output(path);
        }
    }
    ctx.write_manifest(prm.out + "_manifest.json");
    return 0;
}

// ---------------------------------------------------------------------- attitude

struct AttitudeParams {
    std::vector<double> inertia{1.0, 2.0, 3.0};
    double orbit_rate = 1.0e-3;
    double duration_orbits = 1.0;
    double dt = 1.0;
    std::vector<double> omega0;  // empty = corotating equilibrium
    std::string out;
};

int run_attitude(const AttitudeParams& prm, RunContext& ctx) {
    ctx.params = {{"inertia", prm.inertia},
                  {"orbit_rate", prm.orbit_rate},
                  {"duration_orbits", prm.duration_orbits},
                  {"dt", prm.dt},
                  {"omega0", prm.omega0},
                  {"out", prm.out}};
    if (prm.inertia.size() != 3)
        throw std::invalid_argument("attitude: --inertia needs I1,I2,I3");
    const AttitudeDynamics dyn(Vec3(prm.inertia[0], prm.inertia[1], prm.inertia[2]),
                               prm.orbit_rate);
    AttitudeState init = corotating_equilibrium(prm.orbit_rate);
    if (!prm.omega0.empty()) {
        if (prm.omega0.size() != 3)
            throw std::invalid_argument("attitude: --omega0 needs wx,wy,wz");
        init.omega = Vec3(prm.omega0[0], prm.omega0[1], prm.omega0[2]);
    }
    init.validate();

    const double period = 2.0 * kPi / prm.orbit_rate;
    const auto n = std::max<std::int64_t>(
        static_cast<std::int64_t>(std::llround(prm.duration_orbits * period / prm.dt)), 1);
    ctx.grid = TimeGrid(0.0, prm.dt, n);
    ctx.grid_set = true;

    const OdeSystem sys = make_attitude_system(dyn);
    const Trajectory traj =
        rk4_propagate(sys, init.to_vector(), Eigen::MatrixXd::Zero(n, 0), ctx.grid);

    CsvWriter csv(prm.out, {"t", "wx", "wy", "wz", "nutation_deg", "orthonormality_drift"});
    for (std::int64_t i = 0; i <= n; ++i) {
        const AttitudeState s = AttitudeState::from_vector(traj.states.row(i));
        csv.row({ctx.grid.time(i), s.omega.x(), s.omega.y(), s.omega.z(),
                 rad2deg(nutation_angle(s)), orthonormality_drift(s)});
    }
    csv.close();
    ctx.add_output(prm.out);
    ctx.write_manifest(prm.out + ".manifest.json");
    return 0;
}

// ---------------------------------------------------------------------- illuminate

struct IlluminateParams {
    std::string mesh;
    std::string panels;
    std::string train_grid = "24x13";
    std::string test_grid = "23x11";
    int samples = 256;
    std::string knots = "10x12";
    double lambda = 3e-4;
    std::string out_prefix;
};

std::pair<int, int> parse_grid_spec(const std::string& s, const char* what) {
    const auto x = s.find('x');
    if (x == std::string::npos)
        throw std::invalid_argument(std::string(what) + ": expected NxM, got " + s);
    return {std::stoi(s.substr(0, x)), std::stoi(s.substr(x + 1))};
}

void write_samples_csv(const std::string& path, const std::vector<IlluminationSample>& samples) {
    CsvWriter csv(path, {"azimuth_rad", "elevation_rad", "fraction"});
    for (const auto& s : samples) csv.row({s.azimuth, s.elevation, s.illuminated_fraction});
}

int run_illuminate(const IlluminateParams& prm, RunContext& ctx) {
    ctx.params = {{"mesh", std::filesystem::absolute(prm.mesh).string()},
                  {"panels", std::filesystem::absolute(prm.panels).string()},
                  {"train_grid", prm.train_grid},
                  {"test_grid", prm.test_grid},
                  {"samples", prm.samples},
                  {"knots", prm.knots},
                  {"lambda", prm.lambda},
                  {"out_prefix", prm.out_prefix}};
    const auto [tr_az, tr_el] = parse_grid_spec(prm.train_grid, "--train-grid");
    const auto [te_az, te_el] = parse_grid_spec(prm.test_grid, "--test-grid");
    const auto [n_az_knots, n_el_knots] = parse_grid_spec(prm.knots, "--knots");

    const TriangleMesh mesh = load_mesh_with_panels(prm.mesh, prm.panels);
    const auto train = generate_training_grid(mesh, tr_az, tr_el, prm.samples);
    const auto test = generate_training_grid(mesh, te_az, te_el, prm.samples);
    const IlluminationSurrogate surrogate =
        fit_surrogate(train, n_az_knots, n_el_knots, prm.lambda);

    double sq = 0.0;
    for (const auto& s : test) {
        const double err =
            surrogate_eval(surrogate, s.azimuth, s.elevation).value - s.illuminated_fraction;
        sq += err * err;
    }
    const double rmse = std::sqrt(sq / test.size());

    const std::string train_path = prm.out_prefix + "_train.csv";
    const std::string test_path = prm.out_prefix + "_test.csv";
    const std::string surr_path = prm.out_prefix + "_surrogate.json";
    write_samples_csv(train_path, train);
    write_samples_csv(test_path, test);
    {
        json sj;
        sj["n_az"] = surrogate.n_az;
        sj["n_el"] = surrogate.n_el;
        sj["lambda"] = surrogate.lambda;
        sj["el_knots"] = surrogate.el_knots;
        std::vector<double> coef(surrogate.coef.data(),
                                 surrogate.coef.data() + surrogate.coef.size());
        sj["coefficients_col_major"] = coef;
        std::ofstream out(surr_path);
        out << sj.dump(2) << "\n";
    }
    ctx.add_output(train_path);
    ctx.add_output(test_path);
    ctx.add_output(surr_path);
    ctx.params["held_out_rmse"] = rmse;
    std::cout << "held-out rmse = " << format_double(rmse) << "\n";
    ctx.write_manifest(prm.out_prefix + "_manifest.json");
    return 0;
}

// ---------------------------------------------------------------------- comm

struct CommParams {
    std::string config;
    double duration_orbits = 1.0;
    double dt = 10.0;
    std::string out;
};

void write_comm_csv(const std::string& path, const std::vector<LinkSample>& series,
                    const std::vector<GroundStationGeodetic>& stations) {
    std::vector<std::string> cols{"t"};
    for (const auto& gs : stations) cols.push_back("rate_" + gs.name);
    for (const auto& gs : stations) cols.push_back("los_" + gs.name);
    cols.push_back("max_rate");
    cols.push_back("cumulative_bits");
    CsvWriter csv(path, cols);
    for (const auto& s : series) {
        std::vector<double> row{s.t};
        for (double r : s.station_rates) row.push_back(r);
        for (int los : s.los) row.push_back(static_cast<double>(los));
        row.push_back(s.max_rate);
        row.push_back(s.cumulative_bits);
        csv.row(row);
    }
}

std::vector<GroundStationGeodetic> station_list(
    const std::map<std::string, GroundStationSpec>& gs) {
    std::vector<GroundStationGeodetic> out;
    for (const auto& [name, g] : gs) out.push_back({g.name, g.lon, g.lat, g.alt});
    return out;
}

int run_comm(const CommParams& prm, RunContext& ctx) {
    const PhysicalConstants k = standard_earth_constants();
    ctx.params = {{"config", std::filesystem::absolute(prm.config).string()},
                  {"duration_orbits", prm.duration_orbits},
                  {"dt", prm.dt},
                  {"out", prm.out}};
    const MissionSpec spec = load_mission(prm.config);
    const LinkParameters link{};  // toolkit default link budget

    if (std::holds_alternative<CubesatSpec>(spec)) {
        const auto& cs = std::get<CubesatSpec>(spec);
        if (cs.groundstations.empty())
            throw SpecError("groundstations",
                            "empty dictionary: the communication discipline is not modeled "
                            "for this config");
        if (cs.orbit_model == OrbitModel::relative)
            throw SpecError("orbit_model",
                            "a standalone relative cubesat has no reference orbit; use a "
                            "virtual telescope config");
        ctx.grid = grid_for_orbits(k, cs.initial_orbit_state, prm.duration_orbits, prm.dt);
        ctx.grid_set = true;
        const OdeSystem sys = make_absolute_system(k, cs.dry_mass, cs.specific_impulse);
        const Trajectory traj = rk4_propagate(sys, cs.initial_orbit_state,
                                              Eigen::MatrixXd::Zero(ctx.grid.n, 3), ctx.grid);
        const auto stations = station_list(cs.groundstations);
        const auto series = total_data(traj, stations, link, ctx.grid, k);
        const std::string path = prm.out + "_" + cs.name + ".csv";
        write_comm_csv(path, series, stations);
        ctx.add_output(path);
    } else {
        const auto& vt = std::get<VirtualTelescopeSpec>(spec);
        if (vt.groundstations.empty())
            throw SpecError("groundstations",
                            "empty dictionary: the communication discipline is not modeled "
                            "for this config");
        ctx.grid = grid_for_orbits(k, vt.reference_orbit_initial_state, prm.duration_orbits,
                                   prm.dt);
        ctx.grid_set = true;
        const ReferenceOrbit ref = precompute_reference(k, vt.reference_orbit_initial_state,
                                                        ctx.grid, cache_dir_from_env());
        const auto stations = station_list(vt.groundstations);
        for (const CubesatSpec* cs : {&vt.optics_cubesat, &vt.detector_cubesat}) {
            const OdeSystem sys = make_relative_system(ref, k, cs->dry_mass, cs->specific_impulse);
            const Trajectory rel = rk4_propagate(sys, cs->initial_orbit_state,
                                                 Eigen::MatrixXd::Zero(ctx.grid.n, 3), ctx.grid);
            Trajectory abs;
            abs.grid = ctx.grid;
            abs.states.resize(ctx.grid.n + 1, 6);
            for (std::int64_t i = 0; i <= ctx.grid.n; ++i)
                abs.states.row(i) =
                    rel.states.row(i) + ref.state_at(ctx.grid.time(i)).transpose();
            const auto series = total_data(abs, stations, link, ctx.grid, k);
            const std::string path = prm.out + "_" + cs->name + ".csv";
            write_comm_csv(path, series, stations);
            ctx.add_output(path);
        }
    }
    ctx.write_manifest(prm.out + "_manifest.json");
    return 0;
}

// ---------------------------------------------------------------------- optimize

struct OptimizeParams {
    std::string config;
    double duration_orbits = 1.0;
    int n_steps = 500;
    int max_outer = 30;
    double feas_tol = 1e-3;
    double opt_tol = 1e-6;
    double rho = 100.0;
    std::string out_prefix;
};

int run_optimize(const OptimizeParams& prm, RunContext& ctx) {
    const PhysicalConstants k = standard_earth_constants();
    ctx.params = {{"config", std::filesystem::absolute(prm.config).string()},
                  {"duration_orbits", prm.duration_orbits},
                  {"n_steps", prm.n_steps},
                  {"max_outer", prm.max_outer},
                  {"feas_tol", prm.feas_tol},
                  {"opt_tol", prm.opt_tol},
                  {"rho", prm.rho},
                  {"out_prefix", prm.out_prefix}};
    const MissionSpec spec = load_mission(prm.config);
    if (!std::holds_alternative<VirtualTelescopeSpec>(spec))
        throw SpecError("type", "optimize needs a virtual_telescope config");
    const auto& vt = std::get<VirtualTelescopeSpec>(spec);

    const double period = orbital_period(k, vt.reference_orbit_initial_state);
    const double dt = prm.duration_orbits * period / prm.n_steps;
    ctx.grid = TimeGrid(0.0, dt, prm.n_steps);
    ctx.grid_set = true;

    const MissionModel model = assemble(vt, k, ctx.grid, cache_dir_from_env());
    const TrajOptProblem problem = make_trajopt_problem(model, prm.rho);
    SolverOptions options;
    options.max_outer = prm.max_outer;
    options.feas_tol = prm.feas_tol;
    options.opt_tol = prm.opt_tol;
    const SolveResult result = solve(problem, options);

    const std::string thrust_path = prm.out_prefix + "_thrust.csv";
    {
        CsvWriter csv(thrust_path, {"t", "T1x", "T1y", "T1z", "T2x", "T2y", "T2z"});
        for (std::int64_t i = 0; i < ctx.grid.n; ++i)
            csv.row({ctx.grid.time(i), result.thrust1(i, 0), result.thrust1(i, 1),
                     result.thrust1(i, 2), result.thrust2(i, 0), result.thrust2(i, 1),
                     result.thrust2(i, 2)});
    }
    const std::string formation_path = prm.out_prefix + "_formation.csv";
    {
        const auto mask = window_mask(ctx.grid, vt.observation_windows);
        CsvWriter csv(formation_path,
                      {"t", "separation_km", "length_along_sun_m", "pointing_error_arcsec",
                       "view_plane_error_m", "in_window"});
        for (std::int64_t i = 0; i <= ctx.grid.n; ++i) {
            const auto g = TelescopeGeometry::from(result.traj1.states.row(i).head<3>(),
                                                   result.traj2.states.row(i).head<3>(),
                                                   vt.sun_direction);
            csv.row({ctx.grid.time(i), g.separation_km, 1000.0 * g.length_along_sun_km,
                     g.pointing_error_rad / arcsec2rad(1.0), g.view_plane_error_m,
                     mask[i] ? 1.0 : 0.0});
        }
    }
    const std::string conv_path = prm.out_prefix + "_convergence.csv";
    report_convergence(result.report, conv_path);

    ctx.add_output(thrust_path);
    ctx.add_output(formation_path);
    ctx.add_output(conv_path);
    ctx.params["converged"] = result.report.converged;
    ctx.params["termination"] = result.report.termination;
    ctx.write_manifest(prm.out_prefix + "_manifest.json");

    std::cout << (result.report.converged ? "converged" : "did not converge") << ": objective = "
              << format_double(result.objective)
              << " kg, feasibility = " << format_double(result.feasibility) << "\n";
    return result.report.converged ? 0 : 3;
}

// ---------------------------------------------------------------------- rerun

int dispatch_from_manifest(const std::string& manifest_path, const std::string& new_out);

// ---------------------------------------------------------------------- main

int dispatch(const std::string& sub, const json& params) {
    RunContext ctx;
    ctx.subcommand = sub;
    if (sub == "propagate") {
        PropagateParams p;
        p.config = params.at("config");
        p.duration_orbits = params.at("duration_orbits");
        p.dt = params.at("dt");
        p.relative = params.at("relative");
        p.out = params.at("out");
        return run_propagate(p, ctx);
    }
    if (sub == "attitude") {
        AttitudeParams p;
        p.inertia = params.at("inertia").get<std::vector<double>>();
        p.orbit_rate = params.at("orbit_rate");
        p.duration_orbits = params.at("duration_orbits");
        p.dt = params.at("dt");
        p.omega0 = params.at("omega0").get<std::vector<double>>();
        p.out = params.at("out");
        return run_attitude(p, ctx);
    }
    if (sub == "illuminate") {
        IlluminateParams p;
        p.mesh = params.at("mesh");
        p.panels = params.at("panels");
        p.train_grid = params.at("train_grid");
        p.test_grid = params.at("test_grid");
        p.samples = params.at("samples");
        p.knots = params.at("knots");
        p.lambda = params.at("lambda");
        p.out_prefix = params.at("out_prefix");
        return run_illuminate(p, ctx);
    }
    if (sub == "comm") {
        CommParams p;
        p.config = params.at("config");
        p.duration_orbits = params.at("duration_orbits");
        p.dt = params.at("dt");
        p.out = params.at("out");
        return run_comm(p, ctx);
    }
    if (sub == "optimize") {
        OptimizeParams p;
        p.config = params.at("config");
        p.duration_orbits = params.at("duration_orbits");
        p.n_steps = params.at("n_steps");
        p.max_outer = params.at("max_outer");
        p.feas_tol = params.at("feas_tol");
        p.opt_tol = params.at("opt_tol");
        p.rho = params.at("rho");
        p.out_prefix = params.at("out_prefix");
        return run_optimize(p, ctx);
    }
    throw std::invalid_argument("unknown subcommand in manifest: " + sub);
}

int dispatch_from_manifest(const std::string& manifest_path, const std::string& new_out) {
    std::ifstream in(manifest_path);
    if (!in) throw std::invalid_argument("cannot open manifest: " + manifest_path);
    json m = json::parse(in);
    json params = m.at("params");
    const std::string sub = m.at("subcommand");
    // Redirect whichever output key the subcommand uses.
    if (params.contains("out")) params["out"] = new_out;
    if (params.contains("out_prefix")) params["out_prefix"] = new_out;
    return dispatch(sub, params);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"spacecraft multidisciplinary analysis and trajectory optimization toolkit"};
    app.set_version_flag("--version", talos::kVersion);
    app.require_subcommand(1);

    PropagateParams pp;
    auto* prop = app.add_subcommand("propagate", "propagate orbits and write state CSVs");
    prop->add_option("--config", pp.config, "mission config (JSON)")->required();
    prop->add_option("--duration-orbits", pp.duration_orbits, "horizon in orbits");
    prop->add_option("--dt", pp.dt, "step size [s]")->check(CLI::PositiveNumber);
    auto* rel = prop->add_flag("--relative", pp.relative, "relative propagation");
    prop->add_flag("--absolute", "absolute propagation (default)")->excludes(rel);
    prop->add_option("--out", pp.out, "output prefix")->required();

    AttitudeParams ap;
    auto* att = app.add_subcommand("attitude", "propagate attitude dynamics");
    att->add_option("--inertia", ap.inertia, "principal moments I1,I2,I3 [kg m^2]")
        ->delimiter(',')->expected(3)->required();
    att->add_option("--orbit-rate", ap.orbit_rate, "orbital angular speed [rad/s]")
        ->check(CLI::PositiveNumber);
    att->add_option("--duration-orbits", ap.duration_orbits, "horizon in orbits");
    att->add_option("--dt", ap.dt, "step size [s]")->check(CLI::PositiveNumber);
    att->add_option("--omega0", ap.omega0, "initial body rates wx,wy,wz [rad/s]")
        ->delimiter(',')->expected(3);
    att->add_option("--out", ap.out, "output CSV path")->required();

    IlluminateParams ip;
    auto* ill = app.add_subcommand("illuminate", "ray-trace panel illumination and fit the surrogate");
    ill->add_option("--mesh", ip.mesh, "ASCII STL mesh")->required();
    ill->add_option("--panels", ip.panels, "panel-triangle sidecar")->required();
    ill->add_option("--train-grid", ip.train_grid, "training grid NxM (az x el)");
    ill->add_option("--test-grid", ip.test_grid, "test grid NxM");
    ill->add_option("--samples", ip.samples, "samples per triangle")->check(CLI::PositiveNumber);
    ill->add_option("--knots", ip.knots, "spline basis counts PxQ");
    ill->add_option("--lambda", ip.lambda, "regularization weight");
    ill->add_option("--out-prefix", ip.out_prefix, "output prefix")->required();

    CommParams cp;
    auto* comm = app.add_subcommand("comm", "ground-station link analysis");
    comm->add_option("--config", cp.config, "mission config (JSON)")->required();
    comm->add_option("--duration-orbits", cp.duration_orbits, "horizon in orbits");
    comm->add_option("--dt", cp.dt, "step size [s]")->check(CLI::PositiveNumber);
    comm->add_option("--out", cp.out, "output prefix")->required();

    OptimizeParams op;
    auto* opt = app.add_subcommand("optimize", "solve the virtual-telescope trajectory problem");
    opt->add_option("--config", op.config, "virtual telescope config (JSON)")->required();
    opt->add_option("--duration-orbits", op.duration_orbits, "horizon in orbits");
    opt->add_option("--n-steps", op.n_steps, "control grid steps")->check(CLI::PositiveNumber);
    opt->add_option("--max-outer", op.max_outer, "outer iteration cap")->check(CLI::PositiveNumber);
    opt->add_option("--feas-tol", op.feas_tol, "feasibility tolerance");
    opt->add_option("--opt-tol", op.opt_tol, "optimality tolerance");
    opt->add_option("--rho", op.rho, "KS aggregation sharpness");
    opt->add_option("--out-prefix", op.out_prefix, "output prefix")->required();

    std::string manifest_path, rerun_out;
    auto* rerun = app.add_subcommand("rerun", "replay a recorded run from its manifest");
    rerun->add_option("manifest", manifest_path, "manifest JSON path")->required();
    rerun->add_option("--out", rerun_out, "new output prefix")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        RunContext ctx;
        if (prop->parsed()) {
            ctx.subcommand = "propagate";
            return run_propagate(pp, ctx);
        }
        if (att->parsed()) {
            ctx.subcommand = "attitude";
            return run_attitude(ap, ctx);
        }
        if (ill->parsed()) {
            ctx.subcommand = "illuminate";
            return run_illuminate(ip, ctx);
        }
        if (comm->parsed()) {
            ctx.subcommand = "comm";
            return run_comm(cp, ctx);
        }
        if (opt->parsed()) {
            ctx.subcommand = "optimize";
            return run_optimize(op, ctx);
        }
        if (rerun->parsed()) return dispatch_from_manifest(manifest_path, rerun_out);
    } catch (const talos::DivergenceError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const talos::SpecError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::domain_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
