#ifndef TALOS_MISSION_HPP
#define TALOS_MISSION_HPP

#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "talos/attitude.hpp"
#include "talos/comms.hpp"
#include "talos/orbit_dynamics.hpp"
#include "talos/types.hpp"

namespace talos {

// Validation failure carrying the path of the offending field, e.g.
// "groundstations.SanDiego.lat".
struct SpecError : std::runtime_error {
    std::string field_path;
    SpecError(std::string path, const std::string& msg)
        : std::runtime_error(path.empty() ? msg : path + ": " + msg),
          field_path(std::move(path)) {}
};

struct GroundStationSpec {
    std::string name;
    double lon = 0.0;  // [deg]
    double lat = 0.0;  // [deg]
    double alt = 0.0;  // [km]
};

struct AttitudeSettings {
    Vec3 inertia{1.0, 2.0, 3.0};  // principal moments [kg m^2]
};

enum class OrbitModel { absolute, relative };

struct CubesatSpec {
    std::string name;
    std::map<std::string, GroundStationSpec> groundstations;
    OrbitModel orbit_model = OrbitModel::absolute;
    std::optional<AttitudeSettings> attitude;  // nullopt = attitude not modeled
    double dry_mass = 1.0;                     // [kg]
    StateVec6 initial_orbit_state;             // ECI state, or offset from the reference
    double specific_impulse = 47.0;            // [s]
    double max_thrust_n = 0.05;                // per-component thrust bound [N]
};

struct VirtualTelescopeSpec {
    CubesatSpec optics_cubesat;
    CubesatSpec detector_cubesat;
    std::map<std::string, GroundStationSpec> groundstations;
    double telescope_length_m = 40.0;
    double telescope_length_tol_mm = 0.15;
    double telescope_view_halfangle_tol_arcsec = 90.0;
    double max_separation_all_phases_km = 5.0;
    std::vector<std::pair<double, double>> observation_windows;  // [s, s]
    StateVec6 reference_orbit_initial_state;
    Vec3 sun_direction{1.0, 0.0, 0.0};  // fixed inertial unit vector
};

using MissionSpec = std::variant<CubesatSpec, VirtualTelescopeSpec>;

namespace detail_spec {

using nlohmann::json;

inline void reject_unknown(const json& j, const std::set<std::string>& allowed,
                           const std::string& path) {
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!allowed.count(it.key()))
            throw SpecError(path.empty() ? it.key() : path + "." + it.key(), "unknown field");
}


inline std::string sub(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
}

inline const json& require(const json& j, const std::string& key, const std::string& path) {
    auto it = j.find(key);
    if (it == j.end()) throw SpecError(sub(path, key), "missing required field");
    return *it;
}

inline double number(const json& j, const std::string& path) {
    if (!j.is_number()) throw SpecError(path, "expected a number");
    return j.get<double>();
}

inline std::string text(const json& j, const std::string& path) {
    if (!j.is_string()) throw SpecError(path, "expected a string");
    return j.get<std::string>();
}

inline StateVec6 state6(const json& j, const std::string& path) {
    if (!j.is_array() || j.size() != 6) throw SpecError(path, "expected an array of 6 numbers");
    StateVec6 v;
    for (int i = 0; i < 6; ++i) v[i] = number(j[i], path + "[" + std::to_string(i) + "]");
    if (!v.allFinite()) throw SpecError(path, "components must be finite");
    return v;
}

inline Vec3 vec3(const json& j, const std::string& path) {
    if (!j.is_array() || j.size() != 3) throw SpecError(path, "expected an array of 3 numbers");
    Vec3 v;
    for (int i = 0; i < 3; ++i) v[i] = number(j[i], path + "[" + std::to_string(i) + "]");
    return v;
}

inline GroundStationSpec parse_groundstation(const json& j, const std::string& path) {
    if (!j.is_object()) throw SpecError(path, "expected an object");
    reject_unknown(j, {"name", "lon", "lat", "alt"}, path);
    GroundStationSpec gs;
    gs.name = text(require(j, "name", path), sub(path, "name"));
    if (gs.name.empty()) throw SpecError(sub(path, "name"), "must be nonempty");
    gs.lon = number(require(j, "lon", path), sub(path, "lon"));
    gs.lat = number(require(j, "lat", path), sub(path, "lat"));
    gs.alt = number(require(j, "alt", path), sub(path, "alt"));
    if (!(gs.lat >= -90.0 && gs.lat <= 90.0)) throw SpecError(sub(path, "lat"), "must be in [-90, 90]");
    if (!(gs.lon >= -180.0 && gs.lon <= 180.0))
        throw SpecError(sub(path, "lon"), "must be in [-180, 180]");
    if (!(gs.alt >= 0.0)) throw SpecError(sub(path, "alt"), "must be >= 0");
    return gs;
}

inline std::map<std::string, GroundStationSpec> parse_groundstations(const json& j,
                                                                     const std::string& path) {
    if (!j.is_object()) throw SpecError(path, "expected an object");
    std::map<std::string, GroundStationSpec> out;
    for (auto it = j.begin(); it != j.end(); ++it) {
        const std::string p = sub(path, it.key());
        GroundStationSpec gs = parse_groundstation(it.value(), p);
        if (gs.name != it.key()) throw SpecError(p + ".name", "must match its dictionary key");
        out.emplace(it.key(), std::move(gs));
    }
    return out;
}

inline CubesatSpec parse_cubesat(const json& j, const std::string& path) {
    if (!j.is_object()) throw SpecError(path, "expected an object");
    reject_unknown(j,
                   {"name", "groundstations", "orbit_model", "attitude", "dry_mass",
                    "initial_orbit_state", "specific_impulse", "max_thrust_n"},
                   path);
    CubesatSpec cs;
    cs.name = text(require(j, "name", path), sub(path, "name"));
    if (cs.name.empty()) throw SpecError(sub(path, "name"), "must be nonempty");
    cs.groundstations =
        parse_groundstations(require(j, "groundstations", path), sub(path, "groundstations"));
    const std::string model =
        text(require(j, "orbit_model", path), sub(path, "orbit_model"));
    if (model == "absolute") cs.orbit_model = OrbitModel::absolute;
    else if (model == "relative") cs.orbit_model = OrbitModel::relative;
    else throw SpecError(sub(path, "orbit_model"), "must be 'absolute' or 'relative'");

    const json& att = require(j, "attitude", path);
    if (att.is_null()) {
        cs.attitude = std::nullopt;
    } else if (att.is_object()) {
        reject_unknown(att, {"inertia"}, sub(path, "attitude"));
        AttitudeSettings as;
        as.inertia = vec3(require(att, "inertia", sub(path, "attitude")), sub(sub(path, "attitude"), "inertia"));
        if (!(as.inertia.minCoeff() > 0.0))
            throw SpecError(sub(sub(path, "attitude"), "inertia"), "moments must be > 0");
        cs.attitude = as;
    } else {
        throw SpecError(sub(path, "attitude"), "expected null or an object");
    }

    cs.dry_mass = number(require(j, "dry_mass", path), sub(path, "dry_mass"));
    if (!(cs.dry_mass > 0.0)) throw SpecError(sub(path, "dry_mass"), "must be > 0");
    cs.initial_orbit_state =
        state6(require(j, "initial_orbit_state", path), sub(path, "initial_orbit_state"));
    cs.specific_impulse =
        number(require(j, "specific_impulse", path), sub(path, "specific_impulse"));
    if (!(cs.specific_impulse > 0.0)) throw SpecError(sub(path, "specific_impulse"), "must be > 0");
    if (j.contains("max_thrust_n")) {
        cs.max_thrust_n = number(j["max_thrust_n"], sub(path, "max_thrust_n"));
        if (!(cs.max_thrust_n > 0.0)) throw SpecError(sub(path, "max_thrust_n"), "must be > 0");
    }
    return cs;
}

inline VirtualTelescopeSpec parse_telescope(const json& j, const std::string& path) {
    reject_unknown(j,
                   {"type", "optics_cubesat", "detector_cubesat", "groundstations",
                    "telescope_length_m", "telescope_length_tol_mm",
                    "telescope_view_halfangle_tol_arcsec", "max_separation_all_phases_km",
                    "observation_windows", "reference_orbit_initial_state", "sun_direction"},
                   path);
    VirtualTelescopeSpec vt;
    const std::string op = path.empty() ? "optics_cubesat" : sub(path, "optics_cubesat");
    const std::string dp = path.empty() ? "detector_cubesat" : sub(path, "detector_cubesat");
    vt.optics_cubesat = parse_cubesat(require(j, "optics_cubesat", path), op);
    vt.detector_cubesat = parse_cubesat(require(j, "detector_cubesat", path), dp);
    if (vt.optics_cubesat.orbit_model != OrbitModel::relative)
        throw SpecError(op + ".orbit_model", "virtual telescope cubesats must be 'relative'");
    if (vt.detector_cubesat.orbit_model != OrbitModel::relative)
        throw SpecError(dp + ".orbit_model", "virtual telescope cubesats must be 'relative'");
    vt.groundstations =
        parse_groundstations(require(j, "groundstations", path),
                             path.empty() ? "groundstations" : sub(path, "groundstations"));

    const auto num_field = [&](const char* key) {
        return number(require(j, key, path), path.empty() ? key : path + "." + key);
    };
    vt.telescope_length_m = num_field("telescope_length_m");
    vt.telescope_length_tol_mm = num_field("telescope_length_tol_mm");
    vt.telescope_view_halfangle_tol_arcsec = num_field("telescope_view_halfangle_tol_arcsec");
    vt.max_separation_all_phases_km = num_field("max_separation_all_phases_km");
    if (!(vt.telescope_length_m > 0.0))
        throw SpecError("telescope_length_m", "must be > 0");
    if (!(vt.telescope_length_tol_mm > 0.0))
        throw SpecError("telescope_length_tol_mm", "must be > 0");
    if (!(vt.telescope_view_halfangle_tol_arcsec > 0.0))
        throw SpecError("telescope_view_halfangle_tol_arcsec", "must be > 0");
    if (!(vt.max_separation_all_phases_km > 0.0))
        throw SpecError("max_separation_all_phases_km", "must be > 0");

    const json& win = require(j, "observation_windows", path);
    const std::string wp = path.empty() ? "observation_windows" : sub(path, "observation_windows");
    if (!win.is_array()) throw SpecError(wp, "expected an array of [t_start, t_end] pairs");
    for (std::size_t i = 0; i < win.size(); ++i) {
        const std::string ip = wp + "[" + std::to_string(i) + "]";
        const json& w = win[i];
        if (!w.is_array() || w.size() != 2) throw SpecError(ip, "expected [t_start, t_end]");
        const double a = number(w[0], ip + "[0]");
        const double b = number(w[1], ip + "[1]");
        if (!(a >= 0.0)) throw SpecError(ip + "[0]", "must be >= 0");
        if (!(b > a)) throw SpecError(ip + "[1]", "must be > t_start");
        vt.observation_windows.emplace_back(a, b);
    }
    for (std::size_t i = 1; i < vt.observation_windows.size(); ++i)
        if (vt.observation_windows[i].first < vt.observation_windows[i - 1].second)
            throw SpecError(wp, "windows must be sorted and non-overlapping");

    vt.reference_orbit_initial_state =
        state6(require(j, "reference_orbit_initial_state", path),
               path.empty() ? "reference_orbit_initial_state"
                            : sub(path, "reference_orbit_initial_state"));
    vt.sun_direction = vec3(require(j, "sun_direction", path),
                            path.empty() ? "sun_direction" : sub(path, "sun_direction"));
    const double sn = vt.sun_direction.norm();
    if (!(sn > 0.0)) throw SpecError("sun_direction", "must be nonzero");
    vt.sun_direction /= sn;
    return vt;
}

inline json groundstations_json(const std::map<std::string, GroundStationSpec>& gs) {
    json out = json::object();
    for (const auto& [key, g] : gs)
        out[key] = {{"name", g.name}, {"lon", g.lon}, {"lat", g.lat}, {"alt", g.alt}};
    return out;
}

inline json cubesat_json(const CubesatSpec& cs) {
    json j;
    j["name"] = cs.name;
    j["groundstations"] = groundstations_json(cs.groundstations);
    j["orbit_model"] = cs.orbit_model == OrbitModel::absolute ? "absolute" : "relative";
    if (cs.attitude)
        j["attitude"] = {{"inertia", {cs.attitude->inertia.x(), cs.attitude->inertia.y(),
                                      cs.attitude->inertia.z()}}};
    else
        j["attitude"] = nullptr;
    j["dry_mass"] = cs.dry_mass;
    j["initial_orbit_state"] = std::vector<double>(cs.initial_orbit_state.data(),
                                                   cs.initial_orbit_state.data() + 6);
    j["specific_impulse"] = cs.specific_impulse;
    j["max_thrust_n"] = cs.max_thrust_n;
    return j;
}

inline json telescope_json(const VirtualTelescopeSpec& vt) {
    json j;
    j["type"] = "virtual_telescope";
    j["optics_cubesat"] = cubesat_json(vt.optics_cubesat);
    j["detector_cubesat"] = cubesat_json(vt.detector_cubesat);
    j["groundstations"] = groundstations_json(vt.groundstations);
    j["telescope_length_m"] = vt.telescope_length_m;
    j["telescope_length_tol_mm"] = vt.telescope_length_tol_mm;
    j["telescope_view_halfangle_tol_arcsec"] = vt.telescope_view_halfangle_tol_arcsec;
    j["max_separation_all_phases_km"] = vt.max_separation_all_phases_km;
    j["observation_windows"] = json::array();
    for (const auto& [a, b] : vt.observation_windows)
        j["observation_windows"].push_back({a, b});
    j["reference_orbit_initial_state"] = std::vector<double>(
        vt.reference_orbit_initial_state.data(), vt.reference_orbit_initial_state.data() + 6);
    j["sun_direction"] =
        std::vector<double>{vt.sun_direction.x(), vt.sun_direction.y(), vt.sun_direction.z()};
    return j;
}

} // namespace detail_spec

inline MissionSpec parse_mission_json(const nlohmann::json& j) {
    if (!j.is_object()) throw SpecError("", "document root must be an object");
    const std::string type =
        detail_spec::text(detail_spec::require(j, "type", ""), "type");
    if (type == "virtual_telescope") return detail_spec::parse_telescope(j, "");
    if (type == "cubesat") {
        nlohmann::json body = j;
        body.erase("type");
        return detail_spec::parse_cubesat(body, "");
    }
    throw SpecError("type", "must be 'cubesat' or 'virtual_telescope'");
}

inline MissionSpec load_mission(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SpecError("", "cannot open mission file: " + path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw SpecError("", std::string("JSON parse error: ") + e.what());
    }
    return parse_mission_json(j);
}

// Canonical serialization: alphabetical keys, shortest round-trip float
// formatting, every field (defaults included) written explicitly. The
// serialize -> parse -> serialize composition is a fixed point.
inline std::string spec_roundtrip(const MissionSpec& spec) {
    nlohmann::json j;
    if (std::holds_alternative<VirtualTelescopeSpec>(spec)) {
        j = detail_spec::telescope_json(std::get<VirtualTelescopeSpec>(spec));
    } else {
        j = detail_spec::cubesat_json(std::get<CubesatSpec>(spec));
        j["type"] = "cubesat";
    }
    return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Assembly: turn a telescope specification into configured dynamics systems
// and discipline instances.

struct SpacecraftModel {
    std::string name;
    double dry_mass = 0.0;
    double specific_impulse = 0.0;
    double max_thrust_n = 0.0;
    StateVec6 initial_offset_state;  // relative to the reference orbit
    OdeSystem dynamics;              // relative dynamics (n_x = 6, n_u = 3)
};

struct CommDiscipline {
    std::string cubesat;
    GroundStationGeodetic station;
};

struct AttitudeDiscipline {
    std::string cubesat;
    AttitudeDynamics dynamics;
    OdeSystem system;
};

struct MissionModel {
    PhysicalConstants constants{};
    TimeGrid grid;
    VirtualTelescopeSpec spec;
    std::shared_ptr<ReferenceOrbit> reference;
    std::vector<SpacecraftModel> spacecraft;            // optics, detector
    std::vector<CommDiscipline> comm_disciplines;       // station x cubesat
    std::vector<AttitudeDiscipline> attitude_disciplines;

    std::vector<std::string> disciplines() const {
        std::vector<std::string> out;
        for (const auto& sc : spacecraft) out.push_back("orbit:" + sc.name);
        for (const auto& cd : comm_disciplines)
            out.push_back("comm:" + cd.cubesat + ":" + cd.station.name);
        for (const auto& ad : attitude_disciplines) out.push_back("attitude:" + ad.cubesat);
        return out;
    }
};

// Precompute/load the reference orbit, then wire one relative-dynamics
// system per CubeSat, one comm discipline per (station, cubesat) pair and
// attitude systems only where the attitude field is set. Pure function of
// (spec, constants, grid) up to the cache side channel.
inline MissionModel assemble(const VirtualTelescopeSpec& spec, const PhysicalConstants& k,
                             const TimeGrid& grid, const std::string& cache_dir = {}) {
    MissionModel model;
    model.constants = k;
    model.grid = grid;
    model.spec = spec;
    model.reference = std::make_shared<ReferenceOrbit>(
        precompute_reference(k, spec.reference_orbit_initial_state, grid, cache_dir));

    for (const CubesatSpec* cs : {&spec.optics_cubesat, &spec.detector_cubesat}) {
        SpacecraftModel sc;
        sc.name = cs->name;
        sc.dry_mass = cs->dry_mass;
        sc.specific_impulse = cs->specific_impulse;
        sc.max_thrust_n = cs->max_thrust_n;
        sc.initial_offset_state = cs->initial_orbit_state;
        sc.dynamics = make_relative_system(*model.reference, k, cs->dry_mass, cs->specific_impulse);
        model.spacecraft.push_back(std::move(sc));

        if (cs->attitude) {
            const double orbit_rate =
                2.0 * kPi / orbital_period(k, spec.reference_orbit_initial_state);
            AttitudeDynamics dyn(cs->attitude->inertia, orbit_rate);
            model.attitude_disciplines.push_back(
                {cs->name, dyn, make_attitude_system(dyn)});
        }
        for (const auto& [name, gs] : spec.groundstations)
            model.comm_disciplines.push_back(
                {cs->name, GroundStationGeodetic{gs.name, gs.lon, gs.lat, gs.alt}});
    }
    return model;
}

} // namespace talos

#endif // TALOS_MISSION_HPP
