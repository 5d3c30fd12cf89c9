#include "iepb/scenario_io.hpp"

#include <fstream>
#include <stdexcept>

namespace iepb {

using nlohmann::json;

nlohmann::json scenario_to_json(const ScenarioSpec& s) {
    json j;
    j["v0_mps"] = s.v0_mps;
    j["duration_s"] = s.duration_s;
    j["controller"] = s.controller == ControllerKind::kSmc ? "smc" : "pid";
    j["dt_plant_s"] = s.dt_plant_s;
    j["t_ctrl_s"] = s.t_ctrl_s;
    j["per_wheel_control"] = s.per_wheel_control;
    j["seed"] = s.seed;
    j["noise_vx_std"] = s.noise_vx_std;
    j["noise_omega_std"] = s.noise_omega_std;

    j["road"] = json::array();
    for (const auto& seg : s.road)
        j["road"].push_back({{"t_s", seg.t_s}, {"mu", seg.mu}});

    j["vehicle"] = {{"mass_kg", s.vehicle.mass_kg},
                    {"cg_to_front_m", s.vehicle.cg_to_front_m},
                    {"cg_to_rear_m", s.vehicle.cg_to_rear_m},
                    {"cg_height_m", s.vehicle.cg_height_m},
                    {"wheel_radius_front_m", s.vehicle.wheel_radius_front_m},
                    {"wheel_radius_rear_m", s.vehicle.wheel_radius_rear_m},
                    {"wheel_inertia_front", s.vehicle.wheel_inertia_front},
                    {"wheel_inertia_rear", s.vehicle.wheel_inertia_rear},
                    {"gravity", s.vehicle.gravity}};
    j["tyre"] = {{"a0", s.tyre.a0}, {"a1", s.tyre.a1}, {"a2", s.tyre.a2},
                 {"a3", s.tyre.a3}, {"a4", s.tyre.a4}, {"a5", s.tyre.a5},
                 {"a6", s.tyre.a6}, {"a7", s.tyre.a7}, {"a8", s.tyre.a8}};
    j["motor"] = {{"v_a", s.motor.v_a},   {"r_a", s.motor.r_a},
                  {"l_a", s.motor.l_a},   {"k_e", s.motor.k_e},
                  {"k_t", s.motor.k_t},   {"j_m", s.motor.j_m},
                  {"c_m", s.motor.c_m}};
    j["drivetrain"] = {{"i12", s.drivetrain.i12},
                       {"i35", s.drivetrain.i35},
                       {"i68", s.drivetrain.i68},
                       {"eta12", s.drivetrain.eta12},
                       {"eta35", s.drivetrain.eta35},
                       {"eta68", s.drivetrain.eta68},
                       {"eta21", s.drivetrain.eta21},
                       {"eta53", s.drivetrain.eta53},
                       {"eta86", s.drivetrain.eta86},
                       {"eta89", s.drivetrain.eta89},
                       {"j1", s.drivetrain.j1},
                       {"j_stage2", s.drivetrain.j_stage2},
                       {"j_stage3", s.drivetrain.j_stage3},
                       {"j_out", s.drivetrain.j_out},
                       {"c1", s.drivetrain.c1},
                       {"c2", s.drivetrain.c2},
                       {"c3", s.drivetrain.c3}};
    j["screw"] = {{"p_h", s.screw.p_h},
                  {"d", s.screw.d},
                  {"u_s", s.screw.u_s},
                  {"f_s", s.screw.f_s},
                  {"preload_n", s.screw.preload_n}};
    j["caliper"] = {{"k_c", s.caliper.k_c},   {"b_c", s.caliper.b_c},
                    {"s_mc", s.caliper.s_mc}, {"mu_b", s.caliper.mu_b},
                    {"r", s.caliper.r},       {"s_max", s.caliper.s_max}};
    j["observer"] = {{"k", s.observer.k},
                     {"g", s.observer.g},
                     {"phi", s.observer.phi}};
    j["estimator"] = {{"k1", s.estimator.k1},
                      {"k0", s.estimator.k0},
                      {"delta1", s.estimator.delta1},
                      {"delta2", s.estimator.delta2},
                      {"delta3", s.estimator.delta3},
                      {"delta4", s.estimator.delta4},
                      {"mu_min", s.estimator.mu_min},
                      {"mu_max", s.estimator.mu_max},
                      {"slew_per_s", s.estimator.slew_per_s},
                      {"window", s.estimator.window},
                      {"fz_guard_n", s.estimator.fz_guard_n},
                      {"mu_hat_init", s.estimator.mu_hat_init}};
    j["upper"] = {{"c_slip", s.upper.c_slip},
                  {"eps1", s.upper.eps1},
                  {"eps2", s.upper.eps2},
                  {"phi_s", s.upper.phi_s},
                  {"k_d", s.upper.k_d},
                  {"i_max", s.upper.i_max},
                  {"t_max", s.upper.t_max}};
    j["lower"] = {{"c_torque", s.lower.c_torque},
                  {"eps3", s.lower.eps3},
                  {"eps4", s.lower.eps4},
                  {"phi_t", s.lower.phi_t},
                  {"i_max", s.lower.i_max},
                  {"hold_band", s.lower.hold_band},
                  {"ff_speed", s.lower.ff_speed}};
    j["pid"] = {{"kp", s.pid.kp},
                {"ki", s.pid.ki},
                {"kd", s.pid.kd},
                {"d_tau", s.pid.d_tau},
                {"t_max", s.pid.t_max}};
    return j;
}

namespace {

[[noreturn]] void unknown_key(const std::string& path) {
    throw std::invalid_argument("scenario: unknown key \"" + path + "\"");
}

void get_number(const json& j, const char* key, double& out,
                const std::string& prefix) {
    if (!j.contains(key)) return;
    const auto& v = j.at(key);
    if (!v.is_number())
        throw std::invalid_argument("scenario: \"" + prefix + key +
                                    "\" must be a number");
    out = v.get<double>();
}

void check_keys(const json& j, std::initializer_list<const char*> known,
                const std::string& prefix) {
    for (const auto& [key, value] : j.items()) {
        bool found = false;
        for (const char* k : known)
            if (key == k) {
                found = true;
                break;
            }
        if (!found) unknown_key(prefix + key);
    }
}

}  // namespace

ScenarioSpec scenario_from_json(const json& j) {
    if (!j.is_object())
        throw std::invalid_argument("scenario: top level must be an object");
    check_keys(j,
               {"v0_mps", "duration_s", "controller", "dt_plant_s", "t_ctrl_s",
                "per_wheel_control", "seed", "noise_vx_std", "noise_omega_std",
                "road", "vehicle", "tyre", "motor", "drivetrain", "screw",
                "caliper", "observer", "estimator", "upper", "lower", "pid"},
               "");

    ScenarioSpec s;
    get_number(j, "v0_mps", s.v0_mps, "");
    get_number(j, "duration_s", s.duration_s, "");
    get_number(j, "dt_plant_s", s.dt_plant_s, "");
    get_number(j, "t_ctrl_s", s.t_ctrl_s, "");
    get_number(j, "noise_vx_std", s.noise_vx_std, "");
    get_number(j, "noise_omega_std", s.noise_omega_std, "");
    if (j.contains("per_wheel_control"))
        s.per_wheel_control = j.at("per_wheel_control").get<bool>();
    if (j.contains("seed")) s.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("controller")) {
        const std::string c = j.at("controller").get<std::string>();
        if (c == "smc")
            s.controller = ControllerKind::kSmc;
        else if (c == "pid")
            s.controller = ControllerKind::kPid;
        else
            throw std::invalid_argument(
                "scenario: controller must be \"smc\" or \"pid\"");
    }
    if (j.contains("road")) {
        if (!j.at("road").is_array())
            throw std::invalid_argument("scenario: road must be an array");
        s.road.clear();
        for (const auto& e : j.at("road")) {
            check_keys(e, {"t_s", "mu"}, "road.");
            RoadSegment seg;
            get_number(e, "t_s", seg.t_s, "road.");
            get_number(e, "mu", seg.mu, "road.");
            s.road.push_back(seg);
        }
    }

    if (j.contains("vehicle")) {
        const auto& v = j.at("vehicle");
        check_keys(v,
                   {"mass_kg", "cg_to_front_m", "cg_to_rear_m", "cg_height_m",
                    "wheel_radius_front_m", "wheel_radius_rear_m",
                    "wheel_inertia_front", "wheel_inertia_rear", "gravity"},
                   "vehicle.");
        get_number(v, "mass_kg", s.vehicle.mass_kg, "vehicle.");
        get_number(v, "cg_to_front_m", s.vehicle.cg_to_front_m, "vehicle.");
        get_number(v, "cg_to_rear_m", s.vehicle.cg_to_rear_m, "vehicle.");
        get_number(v, "cg_height_m", s.vehicle.cg_height_m, "vehicle.");
        get_number(v, "wheel_radius_front_m", s.vehicle.wheel_radius_front_m,
                   "vehicle.");
        get_number(v, "wheel_radius_rear_m", s.vehicle.wheel_radius_rear_m,
                   "vehicle.");
        get_number(v, "wheel_inertia_front", s.vehicle.wheel_inertia_front,
                   "vehicle.");
        get_number(v, "wheel_inertia_rear", s.vehicle.wheel_inertia_rear,
                   "vehicle.");
        get_number(v, "gravity", s.vehicle.gravity, "vehicle.");
    }
    if (j.contains("tyre")) {
        const auto& t = j.at("tyre");
        check_keys(t, {"a0", "a1", "a2", "a3", "a4", "a5", "a6", "a7", "a8"},
                   "tyre.");
        get_number(t, "a0", s.tyre.a0, "tyre.");
        get_number(t, "a1", s.tyre.a1, "tyre.");
        get_number(t, "a2", s.tyre.a2, "tyre.");
        get_number(t, "a3", s.tyre.a3, "tyre.");
        get_number(t, "a4", s.tyre.a4, "tyre.");
        get_number(t, "a5", s.tyre.a5, "tyre.");
        get_number(t, "a6", s.tyre.a6, "tyre.");
        get_number(t, "a7", s.tyre.a7, "tyre.");
        get_number(t, "a8", s.tyre.a8, "tyre.");
    }
    if (j.contains("motor")) {
        const auto& m = j.at("motor");
        check_keys(m, {"v_a", "r_a", "l_a", "k_e", "k_t", "j_m", "c_m"},
                   "motor.");
        get_number(m, "v_a", s.motor.v_a, "motor.");
        get_number(m, "r_a", s.motor.r_a, "motor.");
        get_number(m, "l_a", s.motor.l_a, "motor.");
        get_number(m, "k_e", s.motor.k_e, "motor.");
        get_number(m, "k_t", s.motor.k_t, "motor.");
        get_number(m, "j_m", s.motor.j_m, "motor.");
        get_number(m, "c_m", s.motor.c_m, "motor.");
    }
    if (j.contains("drivetrain")) {
        const auto& d = j.at("drivetrain");
        check_keys(d,
                   {"i12", "i35", "i68", "eta12", "eta35", "eta68", "eta21",
                    "eta53", "eta86", "eta89", "j1", "j_stage2", "j_stage3",
                    "j_out", "c1", "c2", "c3"},
                   "drivetrain.");
        get_number(d, "i12", s.drivetrain.i12, "drivetrain.");
        get_number(d, "i35", s.drivetrain.i35, "drivetrain.");
        get_number(d, "i68", s.drivetrain.i68, "drivetrain.");
        get_number(d, "eta12", s.drivetrain.eta12, "drivetrain.");
        get_number(d, "eta35", s.drivetrain.eta35, "drivetrain.");
        get_number(d, "eta68", s.drivetrain.eta68, "drivetrain.");
        get_number(d, "eta21", s.drivetrain.eta21, "drivetrain.");
        get_number(d, "eta53", s.drivetrain.eta53, "drivetrain.");
        get_number(d, "eta86", s.drivetrain.eta86, "drivetrain.");
        get_number(d, "eta89", s.drivetrain.eta89, "drivetrain.");
        get_number(d, "j1", s.drivetrain.j1, "drivetrain.");
        get_number(d, "j_stage2", s.drivetrain.j_stage2, "drivetrain.");
        get_number(d, "j_stage3", s.drivetrain.j_stage3, "drivetrain.");
        get_number(d, "j_out", s.drivetrain.j_out, "drivetrain.");
        get_number(d, "c1", s.drivetrain.c1, "drivetrain.");
        get_number(d, "c2", s.drivetrain.c2, "drivetrain.");
        get_number(d, "c3", s.drivetrain.c3, "drivetrain.");
    }
    if (j.contains("screw")) {
        const auto& sc = j.at("screw");
        check_keys(sc, {"p_h", "d", "u_s", "f_s", "preload_n"}, "screw.");
        get_number(sc, "p_h", s.screw.p_h, "screw.");
        get_number(sc, "d", s.screw.d, "screw.");
        get_number(sc, "u_s", s.screw.u_s, "screw.");
        get_number(sc, "f_s", s.screw.f_s, "screw.");
        get_number(sc, "preload_n", s.screw.preload_n, "screw.");
    }
    if (j.contains("caliper")) {
        const auto& c = j.at("caliper");
        check_keys(c, {"k_c", "b_c", "s_mc", "mu_b", "r", "s_max"}, "caliper.");
        get_number(c, "k_c", s.caliper.k_c, "caliper.");
        get_number(c, "b_c", s.caliper.b_c, "caliper.");
        get_number(c, "s_mc", s.caliper.s_mc, "caliper.");
        get_number(c, "mu_b", s.caliper.mu_b, "caliper.");
        get_number(c, "r", s.caliper.r, "caliper.");
        get_number(c, "s_max", s.caliper.s_max, "caliper.");
    }
    if (j.contains("observer")) {
        const auto& o = j.at("observer");
        check_keys(o, {"k", "g", "phi"}, "observer.");
        get_number(o, "k", s.observer.k, "observer.");
        get_number(o, "g", s.observer.g, "observer.");
        get_number(o, "phi", s.observer.phi, "observer.");
    }
    if (j.contains("estimator")) {
        const auto& e = j.at("estimator");
        check_keys(e,
                   {"k1", "k0", "delta1", "delta2", "delta3", "delta4",
                    "mu_min", "mu_max", "slew_per_s", "window", "fz_guard_n",
                    "mu_hat_init"},
                   "estimator.");
        get_number(e, "k1", s.estimator.k1, "estimator.");
        get_number(e, "k0", s.estimator.k0, "estimator.");
        get_number(e, "delta1", s.estimator.delta1, "estimator.");
        get_number(e, "delta2", s.estimator.delta2, "estimator.");
        get_number(e, "delta3", s.estimator.delta3, "estimator.");
        get_number(e, "delta4", s.estimator.delta4, "estimator.");
        get_number(e, "mu_min", s.estimator.mu_min, "estimator.");
        get_number(e, "mu_max", s.estimator.mu_max, "estimator.");
        get_number(e, "slew_per_s", s.estimator.slew_per_s, "estimator.");
        if (e.contains("window")) s.estimator.window = e.at("window").get<int>();
        get_number(e, "fz_guard_n", s.estimator.fz_guard_n, "estimator.");
        get_number(e, "mu_hat_init", s.estimator.mu_hat_init, "estimator.");
    }
    if (j.contains("upper")) {
        const auto& u = j.at("upper");
        check_keys(u, {"c_slip", "eps1", "eps2", "phi_s", "k_d", "i_max",
                       "t_max"},
                   "upper.");
        get_number(u, "c_slip", s.upper.c_slip, "upper.");
        get_number(u, "eps1", s.upper.eps1, "upper.");
        get_number(u, "eps2", s.upper.eps2, "upper.");
        get_number(u, "phi_s", s.upper.phi_s, "upper.");
        get_number(u, "k_d", s.upper.k_d, "upper.");
        get_number(u, "i_max", s.upper.i_max, "upper.");
        get_number(u, "t_max", s.upper.t_max, "upper.");
    }
    if (j.contains("lower")) {
        const auto& l = j.at("lower");
        check_keys(l, {"c_torque", "eps3", "eps4", "phi_t", "i_max",
                       "hold_band", "ff_speed"},
                   "lower.");
        get_number(l, "c_torque", s.lower.c_torque, "lower.");
        get_number(l, "eps3", s.lower.eps3, "lower.");
        get_number(l, "eps4", s.lower.eps4, "lower.");
        get_number(l, "phi_t", s.lower.phi_t, "lower.");
        get_number(l, "i_max", s.lower.i_max, "lower.");
        get_number(l, "hold_band", s.lower.hold_band, "lower.");
        get_number(l, "ff_speed", s.lower.ff_speed, "lower.");
    }
    if (j.contains("pid")) {
        const auto& p = j.at("pid");
        check_keys(p, {"kp", "ki", "kd", "d_tau", "t_max"}, "pid.");
        get_number(p, "kp", s.pid.kp, "pid.");
        get_number(p, "ki", s.pid.ki, "pid.");
        get_number(p, "kd", s.pid.kd, "pid.");
        get_number(p, "d_tau", s.pid.d_tau, "pid.");
        get_number(p, "t_max", s.pid.t_max, "pid.");
    }
    return s;
}

ScenarioSpec load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw std::invalid_argument("cannot open scenario file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw std::invalid_argument("scenario parse error in " + path + ": " +
                                    e.what());
    }
    return scenario_from_json(j);
}

void apply_override(ScenarioSpec& spec, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0)
        throw std::invalid_argument("override must look like key=value: " +
                                    assignment);
    const std::string path = assignment.substr(0, eq);
    const std::string value = assignment.substr(eq + 1);

    json j = scenario_to_json(spec);
    json* node = &j;
    std::size_t pos = 0;
    std::string leaf;
    for (;;) {
        const auto dot = path.find('.', pos);
        const std::string part = path.substr(pos, dot - pos);
        if (part.empty())
            throw std::invalid_argument("override: empty path element in " +
                                        path);
        if (dot == std::string::npos) {
            leaf = part;
            break;
        }
        if (node->is_array()) {
            std::size_t idx = 0;
            try {
                idx = std::stoul(part);
            } catch (...) {
                throw std::invalid_argument("override: \"" + part +
                                            "\" is not an array index");
            }
            if (idx >= node->size())
                throw std::invalid_argument("override: index out of range in " +
                                            path);
            node = &(*node)[idx];
        } else {
            if (!node->contains(part)) unknown_key(path);
            node = &node->at(part);
        }
        pos = dot + 1;
    }
    if (!node->is_object() || !node->contains(leaf)) unknown_key(path);
    json& slot = node->at(leaf);
    if (slot.is_object() || slot.is_array())
        throw std::invalid_argument("override: \"" + path +
                                    "\" is not a scalar");
    if (slot.is_string()) {
        slot = value;
    } else if (slot.is_boolean()) {
        if (value == "true" || value == "1")
            slot = true;
        else if (value == "false" || value == "0")
            slot = false;
        else
            throw std::invalid_argument("override: \"" + path +
                                        "\" expects a boolean");
    } else {
        try {
            slot = json::parse(value);
        } catch (...) {
            throw std::invalid_argument("override: cannot parse number \"" +
                                        value + "\" for " + path);
        }
        if (!slot.is_number())
            throw std::invalid_argument("override: \"" + path +
                                        "\" expects a number");
    }
    spec = scenario_from_json(j);
}

}  // namespace iepb
