#pragma once

// Scenario files: JSON description of the arena, objects, both robots,
// camera, noise and every tunable parameter. Parsing collects one diagnostic
// per offending field instead of stopping at the first.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "aerogrid/errors.hpp"
#include "aerogrid/mission.hpp"
#include "aerogrid/perception.hpp"
#include "aerogrid/world.hpp"

namespace aerogrid {

using json = nlohmann::json;

inline constexpr int kScenarioVersion = 1;

struct Scenario {
    std::string name;
    std::uint64_t seed = 0;
    std::string task;
    Rect arena;
    WorldState world;
    MissionConfig config;
    json effective;  // the validated document after overrides; hashed for config_hash
};

namespace detail {

// Reads typed fields and records problems with their JSON path.
class FieldReader {
public:
    explicit FieldReader(std::vector<std::string>& diags) : diags_(diags) {}

    const json* object(const json& parent, const std::string& key, const std::string& path, bool required) {
        if (!parent.contains(key)) {
            if (required) diags_.push_back(join(path, key) + ": required");
            return nullptr;
        }
        const json& v = parent.at(key);
        if (!v.is_object()) {
            diags_.push_back(join(path, key) + ": must be an object");
            return nullptr;
        }
        return &v;
    }

    template <class T>
    void read(const json& parent, const std::string& key, const std::string& path, T& out, bool required = false) {
        if (!parent.contains(key)) {
            if (required) diags_.push_back(join(path, key) + ": required");
            return;
        }
        const json& v = parent.at(key);
        if constexpr (std::is_same_v<T, bool>) {
            if (!v.is_boolean()) return type_error(path, key, "a boolean");
            out = v.get<bool>();
        } else if constexpr (std::is_same_v<T, std::string>) {
            if (!v.is_string()) return type_error(path, key, "a string");
            out = v.get<std::string>();
        } else if constexpr (std::is_integral_v<T>) {
            if (!v.is_number_integer()) return type_error(path, key, "an integer");
            if constexpr (std::is_unsigned_v<T>) {
                if (v.is_number_unsigned() || v.get<long long>() >= 0) {
                    out = v.get<T>();
                } else {
                    diags_.push_back(join(path, key) + ": must be >= 0");
                }
            } else {
                out = v.get<T>();
            }
        } else {
            if (!v.is_number()) return type_error(path, key, "a number");
            out = v.get<T>();
        }
    }

    void check(bool ok, const std::string& path, const std::string& msg) {
        if (!ok) diags_.push_back(path + ": " + msg);
    }

    void known_keys(const json& obj, const std::string& path, std::initializer_list<const char*> keys) {
        for (auto it = obj.begin(); it != obj.end(); ++it) {
            bool known = false;
            for (const char* k : keys) known = known || it.key() == k;
            if (!known) diags_.push_back(join(path, it.key()) + ": unknown field");
        }
    }

    static std::string join(const std::string& path, const std::string& key) {
        return path.empty() ? key : path + "." + key;
    }

private:
    void type_error(const std::string& path, const std::string& key, const char* what) {
        diags_.push_back(join(path, key) + ": must be " + what);
    }

    std::vector<std::string>& diags_;
};

inline json parse_override_value(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::parse_error&) {
        return json(text);
    }
}

}  // namespace detail

// Applies "a.b.c=value" assignments. The value is read as JSON when it
// parses, otherwise as a plain string.
inline void apply_overrides(json& doc, const std::vector<std::string>& assignments) {
    for (const auto& a : assignments) {
        const auto eq = a.find('=');
        if (eq == std::string::npos || eq == 0) throw ScenarioError({"override '" + a + "': expected key=value"});
        const std::string path = a.substr(0, eq);
        json* node = &doc;
        std::size_t start = 0;
        for (;;) {
            const auto dot = path.find('.', start);
            const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
            if (key.empty()) throw ScenarioError({"override '" + a + "': empty path segment"});
            if (!node->is_object()) throw ScenarioError({"override '" + a + "': '" + key + "' is not inside an object"});
            if (dot == std::string::npos) {
                (*node)[key] = detail::parse_override_value(a.substr(eq + 1));
                break;
            }
            node = &(*node)[key];
            if (node->is_null()) *node = json::object();
            start = dot + 1;
        }
    }
}

inline Scenario scenario_from_json(json doc, const std::string& name = "") {
    std::vector<std::string> d;
    detail::FieldReader r(d);
    Scenario sc;
    sc.name = name;
    if (!doc.is_object()) throw ScenarioError({"scenario: top level must be an object"});
    r.known_keys(doc, "", {"version", "name", "seed", "task", "arena", "objects", "robot", "drone", "camera", "noise",
                           "config", "inject"});

    int version = 0;
    r.read(doc, "version", "", version, true);
    if (doc.contains("version")) r.check(version == kScenarioVersion, "version", "unsupported version");
    r.read(doc, "name", "", sc.name);
    r.read(doc, "seed", "", sc.seed, true);
    r.read(doc, "task", "", sc.task, true);

    MissionConfig& cfg = sc.config;
    if (const json* a = r.object(doc, "arena", "", true)) {
        r.known_keys(*a, "arena", {"min", "max"});
        for (const char* k : {"min", "max"}) {
            const std::string p = std::string("arena.") + k;
            if (!a->contains(k) || !a->at(k).is_array() || a->at(k).size() != 2 || !a->at(k)[0].is_number() ||
                !a->at(k)[1].is_number()) {
                d.push_back(p + ": must be [x, y]");
                continue;
            }
            Vec2 v{a->at(k)[0].get<double>(), a->at(k)[1].get<double>()};
            (std::string(k) == "min" ? sc.arena.min : sc.arena.max) = v;
        }
        r.check(sc.arena.width() > 0.0 && sc.arena.height() > 0.0, "arena", "max must exceed min");
    }

    if (!doc.contains("objects") || !doc.at("objects").is_array()) {
        d.push_back("objects: required array");
    } else {
        std::set<std::string> ids;
        const json& objs = doc.at("objects");
        for (std::size_t i = 0; i < objs.size(); ++i) {
            const std::string p = "objects[" + std::to_string(i) + "]";
            if (!objs[i].is_object()) {
                d.push_back(p + ": must be an object");
                continue;
            }
            r.known_keys(objs[i], p, {"id", "name", "x", "y", "yaw", "radius", "movable"});
            WorldObject o;
            o.radius = cfg.object_radius;
            r.read(objs[i], "name", p, o.name, true);
            o.id = o.name;
            r.read(objs[i], "id", p, o.id);
            r.read(objs[i], "x", p, o.position.x, true);
            r.read(objs[i], "y", p, o.position.y, true);
            r.read(objs[i], "yaw", p, o.yaw);
            r.read(objs[i], "radius", p, o.radius);
            r.read(objs[i], "movable", p, o.movable);
            r.check(o.radius > 0.0, p + ".radius", "must be > 0");
            r.check(!o.name.empty(), p + ".name", "must be non-empty");
            r.check(o.id != "robot" && o.id != "zero", p + ".id", "reserved identifier");
            r.check(ids.insert(o.id).second, p + ".id", "duplicate id '" + o.id + "'");
            sc.world.objects.push_back(o);
        }
    }

    if (const json* rb = r.object(doc, "robot", "", true)) {
        r.known_keys(*rb, "robot", {"x", "y", "heading", "radius", "head_offset"});
        GroundRobot& g = sc.world.ground_robot;
        r.read(*rb, "x", "robot", g.position.x, true);
        r.read(*rb, "y", "robot", g.position.y, true);
        r.read(*rb, "heading", "robot", g.heading);
        r.read(*rb, "radius", "robot", g.radius);
        r.read(*rb, "head_offset", "robot", g.head_offset);
        r.check(g.radius > 0.0, "robot.radius", "must be > 0");
        r.check(g.head_offset > 0.0, "robot.head_offset", "must be > 0");
    }
    if (const json* dr = r.object(doc, "drone", "", true)) {
        r.known_keys(*dr, "drone", {"x", "y", "altitude"});
        DroneState& s = sc.world.drone;
        r.read(*dr, "x", "drone", s.position.x, true);
        r.read(*dr, "y", "drone", s.position.y, true);
        r.read(*dr, "altitude", "drone", s.altitude, true);
        r.check(s.altitude > 0.0, "drone.altitude", "must be > 0");
    }
    if (const json* c = r.object(doc, "camera", "", true)) {
        r.known_keys(*c, "camera", {"horizontal_fov", "image_width", "image_height", "grid_interval"});
        r.read(*c, "horizontal_fov", "camera", cfg.camera.horizontal_fov, true);
        r.read(*c, "image_width", "camera", cfg.camera.image_width, true);
        r.read(*c, "image_height", "camera", cfg.camera.image_height, true);
        r.read(*c, "grid_interval", "camera", cfg.camera.grid_interval, true);
        cfg.camera.altitude = sc.world.drone.altitude > 0.0 ? sc.world.drone.altitude : 1.0;
        try {
            cfg.camera.validate();
            ground_scale(cfg.camera);
        } catch (const InvalidArgument& e) {
            d.push_back(std::string("camera: ") + e.what());
        }
    }
    if (const json* n = r.object(doc, "noise", "", false)) {
        r.known_keys(*n, "noise", {"position_sigma", "misclassify_prob", "orientation_sigma"});
        r.read(*n, "position_sigma", "noise", cfg.noise.position_sigma);
        r.read(*n, "misclassify_prob", "noise", cfg.noise.misclassify_prob);
        r.read(*n, "orientation_sigma", "noise", cfg.noise.orientation_sigma);
    }
    cfg.noise.seed = sc.seed;

    if (const json* c = r.object(doc, "config", "", false)) {
        r.known_keys(*c, "config", {"global", "optimize", "local", "sim", "fusion", "mission"});
        if (const json* g = r.object(*c, "global", "config", false)) {
            const std::string p = "config.global";
            r.known_keys(*g, p, {"q_length", "q_curvature", "q_obstacle", "d_safe", "sample_count", "n_controls"});
            r.read(*g, "q_length", p, cfg.global.q_length);
            r.read(*g, "q_curvature", p, cfg.global.q_curvature);
            r.read(*g, "q_obstacle", p, cfg.global.q_obstacle);
            r.read(*g, "d_safe", p, cfg.global.d_safe);
            r.read(*g, "sample_count", p, cfg.global.sample_count);
            r.read(*g, "n_controls", p, cfg.n_controls);
        }
        if (const json* o = r.object(*c, "optimize", "config", false)) {
            const std::string p = "config.optimize";
            r.known_keys(*o, p, {"max_iters", "step", "tolerance", "fd_step", "armijo", "detour_seeds"});
            r.read(*o, "max_iters", p, cfg.optimize.max_iters);
            r.read(*o, "step", p, cfg.optimize.step);
            r.read(*o, "tolerance", p, cfg.optimize.tolerance);
            r.read(*o, "fd_step", p, cfg.optimize.fd_step);
            r.read(*o, "armijo", p, cfg.optimize.armijo);
            r.read(*o, "detour_seeds", p, cfg.optimize.detour_seeds);
        }
        if (const json* l = r.object(*c, "local", "config", false)) {
            const std::string p = "config.local";
            r.known_keys(*l, p, {"q_align", "q_zero", "q_obstacle", "q_window", "beta", "d_safe", "epsilon",
                                 "lookahead", "window_half_extent", "candidate_count", "dist_stop", "angle_tol"});
            r.read(*l, "q_align", p, cfg.local.q_align);
            r.read(*l, "q_zero", p, cfg.local.q_zero);
            r.read(*l, "q_obstacle", p, cfg.local.q_obstacle);
            r.read(*l, "q_window", p, cfg.local.q_window);
            r.read(*l, "beta", p, cfg.local.beta);
            r.read(*l, "d_safe", p, cfg.local.d_safe);
            r.read(*l, "epsilon", p, cfg.local.epsilon);
            r.read(*l, "lookahead", p, cfg.local.lookahead);
            r.read(*l, "window_half_extent", p, cfg.local.window_half_extent);
            r.read(*l, "candidate_count", p, cfg.local.candidate_count);
            r.read(*l, "dist_stop", p, cfg.dist_stop);
            r.read(*l, "angle_tol", p, cfg.angle_tol);
        }
        if (const json* s = r.object(*c, "sim", "config", false)) {
            const std::string p = "config.sim";
            r.known_keys(*s, p, {"dt", "drone_speed", "ground_step", "rotate_rate", "follow_radius", "attach_range",
                                 "attach_angle_tol", "carry_radius", "rotate_safe_clearance"});
            r.read(*s, "dt", p, cfg.sim.dt);
            r.read(*s, "drone_speed", p, cfg.sim.drone_speed);
            r.read(*s, "ground_step", p, cfg.sim.ground_step);
            r.read(*s, "rotate_rate", p, cfg.sim.rotate_rate);
            r.read(*s, "follow_radius", p, cfg.sim.follow_radius);
            r.read(*s, "attach_range", p, cfg.sim.attach_range);
            r.read(*s, "attach_angle_tol", p, cfg.sim.attach_angle_tol);
            r.read(*s, "carry_radius", p, cfg.sim.carry_radius);
            r.read(*s, "rotate_safe_clearance", p, cfg.sim.rotate_safe_clearance);
        }
        if (const json* f = r.object(*c, "fusion", "config", false)) {
            const std::string p = "config.fusion";
            r.known_keys(*f, p, {"merge_radius", "conflict_radius", "footprint_inset"});
            r.read(*f, "merge_radius", p, cfg.fusion.merge_radius);
            r.read(*f, "conflict_radius", p, cfg.fusion.conflict_radius);
            r.read(*f, "footprint_inset", p, cfg.fusion.footprint_inset);
        }
        if (const json* m = r.object(*c, "mission", "config", false)) {
            const std::string p = "config.mission";
            r.known_keys(*m, p, {"object_radius", "relation_clearance", "pitch", "map_update_period",
                                 "stop_confirmations", "carry_fail_limit", "attach_retries", "max_rollbacks",
                                 "retreat", "hover_frames", "map_overlap", "max_steps"});
            r.read(*m, "object_radius", p, cfg.object_radius);
            r.read(*m, "relation_clearance", p, cfg.relation_clearance);
            r.read(*m, "pitch", p, cfg.pitch);
            r.read(*m, "map_update_period", p, cfg.map_update_period);
            r.read(*m, "stop_confirmations", p, cfg.stop_confirmations);
            r.read(*m, "carry_fail_limit", p, cfg.carry_fail_limit);
            r.read(*m, "attach_retries", p, cfg.attach_retries);
            r.read(*m, "max_rollbacks", p, cfg.max_rollbacks);
            r.read(*m, "retreat", p, cfg.retreat);
            r.read(*m, "hover_frames", p, cfg.hover_frames);
            r.read(*m, "map_overlap", p, cfg.map_overlap);
            r.read(*m, "max_steps", p, cfg.max_steps);
        }
    }
    if (const json* in = r.object(doc, "inject", "", false)) {
        r.known_keys(*in, "inject", {"drop_at_step"});
        long drop = 0;
        if (in->contains("drop_at_step")) {
            r.read(*in, "drop_at_step", "inject", drop);
            cfg.drop_at_step = drop;
        }
    }

    if (d.empty()) {
        try {
            cfg.validate();
        } catch (const InvalidArgument& e) {
            d.push_back(std::string("config: ") + e.what());
        }
    }
    if (d.empty() && !sc.task.empty()) {
        try {
            parse_command(sc.task, cfg.relation_clearance);
        } catch (const ParseError& e) {
            d.push_back(std::string("task: ") + e.what());
        }
    }
    if (!d.empty()) throw ScenarioError(std::move(d));
    sc.effective = std::move(doc);
    return sc;
}

inline json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ScenarioError({path + ": cannot open"});
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ScenarioError({path + ": " + e.what()});
    }
}

inline std::string stem(const std::string& path) {
    std::string base = path.substr(path.find_last_of('/') + 1);
    const auto dot = base.rfind('.');
    return dot == std::string::npos ? base : base.substr(0, dot);
}

inline Scenario load_scenario(const std::string& path, const std::vector<std::string>& overrides = {}) {
    json doc = read_json_file(path);
    apply_overrides(doc, overrides);
    return scenario_from_json(std::move(doc), stem(path));
}

// FNV-1a 64 of the canonical (sorted-key, compact) document, as 16 hex digits.
inline std::string config_hash(const json& doc) {
    const std::string s = doc.dump();
    std::uint64_t h = noise::fnv1a(s);
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace aerogrid
