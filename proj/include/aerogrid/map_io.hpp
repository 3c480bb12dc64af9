#pragma once

// JSON form of local and global semantic maps, local planner observations and
// weights.

#include <string>
#include <vector>

#include <json.hpp>

#include "aerogrid/errors.hpp"
#include "aerogrid/local_planner.hpp"
#include "aerogrid/semantic_map.hpp"

namespace aerogrid {

namespace detail {

inline Vec2 read_xy(const nlohmann::json& j, const std::string& what) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
        throw ParseError(what + ": expected [x, y]");
    return {j[0].get<double>(), j[1].get<double>()};
}

inline nlohmann::json xy(Vec2 v) { return nlohmann::json::array({v.x, v.y}); }

}  // namespace detail

inline nlohmann::json to_json(const LocalSemanticMap& m) {
    using nlohmann::json;
    json j;
    j["frame"] = to_string(m.frame);
    j["observer"] = detail::xy(m.observer);
    j["altitude"] = m.altitude;
    j["meters_per_cell"] = m.meters_per_cell;
    j["footprint"] = {{"min", detail::xy(m.footprint.min)}, {"max", detail::xy(m.footprint.max)}};
    j["step_index"] = m.step_index;
    json objs = json::array();
    for (const auto& o : m.objects) {
        json e;
        e["id"] = o.id;
        e["name"] = o.name;
        e["category"] = to_string(o.category);
        if (o.direction) e["direction"] = to_string(*o.direction);
        e["is_obstacle_too"] = o.is_obstacle_too;
        e["entity"] = to_string(o.entity);
        e["x"] = o.coordinate.x;
        e["y"] = o.coordinate.y;
        e["orientation"] = o.orientation ? json(*o.orientation) : json(nullptr);
        objs.push_back(e);
    }
    j["objects"] = objs;
    if (m.parts)
        j["parts"] = {{"head", detail::xy(m.parts->head)},
                      {"body", detail::xy(m.parts->body)},
                      {"tail", detail::xy(m.parts->tail)}};
    return j;
}

inline LocalSemanticMap local_map_from_json(const nlohmann::json& j) {
    try {
        LocalSemanticMap m;
        const std::string frame = j.value("frame", "grid");
        if (frame != "grid" && frame != "world") throw ParseError("frame must be grid or world");
        m.frame = frame == "grid" ? MapFrame::grid : MapFrame::world;
        m.observer = detail::read_xy(j.at("observer"), "observer");
        m.altitude = j.value("altitude", 0.0);
        m.meters_per_cell = j.at("meters_per_cell").get<double>();
        m.footprint = {detail::read_xy(j.at("footprint").at("min"), "footprint.min"),
                       detail::read_xy(j.at("footprint").at("max"), "footprint.max")};
        m.step_index = j.value("step_index", 0);
        for (const auto& e : j.at("objects")) {
            SemanticObject o;
            o.id = e.value("id", e.at("name").get<std::string>());
            o.name = e.at("name").get<std::string>();
            const auto cat = parse_category(e.value("category", "unlabeled"));
            if (!cat) throw ParseError("object " + o.id + ": unknown category");
            o.category = *cat;
            if (e.contains("direction")) {
                const auto d = parse_direction(e.at("direction").get<std::string>());
                if (!d) throw ParseError("object " + o.id + ": unknown direction");
                o.direction = d;
            }
            o.is_obstacle_too = e.value("is_obstacle_too", false);
            const auto ent = parse_entity(e.value("entity", "object"));
            if (!ent) throw ParseError("object " + o.id + ": unknown entity");
            o.entity = *ent;
            o.coordinate = {e.at("x").get<double>(), e.at("y").get<double>()};
            if (e.contains("orientation") && !e.at("orientation").is_null())
                o.orientation = e.at("orientation").get<double>();
            o.validate();
            m.objects.push_back(o);
        }
        if (j.contains("parts"))
            m.parts = RobotParts{detail::read_xy(j["parts"].at("head"), "parts.head"),
                                 detail::read_xy(j["parts"].at("body"), "parts.body"),
                                 detail::read_xy(j["parts"].at("tail"), "parts.tail")};
        m.validate();
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("local map: ") + e.what());
    } catch (const InvalidArgument& e) {
        throw ParseError(std::string("local map: ") + e.what());
    }
}

inline nlohmann::json to_json(const GlobalSemanticMap& g) {
    using nlohmann::json;
    json entries = json::array();
    for (const auto& e : g.entries) {
        entries.push_back({{"name", e.name},
                           {"x", e.position.x},
                           {"y", e.position.y},
                           {"support_count", e.support_count},
                           {"confidence", to_string(e.confidence)},
                           {"orientation", e.orientation ? json(*e.orientation) : json(nullptr)},
                           {"last_seen", e.last_seen}});
    }
    return {{"frame", "world"}, {"revision", g.revision}, {"entries", entries}};
}

inline LocalCostWeights local_weights_from_json(const nlohmann::json& j) {
    LocalCostWeights w;
    try {
        w.q_align = j.value("q_align", w.q_align);
        w.q_zero = j.value("q_zero", w.q_zero);
        w.q_obstacle = j.value("q_obstacle", w.q_obstacle);
        w.q_window = j.value("q_window", w.q_window);
        w.beta = j.value("beta", w.beta);
        w.d_safe = j.value("d_safe", w.d_safe);
        w.epsilon = j.value("epsilon", w.epsilon);
        w.lookahead = j.value("lookahead", w.lookahead);
        w.window_half_extent = j.value("window_half_extent", w.window_half_extent);
        w.candidate_count = j.value("candidate_count", w.candidate_count);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("weights: ") + e.what());
    }
    w.validate();
    return w;
}

struct LocalStepInput {
    LocalObservation observation;
    StepThresholds thresholds;
    std::optional<double> goal_orientation;
};

// Observation file: main, optional target, obstacles [{x, y, radius}],
// parts {head, body, tail}, optional effector, thresholds, goal_orientation.
inline LocalStepInput local_step_input_from_json(const nlohmann::json& j) {
    LocalStepInput in;
    try {
        LocalObservation& o = in.observation;
        o.main = detail::read_xy(j.at("main"), "main");
        if (j.contains("target") && !j.at("target").is_null()) o.target = detail::read_xy(j.at("target"), "target");
        for (const auto& ob : j.value("obstacles", nlohmann::json::array()))
            o.obstacles.push_back({{ob.at("x").get<double>(), ob.at("y").get<double>()}, ob.value("radius", 0.0)});
        const auto& p = j.at("parts");
        o.parts = {detail::read_xy(p.at("head"), "parts.head"), detail::read_xy(p.at("body"), "parts.body"),
                   detail::read_xy(p.at("tail"), "parts.tail")};
        if (j.contains("effector") && !j.at("effector").is_null())
            o.effector = detail::read_xy(j.at("effector"), "effector");
        if (j.contains("thresholds")) {
            const auto& t = j.at("thresholds");
            in.thresholds.dist_stop = t.value("dist_stop", in.thresholds.dist_stop);
            in.thresholds.angle_tol = t.value("angle_tol", in.thresholds.angle_tol);
            in.thresholds.step = t.value("step", in.thresholds.step);
        }
        if (j.contains("goal_orientation") && !j.at("goal_orientation").is_null())
            in.goal_orientation = j.at("goal_orientation").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("observation: ") + e.what());
    }
    try {
        in.observation.validate();
    } catch (const InvalidArgument& e) {
        throw ParseError(std::string("observation: ") + e.what());
    }
    return in;
}

}  // namespace aerogrid
