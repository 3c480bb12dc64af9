#pragma once

// Running scenarios and writing their artifacts: JSON-lines traces, run
// summaries, SVG plots and batch CSV tables. Files are written to a sibling
// temporary and renamed into place.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "aerogrid/gridmask.hpp"
#include "aerogrid/mission.hpp"
#include "aerogrid/scenario.hpp"

namespace aerogrid {

inline void write_file_atomic(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp);
        out << content;
        out.flush();
        if (!out) throw std::runtime_error("write failed for " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

inline json to_json(Vec2 v) { return json::array({v.x, v.y}); }

inline json to_json(const TraceRecord& r) {
    json j;
    j["step"] = r.step;
    j["phase"] = r.phase;
    j["drone"] = {{"xy", to_json(r.drone)}, {"altitude", r.altitude}};
    j["robot"] = {{"xy", to_json(r.robot)}, {"heading", r.heading}};
    j["attached"] = r.attached ? json(*r.attached) : json(nullptr);
    j["command"] = r.command;
    j["theta"] = r.theta ? json(*r.theta) : json(nullptr);
    j["cost"] = r.cost ? json(*r.cost) : json(nullptr);
    j["events"] = r.events;
    return j;
}

inline std::string trace_jsonl(const std::vector<TraceRecord>& trace) {
    std::string out;
    for (const auto& r : trace) {
        out += to_json(r).dump();
        out += '\n';
    }
    return out;
}

struct RunOutput {
    Scenario scenario;
    MissionResult result;
    double wall_time = 0.0;
    std::string config_hash;
    int carries = 0;  // completed pick-transport-place cycles requested by the plan
};

inline RunOutput run_scenario(const Scenario& sc) {
    RunOutput out;
    out.scenario = sc;
    out.config_hash = config_hash(sc.effective);
    const auto t0 = std::chrono::steady_clock::now();
    Executor ex(sc.world, sc.arena, sc.config);
    out.result = ex.run(sc.task);
    out.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    out.carries = static_cast<int>(out.result.plan.carried_objects().size());
    return out;
}

inline json summary_json(const RunOutput& run, bool include_wall_time = true) {
    const MissionResult& r = run.result;
    json j;
    j["scenario"] = run.scenario.name;
    j["task"] = run.scenario.task;
    j["seed"] = run.scenario.seed;
    j["success"] = r.success;
    j["failure"] = r.failure;
    j["collisions"] = r.collisions;
    j["steps"] = r.steps;
    j["path_length"] = r.path_length;
    j["placement_errors"] = r.placement_errors;
    j["carries"] = run.carries;
    j["rollbacks"] = r.rollbacks;
    j["replans"] = r.replans;
    j["attach_failures"] = r.attach_failures;
    j["config_hash"] = run.config_hash;
    json plan = json::array();
    for (const auto& s : r.plan.subtasks) plan.push_back(s.describe());
    j["plan"] = plan;
    if (include_wall_time) j["wall_time"] = run.wall_time;
    return j;
}

// Arena plot in meters, y up. Initial objects are hollow, final ones filled.
inline std::string render_run_svg(const RunOutput& run) {
    using detail::num;
    const Rect a = run.scenario.arena;
    const double margin = 0.5;
    const double scale = 100.0;  // px per meter
    const double W = (a.width() + 2 * margin) * scale;
    const double H = (a.height() + 2 * margin) * scale;
    const auto px = [&](Vec2 p) {
        return num((p.x - a.min.x + margin) * scale) + "," + num((a.max.y + margin - p.y) * scale);
    };
    const auto X = [&](double x) { return num((x - a.min.x + margin) * scale); };
    const auto Y = [&](double y) { return num((a.max.y + margin - y) * scale); };

    std::ostringstream s;
    s << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << num(W) << "\" height=\"" << num(H)
      << "\" viewBox=\"0 0 " << num(W) << ' ' << num(H) << "\">\n"
      << "<rect id=\"arena\" x=\"" << X(a.min.x) << "\" y=\"" << Y(a.max.y) << "\" width=\"" << num(a.width() * scale)
      << "\" height=\"" << num(a.height() * scale) << "\" fill=\"none\" stroke=\"#000000\"/>\n";
    s << "<g id=\"objects-initial\" fill=\"none\" stroke=\"#888888\">\n";
    for (const auto& o : run.scenario.world.objects)
        s << "<circle cx=\"" << X(o.position.x) << "\" cy=\"" << Y(o.position.y) << "\" r=\"" << num(o.radius * scale)
          << "\"/>\n";
    s << "</g>\n<g id=\"objects-final\" fill=\"#9ecae1\" stroke=\"#08519c\">\n";
    for (const auto& o : run.result.final_objects)
        s << "<circle cx=\"" << X(o.position.x) << "\" cy=\"" << Y(o.position.y) << "\" r=\"" << num(o.radius * scale)
          << "\"/>\n";
    s << "</g>\n<g id=\"global-paths\" fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"2\">\n";
    for (const auto& path : run.result.global_paths) {
        s << "<polyline points=\"";
        for (std::size_t i = 0; i < path.size(); ++i) s << (i ? " " : "") << px(path[i]);
        s << "\"/>\n";
    }
    s << "</g>\n<polyline id=\"robot-track\" fill=\"none\" stroke=\"#d62728\" stroke-width=\"1\" points=\"";
    const auto& track = run.result.robot_track;
    const std::size_t stride = std::max<std::size_t>(1, track.size() / 2000);
    for (std::size_t i = 0; i < track.size(); i += stride) s << (i ? " " : "") << px(track[i]);
    s << "\"/>\n<g id=\"labels\" font-family=\"monospace\" font-size=\"14\">\n";
    for (const auto& o : run.result.final_objects)
        s << "<text x=\"" << X(o.position.x + o.radius) << "\" y=\"" << Y(o.position.y + o.radius) << "\">" << o.name
          << "</text>\n";
    s << "</g>\n</svg>\n";
    return s.str();
}

struct BatchRow {
    std::string scenario;
    std::uint64_t seed = 0;
    bool success = false;
    int collisions = 0;
    long steps = 0;
    int carries = 0;
    double max_placement_error = 0.0;
};

struct BatchAggregate {
    int runs = 0;
    double success_rate = 0.0;
    double mean_collisions = 0.0;
    double mean_steps = 0.0;
    double collisions_per_carry = 0.0;
};

inline BatchRow batch_row(const RunOutput& run) {
    BatchRow row{run.scenario.name, run.scenario.seed, run.result.success, run.result.collisions, run.result.steps,
                 run.carries, 0.0};
    for (double e : run.result.placement_errors) row.max_placement_error = std::max(row.max_placement_error, e);
    return row;
}

inline BatchAggregate aggregate(const std::vector<BatchRow>& rows) {
    BatchAggregate a;
    a.runs = static_cast<int>(rows.size());
    if (rows.empty()) return a;
    double succ = 0.0, coll = 0.0, steps = 0.0, carries = 0.0;
    for (const auto& r : rows) {
        succ += r.success ? 1.0 : 0.0;
        coll += r.collisions;
        steps += static_cast<double>(r.steps);
        carries += r.carries;
    }
    a.success_rate = succ / a.runs;
    a.mean_collisions = coll / a.runs;
    a.mean_steps = steps / a.runs;
    a.collisions_per_carry = carries > 0.0 ? coll / carries : 0.0;
    return a;
}

inline std::string batch_csv(const std::vector<BatchRow>& rows) {
    std::ostringstream s;
    s << "scenario,seed,success,collisions,steps,carries,max_placement_error\n";
    for (const auto& r : rows)
        s << r.scenario << ',' << r.seed << ',' << (r.success ? 1 : 0) << ',' << r.collisions << ',' << r.steps << ','
          << r.carries << ',' << detail::num(r.max_placement_error) << '\n';
    const BatchAggregate a = aggregate(rows);
    double carries = 0.0, err = 0.0;
    for (const auto& r : rows) {
        carries += r.carries;
        err += r.max_placement_error;
    }
    const double n = rows.empty() ? 1.0 : static_cast<double>(rows.size());
    s << "mean,," << detail::num(a.success_rate) << ',' << detail::num(a.mean_collisions) << ','
      << detail::num(a.mean_steps) << ',' << detail::num(carries / n) << ',' << detail::num(err / n) << '\n';
    return s.str();
}

}  // namespace aerogrid
