// Command-line front end. Exit codes: 0 success, 1 usage or configuration
// error, 2 the simulated task failed.

#include <algorithm>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "aerogrid/aerogrid.hpp"
#include "aerogrid/map_io.hpp"

namespace fs = std::filesystem;
using namespace aerogrid;

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kTaskFailed = 2;

std::vector<std::string> scenario_files(const std::string& dir) {
    std::vector<std::string> out;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".json") out.push_back(e.path().string());
    std::sort(out.begin(), out.end());
    return out;
}

int cmd_run(const std::string& file, const std::string& trace, const std::string& summary, const std::string& svg,
            const std::vector<std::string>& overrides) {
    const Scenario sc = load_scenario(file, overrides);
    const RunOutput run = run_scenario(sc);
    if (!trace.empty()) write_file_atomic(trace, trace_jsonl(run.result.trace));
    if (!summary.empty()) write_file_atomic(summary, summary_json(run).dump(2) + "\n");
    if (!svg.empty()) write_file_atomic(svg, render_run_svg(run));
    std::cout << sc.name << ": " << (run.result.success ? "success" : "failure")
              << (run.result.failure.empty() ? "" : " (" + run.result.failure + ")") << ", steps "
              << run.result.steps << ", collisions " << run.result.collisions << ", config " << run.config_hash
              << "\n";
    return run.result.success ? kOk : kTaskFailed;
}

int cmd_batch(const std::string& dir, std::vector<std::string> files, const std::vector<std::uint64_t>& seeds,
              const std::string& out, const std::vector<std::string>& overrides) {
    if (!dir.empty()) {
        const auto found = scenario_files(dir);
        files.insert(files.end(), found.begin(), found.end());
    }
    if (files.empty()) throw ScenarioError({"batch: no scenarios given"});
    std::vector<Scenario> runs;
    for (const auto& f : files) {
        if (seeds.empty()) {
            runs.push_back(load_scenario(f, overrides));
            continue;
        }
        for (std::uint64_t seed : seeds) {
            std::vector<std::string> o = overrides;
            o.push_back("seed=" + std::to_string(seed));
            runs.push_back(load_scenario(f, o));
        }
    }
    std::vector<BatchRow> rows;
    for (const auto& sc : runs) rows.push_back(batch_row(run_scenario(sc)));
    const std::string csv = batch_csv(rows);
    if (out.empty()) {
        std::cout << csv;
    } else {
        write_file_atomic(out, csv);
    }
    const BatchAggregate a = aggregate(rows);
    std::cerr << "runs " << a.runs << ", success rate " << a.success_rate << ", mean collisions "
              << a.mean_collisions << ", collisions per carry " << a.collisions_per_carry << "\n";
    return kOk;
}

// Global map built from ground truth, for planning without a mapping flight.
GlobalSemanticMap truth_map(const WorldState& w) {
    GlobalSemanticMap g;
    for (const auto& o : w.objects) g.entries.push_back({o.name, o.position, 1, Confidence::confirmed, o.yaw, 0});
    std::sort(g.entries.begin(), g.entries.end(),
              [](const GlobalEntry& a, const GlobalEntry& b) { return a.name < b.name; });
    return g;
}

int cmd_plan_global(const std::string& file, const std::string& out, const std::vector<std::string>& overrides) {
    const Scenario sc = load_scenario(file, overrides);
    const GlobalSemanticMap map = truth_map(sc.world);
    const Command cmd = parse_command(sc.task, sc.config.relation_clearance);
    const TaskPlan plan = RuleBasedReasoner(sc.config.pitch).decompose(cmd, &map);
    const double s_cell = meters_per_cell_at(sc.config.camera, sc.world.drone.altitude);

    nlohmann::json legs = nlohmann::json::array();
    Vec2 origin = sc.world.ground_robot.position;
    for (const auto& task : plan.subtasks) {
        if (!task.is_move()) continue;
        const GoalSpec& g = task.goal();
        Vec2 goal = g.point;
        if (g.kind != GoalSpec::Kind::coordinate) {
            const GlobalEntry* e = map.find(g.name);
            if (!e) throw InvalidArgument("plan-global: unknown object " + g.name);
            goal = g.kind == GoalSpec::Kind::object ? e->position
                                                    : relation_point(e->position, e->orientation, g.direction, g.clearance);
        }
        std::vector<Circle> obstacles;
        for (const auto& o : sc.world.objects) {
            if (o.name == task.carried || (g.kind == GoalSpec::Kind::object && o.name == g.name)) continue;
            obstacles.push_back({o.position, o.radius});
        }
        const GlobalLeg leg = plan_global_leg(origin, goal, obstacles, s_cell, sc.config);
        nlohmann::json j;
        j["subtask"] = task.describe();
        j["origin"] = to_json(origin);
        j["meters_per_cell"] = s_cell;
        j["polyline_world"] = nlohmann::json::array();
        for (const Vec2& p : leg.world_path) j["polyline_world"].push_back(to_json(p));
        if (!leg.init.at_goal) {
            const OptimizeResult& r = leg.result;
            j["degree"] = r.path.degree;
            j["knots"] = r.path.knots;
            j["control_points"] = nlohmann::json::array();
            for (const Vec2& p : r.path.control_points) j["control_points"].push_back(to_json(p));
            j["samples_grid"] = nlohmann::json::array();
            for (const Vec2& p : sample(r.path, sc.config.global.sample_count)) j["samples_grid"].push_back(to_json(p));
            const auto cost = [](const GlobalCost& c) {
                return nlohmann::json{{"length", c.length},
                                      {"curvature", c.curvature},
                                      {"obstacle", c.obstacle},
                                      {"total", c.total}};
            };
            j["cost"] = cost(r.cost);
            j["initial_cost"] = cost(r.initial_cost);
            j["iterations"] = r.iterations;
            j["converged"] = r.converged;
            j["seed"] = r.seed;
        }
        legs.push_back(j);
        origin = goal;
    }
    const std::string text = nlohmann::json{{"task", sc.task}, {"legs", legs}}.dump(2) + "\n";
    if (out.empty()) {
        std::cout << text;
    } else {
        write_file_atomic(out, text);
    }
    return kOk;
}

int cmd_plan_local(const std::string& obs_file, const std::string& weights_file) {
    const LocalStepInput in = local_step_input_from_json(read_json_file(obs_file));
    const LocalCostWeights w = weights_file.empty() ? LocalCostWeights{} : local_weights_from_json(read_json_file(weights_file));
    const DirectionChoice c = select_direction(in.observation, w);
    std::cout << "  i  theta_deg        A   A_zero  O_local    W      total\n";
    for (std::size_t i = 0; i < c.table.size(); ++i) {
        const auto& row = c.table[i];
        std::cout << std::setw(3) << i << std::fixed << std::setprecision(1) << std::setw(11)
                  << row.theta * 180.0 / kPi << std::setprecision(4) << std::setw(9) << row.cost.align
                  << std::setw(9) << row.cost.zero << std::setw(9) << row.cost.obstacle << std::setw(5)
                  << (std::isinf(row.cost.window) ? "inf" : "0") << std::setw(11) << row.cost.total
                  << (static_cast<int>(i) == c.index ? "  <-" : "") << "\n";
    }
    const MotionCommand cmd = step_decision(in.observation, c.theta, in.thresholds, in.goal_orientation);
    std::cout << std::setprecision(4) << "theta* = " << c.theta << " rad, command = " << to_string(cmd.kind);
    if (cmd.kind == MotionCommand::Kind::rotate) std::cout << " to " << cmd.target_heading << " rad";
    if (cmd.kind == MotionCommand::Kind::forward || cmd.kind == MotionCommand::Kind::backward)
        std::cout << " " << cmd.distance << " cells";
    std::cout << "\n";
    return kOk;
}

int cmd_fuse(const std::string& dir, const std::string& out, const FusionParams& params) {
    std::vector<LocalSemanticMap> maps;
    for (const auto& f : scenario_files(dir)) maps.push_back(local_map_from_json(read_json_file(f)));
    const GlobalSemanticMap g = fuse(maps, params);
    const std::string text = to_json(g).dump(2) + "\n";
    if (out.empty()) {
        std::cout << text;
    } else {
        write_file_atomic(out, text);
    }
    return kOk;
}

int cmd_gridmask(int width, int height, int cell, const std::string& out) {
    const std::string svg = render_gridmask_svg({width, height, cell});
    if (out.empty()) {
        std::cout << svg;
    } else {
        write_file_atomic(out, svg);
    }
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"aerogrid: aerial-guided ground robot planning and simulation"};
    app.require_subcommand(1);

    std::vector<std::string> overrides;
    std::string file, trace, summary, svg, out, dir;

    auto* run = app.add_subcommand("run-scenario", "run one scenario end to end");
    run->add_option("--file", file, "scenario JSON")->required();
    run->add_option("--trace", trace, "trace output (JSON lines)");
    run->add_option("--summary", summary, "summary output (JSON)");
    run->add_option("--svg", svg, "arena plot output (SVG)");
    run->add_option("--set", overrides, "override a scenario field, e.g. noise.position_sigma=0.15");

    std::vector<std::string> files;
    std::vector<std::uint64_t> seeds;
    auto* batch = app.add_subcommand("batch", "run scenarios over several seeds and tabulate metrics");
    batch->add_option("--dir", dir, "directory of scenario files");
    batch->add_option("--files", files, "scenario files");
    batch->add_option("--seeds", seeds, "seeds, each replacing the scenario seed")->delimiter(',');
    batch->add_option("--out", out, "CSV output");
    batch->add_option("--set", overrides, "override a scenario field for every run");

    auto* pg = app.add_subcommand("plan-global", "optimize the drone paths for a scenario's task");
    pg->add_option("--scenario", file, "scenario JSON")->required();
    pg->add_option("--out", out, "path JSON output");
    pg->add_option("--set", overrides, "override a scenario field");

    std::string observation, weights;
    auto* pl = app.add_subcommand("plan-local-step", "score candidate directions for one observation");
    pl->add_option("--observation", observation, "observation JSON")->required();
    pl->add_option("--weights", weights, "local cost weights JSON");

    FusionParams fusion;
    auto* fu = app.add_subcommand("fuse", "fuse local semantic maps into a global map");
    fu->add_option("--maps", dir, "directory of local map JSON files")->required();
    fu->add_option("--out", out, "global map JSON output");
    fu->add_option("--merge-radius", fusion.merge_radius, "meters");
    fu->add_option("--conflict-radius", fusion.conflict_radius, "meters");
    fu->add_option("--footprint-inset", fusion.footprint_inset, "meters");

    int width = 1600, height = 1200, cell = 80;
    auto* gm = app.add_subcommand("gridmask-svg", "render the coordinate grid overlay");
    gm->add_option("--width", width, "image width, pixels");
    gm->add_option("--height", height, "image height, pixels");
    gm->add_option("--cell", cell, "grid interval, pixels");
    gm->add_option("--out", out, "SVG output");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfigError;
    }

    try {
        if (*run) return cmd_run(file, trace, summary, svg, overrides);
        if (*batch) return cmd_batch(dir, files, seeds, out, overrides);
        if (*pg) return cmd_plan_global(file, out, overrides);
        if (*pl) return cmd_plan_local(observation, weights);
        if (*fu) return cmd_fuse(dir, out, fusion);
        if (*gm) return cmd_gridmask(width, height, cell, out);
    } catch (const ScenarioError& e) {
        std::cerr << e.what() << "\n";
        return kConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kConfigError;
    }
    return kConfigError;
}
