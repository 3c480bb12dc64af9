#pragma once

// Task layer: a small command grammar, a rule-based reasoner that expands a
// command into motion-function calls for the drone and the ground robot, the
// word-assembly slot planner, and the executor that runs a plan against the
// simulator in one deterministic tick loop.

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <optional>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "aerogrid/errors.hpp"
#include "aerogrid/geometry.hpp"
#include "aerogrid/global_planner.hpp"
#include "aerogrid/gridmask.hpp"
#include "aerogrid/local_planner.hpp"
#include "aerogrid/perception.hpp"
#include "aerogrid/semantic_map.hpp"
#include "aerogrid/spline.hpp"
#include "aerogrid/world.hpp"

namespace aerogrid {

struct GoalSpec {
    enum class Kind { coordinate, object, relation };
    Kind kind = Kind::coordinate;
    Vec2 point;                // coordinate: world meters
    std::string name;          // object: goal object; relation: reference landmark
    Direction direction = Direction::front;
    double clearance = 0.35;   // relation: landmark center to goal, meters

    static GoalSpec coordinate(Vec2 p) { return {Kind::coordinate, p, {}, Direction::front, 0.0}; }
    static GoalSpec object(std::string n) { return {Kind::object, {}, std::move(n), Direction::front, 0.0}; }
    static GoalSpec relation(std::string n, Direction d, double clearance = 0.35) {
        return {Kind::relation, {}, std::move(n), d, clearance};
    }

    std::string describe() const {
        std::ostringstream s;
        switch (kind) {
            case Kind::coordinate: s << "coordinate(" << detail::num(point.x) << ", " << detail::num(point.y) << ")"; break;
            case Kind::object: s << "object(" << name << ")"; break;
            case Kind::relation:
                s << "relation(" << name << ", " << to_string(direction) << ", " << detail::num(clearance) << ")";
                break;
        }
        return s.str();
    }

    friend bool operator==(const GoalSpec&, const GoalSpec&) = default;
};

// Body-frame angle of each landmark direction.
inline double direction_offset(Direction d) {
    switch (d) {
        case Direction::front: return 0.0;
        case Direction::back: return kPi;
        case Direction::left: return kPi / 2.0;
        case Direction::right: return -kPi / 2.0;
    }
    return 0.0;
}

// Goal point next to a landmark. Without a known yaw the world axes are used.
inline Vec2 relation_point(Vec2 landmark, std::optional<double> yaw, Direction d, double clearance) {
    return landmark + clearance * unit_vector(yaw.value_or(0.0) + direction_offset(d));
}

enum class Assignee { drone, dog, both };
enum class MotionFunction { construct_map, planning_start, following_start, attach, detach };

inline const char* to_string(Assignee a) {
    switch (a) {
        case Assignee::drone: return "drone";
        case Assignee::dog: return "dog";
        case Assignee::both: return "both";
    }
    return "?";
}

inline const char* to_string(MotionFunction f) {
    switch (f) {
        case MotionFunction::construct_map: return "construct_map";
        case MotionFunction::planning_start: return "planning_start";
        case MotionFunction::following_start: return "following_start";
        case MotionFunction::attach: return "attach";
        case MotionFunction::detach: return "detach";
    }
    return "?";
}

struct MotionCall {
    Assignee who = Assignee::drone;
    MotionFunction fn = MotionFunction::construct_map;
    std::optional<GoalSpec> goal;
    std::string object;  // attach/detach subject

    friend bool operator==(const MotionCall&, const MotionCall&) = default;
};

struct Subtask {
    Assignee assignee = Assignee::drone;
    std::vector<MotionCall> calls;
    std::string carried;  // movement while holding this object

    bool is_construct() const { return calls.size() == 1 && calls[0].fn == MotionFunction::construct_map; }
    bool is_move() const { return assignee == Assignee::both; }
    bool is_attach() const { return calls.size() == 1 && calls[0].fn == MotionFunction::attach; }
    bool is_detach() const { return calls.size() == 1 && calls[0].fn == MotionFunction::detach; }
    const GoalSpec& goal() const { return *calls.at(0).goal; }

    std::string describe() const {
        std::string s = std::string(to_string(assignee)) + ":";
        for (const auto& c : calls) {
            s += " ";
            s += to_string(c.fn);
            if (c.goal) s += "(" + c.goal->describe() + ")";
            if (!c.object.empty()) s += "(" + c.object + ")";
        }
        if (!carried.empty()) s += " carrying " + carried;
        return s;
    }

    static Subtask construct_map() { return {Assignee::drone, {{Assignee::drone, MotionFunction::construct_map, {}, {}}}, {}}; }
    static Subtask move(const GoalSpec& g, std::string carried = {}) {
        return {Assignee::both,
                {{Assignee::drone, MotionFunction::planning_start, g, {}},
                 {Assignee::dog, MotionFunction::following_start, g, {}}},
                std::move(carried)};
    }
    static Subtask attach(std::string name) {
        return {Assignee::dog, {{Assignee::dog, MotionFunction::attach, {}, std::move(name)}}, {}};
    }
    static Subtask detach(std::string name) {
        return {Assignee::dog, {{Assignee::dog, MotionFunction::detach, {}, std::move(name)}}, {}};
    }

    friend bool operator==(const Subtask&, const Subtask&) = default;
};

struct TaskPlan {
    std::vector<Subtask> subtasks;

    void validate() const {
        if (subtasks.empty() || !subtasks.front().is_construct())
            throw InvalidArgument("TaskPlan: the first subtask must be construct_map");
        for (const auto& s : subtasks) {
            if (s.assignee != Assignee::both) continue;
            const bool paired = s.calls.size() == 2 && s.calls[0].who == Assignee::drone &&
                                s.calls[0].fn == MotionFunction::planning_start && s.calls[1].who == Assignee::dog &&
                                s.calls[1].fn == MotionFunction::following_start && s.calls[0].goal &&
                                s.calls[0].goal == s.calls[1].goal;
            if (!paired)
                throw InvalidArgument("TaskPlan: a 'both' subtask must pair planning_start with following_start");
        }
    }

    // Names of objects that the plan picks up.
    std::vector<std::string> carried_objects() const {
        std::vector<std::string> out;
        for (const auto& s : subtasks)
            if (s.is_attach()) out.push_back(s.calls[0].object);
        return out;
    }
};

struct Command {
    enum class Verb { move_to, carry, assemble };
    Verb verb = Verb::move_to;
    GoalSpec goal;
    std::string object;              // carry subject
    std::string word;                // assemble
    std::vector<std::string> fixed;  // assemble: letters that must not move
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n.");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_names(const std::string& s) {
    static const std::regex sep(R"(\s*(?:,|\band\b)\s*)", std::regex::icase);
    std::vector<std::string> out;
    for (std::sregex_token_iterator it(s.begin(), s.end(), sep, -1), end; it != end; ++it) {
        const std::string t = trim(*it);
        if (!t.empty()) out.push_back(t);
    }
    return out;
}

}  // namespace detail

// Supported forms:
//   move_to (x, y)            move to X
//   carry X to (x, y)         carry|move X to [the] <front|back|left|right> [side] of [the] Y
//   assemble WORD             assemble WORD, fixed {A, B}     assemble WORD, do not move A [and B]
inline Command parse_command(const std::string& text, double relation_clearance = 0.35) {
    using std::regex;
    const auto icase = regex::icase;
    const std::string num = R"([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)";
    const std::string point = R"(\(\s*()" + num + R"()\s*,\s*()" + num + R"()\s*\))";
    static const regex move_xy(R"(^move[_ ]to\s*)" + point + "$", icase);
    static const regex carry_xy(R"(^carry\s+(\w+)\s+to\s*)" + point + "$", icase);
    static const regex relation(
        R"(^(?:carry|move)\s+(\w+)\s+to\s+(?:the\s+)?(front|back|left|right)\s+(?:side\s+)?of\s+(?:the\s+)?(\w+)$)",
        icase);
    static const regex move_obj(R"(^move[_ ]to\s+(?:the\s+)?(\w+)$)", icase);
    static const regex assemble(R"(^assemble\s+(?:the\s+word\s+)?(\w+)\s*(?:,\s*(.*))?$)", icase);
    static const regex fixed_set(R"(^fixed\s*\{([^}]*)\}$)", icase);
    static const regex keep(R"(^(?:do\s+not|don't)\s+move\s+(.+)$)", icase);

    const std::string s = detail::trim(text);
    std::smatch m;
    Command c;
    if (std::regex_match(s, m, move_xy)) {
        c.verb = Command::Verb::move_to;
        c.goal = GoalSpec::coordinate({std::stod(m[1]), std::stod(m[2])});
    } else if (std::regex_match(s, m, carry_xy)) {
        c.verb = Command::Verb::carry;
        c.object = m[1];
        c.goal = GoalSpec::coordinate({std::stod(m[2]), std::stod(m[3])});
    } else if (std::regex_match(s, m, relation)) {
        c.verb = Command::Verb::carry;
        c.object = m[1];
        std::string dir = m[2];
        std::transform(dir.begin(), dir.end(), dir.begin(), [](unsigned char ch) { return std::tolower(ch); });
        c.goal = GoalSpec::relation(m[3], *parse_direction(dir), relation_clearance);
    } else if (std::regex_match(s, m, move_obj)) {
        c.verb = Command::Verb::move_to;
        c.goal = GoalSpec::object(m[1]);
    } else if (std::regex_match(s, m, assemble)) {
        c.verb = Command::Verb::assemble;
        c.word = m[1];
        const std::string rest = detail::trim(m[2]);
        std::smatch f;
        if (rest.empty()) {
        } else if (std::regex_match(rest, f, fixed_set) || std::regex_match(rest, f, keep)) {
            c.fixed = detail::split_names(f[1]);
        } else {
            throw ParseError("parse_command: unsupported assemble clause '" + rest + "'");
        }
    } else {
        throw ParseError("parse_command: unsupported command '" + s + "'");
    }
    if (c.verb == Command::Verb::carry && c.goal.kind == GoalSpec::Kind::relation && c.goal.name == c.object)
        throw ParseError("parse_command: an object cannot be placed relative to itself");
    return c;
}

struct AssemblyGoal {
    std::string letter;
    GoalSpec goal;  // coordinate of the letter's slot
    int slot = 0;
};

// Slot k sits at anchor + (k - k_anchor) * pitch along +x, so the word reads
// left to right. The anchor is the first fixed letter, or the first letter of
// the word when nothing is fixed.
inline std::vector<AssemblyGoal> plan_word_assembly(const std::string& word, const GlobalSemanticMap& map,
                                                    const std::vector<std::string>& fixed, double pitch) {
    if (word.empty()) throw InvalidArgument("plan_word_assembly: empty word");
    if (!(pitch > 0.0)) throw InvalidArgument("plan_word_assembly: pitch must be > 0");
    std::vector<std::string> letters;
    for (char ch : word) letters.emplace_back(1, ch);
    if (std::set<std::string>(letters.begin(), letters.end()).size() != letters.size())
        throw InvalidArgument("plan_word_assembly: repeated letters in '" + word + "'");
    for (const auto& f : fixed)
        if (std::find(letters.begin(), letters.end(), f) == letters.end())
            throw InvalidArgument("plan_word_assembly: fixed letter '" + f + "' is not in the word");

    std::vector<Vec2> current;
    for (const auto& l : letters) {
        int count = 0;
        for (const auto& e : map.entries)
            if (e.name == l) ++count;
        if (count != 1)
            throw InfeasibleError("plan_word_assembly: letter '" + l + "' has " + std::to_string(count) +
                                  " map entries, expected 1");
        current.push_back(map.find(l)->position);
    }

    std::size_t anchor = 0;
    for (std::size_t k = 0; k < letters.size(); ++k) {
        if (std::find(fixed.begin(), fixed.end(), letters[k]) != fixed.end()) {
            anchor = k;
            break;
        }
    }
    const auto slot = [&](std::size_t k) {
        return current[anchor] + Vec2{(static_cast<double>(k) - static_cast<double>(anchor)) * pitch, 0.0};
    };
    for (std::size_t k = 0; k < letters.size(); ++k) {
        const bool is_fixed = std::find(fixed.begin(), fixed.end(), letters[k]) != fixed.end();
        if (is_fixed && distance(current[k], slot(k)) > 0.5 * pitch)
            throw InfeasibleError("plan_word_assembly: fixed letters '" + letters[anchor] + "' and '" + letters[k] +
                                  "' are not spaced for a row at pitch " + detail::num(pitch));
    }

    std::vector<AssemblyGoal> out;
    for (std::size_t k = 0; k < letters.size(); ++k) {
        const bool is_fixed = std::find(fixed.begin(), fixed.end(), letters[k]) != fixed.end();
        if (is_fixed || distance(current[k], slot(k)) <= 0.5 * pitch) continue;
        out.push_back({letters[k], GoalSpec::coordinate(slot(k)), static_cast<int>(k)});
    }
    return out;
}

class Reasoner {
public:
    virtual ~Reasoner() = default;
    // `map` may be null for commands that do not need it; assemble does.
    virtual TaskPlan decompose(const Command& command, const GlobalSemanticMap* map) const = 0;
};

class RuleBasedReasoner : public Reasoner {
public:
    explicit RuleBasedReasoner(double pitch = 0.4) : pitch_(pitch) {}

    TaskPlan decompose(const Command& c, const GlobalSemanticMap* map) const override {
        TaskPlan plan;
        plan.subtasks.push_back(Subtask::construct_map());
        const auto carry = [&](const std::string& name, const GoalSpec& goal) {
            plan.subtasks.push_back(Subtask::move(GoalSpec::object(name)));
            plan.subtasks.push_back(Subtask::attach(name));
            plan.subtasks.push_back(Subtask::move(goal, name));
            plan.subtasks.push_back(Subtask::detach(name));
        };
        switch (c.verb) {
            case Command::Verb::move_to:
                plan.subtasks.push_back(Subtask::move(c.goal));
                break;
            case Command::Verb::carry:
                carry(c.object, c.goal);
                break;
            case Command::Verb::assemble:
                if (!map) throw InvalidArgument("decompose: assemble needs the global map");
                for (const auto& g : plan_word_assembly(c.word, *map, c.fixed, pitch_)) carry(g.letter, g.goal);
                break;
        }
        plan.validate();
        return plan;
    }

private:
    double pitch_;
};

struct MissionConfig {
    GlobalCostWeights global;
    OptimizeOptions optimize;
    int n_controls = 6;
    LocalCostWeights local;
    double dist_stop = 0.5;   // cells
    double angle_tol = 0.1;   // radians
    SimParams sim;
    FusionParams fusion;
    CameraModel camera;
    NoiseModel noise;
    double object_radius = 0.1;       // meters, assumed for every mapped object
    double relation_clearance = 0.35; // meters
    double pitch = 0.4;               // meters between word slots
    int map_update_period = 10;       // ticks
    int stop_confirmations = 3;
    int carry_fail_limit = 3;         // consecutive failed carry checks before rollback
    int attach_retries = 3;
    int max_rollbacks = 3;
    double retreat = 0.2;             // meters backed off after a detach
    int hover_frames = 3;             // frames taken at each mapping viewpoint
    double map_overlap = 0.3;         // minimum footprint overlap between mapping viewpoints
    long max_steps = 6000;
    std::optional<long> drop_at_step; // scripted drop of the held object

    void validate() const {
        global.validate();
        local.validate();
        sim.validate();
        fusion.validate();
        camera.validate();
        noise.validate();
        if (n_controls < 4) throw InvalidArgument("MissionConfig: n_controls must be >= 4");
        if (!(dist_stop > 0.0) || !(angle_tol > 0.0)) throw InvalidArgument("MissionConfig: invalid stop thresholds");
        if (!(object_radius > 0.0)) throw InvalidArgument("MissionConfig: object_radius must be > 0");
        if (map_update_period < 1 || stop_confirmations < 1 || carry_fail_limit < 1 || hover_frames < 1)
            throw InvalidArgument("MissionConfig: periods and counts must be >= 1");
        if (max_steps < 1) throw InvalidArgument("MissionConfig: max_steps must be >= 1");
        if (!(map_overlap >= 0.0 && map_overlap < 1.0)) throw InvalidArgument("MissionConfig: map_overlap in [0, 1)");
    }
};

struct GlobalLeg {
    Vec2 origin;              // world position of the grid origin (the robot)
    double meters_per_cell = 0.0;
    ControlPolygon init;      // grid cells
    OptimizeResult result;    // grid cells; empty path when init.at_goal
    std::vector<Vec2> world_path;
};

// Optimized drone path from `origin` to `goal` (world meters). Planning runs in
// grid cells centered on the origin; obstacles are mapped objects.
inline GlobalLeg plan_global_leg(Vec2 origin, Vec2 goal, const std::vector<Circle>& obstacles_world,
                                 double meters_per_cell, const MissionConfig& cfg) {
    GlobalLeg leg;
    leg.origin = origin;
    leg.meters_per_cell = meters_per_cell;
    ObstacleSet obstacles;
    for (const Circle& c : obstacles_world)
        obstacles.push_back({(c.center - origin) / meters_per_cell, c.radius / meters_per_cell});
    leg.init = straight_line_init({0.0, 0.0}, (goal - origin) / meters_per_cell, cfg.n_controls);
    if (leg.init.at_goal) {
        leg.world_path = {origin};
        return leg;
    }
    leg.result = optimize(leg.init.points, 3, cfg.global, obstacles, cfg.optimize);
    for (const Vec2& p : sample(leg.result.path, cfg.global.sample_count))
        leg.world_path.push_back(origin + meters_per_cell * p);
    return leg;
}

struct TraceRecord {
    long step = 0;
    std::string phase;
    Vec2 drone;
    double altitude = 0.0;
    Vec2 robot;
    double heading = 0.0;
    std::optional<std::string> attached;
    std::string command = "idle";
    std::optional<double> theta;
    std::optional<double> cost;
    std::vector<std::string> events;
};

struct MissionResult {
    bool success = false;
    std::string failure;
    int collisions = 0;
    long steps = 0;
    double path_length = 0.0;            // ground robot travel, meters
    std::vector<double> placement_errors;  // meters, one per placement goal
    int rollbacks = 0;
    int replans = 0;
    int attach_failures = 0;
    TaskPlan plan;
    GlobalSemanticMap final_map;
    std::vector<std::vector<Vec2>> global_paths;  // world frame
    std::vector<Vec2> robot_track;
    std::vector<WorldObject> final_objects;
    std::vector<TraceRecord> trace;
};

// Runs a plan tick by tick: drone step, perception, local planning, ground
// step, carry monitoring, periodic map update, collision accounting.
class Executor {
public:
    Executor(WorldState world, Rect arena, MissionConfig config, const Reasoner* reasoner = nullptr)
        : world_(std::move(world)), arena_(arena), cfg_(std::move(config)), reasoner_(reasoner) {
        cfg_.validate();
        if (!(arena_.width() > 0.0 && arena_.height() > 0.0)) throw InvalidArgument("Executor: empty arena");
        cruise_altitude_ = world_.drone.altitude;
        s_cell_ = meters_per_cell_at(cfg_.camera, cruise_altitude_);
        initial_ = world_;
    }

    const WorldState& world() const { return world_; }

    // Parses and runs a command. Assembly goals depend on the map, so the map is
    // built before the plan is expanded.
    MissionResult run(const std::string& text) {
        const Command cmd = parse_command(text, cfg_.relation_clearance);
        const RuleBasedReasoner fallback(cfg_.pitch);
        const Reasoner& reasoner = reasoner_ ? *reasoner_ : static_cast<const Reasoner&>(fallback);
        fixed_ = cmd.fixed;
        try {
            if (cmd.verb == Command::Verb::assemble) {
                construct_map();
                result_.plan = reasoner.decompose(cmd, &global_);
                return run_plan(result_.plan, true);
            }
            result_.plan = reasoner.decompose(cmd, nullptr);
        } catch (const InfeasibleError& e) {
            return finish(std::string("infeasible: ") + e.what());
        }
        return run_plan(result_.plan, false);
    }

    MissionResult execute(const TaskPlan& plan) {
        plan.validate();
        result_.plan = plan;
        return run_plan(plan, false);
    }

private:
    struct BudgetExceeded {};
    enum class MoveStatus { done, rollback, failed };

    MissionResult run_plan(const TaskPlan& plan, bool map_ready) {
        plan.validate();
        try {
            std::deque<Subtask> queue(plan.subtasks.begin(), plan.subtasks.end());
            if (map_ready) queue.pop_front();
            while (!queue.empty()) {
                const Subtask task = queue.front();
                queue.pop_front();
                if (task.is_construct()) {
                    construct_map();
                } else if (task.is_move()) {
                    const MoveStatus st = move(task);
                    if (st == MoveStatus::failed) return finish(failure_);
                    if (st == MoveStatus::rollback) {
                        if (++result_.rollbacks > cfg_.max_rollbacks) return finish("too many rollbacks");
                        queue.push_front(task);
                        queue.push_front(Subtask::attach(task.carried));
                        queue.push_front(Subtask::move(GoalSpec::object(task.carried)));
                    }
                } else if (task.is_attach()) {
                    if (!do_attach(task.calls[0].object)) return finish(failure_);
                } else if (task.is_detach()) {
                    do_detach();
                }
            }
        } catch (const BudgetExceeded&) {
            return finish("step budget exhausted");
        }
        return finish({});
    }

    MissionResult finish(const std::string& failure) {
        result_.failure = failure;
        result_.steps = world_.step;
        result_.final_map = global_;
        result_.final_map.pool.clear();
        result_.final_objects = world_.objects;
        bool ok = failure.empty();
        const double tol = cfg_.dist_stop * s_cell_;
        if (ok) {
            for (const auto& p : placements_) {
                const double err = distance(world_.find(p.object_id)->position, true_goal(p.goal));
                result_.placement_errors.push_back(err);
                if (!(err < tol)) ok = false;
            }
            if (final_robot_goal_) {
                const double err = distance(world_.ground_robot.position, *final_robot_goal_);
                result_.placement_errors.push_back(err);
                if (!(err < tol)) ok = false;
            }
            for (const auto& name : fixed_) {
                const WorldObject* now = world_.find_by_name(name);
                const WorldObject* before = initial_.find_by_name(name);
                if (!now || !before || distance(now->position, before->position) > 1e-9) ok = false;
            }
            if (!ok) result_.failure = "placement outside tolerance";
        }
        result_.success = ok;
        return result_;
    }

    Vec2 true_goal(const GoalSpec& g) const {
        if (g.kind == GoalSpec::Kind::coordinate) return g.point;
        const WorldObject* o = initial_.find_by_name(g.name);
        const WorldObject* now = world_.find_by_name(g.name);
        if (!o || !now) return g.point;
        if (g.kind == GoalSpec::Kind::object) return now->position;
        return relation_point(now->position, now->yaw, g.direction, g.clearance);
    }

    // ---- per-tick bookkeeping -------------------------------------------------

    void end_tick(TraceRecord rec) {
        for (const auto& ev : detect_collisions(world_, overlaps_)) {
            ++result_.collisions;
            rec.events.push_back("collision:" + ev.part + ":" + ev.object);
        }
        rec.step = world_.step;
        rec.phase = phase_;
        rec.drone = world_.drone.position;
        rec.altitude = world_.drone.altitude;
        rec.robot = world_.ground_robot.position;
        rec.heading = world_.ground_robot.heading;
        rec.attached = world_.attachment;
        result_.trace.push_back(std::move(rec));
        result_.robot_track.push_back(world_.ground_robot.position);
        ++world_.step;
        if (world_.step >= cfg_.max_steps) throw BudgetExceeded{};
    }

    void note_robot(const LocalSemanticMap& m) {
        if (m.parts) robot_estimate_ = to_world(m).parts->body;
    }

    void fly_to(Vec2 target) {
        while (distance(world_.drone.position, target) > 0.0) {
            const double d = distance(world_.drone.position, target);
            const double step = cfg_.sim.drone_speed * cfg_.sim.dt;
            world_.drone.position = d <= step ? target : world_.drone.position + (step / d) * (target - world_.drone.position);
            end_tick({});
        }
    }

    // ---- construct_map ---------------------------------------------------------

    void construct_map() {
        phase_ = "construct_map";
        const GroundScale g = ground_scale(cfg_.camera);
        const double aspect = static_cast<double>(cfg_.camera.image_height) / cfg_.camera.image_width;
        // A 2x2 lattice at quarter points; footprints must overlap by map_overlap.
        const double need_w = arena_.width() / 2.0 / (1.0 - cfg_.map_overlap);
        const double need_h = arena_.height() / 2.0 / (1.0 - cfg_.map_overlap);
        const double width_per_meter = g.ground_width / cfg_.camera.altitude;
        const double alt_needed = std::max(need_w, need_h / aspect) / width_per_meter;
        const double altitude = std::max(cruise_altitude_, alt_needed);
        world_.drone.altitude = altitude;

        const TaskContext ctx{TaskKind::map_construction, {}, {}, {}};
        std::vector<LocalSemanticMap> maps;
        const double xs[] = {arena_.min.x + arena_.width() / 4.0, arena_.min.x + 3.0 * arena_.width() / 4.0};
        const double ys[] = {arena_.min.y + arena_.height() / 4.0, arena_.min.y + 3.0 * arena_.height() / 4.0};
        const Vec2 tour[] = {{xs[0], ys[0]}, {xs[1], ys[0]}, {xs[1], ys[1]}, {xs[0], ys[1]}};
        for (const Vec2 vp : tour) {
            fly_to(vp);
            for (int f = 0; f < cfg_.hover_frames; ++f) {
                LocalSemanticMap m = observe(world_, cfg_.camera, ctx, cfg_.noise);
                note_robot(m);
                maps.push_back(std::move(m));
                TraceRecord rec;
                rec.events.push_back("observe");
                end_tick(std::move(rec));
            }
        }
        global_ = fuse(maps, cfg_.fusion);
        world_.drone.altitude = cruise_altitude_;
    }

    // ---- movement ---------------------------------------------------------------

    std::optional<Vec2> resolve(const GoalSpec& g) const {
        if (g.kind == GoalSpec::Kind::coordinate) return g.point;
        const GlobalEntry* e = global_.find(g.name);
        if (!e) return std::nullopt;
        if (g.kind == GoalSpec::Kind::object) return e->position;
        return relation_point(e->position, e->orientation, g.direction, g.clearance);
    }

    bool plan_path(const GoalSpec& goal, const std::string& carried, Vec2 goal_world) {
        const Vec2 origin = robot_estimate_.value_or(world_.drone.position);
        std::vector<Circle> obstacles;
        for (const auto& e : global_.entries) {
            if (e.name == carried) continue;
            if (goal.kind == GoalSpec::Kind::object && e.name == goal.name) continue;
            obstacles.push_back({e.position, cfg_.object_radius});
        }
        try {
            path_ = plan_global_leg(origin, goal_world, obstacles, s_cell_, cfg_).world_path;
        } catch (const NumericalError& e) {
            failure_ = e.what();
            return false;
        }
        result_.global_paths.push_back(path_);
        return true;
    }

    // Target point for the local planner in the current image frame.
    std::optional<Vec2> local_target(const GoalSpec& goal, Vec2 goal_world, const LocalSemanticMap& m) const {
        const double mpc = m.meters_per_cell;
        if (goal.kind == GoalSpec::Kind::coordinate) return std::nullopt;
        if (goal.kind == GoalSpec::Kind::object) {
            // Prefer the live detection closest to the mapped position.
            const SemanticObject* best = nullptr;
            double best_d = 0.0;
            for (const auto& o : m.objects) {
                if (o.category != Category::target || o.entity != Entity::object) continue;
                const double d = distance(m.observer + mpc * o.coordinate, goal_world);
                if (!best || d < best_d) {
                    best = &o;
                    best_d = d;
                }
            }
            if (best && best_d < 4.0 * cfg_.object_radius) return best->coordinate;
        }
        const Vec2 t = (goal_world - m.observer) / mpc;
        if (!m.footprint.contains(goal_world)) return std::nullopt;
        return t;
    }

    MoveStatus move(const Subtask& task) {
        const GoalSpec& goal = task.goal();
        const bool carrying = !task.carried.empty();
        phase_ = task.describe();
        std::optional<Vec2> goal_world = resolve(goal);
        if (!goal_world) {
            failure_ = "goal not in map: " + goal.describe();
            return MoveStatus::failed;
        }
        if (!plan_path(goal, task.carried, *goal_world)) return MoveStatus::failed;
        fly_to(path_.front());
        world_.drone.waypoint_index = 0;

        TaskContext ctx;
        if (goal.kind == GoalSpec::Kind::coordinate) {
            ctx.kind = TaskKind::move_to_coordinate;
        } else if (goal.kind == GoalSpec::Kind::object) {
            ctx.kind = TaskKind::move_to_object;
            ctx.target_name = goal.name;
        } else {
            ctx.kind = TaskKind::carry_to_relation;
            ctx.target_name = goal.name;
            ctx.relation = goal.direction;
        }
        if (carrying && world_.attachment) ctx.carried_object = world_.attachment;
        const bool approach = goal.kind == GoalSpec::Kind::object && !carrying;
        const bool uses_effector = carrying || approach;

        int stops = 0;
        int carry_fails = 0;
        int lost = 0;
        bool replanned = false;
        long since_update = 0;
        const StepThresholds th{cfg_.dist_stop, cfg_.angle_tol, cfg_.sim.ground_step / s_cell_};

        for (;;) {
            TraceRecord rec;
            if (cfg_.drop_at_step && world_.step == *cfg_.drop_at_step && world_.attachment) {
                WorldObject* o = world_.find(*world_.attachment);
                detach(world_);
                const GroundRobot& r = world_.ground_robot;
                o->position = r.position + 0.5 * unit_vector(r.heading + kPi / 2.0);
                rec.events.push_back("drop:" + o->id);
            }
            step_drone(world_, path_, cfg_.sim);
            const LocalSemanticMap local = observe(world_, cfg_.camera, ctx, cfg_.noise);
            note_robot(local);
            const double mpc = local.meters_per_cell;

            MotionCommand cmd;  // stop
            ObstacleSet obstacles_world;
            bool done = false;
            if (!local.parts) {
                if (++lost > 200) {
                    failure_ = "ground robot out of view";
                    return MoveStatus::failed;
                }
                rec.command = "wait";
            } else {
                lost = 0;
                LocalObservation obs;
                obs.parts = *local.parts;
                obs.main = local.parts->body;
                obs.target = local_target(goal, *goal_world, local);
                for (const auto& o : local.objects) {
                    if (o.entity != Entity::object) continue;
                    const bool blocks = o.category == Category::obstacle ||
                                        (o.category == Category::landmark && o.is_obstacle_too);
                    if (!blocks) continue;
                    obs.obstacles.push_back({o.coordinate, cfg_.object_radius / mpc});
                    obstacles_world.push_back({local.observer + mpc * o.coordinate, cfg_.object_radius});
                }
                if (uses_effector)
                    obs.effector = obs.parts.head + (cfg_.object_radius / mpc) * unit_vector(obs.heading());
                std::optional<double> goal_orientation;
                if (approach && obs.target) goal_orientation = bearing(obs.main, *obs.target);

                DirectionChoice choice;
                try {
                    choice = select_direction(obs, cfg_.local);
                } catch (const BlockedError&) {
                    if (replanned) {
                        failure_ = "blocked after replan";
                        return MoveStatus::failed;
                    }
                    replanned = true;
                    ++result_.replans;
                    rec.events.push_back("replan");
                    end_tick(std::move(rec));
                    if (!plan_path(goal, task.carried, *goal_world)) return MoveStatus::failed;
                    fly_to(path_.front());
                    world_.drone.waypoint_index = 0;
                    continue;
                }
                cmd = step_decision(obs, choice.theta, th, goal_orientation);
                rec.theta = choice.theta;
                rec.cost = choice.table[static_cast<std::size_t>(choice.index)].cost.total;
                rec.command = to_string(cmd.kind);

                const bool goal_real = obs.target.has_value() ||
                                       (goal.kind == GoalSpec::Kind::coordinate && drone_finished(world_, path_));
                if (cmd.kind == MotionCommand::Kind::stop && goal_real) {
                    done = ++stops >= cfg_.stop_confirmations;
                } else {
                    stops = 0;
                }
            }

            const Vec2 before = world_.ground_robot.position;
            step_ground(world_, cmd, obstacles_world, cfg_.sim);
            result_.path_length += distance(before, world_.ground_robot.position);

            if (carrying) {
                const Outcome c = carry_check(local, cfg_.sim);
                carry_fails = c.ok ? 0 : carry_fails + 1;
                // A carry only completes with the object seen at the head.
                if (carry_fails > 0) {
                    done = false;
                    stops = 0;
                }
                if (carry_fails >= cfg_.carry_fail_limit) {
                    rec.events.push_back("rollback:" + c.reason);
                    if (world_.attachment) detach(world_);
                    end_tick(std::move(rec));
                    return MoveStatus::rollback;
                }
            }
            if (++since_update >= cfg_.map_update_period) {
                since_update = 0;
                global_ = update(global_, local, cfg_.fusion);
                rec.events.push_back("map_update");
            }
            end_tick(std::move(rec));
            if (done) {
                if (goal.kind == GoalSpec::Kind::coordinate && !carrying) final_robot_goal_ = goal.point;
                if (carrying) last_carry_goal_ = goal;
                return MoveStatus::done;
            }
        }
    }

    // ---- attach / detach -------------------------------------------------------

    bool do_attach(const std::string& name) {
        phase_ = "dog: attach(" + name + ")";
        for (int attempt = 0;; ++attempt) {
            if (world_.attachment) {
                // A false drop alarm: the object never left the magnet.
                const WorldObject* held = world_.find(*world_.attachment);
                TraceRecord rec;
                rec.command = "attach";
                rec.events.push_back("attach:" + held->id);
                end_tick(std::move(rec));
                carried_id_ = held->id;
                return true;
            }
            // The magnet grabs whatever sits in front of it.
            const GroundRobot& r = world_.ground_robot;
            const WorldObject* nearest = nullptr;
            for (const auto& o : world_.objects) {
                if (!nearest || distance(o.position, r.head()) < distance(nearest->position, r.head())) nearest = &o;
            }
            Outcome out{false, "no objects"};
            if (nearest) out = attach(world_, nearest->id, cfg_.sim);
            TraceRecord rec;
            rec.command = "attach";
            if (out.ok) {
                carried_id_ = nearest->id;
                rec.events.push_back("attach:" + nearest->id);
                end_tick(std::move(rec));
                return true;
            }
            ++result_.attach_failures;
            rec.events.push_back("attach_failed:" + out.reason);
            end_tick(std::move(rec));
            if (attempt + 1 >= cfg_.attach_retries) {
                failure_ = "attach failed: " + out.reason;
                return false;
            }
            // Back off and re-approach.
            retreat();
            const Subtask approach = Subtask::move(GoalSpec::object(name));
            if (move(approach) != MoveStatus::done) {
                if (failure_.empty()) failure_ = "re-approach failed";
                return false;
            }
            phase_ = "dog: attach(" + name + ")";
        }
    }

    void retreat() {
        const int ticks = static_cast<int>(std::ceil(cfg_.retreat / cfg_.sim.ground_step - 1e-9));
        for (int i = 0; i < ticks; ++i) {
            const Vec2 before = world_.ground_robot.position;
            step_ground(world_, {MotionCommand::Kind::backward, world_.ground_robot.heading, 0.0}, {}, cfg_.sim);
            result_.path_length += distance(before, world_.ground_robot.position);
            TraceRecord rec;
            rec.command = "backward";
            end_tick(std::move(rec));
        }
    }

    void do_detach() {
        phase_ = "dog: detach";
        TraceRecord rec;
        rec.command = "detach";
        if (world_.attachment) {
            rec.events.push_back("detach:" + *world_.attachment);
            detach(world_);
        } else {
            rec.events.push_back("detach_failed:nothing attached");
        }
        end_tick(std::move(rec));
        if (carried_id_ && last_carry_goal_) placements_.push_back({*carried_id_, *last_carry_goal_});
        retreat();
    }

    struct Placement {
        std::string object_id;
        GoalSpec goal;
    };

    WorldState world_;
    WorldState initial_;
    Rect arena_;
    MissionConfig cfg_;
    const Reasoner* reasoner_;
    double cruise_altitude_ = 2.0;
    double s_cell_ = 0.2;
    GlobalSemanticMap global_;
    std::vector<Vec2> path_;
    std::optional<Vec2> robot_estimate_;
    OverlapSet overlaps_;
    std::string phase_;
    std::string failure_;
    std::vector<std::string> fixed_;
    std::optional<std::string> carried_id_;
    std::optional<GoalSpec> last_carry_goal_;
    std::vector<Placement> placements_;
    std::optional<Vec2> final_robot_goal_;
    MissionResult result_;
};

}  // namespace aerogrid
