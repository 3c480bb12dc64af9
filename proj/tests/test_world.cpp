#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "aerogrid/world.hpp"

using namespace aerogrid;

namespace {

using K = MotionCommand::Kind;

WorldObject object(const std::string& id, Vec2 p, double radius = 0.1) {
    WorldObject o;
    o.id = id;
    o.name = id;
    o.position = p;
    o.radius = radius;
    return o;
}

LocalSemanticMap observed(std::optional<Vec2> held, std::optional<RobotParts> parts) {
    LocalSemanticMap m;
    m.frame = MapFrame::world;
    m.meters_per_cell = 0.2;
    m.parts = parts;
    if (held) {
        SemanticObject o;
        o.id = o.name = "L";
        o.category = Category::main;
        o.coordinate = *held;
        m.objects.push_back(o);
    }
    return m;
}

}  // namespace

TEST(StepDrone, MovesBySpeed) {
    WorldState s;
    SimParams p;
    p.drone_speed = 0.2;
    EXPECT_TRUE(step_drone(s, {{1, 0}}, p));
    EXPECT_NEAR(s.drone.position.x, 0.2, 1e-15);
}

TEST(StepDrone, HoldsWhileRobotTrails) {
    WorldState s;
    SimParams p;
    s.ground_robot.position = {-2.0 * p.follow_radius, 0};
    EXPECT_FALSE(step_drone(s, {{1, 0}}, p));
    EXPECT_EQ(s.drone.position, (Vec2{0, 0}));
}

TEST(StepDrone, RobotAheadDoesNotBlock) {
    WorldState s;
    SimParams p;
    s.ground_robot.position = {2.0 * p.follow_radius, 0};
    EXPECT_TRUE(step_drone(s, {{5, 0}}, p));
}

TEST(StepDrone, TraversalCountsTravelPlusWaits) {
    const std::vector<Vec2> path{{1, 0}, {1, 1.1}};
    const SimParams p;
    WorldState s;
    // Robot crawls at a quarter of the drone speed, so the drone waits.
    int ticks = 0, waits = 0;
    while (!drone_finished(s, path)) {
        ++ticks;
        if (!step_drone(s, path, p)) ++waits;
        const Vec2 to = s.drone.position - s.ground_robot.position;
        if (norm(to) > 0) s.ground_robot.position += std::min(norm(to), p.drone_speed / 4) * (to / norm(to));
        ASSERT_LT(ticks, 10000);
    }
    EXPECT_GT(waits, 0);
    EXPECT_EQ(ticks - waits, static_cast<int>(std::ceil(2.1 / p.drone_speed)));
}

TEST(StepDrone, EmptyPathRejected) {
    WorldState s;
    EXPECT_THROW(step_drone(s, {}, {}), InvalidArgument);
}

TEST(StepGround, ForwardAlongHeading) {
    WorldState s;
    const SimParams p;
    step_ground(s, {K::forward, 0.0, 0.25}, {}, p);
    EXPECT_NEAR(s.ground_robot.position.x, p.ground_step, 1e-15);
    EXPECT_EQ(s.ground_robot.position.y, 0.0);
    step_ground(s, {K::backward, 0.0, 0.25}, {}, p);
    EXPECT_NEAR(s.ground_robot.position.x, 0.0, 1e-15);
    const WorldState before = s;
    step_ground(s, {K::stop, 0.0, 0.0}, {}, p);
    EXPECT_EQ(s, before);
}

TEST(StepGround, RotateAwayFromObstacleOnLeft) {
    WorldState s;
    const SimParams p;
    const std::vector<Circle> obs{{{0, 0.2}, 0.05}};
    EXPECT_EQ(rotation_sign(s, kPi, obs, p), -1);
    step_ground(s, {K::rotate, kPi, 0.0}, obs, p);
    EXPECT_NEAR(s.ground_robot.heading, -p.rotate_rate, 1e-15);
}

TEST(StepGround, SymmetricObstaclesTurnCounterclockwise) {
    WorldState s;
    const std::vector<Circle> obs{{{0, 0.2}, 0.05}, {{0, -0.2}, 0.05}};
    EXPECT_EQ(rotation_sign(s, kPi, obs, {}), +1);
    EXPECT_EQ(rotation_sign(s, kPi, {}, {}), +1);
}

TEST(StepGround, ShorterArcWhenClear) {
    WorldState s;
    EXPECT_EQ(rotation_sign(s, -1.0, {}, {}), -1);
    EXPECT_EQ(rotation_sign(s, 1.0, {}, {}), +1);
}

TEST(StepGround, RotationReachesTargetWithoutOvershoot) {
    WorldState s;
    const SimParams p;
    for (int i = 0; i < 100 && s.ground_robot.heading != 1.0; ++i) step_ground(s, {K::rotate, 1.0, 0.0}, {}, p);
    EXPECT_NEAR(s.ground_robot.heading, 1.0, 1e-12);
}

TEST(StepGround, SenseLatchedForSameTarget) {
    WorldState s;
    const SimParams p;
    step_ground(s, {K::rotate, kPi, 0.0}, {{{0, 0.2}, 0.05}}, p);
    const double h = s.ground_robot.heading;
    // The obstacle moves to the other side; the turn keeps its sense.
    step_ground(s, {K::rotate, kPi, 0.0}, {{{0, -0.2}, 0.05}}, p);
    EXPECT_LT(s.ground_robot.heading, h);
}

TEST(Attach, InRangeAndAligned) {
    WorldState s;
    s.objects = {object("L", {0.3, 0})};
    SimParams p;
    p.attach_range = 0.15;
    EXPECT_TRUE(attach(s, "L", p).ok);
    EXPECT_EQ(s.attachment, "L");
}

TEST(Attach, Failures) {
    WorldState s;
    SimParams p;
    p.attach_range = 0.15;
    s.objects = {object("far", {1.2, 0}), object("off", 0.25 * unit_vector(2 * p.attach_angle_tol)),
                 object("wall", {0.3, 0})};
    s.objects[2].movable = false;
    EXPECT_EQ(attach(s, "far", p).reason, "out of range");
    EXPECT_EQ(attach(s, "off", p).reason, "misaligned");
    EXPECT_FALSE(attach(s, "wall", p).ok);
    EXPECT_FALSE(attach(s, "nope", p).ok);
    EXPECT_FALSE(s.attachment.has_value());
}

TEST(Attach, HeldObjectRidesAtHead) {
    WorldState s;
    const SimParams p;
    s.objects = {object("L", {0.3, 0})};
    ASSERT_TRUE(attach(s, "L", p).ok);
    std::mt19937_64 rng(73);
    const MotionCommand cmds[] = {{K::forward, 0, 0.25}, {K::backward, 0, 0.25}, {K::rotate, 2.0, 0}, {K::rotate, -2.5, 0}};
    for (int i = 0; i < 300; ++i) {
        step_ground(s, cmds[rng() % 4], {}, p);
        EXPECT_EQ(s.objects[0].position, s.ground_robot.carry_point(0.1));
    }
}

TEST(Detach, ReleasesInPlace) {
    WorldState s;
    const SimParams p;
    s.objects = {object("L", {0.3, 0})};
    ASSERT_TRUE(attach(s, "L", p).ok);
    step_ground(s, {K::forward, 0, 0.25}, {}, p);
    const Vec2 at = s.objects[0].position;
    EXPECT_TRUE(detach(s).ok);
    step_ground(s, {K::backward, 0, 0.25}, {}, p);
    EXPECT_EQ(s.objects[0].position, at);
    EXPECT_FALSE(detach(s).ok);
}

TEST(Detach, ReattachWithoutMoving) {
    WorldState s;
    const SimParams p;
    s.objects = {object("L", {0.3, 0})};
    ASSERT_TRUE(attach(s, "L", p).ok);
    ASSERT_TRUE(detach(s).ok);
    EXPECT_TRUE(attach(s, "L", p).ok);
}

TEST(CarryCheck, Examples) {
    SimParams p;
    p.carry_radius = 0.2;
    const RobotParts parts{{0.2, 0}, {0, 0}, {-0.2, 0}};
    EXPECT_TRUE(carry_check(observed(Vec2{0.25, 0}, parts), p).ok);
    EXPECT_FALSE(carry_check(observed(Vec2{-0.8, 0}, parts), p).ok);
    EXPECT_FALSE(carry_check(observed(std::nullopt, parts), p).ok);
    EXPECT_FALSE(carry_check(observed(Vec2{0.25, 0}, std::nullopt), p).ok);
}

TEST(Collisions, OverlapCountsOnce) {
    WorldState s;
    s.ground_robot.radius = 0.3;
    s.objects = {object("K", {0.5, 0}, 0.3)};
    OverlapSet ov;
    EXPECT_EQ(detect_collisions(s, ov).size(), 1u);
    for (int i = 0; i < 10; ++i) EXPECT_TRUE(detect_collisions(s, ov).empty());
}

TEST(Collisions, TouchSeparateTouch) {
    WorldState s;
    s.ground_robot.radius = 0.3;
    s.objects = {object("K", {0.5, 0}, 0.3)};
    OverlapSet ov;
    int events = 0;
    for (double x : {0.5, 5.0, 0.5}) {
        s.objects[0].position.x = x;
        events += static_cast<int>(detect_collisions(s, ov).size());
    }
    EXPECT_EQ(events, 2);
}

TEST(Collisions, CarriedObjectCounts) {
    WorldState s;
    s.objects = {object("L", {0.3, 0}), object("K", {0.45, 0})};
    ASSERT_TRUE(attach(s, "L", {}).ok);
    OverlapSet ov;
    const auto ev = detect_collisions(s, ov);
    ASSERT_EQ(ev.size(), 1u);
    EXPECT_EQ(ev[0].part, "carried");
    EXPECT_EQ(ev[0].object, "K");
}

TEST(Collisions, OneEventPerOverlapRun) {
    std::mt19937_64 rng(79);
    std::uniform_real_distribution<double> jump(-0.2, 0.2);
    WorldState s;
    s.objects = {object("A", {0.4, 0}), object("B", {-0.4, 0.1})};
    OverlapSet ov;
    int events = 0, runs = 0;
    for (int t = 0; t < 2000; ++t) {
        s.ground_robot.position = 0.8 * s.ground_robot.position + Vec2{jump(rng), jump(rng)};
        const OverlapSet before = ov;
        events += static_cast<int>(detect_collisions(s, ov).size());
        for (const auto& k : ov) runs += before.count(k) == 0;
    }
    EXPECT_GT(runs, 0);
    EXPECT_EQ(events, runs);
}
