#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "aerogrid/local_planner.hpp"
#include "support/oracles.hpp"

using namespace aerogrid;

namespace {

RobotParts parts_at(Vec2 body, double heading) {
    const Vec2 off = 1.0 * unit_vector(heading);
    return {body + off, body, body - off};
}

LocalObservation observation(Vec2 main, std::optional<Vec2> target, double heading = 0.0) {
    LocalObservation o;
    o.main = main;
    o.target = target;
    o.parts = parts_at(main, heading);
    return o;
}

LocalObservation random_observation(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> pos(-9.0, 9.0), r(0.0, 0.8), ang(-kPi, kPi);
    LocalObservation o = observation({pos(rng), pos(rng)}, std::nullopt, ang(rng));
    if (rng() % 4 != 0) o.target = Vec2{pos(rng), pos(rng)};
    const int n = static_cast<int>(rng() % 6);
    for (int i = 0; i < n; ++i) o.obstacles.push_back({{pos(rng), pos(rng)}, r(rng)});
    return o;
}

std::vector<oracle::Disc> discs(const ObstacleSet& obs) {
    std::vector<oracle::Disc> d;
    for (const Circle& c : obs) d.push_back({c.center, c.radius});
    return d;
}

int naive(const LocalObservation& o) {
    const Vec2* T = o.target ? &*o.target : nullptr;
    return oracle::naive_argmin(o.main, T, discs(o.obstacles), {});
}

}  // namespace

TEST(CostLocal, AlignedWithTargetAtZero) {
    const LocalCost c = cost_local(kPi / 2, observation({0, -5}, Vec2{0, 0}), {});
    EXPECT_NEAR(c.align, 0.0, 1e-12);
    EXPECT_NEAR(c.zero, 0.0, 1e-12);
    EXPECT_EQ(c.obstacle, 0.0);
    EXPECT_EQ(c.window, 0.0);
}

TEST(CostLocal, PerpendicularTarget) {
    const LocalCostWeights w;
    const LocalCost c = cost_local(0.0, observation({0, 0}, Vec2{0, 5}), w);
    EXPECT_NEAR(c.align, w.beta * kPi / 10, 1e-12);
}

TEST(CostLocal, ObstacleNearRay) {
    LocalCostWeights w;
    w.d_safe = 1.0;
    LocalObservation o = observation({0, 0}, Vec2{5, 0});
    o.obstacles.push_back({{2.0, 0.2}, 0.0});
    EXPECT_NEAR(cost_local(0.0, o, w).obstacle, 1.0 / (0.2 + 1e-6), 1e-12);
    // Behind the robot or past the goal: ignored.
    o.obstacles = {{{-2.0, 0.2}, 0.0}, {{5.5, 0.1}, 0.0}};
    EXPECT_EQ(cost_local(0.0, o, w).obstacle, 0.0);
}

TEST(CostLocal, ZeroDistancesForceTermsToZero) {
    const LocalCost c = cost_local(1.0, observation({0, 0}, Vec2{0, 0}), {});
    EXPECT_EQ(c.align, 0.0);
    EXPECT_EQ(c.zero, 0.0);
}

TEST(CostLocal, WindowBarrier) {
    // No target: the goal is the zero point and the segment stays inside.
    const LocalCost c = cost_local(kPi, observation({6, 0}, std::nullopt), {});
    EXPECT_EQ(c.window, 0.0);
    const LocalCost out = cost_local(0.0, observation({6, 0}, Vec2{14, 0}), {});
    EXPECT_TRUE(std::isinf(out.window));
    EXPECT_TRUE(std::isinf(out.total));
}

TEST(CostLocal, AlignShrinksWithDistance) {
    double prev = std::numeric_limits<double>::infinity();
    for (double d = 0.5; d < 20; d += 0.5) {
        const double a = cost_local(0.7, observation({0, 0}, Vec2{0, d}), {}).align;
        EXPECT_LE(a, prev);
        prev = a;
    }
}

TEST(CostLocal, MatchesTermByTermOracle) {
    std::mt19937_64 rng(41);
    const LocalCostWeights w;
    for (int trial = 0; trial < 300; ++trial) {
        const LocalObservation o = random_observation(rng);
        const Vec2* T = o.target ? &*o.target : nullptr;
        for (int i = 0; i < w.candidate_count; ++i) {
            const double th = candidate_angle(i, w.candidate_count);
            EXPECT_EQ(cost_local(th, o, w).total, oracle::local_cost(th, o.main, T, discs(o.obstacles), {}));
        }
    }
}

TEST(SelectDirection, TargetOnCandidate) {
    LocalCostWeights w;
    w.q_zero = 0.0;
    const DirectionChoice c = select_direction(observation({0, 0}, Vec2{0, 5}), w);
    EXPECT_NEAR(c.theta, kPi / 2, 1e-12);
    EXPECT_EQ(c.index, 9);
    EXPECT_EQ(c.table.size(), 36u);
}

TEST(SelectDirection, NearestBin) {
    LocalCostWeights w;
    w.q_zero = 0.0;
    const double b = 95.0 * kPi / 180;
    const DirectionChoice c = select_direction(observation({0, 0}, 5.0 * unit_vector(b)), w);
    EXPECT_NEAR(c.theta, kPi / 2, 1e-12);
}

TEST(SelectDirection, EqualsExhaustiveEnumeration) {
    std::mt19937_64 rng(43);
    for (int trial = 0; trial < 1000; ++trial) {
        const LocalObservation o = random_observation(rng);
        const int expected = naive(o);
        if (expected < 0) {
            EXPECT_THROW(select_direction(o, {}), BlockedError);
            continue;
        }
        EXPECT_EQ(select_direction(o, {}).index, expected);
    }
}

TEST(SelectDirection, BlockedDirectionAvoided) {
    LocalObservation o = observation({0, 0}, Vec2{4, 0});
    o.obstacles.push_back({{2, 0}, 0.5});
    const DirectionChoice c = select_direction(o, {});
    EXPECT_NE(c.index, 0);
    EXPECT_EQ(c.index, naive(o));
}

TEST(SelectDirection, ScaleInvariant) {
    std::mt19937_64 rng(47);
    for (int trial = 0; trial < 200; ++trial) {
        const LocalObservation o = random_observation(rng);
        if (naive(o) < 0) continue;
        LocalCostWeights w, w10;
        w10.q_align *= 10;
        w10.q_zero *= 10;
        w10.q_obstacle *= 10;
        w10.q_window *= 10;
        EXPECT_EQ(select_direction(o, w).index, select_direction(o, w10).index);
    }
}

TEST(SelectDirection, NeverPicksWindowExcluded) {
    std::mt19937_64 rng(53);
    for (int trial = 0; trial < 500; ++trial) {
        const LocalObservation o = random_observation(rng);
        if (naive(o) < 0) continue;
        const DirectionChoice c = select_direction(o, {});
        EXPECT_EQ(c.table[static_cast<std::size_t>(c.index)].cost.window, 0.0);
    }
}

TEST(SelectDirection, UnobstructedDeviationBound) {
    std::mt19937_64 rng(59);
    LocalCostWeights w;
    w.q_zero = 0.0;
    std::uniform_real_distribution<double> pos(-3.0, 3.0);
    for (int trial = 0; trial < 200; ++trial) {
        const LocalObservation o = observation({pos(rng), pos(rng)}, Vec2{pos(rng), pos(rng)});
        EXPECT_LE(goal_deviation(select_direction(o, w).theta, o), kPi / 36 + 1e-12);
    }
}

TEST(SelectDirection, EverythingOutsideWindow) {
    EXPECT_THROW(select_direction(observation({20, 20}, Vec2{30, 30}), {}), BlockedError);
}

TEST(StepDecision, RotateWhenMisaligned) {
    const MotionCommand c = step_decision(observation({0, 0}, Vec2{10, 0}, 0.0), kPi / 2, {});
    EXPECT_EQ(c.kind, MotionCommand::Kind::rotate);
    EXPECT_EQ(c.target_heading, kPi / 2);
}

TEST(StepDecision, ForwardWhenAligned) {
    const StepThresholds th;
    const MotionCommand c = step_decision(observation({0, 0}, Vec2{0, 5}, kPi / 2), kPi / 2, th);
    EXPECT_EQ(c.kind, MotionCommand::Kind::forward);
    EXPECT_EQ(c.distance, th.step);
}

TEST(StepDecision, StopOrBackwardBehind) {
    const StepThresholds th;
    EXPECT_EQ(step_decision(observation({0, 0}, Vec2{0, -0.3}, kPi / 2), kPi / 2, th).kind,
              MotionCommand::Kind::stop);
    // Goal 1 cell behind; theta* points along the heading so no rotation.
    EXPECT_EQ(step_decision(observation({0, 0}, Vec2{0, -1.0}, kPi / 2), kPi / 2, th).kind,
              MotionCommand::Kind::backward);
}

TEST(StepDecision, GoalOrientationMustMatchToStop) {
    const StepThresholds th;
    const LocalObservation o = observation({0, 0}, Vec2{0.1, 0}, 0.0);
    EXPECT_EQ(step_decision(o, 0.0, th, 0.05).kind, MotionCommand::Kind::stop);
    const MotionCommand c = step_decision(o, 0.0, th, 1.0);
    EXPECT_EQ(c.kind, MotionCommand::Kind::rotate);
    EXPECT_EQ(c.target_heading, 1.0);
}

TEST(StepDecision, EffectorDecidesArrival) {
    LocalObservation o = observation({0, 0}, Vec2{2, 0}, 0.0);
    o.effector = Vec2{1.8, 0};
    EXPECT_EQ(step_decision(o, 0.0, {}).kind, MotionCommand::Kind::stop);
    o.effector = Vec2{2.8, 0};
    EXPECT_EQ(step_decision(o, 0.0, {}).kind, MotionCommand::Kind::backward);
}

TEST(StepDecision, RejectsNonFiniteTheta) {
    EXPECT_THROW(step_decision(observation({0, 0}, Vec2{2, 0}), std::nan(""), {}), InvalidArgument);
}
