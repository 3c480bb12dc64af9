#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "aerogrid/mission.hpp"
#include "aerogrid/report.hpp"
#include "aerogrid/scenario.hpp"

using namespace aerogrid;

namespace {

GlobalSemanticMap map_of(const std::vector<std::pair<std::string, Vec2>>& letters) {
    GlobalSemanticMap m;
    for (const auto& [n, p] : letters) {
        GlobalEntry e;
        e.name = n;
        e.position = p;
        e.support_count = 2;
        e.confidence = Confidence::confirmed;
        m.entries.push_back(e);
    }
    std::sort(m.entries.begin(), m.entries.end(), [](const auto& a, const auto& b) { return a.name < b.name; });
    return m;
}

std::vector<std::string> describe(const TaskPlan& p) {
    std::vector<std::string> out;
    for (const auto& s : p.subtasks) out.push_back(s.describe());
    return out;
}

std::string scenario(const std::string& rel) { return std::string(AEROGRID_SCENARIO_DIR) + "/" + rel; }

}  // namespace

TEST(ParseCommand, Forms) {
    Command c = parse_command("move_to (2.0, 1.0)");
    EXPECT_EQ(c.verb, Command::Verb::move_to);
    EXPECT_EQ(c.goal, GoalSpec::coordinate({2.0, 1.0}));

    c = parse_command("Carry L to the front side of the O.");
    EXPECT_EQ(c.verb, Command::Verb::carry);
    EXPECT_EQ(c.object, "L");
    EXPECT_EQ(c.goal, GoalSpec::relation("O", Direction::front));

    c = parse_command("carry K to (-1, .5)");
    EXPECT_EQ(c.goal, GoalSpec::coordinate({-1.0, 0.5}));

    c = parse_command("assemble LOVE, do not move O and V");
    EXPECT_EQ(c.word, "LOVE");
    EXPECT_EQ(c.fixed, (std::vector<std::string>{"O", "V"}));

    c = parse_command("assemble OK, fixed {K}");
    EXPECT_EQ(c.fixed, (std::vector<std::string>{"K"}));

    c = parse_command("move to the T");
    EXPECT_EQ(c.goal, GoalSpec::object("T"));
}

TEST(ParseCommand, Rejections) {
    EXPECT_THROW(parse_command("fly to the moon"), ParseError);
    EXPECT_THROW(parse_command("move_to (1, )"), ParseError);
    EXPECT_THROW(parse_command("carry L to the top of O"), ParseError);
    EXPECT_THROW(parse_command("carry O to the left of O"), ParseError);
    EXPECT_THROW(parse_command("assemble OK, quickly"), ParseError);
}

TEST(Decompose, CarryToRelation) {
    const TaskPlan p = RuleBasedReasoner().decompose(parse_command("carry L to front of O"), nullptr);
    EXPECT_EQ(describe(p), (std::vector<std::string>{
                               "drone: construct_map",
                               "both: planning_start(object(L)) following_start(object(L))",
                               "dog: attach(L)",
                               "both: planning_start(relation(O, front, 0.35)) following_start(relation(O, front, "
                               "0.35)) carrying L",
                               "dog: detach(L)",
                           }));
}

TEST(Decompose, MoveToCoordinate) {
    const TaskPlan p = RuleBasedReasoner().decompose(parse_command("move_to (2.0, 1.0)"), nullptr);
    ASSERT_EQ(p.subtasks.size(), 2u);
    EXPECT_TRUE(p.subtasks[0].is_construct());
    EXPECT_EQ(p.subtasks[1].goal(), GoalSpec::coordinate({2.0, 1.0}));
}

TEST(Decompose, AssembleCarriesOnlyFreeLetters) {
    const GlobalSemanticMap m = map_of({{"O", {3, 2}}, {"K", {1, 0}}});
    const TaskPlan p = RuleBasedReasoner(0.4).decompose(parse_command("assemble OK, fixed {K}"), &m);
    EXPECT_EQ(p.carried_objects(), (std::vector<std::string>{"O"}));
    EXPECT_THROW(RuleBasedReasoner().decompose(parse_command("assemble OK"), nullptr), InvalidArgument);
}

TEST(TaskPlan, MustStartWithMapping) {
    TaskPlan p;
    p.subtasks = {Subtask::move(GoalSpec::coordinate({1, 1}))};
    EXPECT_THROW(p.validate(), InvalidArgument);
    p.subtasks.insert(p.subtasks.begin(), Subtask::construct_map());
    EXPECT_NO_THROW(p.validate());
    Subtask bad = Subtask::move(GoalSpec::coordinate({1, 1}));
    bad.calls.pop_back();
    p.subtasks.push_back(bad);
    EXPECT_THROW(p.validate(), InvalidArgument);
}

TEST(WordAssembly, OkWithFixedK) {
    const auto g = plan_word_assembly("OK", map_of({{"O", {3, 2}}, {"K", {1.0, 0}}}), {"K"}, 0.4);
    ASSERT_EQ(g.size(), 1u);
    EXPECT_EQ(g[0].letter, "O");
    EXPECT_NEAR(g[0].goal.point.x, 0.6, 1e-12);
    EXPECT_NEAR(g[0].goal.point.y, 0.0, 1e-12);
}

TEST(WordAssembly, ReadingOrderPutsEToTheRight) {
    const auto g = plan_word_assembly("BE", map_of({{"B", {2, 2}}, {"E", {0, 0}}}), {"B"}, 0.4);
    ASSERT_EQ(g.size(), 1u);
    EXPECT_GT(g[0].goal.point.x, 2.0);
}

TEST(WordAssembly, IncompatibleFixedLetters) {
    const GlobalSemanticMap m = map_of({{"L", {0, 0}}, {"O", {3, 3}}, {"V", {10, 0}}, {"E", {4, 4}}});
    EXPECT_THROW(plan_word_assembly("LOVE", m, {"L", "V"}, 0.4), InfeasibleError);
    const GlobalSemanticMap ok = map_of({{"L", {0, 0}}, {"O", {3, 3}}, {"V", {0.8, 0}}, {"E", {4, 4}}});
    EXPECT_EQ(plan_word_assembly("LOVE", ok, {"L", "V"}, 0.4).size(), 2u);
}

TEST(WordAssembly, LettersAlreadyInPlaceSkipped) {
    const auto g = plan_word_assembly("HI", map_of({{"H", {1, 1}}, {"I", {1.45, 1.05}}}), {"H"}, 0.4);
    EXPECT_TRUE(g.empty());
}

TEST(WordAssembly, Rejections) {
    const GlobalSemanticMap m = map_of({{"O", {0, 0}}, {"K", {1, 0}}});
    EXPECT_THROW(plan_word_assembly("OK", m, {"Q"}, 0.4), InvalidArgument);
    EXPECT_THROW(plan_word_assembly("OO", m, {}, 0.4), InvalidArgument);
    EXPECT_THROW(plan_word_assembly("OKS", m, {}, 0.4), InfeasibleError);
    EXPECT_THROW(plan_word_assembly("OK", m, {}, 0.0), InvalidArgument);
}

TEST(WordAssembly, SlotsCollinearAndEvenlySpaced) {
    std::mt19937_64 rng(83);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    const std::string word = "WORLD";
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<std::pair<std::string, Vec2>> letters;
        for (char ch : word) letters.push_back({std::string(1, ch), {u(rng), u(rng)}});
        const auto goals = plan_word_assembly(word, map_of(letters), {}, 0.4);
        const Vec2 anchor = letters[0].second;
        for (const auto& g : goals) {
            EXPECT_EQ(g.goal.point.y, anchor.y);
            EXPECT_NEAR(g.goal.point.x - anchor.x, 0.4 * g.slot, 1e-12);
        }
        for (std::size_t i = 1; i < goals.size(); ++i) EXPECT_GT(goals[i].slot, goals[i - 1].slot);
    }
}

TEST(WordAssembly, FixedLettersNeverCarried) {
    std::mt19937_64 rng(89);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    const std::string word = "LOVE";
    int feasible = 0;
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<std::pair<std::string, Vec2>> letters;
        for (char ch : word) letters.push_back({std::string(1, ch), {u(rng), u(rng)}});
        std::vector<std::string> fixed;
        for (char ch : word)
            if (rng() % 3 == 0) fixed.emplace_back(1, ch);
        if (fixed.size() > 1) {
            // Make the second fixed letter sit on its slot so some plans are feasible.
            if (rng() % 2 == 0) {
                const auto idx = [&](const std::string& l) { return static_cast<double>(word.find(l)); };
                for (auto& [n, p] : letters)
                    if (n == fixed[1]) p = letters[word.find(fixed[0])].second + Vec2{(idx(n) - idx(fixed[0])) * 0.4, 0};
            }
        }
        const GlobalSemanticMap m = map_of(letters);
        std::string text = "assemble " + word;
        if (!fixed.empty()) {
            text += ", fixed {";
            for (std::size_t i = 0; i < fixed.size(); ++i) text += (i ? ", " : "") + fixed[i];
            text += "}";
        }
        try {
            const TaskPlan p = RuleBasedReasoner(0.4).decompose(parse_command(text), &m);
            ++feasible;
            for (const auto& c : p.carried_objects())
                EXPECT_EQ(std::find(fixed.begin(), fixed.end(), c), fixed.end());
        } catch (const InfeasibleError&) {
        }
    }
    EXPECT_GT(feasible, 100);
}

TEST(RelationPoint, BodyFrameDirections) {
    std::mt19937_64 rng(97);
    std::uniform_real_distribution<double> yaw(-kPi, kPi);
    const Vec2 lm{1.5, -0.5};
    for (int i = 0; i < 100; ++i) {
        const double y = yaw(rng);
        for (Direction d : {Direction::front, Direction::back, Direction::left, Direction::right}) {
            const Vec2 g = relation_point(lm, y, d, 0.35);
            EXPECT_NEAR(distance(g, lm), 0.35, 1e-12);
            EXPECT_NEAR(std::abs(wrap_angle(bearing(lm, g) - y - direction_offset(d))), 0.0, 1e-9);
        }
    }
    EXPECT_NEAR(relation_point(lm, std::nullopt, Direction::left, 0.35).y, -0.15, 1e-12);
}

TEST(Executor, NoiselessTypeA) {
    const RunOutput run = run_scenario(load_scenario(scenario("type_a/type_a_01.json")));
    EXPECT_TRUE(run.result.success) << run.result.failure;
    EXPECT_EQ(run.result.collisions, 0);
    ASSERT_FALSE(run.result.placement_errors.empty());
    for (double e : run.result.placement_errors) EXPECT_LT(e, 0.1);
}

TEST(Executor, KeepsFixedLetterAndPlacesOnItsLeft) {
    const Scenario sc = load_scenario(scenario("type_b/type_b_01.json"));
    const RunOutput run = run_scenario(sc);
    ASSERT_TRUE(run.result.success) << run.result.failure;
    EXPECT_EQ(run.result.plan.carried_objects(), (std::vector<std::string>{"O"}));
    const auto find = [](const std::vector<WorldObject>& objs, const std::string& n) {
        for (const auto& o : objs)
            if (o.name == n) return o.position;
        return Vec2{};
    };
    const Vec2 k0 = find(sc.world.objects, "K");
    const Vec2 k1 = find(run.result.final_objects, "K");
    const Vec2 o1 = find(run.result.final_objects, "O");
    EXPECT_EQ(k0, k1);
    EXPECT_LT(o1.x, k1.x);
    EXPECT_NEAR(distance(o1, k1 - Vec2{sc.config.pitch, 0}), 0.0, 0.5 * sc.config.pitch);
}

TEST(Executor, InfeasibleWordReported) {
    Scenario sc = load_scenario(scenario("type_c/type_c_01.json"));
    sc.task = "assemble LOVE, fixed {O, E}";
    const WorldObject* o = sc.world.find_by_name("O");
    for (auto& obj : sc.world.objects)
        if (obj.name == "E") obj.position = o->position + Vec2{0.4, 1.5};
    const RunOutput run = run_scenario(sc);
    EXPECT_FALSE(run.result.success);
    EXPECT_NE(run.result.failure.find("infeasible"), std::string::npos);
}

TEST(Executor, RollbackAfterDrop) {
    const RunOutput run = run_scenario(load_scenario(scenario("rollback/rollback_01.json")));
    EXPECT_TRUE(run.result.success) << run.result.failure;
    EXPECT_GE(run.result.rollbacks, 1);
}

TEST(Executor, RejectsPlanWithoutMapping) {
    const Scenario sc = load_scenario(scenario("type_a/type_a_01.json"));
    Executor ex(sc.world, sc.arena, sc.config);
    TaskPlan p;
    p.subtasks = {Subtask::move(GoalSpec::coordinate({1, 1}))};
    EXPECT_THROW(ex.execute(p), InvalidArgument);
}

TEST(Executor, Deterministic) {
    const Scenario sc = load_scenario(scenario("type_a/type_a_02.json"), {"noise.position_sigma=0.15"});
    const RunOutput a = run_scenario(sc);
    const RunOutput b = run_scenario(sc);
    EXPECT_EQ(trace_jsonl(a.result.trace), trace_jsonl(b.result.trace));
    EXPECT_EQ(summary_json(a, false).dump(), summary_json(b, false).dump());
}
