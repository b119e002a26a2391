#include "plancurate/task_graph.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace plancurate;

namespace {

std::vector<SubtaskSpec> specs(int n, const std::string& prefix = "Task") {
    std::vector<SubtaskSpec> out;
    for (int i = 1; i <= n; ++i) out.push_back({prefix + " " + std::to_string(i), "do " + std::to_string(i), "1 day"});
    return out;
}

}  // namespace

TEST(TaskGraph, CreateBuildsSingleExploringRoot) {
    const TaskTree t = TaskTree::create("Apply for a PhD in NLP", "Get admitted next fall");
    ASSERT_EQ(t.size(), 1u);
    const TaskNode& root = t.node(t.root());
    EXPECT_EQ(root.level, 0);
    EXPECT_EQ(root.status, NodeStatus::exploring);
    EXPECT_EQ(root.decomposition, Decomposition::none);
    EXPECT_FALSE(root.parent.has_value());
    t.validate();
}

TEST(TaskGraph, CreateAcceptsEmptyDescription) {
    const TaskTree t = TaskTree::create("x", "");
    EXPECT_EQ(t.size(), 1u);
    EXPECT_EQ(t.outline(), "x\n");
}

TEST(TaskGraph, CreateRejectsBlankGoal) {
    for (const char* goal : {"", "   ", "\t\n"}) {
        try {
            (void)TaskTree::create(goal, "anything");
            FAIL() << "expected empty_goal";
        } catch (const Error& e) {
            EXPECT_EQ(e.code(), ErrorCode::empty_goal);
        }
    }
}

TEST(TaskGraph, AttachPreservesOrderAndLevels) {
    TaskTree t = TaskTree::create("Goal", "");
    const auto ids = t.attach_subtasks(t.root(), specs(5), Decomposition::standard);
    ASSERT_EQ(ids.size(), 5u);
    EXPECT_EQ(t.node(t.root()).children, ids);
    EXPECT_EQ(t.node(t.root()).decomposition, Decomposition::standard);
    for (std::size_t i = 0; i < ids.size(); ++i) {
        EXPECT_EQ(t.node(ids[i]).title, "Task " + std::to_string(i + 1));
        EXPECT_EQ(t.node(ids[i]).level, 1);
        EXPECT_EQ(t.node(ids[i]).parent, t.root());
        EXPECT_EQ(t.node(ids[i]).status, NodeStatus::unexplored);
    }
    t.validate();
}

TEST(TaskGraph, ForkChildrenAreMarkedOnParent) {
    TaskTree t = TaskTree::create("Apply for a PhD in NLP", "");
    const auto level1 = t.attach_subtasks(t.root(), {{{"Identify Faculty Members", "Find faculty", "4 days"}}},
                                          Decomposition::standard);
    const std::vector<SubtaskSpec> unis{{"Identify Faculty Members: University of Michigan", "", "1 day"},
                                        {"Identify Faculty Members: UIUC", "", "1 day"}};
    const auto forked = t.attach_subtasks(level1[0], unis, Decomposition::fork);
    EXPECT_EQ(t.node(level1[0]).decomposition, Decomposition::fork);
    EXPECT_EQ(forked.size(), 2u);
    EXPECT_EQ(t.node(forked[1]).level, 2);
}

TEST(TaskGraph, AttachErrors) {
    TaskTree t = TaskTree::create("Goal", "");
    t.attach_subtasks(t.root(), specs(2), Decomposition::standard);
    const TaskTree before = t;
    auto expect_code = [&](ErrorCode code, auto&& fn) {
        try {
            fn();
            FAIL() << "expected " << to_string(code);
        } catch (const Error& e) {
            EXPECT_EQ(e.code(), code);
        }
        EXPECT_EQ(t, before);
    };
    expect_code(ErrorCode::already_decomposed, [&] { t.attach_subtasks(t.root(), specs(1), Decomposition::standard); });
    expect_code(ErrorCode::empty_subtask_list, [&] { t.attach_subtasks("n2", {}, Decomposition::standard); });
    expect_code(ErrorCode::unknown_node, [&] { t.attach_subtasks("n99", specs(1), Decomposition::standard); });
    expect_code(ErrorCode::tree_limit, [&] { t.attach_subtasks("n2", specs(13), Decomposition::standard); });
    expect_code(ErrorCode::precondition_failed, [&] { t.attach_subtasks("n2", specs(1), Decomposition::none); });
    expect_code(ErrorCode::invalid_entry, [&] { t.attach_subtasks("n2", {{{"  ", "d", "1 day"}}}, Decomposition::standard); });
}

TEST(TaskGraph, DepthLimitIsSix) {
    TaskTree t = TaskTree::create("Goal", "");
    NodeId cur = t.root();
    for (int level = 1; level <= TaskTree::kMaxLevel; ++level) {
        cur = t.attach_subtasks(cur, specs(1), Decomposition::standard)[0];
    }
    EXPECT_EQ(t.node(cur).level, 6);
    EXPECT_THROW(t.attach_subtasks(cur, specs(1), Decomposition::standard), Error);
    t.validate();
}

TEST(TaskGraph, SetDraftRefCompletesAndOverwrites) {
    TaskTree t = TaskTree::create("Goal", "");
    const auto ids = t.attach_subtasks(t.root(), specs(2), Decomposition::standard);
    t.set_draft_ref(ids[0], "Research Universities and Programs — draft");
    EXPECT_EQ(t.node(ids[0]).status, NodeStatus::completed);
    EXPECT_EQ(t.node(ids[0]).draft_ref, "Research Universities and Programs — draft");
    t.set_draft_ref(ids[0], "newer");
    EXPECT_EQ(t.node(ids[0]).draft_ref, "newer");
    EXPECT_NE(t.node(t.root()).status, NodeStatus::completed);
    t.set_draft_ref(ids[1], "other");
    EXPECT_EQ(t.node(t.root()).status, NodeStatus::completed);
    t.validate();
    EXPECT_THROW(t.set_draft_ref("n42", "k"), Error);
}

TEST(TaskGraph, CompletedIsSticky) {
    TaskTree t = TaskTree::create("Goal", "");
    const auto ids = t.attach_subtasks(t.root(), specs(1), Decomposition::standard);
    t.mark_exploring(ids[0]);
    EXPECT_EQ(t.node(ids[0]).status, NodeStatus::exploring);
    t.set_draft_ref(ids[0], "k");
    t.mark_exploring(ids[0]);
    EXPECT_EQ(t.node(ids[0]).status, NodeStatus::completed);
}

TEST(TaskGraph, OutlineIndentsTwoSpacesPerLevel) {
    TaskTree t = TaskTree::create("Goal", "");
    EXPECT_EQ(t.outline(), "Goal\n");
    const auto ids = t.attach_subtasks(t.root(), specs(2), Decomposition::standard);
    t.attach_subtasks(ids[0], {{{"Deep", "", "1 h"}}}, Decomposition::standard);
    EXPECT_EQ(t.outline(), "Goal\n  Task 1: do 1\n    Deep\n  Task 2: do 2\n");
}

TEST(TaskGraph, NodePath) {
    TaskTree t = TaskTree::create("Goal", "");
    EXPECT_EQ(t.node_path(t.root()), std::vector<NodeId>{t.root()});
    const auto a = t.attach_subtasks(t.root(), specs(1), Decomposition::standard);
    const auto b = t.attach_subtasks(a[0], specs(1), Decomposition::standard);
    const auto path = t.node_path(b[0]);
    ASSERT_EQ(path.size(), 3u);
    EXPECT_EQ(path.back(), b[0]);
    try {
        (void)t.node_path("nope");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::unknown_node);
    }
}

TEST(TaskGraph, JsonRoundTripAndFieldNames) {
    TaskTree t = TaskTree::create("Goal", "desc", "1970-01-01T00:00:00Z");
    t.attach_subtasks(t.root(), specs(3), Decomposition::fork);
    t.set_draft_ref("n2", "k");
    const Json j = t.to_json();
    std::vector<std::string> fields;
    for (const auto& [k, v] : j["nodes"]["n2"].items()) fields.push_back(k);
    EXPECT_EQ(fields, (std::vector<std::string>{"id", "title", "description", "estimated_duration", "status",
                                                "decomposition", "draft_ref", "parent", "children", "level"}));
    EXPECT_EQ(TaskTree::from_json(j), t);
}

TEST(TaskGraph, FromJsonRejectsBrokenStructure) {
    TaskTree t = TaskTree::create("Goal", "");
    t.attach_subtasks(t.root(), specs(2), Decomposition::standard);
    Json j = t.to_json();
    j["nodes"]["n2"]["level"] = 3;
    EXPECT_THROW(TaskTree::from_json(j), Error);
    j = t.to_json();
    j["nodes"]["n2"]["status"] = "completed";
    EXPECT_THROW(TaskTree::from_json(j), Error);
    j = t.to_json();
    j["nodes"]["n1"]["decomposition"] = "none";
    EXPECT_THROW(TaskTree::from_json(j), Error);
}

TEST(TaskGraphProperty, RandomTreesStayValid) {
    std::mt19937_64 rng(7);
    auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<>(lo, hi)(rng); };
    for (int trial = 0; trial < 150; ++trial) {
        TaskTree t = TaskTree::create("Goal", "");
        for (int step = 0; step < 30; ++step) {
            const auto& nodes = t.nodes();
            const NodeId id = nodes[static_cast<std::size_t>(pick(0, static_cast<int>(nodes.size()) - 1))].id;
            try {
                t.attach_subtasks(id, specs(pick(1, 8)), pick(0, 1) ? Decomposition::standard : Decomposition::fork);
            } catch (const Error&) {
            }
            ASSERT_NO_THROW(t.validate());
        }
        std::size_t lines = 0;
        for (char c : t.outline()) lines += c == '\n';
        EXPECT_EQ(lines, t.size());
        for (const auto& n : t.nodes()) {
            EXPECT_EQ(t.node_path(n.id).size(), static_cast<std::size_t>(n.level) + 1);
            EXPECT_LE(n.level, 6);
        }
        EXPECT_EQ(t.outline(), TaskTree::from_json(t.to_json()).outline());
    }
}
