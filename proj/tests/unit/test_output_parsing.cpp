#include "plancurate/output_parsing.hpp"

#include "expect_code.hpp"

#include <gtest/gtest.h>

using namespace plancurate;

TEST(ParseSubtasks, NumberedItemsWithProse) {
    const auto items = parse_subtask_list(
        "Here are the subtasks:\n"
        "1. Research Universities and Programs — Find programs that match your interests — 2 weeks\n"
        "2. Identify Faculty Members — Find faculty whose work aligns — 4 days\n"
        "3. Prepare Statement\n"
        "Good luck!");
    ASSERT_EQ(items.size(), 3u);
    EXPECT_EQ(items[0].title, "Research Universities and Programs");
    EXPECT_EQ(items[0].description, "Find programs that match your interests");
    EXPECT_EQ(items[0].estimated_duration, "2 weeks");
    EXPECT_EQ(items[2].estimated_duration, kUnspecifiedDuration);
}

TEST(ParseSubtasks, NoItemsIsUnparseable) {
    EXPECT_CODE(parse_subtask_list("I cannot help with that."), ErrorCode::unparseable_subtasks);
    EXPECT_CODE(parse_subtask_list(""), ErrorCode::unparseable_subtasks);
}

TEST(ParseYesNo, PolarityTable) {
    struct Row {
        const char* text;
        Polarity pol;
        bool needs;
    };
    const Row rows[] = {
        {"Yes", Polarity::yes_means_decompose, true},
        {"No", Polarity::yes_means_decompose, false},
        {"Yes", Polarity::yes_means_actionable, false},
        {"No", Polarity::yes_means_actionable, true},
        {"Reasoning: broad.\nAnswer: No", Polarity::yes_means_actionable, true},
        {"Reasoning: one deliverable.\nAnswer: Yes", Polarity::yes_means_actionable, false},
        {"yes, it should be split", Polarity::yes_means_decompose, true},
        {"NO.", Polarity::yes_means_decompose, false},
    };
    for (const auto& r : rows) {
        EXPECT_EQ(parse_yes_no(r.text, r.pol).needs_decomposition, r.needs) << r.text;
    }
}

TEST(ParseYesNo, FinalAnswerLineWinsAndKeepsReasoning) {
    const auto v = parse_yes_no("Yes, there are parts.\nAnswer: No", Polarity::yes_means_decompose);
    EXPECT_FALSE(v.needs_decomposition);
    EXPECT_NE(v.reasoning.find("there are parts"), std::string::npos);
}

TEST(ParseYesNo, Unparseable) {
    EXPECT_CODE(parse_yes_no("Maybe.", Polarity::yes_means_decompose), ErrorCode::unparseable_verdict);
    EXPECT_CODE(parse_yes_no("", Polarity::yes_means_actionable), ErrorCode::unparseable_verdict);
}

TEST(ParseKeySelection, CanonicalKeysAndDroppedLines) {
    const std::vector<std::string> valid{"University List", "CV"};
    const auto r = parse_key_selection("university list: names the schools\nBogus: nope\nCV: background\nCV: again",
                                       valid);
    ASSERT_EQ(r.selections.size(), 2u);
    EXPECT_EQ(r.selections[0].key, "University List");
    EXPECT_EQ(r.selections[0].reason, "names the schools");
    EXPECT_EQ(r.selections[1].reason, "background");
    ASSERT_EQ(r.dropped_lines.size(), 1u);
    EXPECT_EQ(r.dropped_lines[0], "Bogus: nope");
    EXPECT_CODE(parse_key_selection("Bogus: nope", valid), ErrorCode::no_valid_keys);
}

TEST(ParseQuestions, FileAndTextTags) {
    const auto qs = parse_question_list("1. [FILE] Please upload your CV.\n- [TEXT] Which areas interest you?\n2. Any location?");
    ASSERT_EQ(qs.size(), 3u);
    EXPECT_TRUE(qs[0].expects_file);
    EXPECT_EQ(qs[0].question, "Please upload your CV.");
    EXPECT_FALSE(qs[1].expects_file);
    EXPECT_EQ(qs[2].question, "Any location?");
}
