#include "plancurate/curation_engine.hpp"

#include "expect_code.hpp"

#include <gtest/gtest.h>

using namespace plancurate;

namespace {

constexpr const char* kGoal = "Apply for a PhD in NLP";

struct Fixture {
    MockProvider provider;
    CurationEngine engine{provider, PromptLibrary::builtin(), {}, Clock(true)};
    Session session;

    explicit Fixture(AblationMode mode = AblationMode::full_curation)
        : session(engine.start_session("s1", kGoal, mode)) {}

    void say(std::string response) { provider.push(std::nullopt, std::move(response)); }

    std::vector<CompletionRequest> sent() const { return provider.requests(); }
    const CompletionRequest& last() {
        reqs_ = provider.requests();
        return reqs_.back();
    }

    std::vector<std::string> tags() const {
        std::vector<std::string> out;
        for (const auto& e : session.events()) {
            if (e.kind == EventKind::provider_call) out.push_back(e.payload.at("tag"));
        }
        return out;
    }

    NodeId child(const std::string& title) {
        say("1. " + title + " — do it — 1 week\n2. Other Task — other — 2 days");
        return engine.generate_subtasks(session, session.tree().root())[0];
    }

private:
    std::vector<CompletionRequest> reqs_;
};

bool contains(const std::string& haystack, const std::string& needle) {
    return haystack.find(needle) != std::string::npos;
}

}  // namespace

TEST(Elicitation, QuestionsAboutSchoolsAndLetters) {
    Fixture f;
    f.say("1. [FILE] Please upload your CV.\n2. Which target schools are you considering?\n"
          "3. Who could write your recommendation letters?");
    const auto qs = f.engine.elicit_global_context(f.session);
    ASSERT_EQ(qs.size(), 3u);
    EXPECT_EQ(qs[0].id, "q1");
    EXPECT_TRUE(qs[0].expects_file);
    EXPECT_TRUE(contains(qs[1].question, "target schools"));
    EXPECT_TRUE(contains(qs[2].question, "recommendation letters"));
    EXPECT_EQ(f.session.pending_questions().size(), 3u);
    EXPECT_TRUE(contains(f.last().messages[1].content, kGoal));
}

TEST(Elicitation, DisabledOutsideFullCuration) {
    for (auto mode : {AblationMode::reuse_only, AblationMode::selection_and_reuse}) {
        Fixture f(mode);
        EXPECT_CODE(f.engine.elicit_global_context(f.session), ErrorCode::feature_disabled);
        EXPECT_TRUE(f.sent().empty());
    }
}

TEST(Elicitation, CommitAnswersSkipsAndOverwrites) {
    Fixture f;
    f.say("1. [FILE] Please upload your CV.\n2. Which areas interest you?\n3. Any location preference?");
    f.engine.elicit_global_context(f.session);
    const std::vector<ElicitedAnswer> answers{{"q1", "John Doe, MS in CS", "CV.txt"},
                                              {"q2", "Dialogue systems", std::nullopt},
                                              {"q3", std::nullopt, std::nullopt}};
    f.engine.commit_elicited(f.session, answers);
    const auto& ctx = f.session.context();
    ASSERT_NE(ctx.find(Scope::global, "CV"), nullptr);
    EXPECT_EQ(ctx.find(Scope::global, "CV")->provenance, Provenance::uploaded_document);
    EXPECT_EQ(ctx.find(Scope::global, "Which areas interest you?")->provenance, Provenance::elicited_answer);
    EXPECT_EQ(ctx.list_keys(Scope::global).size(), 3u);
    EXPECT_EQ(f.session.find_question("q3")->answer, std::string(kSkippedAnswer));

    f.engine.commit_elicited(f.session, std::vector<ElicitedAnswer>{{"q2", "Dialogue systems", std::nullopt}});
    EXPECT_EQ(ctx.list_keys(Scope::global).size(), 3u);

    EXPECT_CODE(f.engine.commit_elicited(f.session, std::vector<ElicitedAnswer>{{"q9", "x", std::nullopt}}),
                ErrorCode::unknown_question);
}

TEST(Elicitation, SkippingEverythingLeavesOnlyGoal) {
    Fixture f;
    f.say("1. Which schools?\n2. Who are your recommenders?");
    f.engine.elicit_global_context(f.session);
    f.engine.commit_elicited(f.session, std::vector<ElicitedAnswer>{{"q1", std::nullopt, std::nullopt},
                                                                    {"q2", "  ", std::nullopt}});
    const auto keys = f.session.context().keys(Scope::global);
    ASSERT_EQ(keys.size(), 1u);
}

TEST(Decomposition, GenerateSubtasksAndAlreadyDecomposed) {
    Fixture f;
    f.say("1. Identify Potential PhD Programs — find programs — 2 weeks\n"
          "2. Prepare Application Materials — statement and CV — 3 weeks\n"
          "3. Get Recommendation Letters — ask recommenders — 4 weeks\n"
          "4. Prepare for Tests — GRE and TOEFL — 6 weeks\n"
          "5. Submit Applications — submit — 1 week");
    const auto ids = f.engine.generate_subtasks(f.session, f.session.tree().root());
    ASSERT_EQ(ids.size(), 5u);
    EXPECT_EQ(f.session.tree().node(ids[0]).title, "Identify Potential PhD Programs");
    const auto& prompt = f.last().messages[1].content;
    EXPECT_TRUE(contains(prompt, kGoal));
    EXPECT_CODE(f.engine.generate_subtasks(f.session, f.session.tree().root()), ErrorCode::already_decomposed);
    EXPECT_CODE(f.engine.generate_subtasks(f.session, "n99"), ErrorCode::unknown_node);
}

TEST(Decomposition, UnparseableListIsReaskedOnce) {
    Fixture f;
    f.say("Sure! Let me think about it.");
    f.say("1. A — a — 1 day");
    EXPECT_EQ(f.engine.generate_subtasks(f.session, f.session.tree().root()).size(), 1u);
    EXPECT_EQ(f.last().messages.back().content, std::string(CurationEngine::kSubtaskReask));

    Fixture g;
    g.say("nope");
    g.say("still nope");
    const Json before = g.session.to_json();
    EXPECT_CODE(g.engine.generate_subtasks(g.session, g.session.tree().root()), ErrorCode::unparseable_subtasks);
    EXPECT_EQ(g.session.to_json(), before);
}

TEST(Decomposition, FanoutOverflowIsTruncatedWithWarning) {
    Fixture f;
    std::string list;
    for (int i = 1; i <= 15; ++i) list += std::to_string(i) + ". T" + std::to_string(i) + " — d — 1 day\n";
    f.say(list);
    EXPECT_EQ(f.engine.generate_subtasks(f.session, f.session.tree().root()).size(), TaskTree::kMaxFanout);
    EXPECT_EQ(f.session.events().back().kind, EventKind::subtasks_attached);
    bool warned = false;
    for (const auto& e : f.session.events()) warned |= e.kind == EventKind::warning;
    EXPECT_TRUE(warned);
}

TEST(Detection, ProductionStrategyUsesLevel) {
    Fixture f;
    const NodeId n = f.child("Compile a List of Potential Universities");
    f.say("Reasoning: a single list.\nAnswer: Yes");
    const Verdict v = f.engine.detect_actionability(f.session, n);
    EXPECT_FALSE(v.needs_decomposition);
    EXPECT_TRUE(contains(v.reasoning, "a single list"));
    EXPECT_TRUE(contains(f.last().messages[1].content, "The current node level of the task is 1."));
    EXPECT_EQ(f.session.events().back().payload.at("strategy"), "few_shot_cot_tree");
}

TEST(Detection, DraftStrategyMakesThrowawayDraft) {
    Fixture f;
    const NodeId n = f.child("Identify Potential PhD Programs");
    f.say("A generic plan.");
    f.say("Reasoning: generic.\nAnswer: No");
    const Verdict v =
        f.engine.detect_actionability(f.session, n, DetectionStrategy::of(DetectionVariant::few_shot_cot_tree_draft));
    EXPECT_TRUE(v.needs_decomposition);
    EXPECT_TRUE(f.session.drafts().empty());
    EXPECT_EQ(f.tags(), (std::vector<std::string>{"generate_subtasks", "detect_draft", "detect_subtask"}));
    EXPECT_TRUE(contains(f.last().messages[1].content, "A generic plan."));
}

TEST(Fork, PipelineOrderAndGuards) {
    Fixture f;
    const NodeId n = f.child("Identify Faculty Members");
    EXPECT_CODE(f.engine.detect_fork(f.session, n), ErrorCode::precondition_failed);
    f.say("Answer: Yes");
    f.engine.detect_actionability(f.session, n);
    EXPECT_CODE(f.engine.detect_fork(f.session, n), ErrorCode::precondition_failed);
    f.say("Answer: No");
    f.engine.detect_actionability(f.session, n);

    const auto calls = f.sent().size();
    const ForkVerdict empty = f.engine.detect_fork(f.session, n);
    EXPECT_FALSE(empty.should_fork);
    EXPECT_EQ(f.sent().size(), calls);

    f.engine.add_context(f.session, "University List", "1. University of Michigan\n2. UIUC");
    f.say("The task repeats per university.\nAnswer: Yes");
    EXPECT_TRUE(f.engine.detect_fork(f.session, n).should_fork);
    EXPECT_TRUE(contains(f.last().messages[1].content, "- University List"));

    EXPECT_CODE(f.engine.fork_task(f.session, n, std::vector<std::string>{}), ErrorCode::precondition_failed);
    f.say("1. University of Michigan — faculty at UMich — 2 days\n2. UIUC — faculty at UIUC — 2 days");
    const auto kids = f.engine.fork_task(f.session, n, std::vector<std::string>{"University List"});
    ASSERT_EQ(kids.size(), 2u);
    EXPECT_EQ(f.session.tree().node(kids[0]).title, "Identify Faculty Members: University of Michigan");
    EXPECT_EQ(f.session.tree().node(n).decomposition, Decomposition::fork);
    EXPECT_TRUE(contains(f.last().messages[1].content, "University List: 1. University of Michigan"));
}

TEST(Fork, OneEntityAndNoEntities) {
    Fixture f;
    const NodeId n = f.child("Reach Out to Potential Recommenders");
    f.engine.add_context(f.session, "Recommenders", "Prof. Blake White");
    f.say("Answer: No");
    f.engine.detect_actionability(f.session, n);
    f.say("Answer: Yes");
    f.engine.detect_fork(f.session, n);

    f.say("NONE");
    const Json before = f.session.to_json();
    EXPECT_CODE(f.engine.fork_task(f.session, n, std::vector<std::string>{"Recommenders"}),
                ErrorCode::no_entities_found);
    EXPECT_EQ(f.session.to_json(), before);

    f.say("1. Prof. Blake White — ask for a letter — 1 day");
    EXPECT_EQ(f.engine.fork_task(f.session, n, std::vector<std::string>{"Recommenders"}).size(), 1u);
}

TEST(Selection, CandidatesAndErrors) {
    Fixture f;
    const NodeId n = f.child("Reach Out to Prof. Blake White");
    EXPECT_TRUE(f.engine.select_context(f.session, n, SelectionPurpose::drafting).empty());
    EXPECT_CODE(f.engine.select_context(f.session, n, SelectionPurpose::forking), ErrorCode::precondition_failed);

    f.engine.add_context(f.session, "University List", "UMich, UIUC");
    f.engine.add_context(f.session, "Prior collaborations", "Worked with Prof. White");
    f.say("University List: shows the target schools\nprior collaborations: relationship\nCV: not local");
    const auto cands = f.engine.select_context(f.session, n, SelectionPurpose::drafting);
    ASSERT_EQ(cands.size(), 2u);
    EXPECT_EQ(cands[1].key, "Prior collaborations");
    EXPECT_TRUE(cands[0].accepted);
    EXPECT_EQ(f.session.events()[f.session.events().size() - 2].kind, EventKind::warning);

    f.say("Nothing: at all");
    EXPECT_CODE(f.engine.select_context(f.session, n, SelectionPurpose::drafting), ErrorCode::no_valid_keys);

    Fixture r(AblationMode::reuse_only);
    EXPECT_CODE(r.engine.select_context(r.session, r.session.tree().root(), SelectionPurpose::drafting),
                ErrorCode::feature_disabled);
}

TEST(Drafting, AcceptedKeysOnlyInSelectionModes) {
    Fixture f(AblationMode::selection_and_reuse);
    const NodeId n = f.child("Research Universities and Programs");
    f.engine.add_context(f.session, "Location preference", "Midwest of US");
    f.engine.add_context(f.session, "Budget", "Low");
    f.say("UMich, UIUC, Wisconsin");
    const auto d = f.engine.generate_draft(f.session, n, std::vector<std::string>{"Location preference"});
    const auto& user = f.last().messages[1].content;
    EXPECT_TRUE(contains(user, "Location preference: Midwest of US"));
    EXPECT_FALSE(contains(user, "Budget: Low"));
    EXPECT_EQ(d.revision, 1);
    EXPECT_EQ(d.lineage, DraftLineage::initial);
    EXPECT_CODE(f.engine.generate_draft(f.session, n, std::vector<std::string>{"Missing"}), ErrorCode::unknown_key);
}

TEST(Drafting, ReuseOnlyUsesEveryLocalEntry) {
    Fixture f(AblationMode::reuse_only);
    const NodeId n = f.child("Research Universities and Programs");
    f.engine.add_context(f.session, "Location preference", "Midwest of US");
    f.engine.add_context(f.session, "Budget", "Low");
    f.say("draft");
    const auto d = f.engine.generate_draft(f.session, n, std::vector<std::string>{});
    EXPECT_EQ(d.context_keys_used, (std::vector<std::string>{"Location preference", "Budget"}));
    EXPECT_TRUE(contains(f.last().messages[1].content, "Budget: Low"));
    for (const auto& t : f.tags()) EXPECT_FALSE(t.starts_with("elicit"));
}

TEST(Drafting, EmptyKeysUseGlobalContextOnly) {
    Fixture f;
    const NodeId n = f.child("Research Universities and Programs");
    f.engine.add_context(f.session, "Budget", "Low");
    f.say("draft");
    f.engine.generate_draft(f.session, n, std::vector<std::string>{});
    const auto& user = f.last().messages[1].content;
    EXPECT_TRUE(contains(user, kGoal));
    EXPECT_FALSE(contains(user, "Budget"));
}

TEST(Drafting, IterationChainAndSave) {
    Fixture f;
    const NodeId n = f.child("Research Universities and Programs");
    f.say("Harvard, MIT, Stanford");
    DraftCandidate d = f.engine.generate_draft(f.session, n, std::vector<std::string>{});
    for (int i = 0; i < 3; ++i) {
        f.say("UMich, UIUC, Wisconsin v" + std::to_string(i));
        d = f.engine.iterate_draft(f.session, n, d, "I want schools in the Midwest of the US.");
        EXPECT_EQ(d.revision, i + 2);
        EXPECT_EQ(d.lineage, DraftLineage::iterated);
    }
    const auto& msgs = f.last().messages;
    ASSERT_EQ(msgs.size(), 4u);
    EXPECT_EQ(msgs[2].role, Role::assistant);
    EXPECT_EQ(msgs[3].content, "I want schools in the Midwest of the US.");
    EXPECT_CODE(f.engine.iterate_draft(f.session, n, d, "  "), ErrorCode::bad_request);

    const std::string key = f.engine.save_draft(f.session, n, d);
    EXPECT_EQ(key, "Research Universities and Programs — draft");
    EXPECT_EQ(f.session.tree().node(n).status, NodeStatus::completed);
    EXPECT_EQ(f.session.tree().node(n).draft_ref, key);
    const auto* entry = f.session.context().find(Scope::local, key);
    ASSERT_NE(entry, nullptr);
    EXPECT_EQ(entry->provenance, Provenance::saved_draft);
    EXPECT_EQ(entry->source_node, n);

    f.say("Final list");
    d = f.engine.iterate_draft(f.session, n, d, "Add one more.");
    EXPECT_EQ(f.engine.save_draft(f.session, n, d), key);
    EXPECT_EQ(f.session.context().find(Scope::local, key)->value, "Final list");
    EXPECT_EQ(f.session.context().keys(Scope::local).size(), 1u);
}

TEST(Drafting, SavedDraftIsOfferedToSiblings) {
    Fixture f;
    const NodeId n = f.child("Research Universities and Programs");
    f.say("UMich");
    const auto d = f.engine.generate_draft(f.session, n, std::vector<std::string>{});
    const std::string key = f.engine.save_draft(f.session, n, d);
    f.say(key + ": the list of schools");
    const auto cands = f.engine.select_context(f.session, "n3", SelectionPurpose::drafting);
    ASSERT_EQ(cands.size(), 1u);
    EXPECT_EQ(cands[0].key, key);
    EXPECT_TRUE(contains(f.last().messages[1].content, "- " + key));
}

TEST(Drafting, ElicitAndRegenerate) {
    Fixture f;
    const NodeId n = f.child("Reach Out to Prof. Blake White");
    f.say("Dear Prof. White, ...");
    const auto d = f.engine.generate_draft(f.session, n, std::vector<std::string>{});
    f.say("1. Which specific projects or papers did you work on with Prof. White?\n2. When is the deadline?");
    const auto qs = f.engine.elicit_draft_context(f.session, n, d);
    ASSERT_EQ(qs.size(), 2u);
    EXPECT_TRUE(contains(qs[0].question, "specific projects or papers"));
    EXPECT_TRUE(contains(f.last().messages[1].content, "Dear Prof. White"));

    f.say("Dear Prof. White, regarding our dialogue paper ...");
    const auto r = f.engine.regenerate_with_context(
        f.session, n, std::vector<ElicitedAnswer>{{qs[0].id, "The dialogue paper", std::nullopt}, {qs[1].id, std::nullopt, std::nullopt}},
        std::vector<std::string>{});
    EXPECT_EQ(r.lineage, DraftLineage::regenerated_with_context);
    EXPECT_EQ(r.revision, 2);
    ASSERT_EQ(r.context_keys_used.size(), 1u);
    EXPECT_EQ(f.session.context().find(Scope::local, r.context_keys_used[0])->value, "The dialogue paper");
    EXPECT_TRUE(contains(f.last().messages[1].content, "The dialogue paper"));

    f.say("1. Anything else?");
    const auto more = f.engine.elicit_draft_context(f.session, n, r);
    f.say("same");
    const auto skipped = f.engine.regenerate_with_context(
        f.session, n, std::vector<ElicitedAnswer>{{more[0].id, std::nullopt, std::nullopt}}, r.context_keys_used);
    EXPECT_EQ(skipped.lineage, DraftLineage::regenerated);
    EXPECT_EQ(skipped.context_keys_used, r.context_keys_used);

    Fixture s(AblationMode::selection_and_reuse);
    EXPECT_CODE(s.engine.elicit_draft_context(s.session, s.session.tree().root(), d), ErrorCode::feature_disabled);
}

TEST(Engine, ProviderFailureLeavesSessionUnchanged) {
    Fixture f;
    const Json before = f.session.to_json();
    EXPECT_CODE(f.engine.generate_subtasks(f.session, f.session.tree().root()), ErrorCode::script_exhausted);
    EXPECT_EQ(f.session.to_json(), before);
}

TEST(Engine, UserMayDraftOnNodeFlaggedForDecomposition) {
    Fixture f;
    const NodeId n = f.child("Identify Potential PhD Programs");
    f.say("Answer: No");
    EXPECT_TRUE(f.engine.detect_actionability(f.session, n).needs_decomposition);
    f.say("draft anyway");
    EXPECT_NO_THROW(f.engine.generate_draft(f.session, n, std::vector<std::string>{}));
}

TEST(Engine, EveryEventIsReplayable) {
    Fixture f;
    const NodeId n = f.child("Research Universities and Programs");
    f.say("draft");
    const auto d = f.engine.generate_draft(f.session, n, std::vector<std::string>{});
    f.engine.save_draft(f.session, n, d);
    f.session.check_invariants();
    EXPECT_TRUE(equivalent(Session::replay(f.session.events()), f.session));
}
