#include "plancurate/walkthrough.hpp"

#include <algorithm>

namespace plancurate {

namespace {

constexpr std::string_view kCv =
    "John Doe\n"
    "B.S. in Computer Science, 2024\n"
    "Research: undergraduate researcher in low-resource machine translation, advised by Prof. Blake White; "
    "senior thesis on task-oriented dialogue systems, advised by Prof. Julian Deng.\n"
    "Experience: NLP research intern at Lumen Labs, mentored by Dr. Alice Feng.\n"
    "Publications: Back-Translation for Low-Resource Languages (workshop paper, 2023).";

constexpr std::string_view kCollaborations =
    "Co-authored a 2023 workshop paper with Prof. Blake White on data augmentation for low-resource machine "
    "translation.";

const TaskNode* child_titled(const TaskTree& tree, const NodeId& parent, std::string_view title) {
    for (const auto& id : tree.node(parent).children) {
        if (tree.node(id).title == title) return &tree.node(id);
    }
    return nullptr;
}

NodeId require_child(const TaskTree& tree, const NodeId& parent, std::string_view title) {
    const TaskNode* n = child_titled(tree, parent, title);
    if (n == nullptr) {
        throw Error(ErrorCode::precondition_failed, "expected subtask '" + std::string(title) + "'",
                    Json{{"parent", parent}});
    }
    return n->id;
}

std::vector<std::string> accepted(const std::vector<SelectionCandidate>& candidates) {
    std::vector<std::string> keys;
    for (const auto& c : candidates) {
        if (c.accepted) keys.push_back(c.key);
    }
    return keys;
}

}  // namespace

Session run_walkthrough(CurationEngine& engine) {
    Session s = engine.start_session(std::string(kWalkthroughSessionId), std::string(kWalkthroughGoal),
                                     AblationMode::full_curation);

    // CV uploaded, the other two questions skipped.
    const auto questions = engine.elicit_global_context(s);
    std::vector<ElicitedAnswer> answers;
    for (const auto& q : questions) {
        if (q.expects_file && answers.empty()) {
            answers.push_back({q.id, std::string(kCv), "CV.txt"});
        } else {
            answers.push_back({q.id, std::nullopt, std::nullopt});
        }
    }
    engine.commit_elicited(s, answers);

    const NodeId root = s.tree().root();
    engine.generate_subtasks(s, root);

    const NodeId programs = require_child(s.tree(), root, "Identify Potential PhD Programs");
    if (engine.detect_actionability(s, programs).needs_decomposition && !engine.detect_fork(s, programs).should_fork) {
        engine.generate_subtasks(s, programs);
    }

    const NodeId universities = require_child(s.tree(), programs, "Research Universities and Programs");
    engine.detect_actionability(s, universities);
    const auto uni_keys = accepted(engine.select_context(s, universities, SelectionPurpose::drafting));
    const DraftCandidate uni_draft = engine.generate_draft(s, universities, uni_keys);
    const DraftCandidate uni_midwest =
        engine.iterate_draft(s, universities, uni_draft, "I want schools in the Midwest of the US.");
    engine.save_draft(s, universities, uni_midwest);

    const NodeId faculty = require_child(s.tree(), programs, "Identify Faculty Members");
    if (engine.detect_actionability(s, faculty).needs_decomposition && engine.detect_fork(s, faculty).should_fork) {
        const auto keys = accepted(engine.select_context(s, faculty, SelectionPurpose::forking));
        engine.fork_task(s, faculty, keys);
    }

    const NodeId letters = require_child(s.tree(), root, "Get Recommendation Letters");
    if (engine.detect_actionability(s, letters).needs_decomposition && !engine.detect_fork(s, letters).should_fork) {
        engine.generate_subtasks(s, letters);
    }

    // The suggested program list is deselected; the list comes from the CV.
    const NodeId compile = require_child(s.tree(), letters, "Compile a List of Recommenders");
    engine.detect_actionability(s, compile);
    engine.select_context(s, compile, SelectionPurpose::drafting);
    const DraftCandidate recommenders = engine.generate_draft(s, compile, {});
    engine.save_draft(s, compile, recommenders);

    const NodeId reach = require_child(s.tree(), letters, "Reach Out to Potential Recommenders");
    if (engine.detect_actionability(s, reach).needs_decomposition && engine.detect_fork(s, reach).should_fork) {
        const auto keys = accepted(engine.select_context(s, reach, SelectionPurpose::forking));
        engine.fork_task(s, reach, keys);
    }

    engine.add_context(s, "Prior collaborations", std::string(kCollaborations));

    const NodeId email = require_child(s.tree(), reach, "Reach Out to Potential Recommenders: Prof. Blake White");
    engine.detect_actionability(s, email);
    const auto email_keys = accepted(engine.select_context(s, email, SelectionPurpose::drafting));
    const DraftCandidate first_email = engine.generate_draft(s, email, email_keys);
    const auto follow_ups = engine.elicit_draft_context(s, email, first_email);
    std::vector<ElicitedAnswer> details;
    for (const auto& q : follow_ups) {
        if (q.question.find("project") != std::string::npos) {
            details.push_back({q.id,
                               "The data augmentation pipeline I built for Nepali-English translation, which "
                               "improved BLEU by 3 points.",
                               std::nullopt});
        } else if (q.question.find("paper") != std::string::npos) {
            details.push_back({q.id, "Our 2023 workshop paper on back-translation for low-resource languages.",
                               std::nullopt});
        } else {
            details.push_back({q.id, std::nullopt, std::nullopt});
        }
    }
    const DraftCandidate final_email = engine.regenerate_with_context(s, email, details, email_keys);
    engine.save_draft(s, email, final_email);
    return s;
}

std::vector<std::string> verify_walkthrough(const Session& s) {
    std::vector<std::string> problems;
    auto expect = [&](bool ok, std::string what) {
        if (!ok) problems.push_back(std::move(what));
    };
    try {
        s.check_invariants();
        expect(equivalent(Session::replay(s.events()), s), "replayed event log differs from the session");
    } catch (const Error& e) {
        problems.push_back(std::string("invariant violation: ") + e.what());
        return problems;
    }

    const TaskTree& t = s.tree();
    const TaskNode& root = t.node(t.root());
    expect(root.title == kWalkthroughGoal, "root title is '" + root.title + "'");

    const ContextEntry* cv = s.context().find(Scope::global, "CV");
    expect(cv != nullptr && cv->provenance == Provenance::uploaded_document, "CV missing from global context");
    const auto answered = std::count_if(s.pending_questions().begin(), s.pending_questions().end(),
                                        [](const auto& q) { return q.answered; });
    expect(answered >= 3, "goal-level questions were not all committed");

    const TaskNode* programs = child_titled(t, root.id, "Identify Potential PhD Programs");
    expect(programs != nullptr && programs->decomposition == Decomposition::standard && programs->children.size() == 3,
           "'Identify Potential PhD Programs' is not decomposed into three standard subtasks");

    const TaskNode* letters = child_titled(t, root.id, "Get Recommendation Letters");
    const TaskNode* reach = letters ? child_titled(t, letters->id, "Reach Out to Potential Recommenders") : nullptr;
    if (reach == nullptr) {
        problems.push_back("'Reach Out to Potential Recommenders' is missing");
    } else {
        std::vector<std::string> titles;
        for (const auto& id : reach->children) titles.push_back(t.node(id).title);
        const std::vector<std::string> expected{"Reach Out to Potential Recommenders: Prof. Blake White",
                                                "Reach Out to Potential Recommenders: Prof. Julian Deng",
                                                "Reach Out to Potential Recommenders: Dr. Alice Feng"};
        expect(reach->decomposition == Decomposition::fork && titles == expected,
               "recommender fork does not name the three recommenders");
    }

    for (std::string_view title : {"Research Universities and Programs", "Compile a List of Recommenders",
                                   "Reach Out to Potential Recommenders: Prof. Blake White"}) {
        const auto it = std::find_if(t.nodes().begin(), t.nodes().end(),
                                     [&](const TaskNode& n) { return n.title == title; });
        expect(it != t.nodes().end() && it->status == NodeStatus::completed && it->draft_ref.has_value(),
               "'" + std::string(title) + "' has no saved draft");
    }
    return problems;
}

}  // namespace plancurate
