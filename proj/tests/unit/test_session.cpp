#include "plancurate/curation_engine.hpp"
#include "plancurate/session.hpp"

#include "expect_code.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

using namespace plancurate;

namespace {

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("plancurate_session_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) + "_" +
                ::testing::UnitTest::GetInstance()->current_test_info()->name());
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
};

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spit(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

Session sample() {
    MockProvider provider;
    CurationEngine engine(provider, PromptLibrary::builtin(), {}, Clock(true));
    Session s = engine.start_session("sample", "Plan a trip to Japan", AblationMode::full_curation);
    provider.push(std::nullopt, "1. Book Flights — round trip — 1 day\n2. Reserve Hotels — Tokyo and Kyoto — 2 days");
    const auto ids = engine.generate_subtasks(s, s.tree().root());
    engine.add_context(s, "Budget", "$3000");
    provider.push(std::nullopt, "Flights on JAL, $1200");
    const auto d = engine.generate_draft(s, ids[0], std::vector<std::string>{"Budget"});
    engine.save_draft(s, ids[0], d);
    return s;
}

}  // namespace

TEST(Session, StartRecordsGoal) {
    const Session s = Session::start("x", "Plan a trip", AblationMode::reuse_only, "t");
    ASSERT_EQ(s.events().size(), 1u);
    EXPECT_EQ(s.events()[0].kind, EventKind::goal_set);
    EXPECT_EQ(s.events()[0].seq, 1u);
    EXPECT_EQ(s.tree().node(s.tree().root()).title, "Plan a trip");
    EXPECT_EQ(s.context().keys(Scope::global).size(), 1u);
    EXPECT_CODE(Session::start("x", " ", AblationMode::reuse_only, "t"), ErrorCode::empty_goal);
}

TEST(Session, SaveLoadRoundTrip) {
    TempDir dir;
    const Session s = sample();
    const auto file = dir.path / "s.json";
    s.save(file);
    const Session back = Session::load(file);
    EXPECT_EQ(back.context().render_scope(Scope::global), s.context().render_scope(Scope::global));
    EXPECT_EQ(back.context().render_scope(Scope::local), s.context().render_scope(Scope::local));
    EXPECT_EQ(back.tree().outline(), s.tree().outline());
    EXPECT_EQ(back.events().size(), s.events().size());
    EXPECT_TRUE(equivalent(back, s));

    const auto again = dir.path / "again.json";
    back.save(again);
    EXPECT_EQ(slurp(file), slurp(again));
}

TEST(Session, SaveToUnwritablePath) {
    EXPECT_CODE(sample().save("/proc/plancurate/none/s.json"), ErrorCode::io_error);
}

TEST(Session, LoadErrors) {
    TempDir dir;
    const auto file = dir.path / "s.json";
    EXPECT_CODE(Session::load(dir.path / "missing.json"), ErrorCode::io_error);

    sample().save(file);
    const std::string text = slurp(file);
    spit(file, text.substr(0, text.size() / 2));
    EXPECT_CODE(Session::load(file), ErrorCode::corrupt_session);

    Json j = Json::parse(text);
    j["schema_version"] = Session::kSchemaVersion + 1;
    spit(file, j.dump());
    EXPECT_CODE(Session::load(file), ErrorCode::schema_mismatch);

    j = Json::parse(text);
    j["tree"]["nodes"]["n2"]["draft_ref"] = "nowhere";
    spit(file, j.dump());
    EXPECT_CODE(Session::load(file), ErrorCode::corrupt_session);
}

TEST(Session, ReplayRebuildsState) {
    const Session s = sample();
    const Session r = Session::replay(s.events());
    EXPECT_TRUE(equivalent(r, s));
    EXPECT_EQ(r.tree().node("n2").status, NodeStatus::completed);
}

TEST(Session, ReplayErrors) {
    EXPECT_CODE(Session::replay(std::vector<SessionEvent>{}), ErrorCode::corrupt_session);
    auto events = sample().events();
    events.erase(events.begin() + 2);
    EXPECT_CODE(Session::replay(events), ErrorCode::corrupt_session);
    events = sample().events();
    events.erase(events.begin());
    EXPECT_CODE(Session::replay(events), ErrorCode::corrupt_session);
}

TEST(Session, RejectedEventLeavesSessionUnchanged) {
    Session s = sample();
    const Json before = s.to_json();
    EXPECT_THROW(s.record(EventKind::subtasks_attached,
                          Json{{"parent", "n99"}, {"kind", "standard"}, {"subtasks", Json::array()}}, "t"),
                 Error);
    EXPECT_EQ(s.to_json(), before);
}

TEST(Session, ValidIds) {
    EXPECT_TRUE(Session::valid_id("phd-nlp"));
    EXPECT_FALSE(Session::valid_id(""));
    EXPECT_FALSE(Session::valid_id("../etc"));
    EXPECT_FALSE(Session::valid_id("a/b"));
}

TEST(SessionLock, SecondHolderIsRejected) {
    TempDir dir;
    const auto file = dir.path / "s.json";
    SessionLock first(file);
    EXPECT_CODE(SessionLock(file), ErrorCode::conflict);
}
