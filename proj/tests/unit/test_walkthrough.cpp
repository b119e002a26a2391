#include "plancurate/walkthrough.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

using namespace plancurate;

namespace {

std::string golden() {
    std::ifstream in(PLANCURATE_SOURCE_DIR "/tests/fixtures/walkthrough_session.json", std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Session run() {
    MockProvider provider(ProviderScript::load(PLANCURATE_SOURCE_DIR "/data/walkthrough_script.json"));
    CurationEngine engine(provider, PromptLibrary::builtin(), {}, Clock(true));
    Session s = run_walkthrough(engine);
    EXPECT_EQ(provider.remaining(), 0u);
    return s;
}

}  // namespace

TEST(Walkthrough, MatchesScenario) {
    const Session s = run();
    for (const auto& problem : verify_walkthrough(s)) ADD_FAILURE() << problem;
}

TEST(Walkthrough, ReplayOfGoldenGivesForkedRecommenders) {
    const Session g = Session::from_json(Json::parse(golden()));
    const Session r = Session::replay(g.events());
    EXPECT_TRUE(equivalent(r, g));
    int forked = 0;
    for (const auto& n : r.tree().nodes()) {
        forked += n.title.starts_with("Reach Out to Potential Recommenders: ");
    }
    EXPECT_EQ(forked, 3);
}

TEST(Walkthrough, DeterministicAgainstGolden) {
    EXPECT_EQ(run().to_json(), Json::parse(golden()));
    EXPECT_EQ(run().tree().outline(), run().tree().outline());
}
