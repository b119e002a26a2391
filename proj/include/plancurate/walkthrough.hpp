#pragma once

#include "plancurate/curation_engine.hpp"

#include <string>
#include <vector>

namespace plancurate {

inline constexpr std::string_view kWalkthroughGoal = "Apply for a PhD in NLP";
inline constexpr std::string_view kWalkthroughSessionId = "phd-nlp";

/// Drives the PhD-application planning scenario end to end through the
/// engine. The provider is expected to follow data/walkthrough_script.json.
Session run_walkthrough(CurationEngine& engine);

/// Scenario checks on a finished walkthrough session. Empty when it matches
/// the expected shape and passes every session invariant.
std::vector<std::string> verify_walkthrough(const Session& session);

}  // namespace plancurate
