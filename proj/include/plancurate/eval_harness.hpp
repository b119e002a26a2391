#pragma once

#include "plancurate/llm_provider.hpp"
#include "plancurate/prompt_library.hpp"
#include "plancurate/util.hpp"

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace plancurate {

enum class Scenario { academic, practical, recreational, travel };

std::string_view to_string(Scenario s);

struct TestCase {
    std::string id;
    Scenario scenario = Scenario::academic;
    std::string title;
    std::string description;
    int level = 0;
    bool gold_label = false;  ///< true = needs decomposition

    friend bool operator==(const TestCase&, const TestCase&) = default;
};

/// One record per line: id|scenario|title|description|level|gold_label.
/// Blank lines and lines starting with '#' are ignored. Throws
/// malformed_suite with the offending line number.
std::vector<TestCase> parse_suite(std::string_view text);
std::vector<TestCase> load_suite(const std::filesystem::path& path);

struct CaseRecord {
    DetectionVariant strategy = DetectionVariant::zero_shot;
    int run = 1;
    std::string case_id;
    std::optional<bool> predicted;
    bool gold = false;
    bool correct = false;
    bool unparseable = false;
    std::optional<std::string> error;  ///< provider failure, if any
};

struct StrategyResult {
    DetectionVariant strategy = DetectionVariant::zero_shot;
    double mean_accuracy = 0.0;
    double stddev = 0.0;  ///< sample standard deviation across runs
    int runs = 0;
    std::vector<double> run_accuracies;
    int unparseable = 0;
    int provider_errors = 0;
};

struct EvalReport {
    std::vector<StrategyResult> strategies;  ///< in table order
    std::vector<CaseRecord> records;
    std::string provider;
    std::string timestamp;

    [[nodiscard]] const StrategyResult* find(DetectionVariant v) const;
};

struct EvalOptions {
    int runs = 5;
    int parallelism = 4;  ///< live providers only; scripted ones run sequentially
    RequestParams params;
};

EvalReport run_eval(std::span<const TestCase> suite, std::span<const DetectionVariant> strategies,
                    Provider& provider, const EvalOptions& options = {},
                    const PromptLibrary& prompts = PromptLibrary::builtin(), const Clock& clock = Clock{});

struct RenderedReport {
    std::string table;
    std::string csv;  ///< strategy,run,case_id,predicted,gold,correct,unparseable
};

RenderedReport render_report(const EvalReport& report);

/// "Few-shot + CoT + Tree" style row label.
std::string strategy_label(DetectionVariant v);

enum class MockPolicy {
    oracle,      ///< every verdict matches the gold label
    always_yes,  ///< every verdict says the task needs decomposition
};

MockPolicy parse_mock_policy(std::string_view text);

/// Scripted responses in the exact order run_eval issues requests, each
/// step matched on the case title.
ProviderScript eval_script(std::span<const TestCase> suite, std::span<const DetectionVariant> strategies, int runs,
                           MockPolicy policy);

}  // namespace plancurate
