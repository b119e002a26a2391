#include "plancurate/eval_harness.hpp"

#include "plancurate/output_parsing.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <thread>

namespace plancurate {

namespace {

constexpr EnumNames<Scenario, 4> kScenarioNames{{{
    {Scenario::academic, "academic"},
    {Scenario::practical, "practical"},
    {Scenario::recreational, "recreational"},
    {Scenario::travel, "travel"},
}}};

constexpr EnumNames<MockPolicy, 2> kPolicyNames{{{
    {MockPolicy::oracle, "oracle"},
    {MockPolicy::always_yes, "always-yes"},
}}};

[[noreturn]] void malformed(std::size_t line, const std::string& what) {
    throw Error(ErrorCode::malformed_suite, "suite line " + std::to_string(line) + ": " + what,
                Json{{"line", line}});
}

std::vector<std::string> split_fields(std::string_view line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto bar = line.find('|', start);
        out.push_back(trim(line.substr(start, bar == std::string_view::npos ? line.npos : bar - start)));
        if (bar == std::string_view::npos) break;
        start = bar + 1;
    }
    return out;
}

struct Job {
    const TestCase* tc;
    std::size_t slot;
};

CaseRecord evaluate_case(const TestCase& tc, const DetectionStrategy& st, int run, Provider& provider,
                         const PromptLibrary& prompts, const RequestParams& params) {
    CaseRecord r;
    r.strategy = st.variant;
    r.run = run;
    r.case_id = tc.id;
    r.gold = tc.gold_label;
    try {
        std::optional<std::string> draft;
        if (st.includes_draft) {
            const auto p = prompts.render(TemplateId::generate_draft, {{"main_purpose", tc.title},
                                                                      {"user_context", "(no context)"},
                                                                      {"current_task", tc.title},
                                                                      {"task_description", tc.description}});
            draft = provider.complete({{{Role::system, p.system}, {Role::user, p.user}}, params, "detect_draft"}).text;
        }
        const auto p = prompts.detection_prompt(
            st, tc.title, tc.description, st.includes_level ? std::optional<int>(tc.level) : std::nullopt,
            draft ? std::optional<std::string_view>(*draft) : std::nullopt);
        const Completion c =
            provider.complete({{{Role::system, p.system}, {Role::user, p.user}}, params, "detect_subtask"});
        try {
            r.predicted = parse_yes_no(c.text, st.polarity).needs_decomposition;
            r.correct = *r.predicted == r.gold;
        } catch (const Error& e) {
            if (e.code() != ErrorCode::unparseable_verdict) throw;
            r.unparseable = true;
        }
    } catch (const Error& e) {
        if (!e.is_provider_failure()) throw;
        r.error = std::string(to_string(e.code())) + ": " + e.what();
    }
    return r;
}

std::string fixed2(double v) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(2) << v;
    return os.str();
}

std::string fixed3(double v) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(3) << v;
    return os.str();
}

}  // namespace

std::string_view to_string(Scenario s) { return kScenarioNames.name(s); }

MockPolicy parse_mock_policy(std::string_view text) {
    return kPolicyNames.parse(text, ErrorCode::bad_config, "mock policy");
}

std::vector<TestCase> parse_suite(std::string_view text) {
    std::vector<TestCase> cases;
    const auto lines = split_lines(text);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const std::size_t lineno = i + 1;
        const std::string line = trim(lines[i]);
        if (line.empty() || line.starts_with('#')) continue;
        const auto f = split_fields(line);
        if (f.size() != 6) malformed(lineno, "expected 6 fields, found " + std::to_string(f.size()));
        TestCase tc;
        tc.id = f[0];
        if (tc.id.empty()) malformed(lineno, "empty id");
        if (!kScenarioNames.contains(f[1])) malformed(lineno, "unknown scenario '" + f[1] + "'");
        tc.scenario = kScenarioNames.parse(f[1], ErrorCode::malformed_suite, "scenario");
        tc.title = f[2];
        tc.description = f[3];
        if (tc.title.empty()) malformed(lineno, "empty title");
        if (tc.description.empty()) malformed(lineno, "empty description");
        try {
            std::size_t used = 0;
            tc.level = std::stoi(f[4], &used);
            if (used != f[4].size() || tc.level < 0) throw std::invalid_argument("level");
        } catch (const std::exception&) {
            malformed(lineno, "level must be a non-negative integer");
        }
        const std::string label = to_lower(f[5]);
        if (label == "true") {
            tc.gold_label = true;
        } else if (label == "false") {
            tc.gold_label = false;
        } else {
            malformed(lineno, "gold_label must be true or false");
        }
        if (std::any_of(cases.begin(), cases.end(), [&](const TestCase& c) { return c.id == tc.id; })) {
            malformed(lineno, "duplicate id '" + tc.id + "'");
        }
        cases.push_back(std::move(tc));
    }
    return cases;
}

std::vector<TestCase> load_suite(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::io_error, "cannot read suite " + path.string(), Json{{"path", path.string()}});
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_suite(buf.str());
}

const StrategyResult* EvalReport::find(DetectionVariant v) const {
    auto it = std::find_if(strategies.begin(), strategies.end(), [&](const auto& s) { return s.strategy == v; });
    return it == strategies.end() ? nullptr : &*it;
}

EvalReport run_eval(std::span<const TestCase> suite, std::span<const DetectionVariant> strategies,
                    Provider& provider, const EvalOptions& options, const PromptLibrary& prompts,
                    const Clock& clock) {
    if (options.runs < 1) throw Error(ErrorCode::bad_request, "runs must be at least 1");
    EvalReport report;
    report.provider = provider.model();
    report.timestamp = clock.now_iso8601();

    std::vector<DetectionVariant> ordered;
    for (DetectionVariant v : all_detection_variants()) {
        if (std::find(strategies.begin(), strategies.end(), v) != strategies.end()) ordered.push_back(v);
    }

    const int workers = provider.deterministic() ? 1 : std::max(1, options.parallelism);
    for (DetectionVariant v : ordered) {
        const DetectionStrategy st = DetectionStrategy::of(v);
        StrategyResult res;
        res.strategy = v;
        res.runs = options.runs;
        for (int run = 1; run <= options.runs; ++run) {
            std::vector<CaseRecord> records(suite.size());
            if (workers == 1) {
                for (std::size_t i = 0; i < suite.size(); ++i) {
                    records[i] = evaluate_case(suite[i], st, run, provider, prompts, options.params);
                }
            } else {
                std::atomic<std::size_t> next{0};
                std::exception_ptr failure;
                std::mutex failure_mutex;
                std::vector<std::thread> pool;
                for (int w = 0; w < workers; ++w) {
                    pool.emplace_back([&] {
                        for (std::size_t i = next++; i < suite.size(); i = next++) {
                            try {
                                records[i] = evaluate_case(suite[i], st, run, provider, prompts, options.params);
                            } catch (...) {
                                std::lock_guard lock(failure_mutex);
                                if (!failure) failure = std::current_exception();
                            }
                        }
                    });
                }
                for (auto& t : pool) t.join();
                if (failure) std::rethrow_exception(failure);
            }
            const auto correct = std::count_if(records.begin(), records.end(), [](const auto& r) { return r.correct; });
            res.run_accuracies.push_back(suite.empty() ? 0.0 : static_cast<double>(correct) / suite.size());
            for (auto& r : records) {
                res.unparseable += r.unparseable ? 1 : 0;
                res.provider_errors += r.error ? 1 : 0;
                report.records.push_back(std::move(r));
            }
        }
        double sum = 0;
        for (double a : res.run_accuracies) sum += a;
        res.mean_accuracy = sum / res.runs;
        if (res.runs > 1) {
            double sq = 0;
            for (double a : res.run_accuracies) sq += (a - res.mean_accuracy) * (a - res.mean_accuracy);
            res.stddev = std::sqrt(sq / (res.runs - 1));
        }
        report.strategies.push_back(std::move(res));
    }
    return report;
}

std::string strategy_label(DetectionVariant v) {
    switch (v) {
        case DetectionVariant::zero_shot: return "Zero-shot";
        case DetectionVariant::few_shot: return "Few-shot";
        case DetectionVariant::few_shot_cot: return "Few-shot + CoT";
        case DetectionVariant::few_shot_cot_tree: return "Few-shot + CoT + Tree";
        case DetectionVariant::few_shot_cot_draft: return "Few-shot + CoT + Draft";
        case DetectionVariant::few_shot_cot_tree_draft: return "Few-shot + CoT + Tree + Draft";
    }
    return std::string(to_string(v));
}

RenderedReport render_report(const EvalReport& report) {
    RenderedReport out;
    std::ostringstream t;
    t << std::left << std::setw(32) << "Strategy" << std::right << std::setw(6) << "Mean" << std::setw(8) << "SD"
      << std::setw(6) << "Runs" << std::setw(13) << "Unparseable" << std::setw(8) << "Errors" << "\n";
    for (const auto& s : report.strategies) {
        t << std::left << std::setw(32) << strategy_label(s.strategy) << std::right << std::setw(6)
          << fixed2(s.mean_accuracy) << std::setw(8) << fixed3(s.stddev) << std::setw(6) << s.runs << std::setw(13)
          << s.unparseable << std::setw(8) << s.provider_errors << "\n";
    }
    out.table = t.str();

    std::ostringstream c;
    c << "strategy,run,case_id,predicted,gold,correct,unparseable\n";
    for (const auto& r : report.records) {
        c << to_string(r.strategy) << ',' << r.run << ',' << r.case_id << ','
          << (r.predicted ? (*r.predicted ? "true" : "false") : "") << ',' << (r.gold ? "true" : "false") << ','
          << (r.correct ? "true" : "false") << ',' << (r.unparseable ? "true" : "false") << "\n";
    }
    out.csv = c.str();
    return out;
}

ProviderScript eval_script(std::span<const TestCase> suite, std::span<const DetectionVariant> strategies, int runs,
                           MockPolicy policy) {
    ProviderScript script;
    for (DetectionVariant v : all_detection_variants()) {
        if (std::find(strategies.begin(), strategies.end(), v) == strategies.end()) continue;
        const DetectionStrategy st = DetectionStrategy::of(v);
        for (int run = 1; run <= runs; ++run) {
            for (const auto& tc : suite) {
                if (st.includes_draft) script.steps.push_back({tc.title, "Draft for " + tc.title + "."});
                const bool needs = policy == MockPolicy::always_yes || tc.gold_label;
                const bool raw_yes = needs == (st.polarity == Polarity::yes_means_decompose);
                const std::string token = raw_yes ? "Yes" : "No";
                script.steps.push_back(
                    {tc.title, st.chain_of_thought ? "Reasoning: scripted verdict.\nAnswer: " + token : token});
            }
        }
    }
    return script;
}

}  // namespace plancurate
