#include "plancurate/curation_engine.hpp"
#include "plancurate/eval_harness.hpp"
#include "plancurate/output_parsing.hpp"
#include "plancurate/walkthrough.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace plancurate;

namespace {

std::string run_walkthrough_json(const std::string& script_path) {
    MockProvider provider(ProviderScript::load(script_path));
    CurationEngine engine(provider, PromptLibrary::builtin(), {}, Clock(true));
    return run_walkthrough(engine).to_json().dump(2);
}

std::vector<std::string> verify_walkthrough_json(const std::string& session_json) {
    return verify_walkthrough(Session::from_json(Json::parse(session_json)));
}

std::string load_session_json(const std::string& path) { return Session::load(path).to_json().dump(2); }

std::string replay_json(const std::string& session_json) {
    const Session s = Session::from_json(Json::parse(session_json));
    return Session::replay(s.events()).to_json().dump(2);
}

std::pair<std::string, std::string> detection_prompt(const std::string& variant, const std::string& title,
                                                     const std::string& description, std::optional<int> level,
                                                     std::optional<std::string> draft) {
    const auto st = DetectionStrategy::of(parse_detection_variant(variant, ErrorCode::bad_request));
    const auto p = PromptLibrary::builtin().detection_prompt(
        st, title, description, level, draft ? std::optional<std::string_view>(*draft) : std::nullopt);
    return {p.system, p.user};
}

bool needs_decomposition(const std::string& variant, const std::string& text) {
    const auto st = DetectionStrategy::of(parse_detection_variant(variant, ErrorCode::bad_request));
    return parse_yes_no(text, st.polarity).needs_decomposition;
}

std::string mock_eval_json(const std::string& suite_path, std::vector<std::string> strategy_names, int runs,
                           const std::string& policy) {
    const auto suite = load_suite(suite_path);
    std::vector<DetectionVariant> strategies;
    for (const auto& n : strategy_names) strategies.push_back(parse_detection_variant(n));
    if (strategies.empty()) strategies = all_detection_variants();
    MockProvider provider(eval_script(suite, strategies, runs, parse_mock_policy(policy)));
    EvalOptions opts;
    opts.runs = runs;
    const EvalReport report = run_eval(suite, strategies, provider, opts, PromptLibrary::builtin(), Clock(true));
    Json out = Json::array();
    for (const auto& r : report.strategies) {
        out.push_back({{"strategy", to_string(r.strategy)},
                       {"label", strategy_label(r.strategy)},
                       {"mean_accuracy", r.mean_accuracy},
                       {"stddev", r.stddev},
                       {"runs", r.runs}});
    }
    return out.dump();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Native core of plancurate";
    m.attr("__version__") = "0.1.0";

    py::exception<Error>(m, "PlanCurateError");
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            const py::object type = py::module_::import("plancurate._core").attr("PlanCurateError");
            py::object exc = type(e.what());
            exc.attr("code") = std::string(to_string(e.code()));
            PyErr_SetObject(type.ptr(), exc.ptr());
        }
    });

    m.def("run_walkthrough", &run_walkthrough_json, py::arg("script_path"));
    m.def("verify_walkthrough", &verify_walkthrough_json, py::arg("session_json"));
    m.def("load_session", &load_session_json, py::arg("path"));
    m.def("replay", &replay_json, py::arg("session_json"));
    m.def("detection_prompt", &detection_prompt, py::arg("variant"), py::arg("title"), py::arg("description"),
          py::arg("level") = py::none(), py::arg("draft") = py::none());
    m.def("needs_decomposition", &needs_decomposition, py::arg("variant"), py::arg("text"));
    m.def("mock_eval", &mock_eval_json, py::arg("suite_path"), py::arg("strategies"), py::arg("runs"),
          py::arg("policy"));
    m.def("detection_variants", [] {
        std::vector<std::string> out;
        for (DetectionVariant v : all_detection_variants()) out.emplace_back(to_string(v));
        return out;
    });
}
