#include "plancurate/eval_harness.hpp"
#include "plancurate/service_api.hpp"
#include "plancurate/walkthrough.hpp"

#include <CLI11.hpp>
#include <httplib.h>

#include <csignal>
#include <fstream>
#include <iostream>
#include <pthread.h>
#include <thread>
#include <unistd.h>

using namespace plancurate;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitDomain = 1;
constexpr int kExitInput = 2;

bool g_color = true;

int exit_code_for(ErrorCode code) {
    switch (code) {
        case ErrorCode::io_error:
        case ErrorCode::corrupt_session:
        case ErrorCode::schema_mismatch:
        case ErrorCode::bad_config:
        case ErrorCode::malformed_suite:
        case ErrorCode::malformed_template:
            return kExitInput;
        default:
            return kExitDomain;
    }
}

void print_error(const std::string& code, const std::string& message) {
    const bool color = g_color && ::isatty(STDERR_FILENO) != 0;
    std::cerr << (color ? "\033[31merror\033[0m" : "error") << " [" << code << "]: " << message << "\n";
}

std::vector<DetectionVariant> parse_strategies(const std::string& list) {
    if (list.empty() || list == "all") return all_detection_variants();
    std::vector<DetectionVariant> out;
    std::size_t start = 0;
    while (start <= list.size()) {
        const auto comma = list.find(',', start);
        const std::string item = trim(list.substr(start, comma == std::string::npos ? list.npos : comma - start));
        if (!item.empty()) out.push_back(parse_detection_variant(item, ErrorCode::bad_config));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

std::unique_ptr<Provider> live_provider(const std::string& config_path) {
    LiveProviderConfig cfg = config_path.empty() ? LiveProviderConfig{} : LiveProviderConfig::load(config_path);
    return std::make_unique<LiveProvider>(LiveProviderConfig::from_env(cfg));
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out || !(out << text)) throw Error(ErrorCode::io_error, "cannot write " + path);
}

struct ServeOptions {
    std::string addr = "127.0.0.1:8080";
    std::string sessions_dir = "sessions";
    std::string mode = "full_curation";
    std::string strategy = std::string(to_string(PromptLibrary::kProductionVariant));
    std::string provider_config;
    std::string mock_script;
    bool test_mode = false;
};

int cmd_serve(const ServeOptions& o) {
    ServiceConfig cfg;
    cfg.sessions_dir = o.sessions_dir;
    cfg.default_mode = parse_ablation_mode(o.mode, ErrorCode::bad_config);
    cfg.strategy = parse_detection_variant(o.strategy, ErrorCode::bad_config);
    cfg.deterministic_ids = o.test_mode;

    const auto colon = o.addr.rfind(':');
    if (colon == std::string::npos) throw Error(ErrorCode::bad_config, "--addr must be host:port");
    const std::string host = o.addr.substr(0, colon);
    int port = 0;
    try {
        port = std::stoi(o.addr.substr(colon + 1));
    } catch (const std::exception&) {
        throw Error(ErrorCode::bad_config, "--addr must be host:port");
    }

    std::unique_ptr<Provider> provider;
    if (!o.mock_script.empty()) {
        provider = std::make_unique<MockProvider>(ProviderScript::load(o.mock_script));
    } else {
        provider = live_provider(o.provider_config);
    }

    Service service(*provider, cfg, PromptLibrary::builtin(), Clock(o.test_mode));
    httplib::Server server;
    service.mount(server);
    if (port == 0) {
        port = server.bind_to_any_port(host);
        if (port < 0) throw Error(ErrorCode::addr_in_use, "cannot bind " + host);
    } else if (!server.bind_to_port(host, port)) {
        throw Error(ErrorCode::addr_in_use, "address in use or unavailable: " + o.addr);
    }

    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);
    std::thread waiter([&] {
        int sig = 0;
        sigwait(&signals, &sig);
        server.stop();
    });

    std::cout << "listening on http://" << host << ":" << port << std::endl;
    server.listen_after_bind();
    if (waiter.joinable()) {
        pthread_kill(waiter.native_handle(), SIGTERM);
        waiter.join();
    }
    std::cout << "stopped" << std::endl;
    return kExitOk;
}

int cmd_walkthrough(const std::string& script, const std::string& out, bool real_clock) {
    MockProvider provider(ProviderScript::load(script));
    CurationEngine engine(provider, PromptLibrary::builtin(), {}, Clock(!real_clock));
    const Session s = run_walkthrough(engine);
    s.save(out);
    const auto problems = verify_walkthrough(s);
    std::cout << s.tree().outline() << "\n";
    if (!problems.empty()) {
        for (const auto& p : problems) print_error("walkthrough", p);
        return kExitDomain;
    }
    std::cout << "session written to " << out << " (" << s.events().size() << " events)\n";
    return kExitOk;
}

struct EvalOptionsCli {
    std::string suite = "data/detection_suite.txt";
    std::string strategies = "all";
    int runs = 5;
    std::string provider = "mock";
    std::string mock_policy = "oracle";
    std::string script;
    std::string provider_config;
    std::string report;
    int parallelism = 4;
};

int cmd_eval(const EvalOptionsCli& o) {
    const auto suite = load_suite(o.suite);
    const auto strategies = parse_strategies(o.strategies);
    std::unique_ptr<Provider> provider;
    if (o.provider == "mock") {
        provider = std::make_unique<MockProvider>(
            o.script.empty() ? eval_script(suite, strategies, o.runs, parse_mock_policy(o.mock_policy))
                             : ProviderScript::load(o.script));
    } else {
        provider = live_provider(o.provider_config);
    }
    EvalOptions opts;
    opts.runs = o.runs;
    opts.parallelism = o.parallelism;
    const EvalReport report = run_eval(suite, strategies, *provider, opts);
    const RenderedReport rendered = render_report(report);
    std::cout << "provider: " << report.provider << "  cases: " << suite.size() << "  runs: " << o.runs << "\n"
              << rendered.table;
    if (!o.report.empty()) {
        write_file(o.report, rendered.csv);
        std::cout << "report written to " << o.report << "\n";
    }
    return kExitOk;
}

int cmd_show(const std::string& file, bool outline, bool context, bool events) {
    const Session s = Session::load(file);
    if (outline) std::cout << s.tree().outline() << "\n";
    if (context) {
        for (const auto& e : s.context().entries()) std::cout << e.key << ": " << to_string(e.provenance) << "\n";
    }
    if (events) {
        for (const auto& e : s.events()) std::cout << e.seq << " " << to_string(e.kind) << " " << e.at << "\n";
    }
    if (!outline && !context && !events) {
        std::cout << "id: " << s.id() << "\ngoal: " << s.goal() << "\nmode: " << to_string(s.mode())
                  << "\nnodes: " << s.tree().size() << "\ncontext entries: " << s.context().entries().size()
                  << "\nevents: " << s.events().size() << "\n";
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"plancurate: hierarchical planning with curated context"};
    app.require_subcommand(1);
    bool no_color = false;
    app.add_flag("--no-color", no_color, "Disable colored output");

    ServeOptions serve;
    auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP service");
    serve_cmd->add_option("--addr", serve.addr, "Listen address host:port")->capture_default_str();
    serve_cmd->add_option("--sessions-dir", serve.sessions_dir, "Directory for session files")->capture_default_str();
    serve_cmd->add_option("--mode", serve.mode, "Default ablation mode")->capture_default_str();
    serve_cmd->add_option("--strategy", serve.strategy, "Detection strategy")->capture_default_str();
    serve_cmd->add_option("--provider-config", serve.provider_config, "Provider config JSON (no credentials)");
    serve_cmd->add_option("--mock-script", serve.mock_script, "Serve against a scripted mock provider");
    serve_cmd->add_flag("--test-mode", serve.test_mode, "Frozen clock and sequential session ids");

    std::string wt_script = "data/walkthrough_script.json";
    std::string wt_out = "walkthrough_session.json";
    bool wt_real_clock = false;
    auto* wt_cmd = app.add_subcommand("walkthrough", "Replay the PhD-application scenario against the mock");
    wt_cmd->add_option("--script", wt_script, "Mock provider script")->capture_default_str();
    wt_cmd->add_option("--out", wt_out, "Session file to write")->capture_default_str();
    wt_cmd->add_flag("--real-clock", wt_real_clock, "Record wall-clock timestamps");

    EvalOptionsCli ev;
    auto* eval_cmd = app.add_subcommand("eval", "Run the subtask-detection evaluation");
    eval_cmd->add_option("--suite", ev.suite, "Suite file")->capture_default_str();
    eval_cmd->add_option("--strategies", ev.strategies, "Comma-separated strategies or 'all'")->capture_default_str();
    eval_cmd->add_option("--runs", ev.runs, "Runs per strategy")->check(CLI::PositiveNumber)->capture_default_str();
    eval_cmd->add_option("--provider", ev.provider, "mock or live")
        ->check(CLI::IsMember({"mock", "live"}))
        ->capture_default_str();
    eval_cmd->add_option("--mock-policy", ev.mock_policy, "oracle or always-yes")
        ->check(CLI::IsMember({"oracle", "always-yes"}))
        ->capture_default_str();
    eval_cmd->add_option("--script", ev.script, "Mock script instead of a generated policy script");
    eval_cmd->add_option("--provider-config", ev.provider_config, "Provider config JSON (no credentials)");
    eval_cmd->add_option("--report", ev.report, "CSV report path");
    eval_cmd->add_option("--parallelism", ev.parallelism, "Concurrent live requests")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();

    auto* session_cmd = app.add_subcommand("session", "Inspect session files");
    session_cmd->require_subcommand(1);
    std::string show_file;
    bool show_outline = false, show_context = false, show_events = false;
    auto* show_cmd = session_cmd->add_subcommand("show", "Print a session file");
    show_cmd->add_option("file", show_file, "Session file")->required();
    show_cmd->add_flag("--outline", show_outline, "Indented task tree");
    show_cmd->add_flag("--context", show_context, "Context keys with provenance");
    show_cmd->add_flag("--events", show_events, "Event log");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitInput;
    }
    g_color = !no_color;

    try {
        if (serve_cmd->parsed()) return cmd_serve(serve);
        if (wt_cmd->parsed()) return cmd_walkthrough(wt_script, wt_out, wt_real_clock);
        if (eval_cmd->parsed()) return cmd_eval(ev);
        if (show_cmd->parsed()) return cmd_show(show_file, show_outline, show_context, show_events);
    } catch (const Error& e) {
        print_error(std::string(to_string(e.code())), e.what());
        if (e.code() == ErrorCode::bad_config) std::cerr << app.help();
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        print_error("internal", e.what());
        return kExitDomain;
    }
    return kExitOk;
}
