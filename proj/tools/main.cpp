// Command-line front end for the guardrail runtime. Everything goes through
// the C API in stepguard.h; this file owns only argument handling, config
// assembly, and printing.

#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "stepguard.h"

namespace {

using OrderedJson = nlohmann::ordered_json;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CLI::ValidationError("cannot read file: " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

// Backend spec: "mock", "mock:script.json", or "remote:http://host/path".
OrderedJson backend_json(const std::string& spec) {
    OrderedJson out;
    if (spec == "mock" || spec.empty()) {
        out["type"] = "mock";
        return out;
    }
    if (spec.rfind("mock:", 0) == 0) {
        out["type"] = "mock";
        out["script_path"] = spec.substr(5);
        return out;
    }
    if (spec.rfind("remote:", 0) == 0) {
        out["type"] = "remote";
        out["endpoint"] = spec.substr(7);
        return out;
    }
    throw CLI::ValidationError("backend must be mock, mock:<script>, or remote:<url>: " + spec);
}

struct CommonOptions {
    std::string config_path;
    std::string db_path;
    std::string backend_spec;
    std::string strategy;
};

void add_common(CLI::App* cmd, CommonOptions& opts, bool with_strategy) {
    cmd->add_option("--config", opts.config_path, "runtime config file (JSON)");
    cmd->add_option("--db", opts.db_path, "policy database path");
    cmd->add_option("--backend", opts.backend_spec,
                    "backend: mock | mock:<script.json> | remote:<url>");
    if (with_strategy) {
        cmd->add_option("--strategy", opts.strategy,
                        "none | full_trajectory | current_step | second_order_markov");
    }
}

std::string build_config(const CommonOptions& opts) {
    OrderedJson cfg = OrderedJson::object();
    if (!opts.config_path.empty()) {
        cfg = OrderedJson::parse(read_file(opts.config_path));
    }
    if (!opts.db_path.empty()) cfg["database_path"] = opts.db_path;
    if (!opts.backend_spec.empty()) cfg["backend"] = backend_json(opts.backend_spec);
    if (!opts.strategy.empty()) cfg["strategy_default"] = opts.strategy;
    return cfg.dump();
}

struct RuntimeHandle {
    sg_runtime* rt = nullptr;
    explicit RuntimeHandle(const std::string& config_json) {
        rt = sg_runtime_open(config_json.c_str());
        if (rt == nullptr) {
            throw std::runtime_error(std::string("cannot open runtime: ") + sg_last_error());
        }
    }
    ~RuntimeHandle() { sg_runtime_close(rt); }
};

struct OwnedString {
    char* value = nullptr;
    ~OwnedString() { sg_string_free(value); }
};

int check(sg_status status) {
    if (status == SG_OK) return 0;
    std::cerr << "error: " << sg_last_error() << "\n";
    return 1;
}

sg_runtime* g_serving = nullptr;

void handle_signal(int) {
    if (g_serving != nullptr) sg_serve_stop(g_serving);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Guardrail sidecar for step-wise web-agent supervision"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(sg_version()));

    // serve
    auto* serve = app.add_subcommand("serve", "run the HTTP gateway");
    CommonOptions serve_opts;
    std::string listen;
    add_common(serve, serve_opts, true);
    serve->add_option("--listen", listen, "host:port (overrides config)");

    // ingest
    auto* ingest = app.add_subcommand("ingest", "extract and structure policies from a document");
    CommonOptions ingest_opts;
    std::string ingest_path, ingest_kind = "plain_text";
    ingest->add_option("path", ingest_path, "source document")->required();
    ingest->add_option("--kind", ingest_kind, "plain_text | markdown | pdf_extracted_text");
    add_common(ingest, ingest_opts, false);

    // query
    auto* query = app.add_subcommand("query", "list policies in the database");
    CommonOptions query_opts;
    std::string query_category, query_scope;
    query->add_option("--category", query_category,
                      "consent | boundary | execution | injection | other");
    query->add_option("--scope-hint", query_scope, "case-insensitive scope substring");
    add_common(query, query_opts, false);

    // replay
    auto* replay = app.add_subcommand("replay", "replay a trajectory fixture suite");
    CommonOptions replay_opts;
    std::string replay_fixtures, replay_out;
    replay->add_option("--fixtures", replay_fixtures, "fixture suite (JSON)")->required();
    replay->add_option("--out", replay_out, "output directory for reports and logs");
    add_common(replay, replay_opts, true);

    // compare
    auto* compare = app.add_subcommand("compare", "replay under several strategies");
    CommonOptions compare_opts;
    std::string compare_fixtures, compare_out, compare_strategies = "all";
    compare->add_option("--fixtures", compare_fixtures, "fixture suite (JSON)")->required();
    compare->add_option("--strategies", compare_strategies, "all or comma-separated names");
    compare->add_option("--out", compare_out, "output directory");
    add_common(compare, compare_opts, false);

    // rounds
    auto* rounds = app.add_subcommand("rounds", "replay the suite across adaptation rounds");
    CommonOptions rounds_opts;
    std::string rounds_fixtures, rounds_out;
    int rounds_n = 3;
    rounds->add_option("--fixtures", rounds_fixtures, "fixture suite (JSON)")->required();
    rounds->add_option("--n", rounds_n, "number of rounds")->check(CLI::PositiveNumber);
    rounds->add_option("--out", rounds_out, "output directory");
    add_common(rounds, rounds_opts, true);

    // report
    auto* report = app.add_subcommand("report", "format a metrics report");
    std::string report_input, report_format = "table";
    report->add_option("--input", report_input, "report.json or records.json")->required();
    report->add_option("--format", report_format, "table | machine");

    CLI11_PARSE(app, argc, argv);

    try {
        if (serve->parsed()) {
            RuntimeHandle handle(build_config(serve_opts));
            g_serving = handle.rt;
            std::signal(SIGINT, handle_signal);
            std::signal(SIGTERM, handle_signal);
            std::cerr << "serving" << (listen.empty() ? "" : " on " + listen) << "\n";
            return check(sg_serve(handle.rt, listen.empty() ? nullptr : listen.c_str()));
        }
        if (ingest->parsed()) {
            RuntimeHandle handle(build_config(ingest_opts));
            OwnedString summary;
            const auto status = sg_ingest(handle.rt, ingest_path.c_str(), nullptr, nullptr,
                                          ingest_kind.c_str(), &summary.value);
            if (status == SG_OK) std::cout << summary.value << "\n";
            return check(status);
        }
        if (query->parsed()) {
            RuntimeHandle handle(build_config(query_opts));
            OwnedString out;
            const auto status = sg_query_policies(
                handle.rt, query_category.empty() ? nullptr : query_category.c_str(),
                query_scope.empty() ? nullptr : query_scope.c_str(), &out.value);
            if (status == SG_OK) std::cout << out.value << "\n";
            return check(status);
        }
        if (replay->parsed()) {
            RuntimeHandle handle(build_config(replay_opts));
            OwnedString summary;
            const auto status = sg_replay(
                handle.rt, replay_fixtures.c_str(),
                replay_opts.strategy.empty() ? nullptr : replay_opts.strategy.c_str(),
                replay_out.empty() ? nullptr : replay_out.c_str(), &summary.value);
            if (status == SG_OK) std::cout << summary.value << "\n";
            return check(status);
        }
        if (compare->parsed()) {
            RuntimeHandle handle(build_config(compare_opts));
            OwnedString summary;
            const auto status = sg_compare_strategies(
                handle.rt, compare_fixtures.c_str(), compare_strategies.c_str(),
                compare_out.empty() ? nullptr : compare_out.c_str(), &summary.value);
            if (status == SG_OK) std::cout << summary.value << "\n";
            return check(status);
        }
        if (rounds->parsed()) {
            RuntimeHandle handle(build_config(rounds_opts));
            OwnedString summary;
            const auto status = sg_replay_rounds(
                handle.rt, rounds_fixtures.c_str(),
                rounds_opts.strategy.empty() ? nullptr : rounds_opts.strategy.c_str(), rounds_n,
                rounds_out.empty() ? nullptr : rounds_out.c_str(), &summary.value);
            if (status == SG_OK) std::cout << summary.value << "\n";
            return check(status);
        }
        if (report->parsed()) {
            const std::string input = read_file(report_input);
            const auto parsed = OrderedJson::parse(input);
            OwnedString report_json;
            std::string report_text = input;
            if (parsed.is_array()) { // records: compute the report first
                const auto status = sg_metrics_compute(input.c_str(), &report_json.value);
                if (status != SG_OK) return check(status);
                report_text = report_json.value;
            }
            OwnedString out;
            const auto status =
                sg_metrics_format(report_text.c_str(), report_format.c_str(), &out.value);
            if (status == SG_OK) std::cout << out.value;
            return check(status);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
