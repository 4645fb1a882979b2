#include "stepguard.h"

#include <condition_variable>
#include <cstdlib>
#include <cstring>
#include <mutex>
#include <string>

#include "error.hpp"
#include "gateway.hpp"
#include "harness.hpp"
#include "metrics.hpp"
#include "runtime.hpp"
#include "similarity.hpp"

using namespace stepguard;

struct sg_runtime {
    RuntimeConfig config;
    std::unique_ptr<Runtime> runtime;
    std::unique_ptr<Gateway> gateway;
    std::mutex serve_mu;
    std::condition_variable serve_cv;
    bool serving = false;
};

namespace {

thread_local std::string g_last_error;

void set_error(const std::string& message) { g_last_error = message; }

sg_status status_from(ErrorCode code) {
    switch (code) {
        case ErrorCode::invalid_argument: return SG_ERR_INVALID_ARGUMENT;
        case ErrorCode::not_found: return SG_ERR_NOT_FOUND;
        case ErrorCode::duplicate: return SG_ERR_DUPLICATE;
        case ErrorCode::parse: return SG_ERR_PARSE;
        case ErrorCode::schema_version: return SG_ERR_SCHEMA_VERSION;
        case ErrorCode::backend: return SG_ERR_BACKEND;
        case ErrorCode::bad_state: return SG_ERR_BAD_STATE;
        case ErrorCode::io: return SG_ERR_IO;
        case ErrorCode::internal: return SG_ERR_INTERNAL;
    }
    return SG_ERR_INTERNAL;
}

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (out != nullptr) std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

template <typename Fn>
sg_status guarded(Fn&& fn) {
    try {
        fn();
        return SG_OK;
    } catch (const Error& e) {
        set_error(e.what());
        return status_from(e.code());
    } catch (const std::exception& e) {
        set_error(e.what());
        return SG_ERR_INTERNAL;
    }
}

sg_status require(bool condition, const char* message) {
    if (condition) return SG_OK;
    set_error(message);
    return SG_ERR_INVALID_ARGUMENT;
}

Strategy strategy_or_default(const sg_runtime* rt, const char* strategy) {
    return strategy != nullptr && *strategy != '\0' ? strategy_from_string(strategy)
                                                    : rt->config.strategy_default;
}

std::vector<Strategy> parse_strategies(const std::string& csv) {
    if (csv == "all" || csv.empty()) {
        return {Strategy::none, Strategy::full_trajectory, Strategy::current_step,
                Strategy::second_order_markov};
    }
    std::vector<Strategy> out;
    std::size_t begin = 0;
    while (begin <= csv.size()) {
        const auto comma = csv.find(',', begin);
        const std::string token =
            csv.substr(begin, comma == std::string::npos ? std::string::npos : comma - begin);
        if (!token.empty()) out.push_back(strategy_from_string(token));
        if (comma == std::string::npos) break;
        begin = comma + 1;
    }
    if (out.empty()) throw Error(ErrorCode::invalid_argument, "no strategies given");
    return out;
}

} // namespace

extern "C" {

const char* sg_version(void) { return "0.1.0"; }

const char* sg_last_error(void) { return g_last_error.c_str(); }

void sg_string_free(char* s) { std::free(s); }

sg_runtime* sg_runtime_open(const char* config_json) {
    try {
        auto handle = std::make_unique<sg_runtime>();
        if (config_json != nullptr && *config_json != '\0') {
            Json doc;
            try {
                doc = Json::parse(config_json);
            } catch (const nlohmann::json::parse_error& e) {
                throw Error(ErrorCode::parse, std::string("config parse error: ") + e.what());
            }
            handle->config = RuntimeConfig::from_json(doc);
        }
        handle->runtime = std::make_unique<Runtime>(handle->config);
        return handle.release();
    } catch (const Error& e) {
        set_error(e.what());
        return nullptr;
    } catch (const std::exception& e) {
        set_error(e.what());
        return nullptr;
    }
}

void sg_runtime_close(sg_runtime* rt) {
    if (rt == nullptr) return;
    sg_serve_stop(rt);
    delete rt;
}

double sg_similarity(const char* a, const char* b) {
    return sim::gestalt_ratio(std::string_view(a ? a : ""), std::string_view(b ? b : ""));
}

sg_status sg_ingest(sg_runtime* rt, const char* path, const char* content, const char* doc_id,
                    const char* kind, char** summary_json_out) {
    if (auto bad = require(rt != nullptr && summary_json_out != nullptr,
                           "runtime and summary_json_out are required"))
        return bad;
    if (auto bad = require((path != nullptr) != (content != nullptr),
                           "provide exactly one of path or content"))
        return bad;
    return guarded([&] {
        const SourceKind source_kind =
            kind == nullptr ? SourceKind::plain_text : source_kind_from_string(kind);
        SourceDocument doc;
        if (path != nullptr) {
            doc = extract_text(path, source_kind);
        } else {
            doc = make_source_document(doc_id != nullptr ? doc_id : "inline", source_kind, content,
                                       "inline");
        }
        const IngestResult result = rt->runtime->ingest(doc);
        Json summary;
        summary["doc_id"] = result.doc_id;
        summary["drafts_extracted"] = result.drafts_extracted;
        summary["drafts_after_dedup"] = result.drafts_after_dedup;
        summary["ingested"] = result.policy_ids.size();
        summary["policy_ids"] = result.policy_ids;
        *summary_json_out = dup_string(summary.dump(2));
    });
}

sg_status sg_query_policies(sg_runtime* rt, const char* category, const char* scope_hint,
                            char** policies_json_out) {
    if (auto bad = require(rt != nullptr && policies_json_out != nullptr,
                           "runtime and policies_json_out are required"))
        return bad;
    return guarded([&] {
        std::optional<Category> cat;
        if (category != nullptr && *category != '\0') cat = category_from_string(category);
        std::optional<std::string> hint;
        if (scope_hint != nullptr && *scope_hint != '\0') hint = scope_hint;
        Json items = Json::array();
        for (const Policy& p : rt->runtime->query_policies(cat, hint)) {
            items.push_back(policy_to_json(p));
        }
        Json out;
        out["count"] = items.size();
        out["policies"] = std::move(items);
        *policies_json_out = dup_string(out.dump(2));
    });
}

sg_status sg_session_create(sg_runtime* rt, const char* task_goal, const char* policy_scope,
                            const char* strategy, char** session_id_out) {
    if (auto bad = require(rt != nullptr && task_goal != nullptr && session_id_out != nullptr,
                           "runtime, task_goal, and session_id_out are required"))
        return bad;
    return guarded([&] {
        std::optional<Category> scope;
        if (policy_scope != nullptr && *policy_scope != '\0') {
            scope = category_from_string(policy_scope);
        }
        const Strategy chosen = strategy != nullptr && *strategy != '\0'
                                    ? strategy_from_string(strategy)
                                    : rt->config.strategy_default;
        *session_id_out = dup_string(rt->runtime->create_session(task_goal, scope, chosen));
    });
}

sg_status sg_session_step(sg_runtime* rt, const char* session_id, const char* thought,
                          const char* proposed_action, char** verdict_json_out) {
    if (auto bad = require(rt != nullptr && session_id != nullptr && thought != nullptr &&
                               proposed_action != nullptr && verdict_json_out != nullptr,
                           "runtime, session_id, thought, proposed_action, and "
                           "verdict_json_out are required"))
        return bad;
    return guarded([&] {
        const auto verdict = rt->runtime->submit_step(session_id, thought, proposed_action);
        Json out;
        out["session_id"] = session_id;
        if (verdict) {
            out["evaluated"] = true;
            out.update(verdict_to_json(*verdict));
        } else {
            out["evaluated"] = false;
        }
        *verdict_json_out = dup_string(out.dump(2));
    });
}

sg_status sg_session_close(sg_runtime* rt, const char* session_id, const char* ground_truth_json,
                           char** outcomes_json_out) {
    if (auto bad = require(rt != nullptr && session_id != nullptr && outcomes_json_out != nullptr,
                           "runtime, session_id, and outcomes_json_out are required"))
        return bad;
    return guarded([&] {
        std::optional<GroundTruth> gt;
        if (ground_truth_json != nullptr && *ground_truth_json != '\0') {
            Json doc;
            try {
                doc = Json::parse(ground_truth_json);
            } catch (const nlohmann::json::parse_error& e) {
                throw Error(ErrorCode::parse, std::string("ground truth parse error: ") + e.what());
            }
            gt = ground_truth_from_json(doc);
        }
        const SessionCloseResult result = rt->runtime->close_session(session_id, gt);
        Json outcomes = Json::array();
        for (const UpdateOutcome& o : result.outcomes) outcomes.push_back(outcome_to_json(o));
        Json out;
        out["session_id"] = result.session_id;
        out["status"] = "closed";
        out["flushed"] = result.outcomes.size();
        out["outcomes"] = std::move(outcomes);
        *outcomes_json_out = dup_string(out.dump(2));
    });
}

sg_status sg_replay(sg_runtime* rt, const char* fixtures_path, const char* strategy,
                    const char* out_dir, char** summary_json_out) {
    if (auto bad = require(rt != nullptr && fixtures_path != nullptr && summary_json_out != nullptr,
                           "runtime, fixtures_path, and summary_json_out are required"))
        return bad;
    return guarded([&] {
        const Json summary = run_replay(rt->config, fixtures_path, strategy_or_default(rt, strategy),
                                        out_dir != nullptr ? out_dir : "");
        rt->runtime->reload_database();
        *summary_json_out = dup_string(summary.dump(2));
    });
}

sg_status sg_replay_rounds(sg_runtime* rt, const char* fixtures_path, const char* strategy,
                           int rounds, const char* out_dir, char** summary_json_out) {
    if (auto bad = require(rt != nullptr && fixtures_path != nullptr && summary_json_out != nullptr,
                           "runtime, fixtures_path, and summary_json_out are required"))
        return bad;
    return guarded([&] {
        const Json summary = run_rounds(rt->config, fixtures_path, strategy_or_default(rt, strategy),
                                        rounds, out_dir != nullptr ? out_dir : "");
        rt->runtime->reload_database();
        *summary_json_out = dup_string(summary.dump(2));
    });
}

sg_status sg_compare_strategies(sg_runtime* rt, const char* fixtures_path,
                                const char* strategies_csv, const char* out_dir,
                                char** summary_json_out) {
    if (auto bad = require(rt != nullptr && fixtures_path != nullptr && summary_json_out != nullptr,
                           "runtime, fixtures_path, and summary_json_out are required"))
        return bad;
    return guarded([&] {
        const auto strategies =
            parse_strategies(strategies_csv != nullptr ? strategies_csv : "all");
        const Json summary = run_compare(rt->config, fixtures_path, strategies,
                                         out_dir != nullptr ? out_dir : "");
        *summary_json_out = dup_string(summary.dump(2));
    });
}

sg_status sg_metrics_compute(const char* records_json, char** report_json_out) {
    if (auto bad = require(records_json != nullptr && report_json_out != nullptr,
                           "records_json and report_json_out are required"))
        return bad;
    return guarded([&] {
        Json doc;
        try {
            doc = Json::parse(records_json);
        } catch (const nlohmann::json::parse_error& e) {
            throw Error(ErrorCode::parse, std::string("records parse error: ") + e.what());
        }
        if (!doc.is_array()) {
            throw Error(ErrorCode::invalid_argument, "records_json must be a JSON array");
        }
        std::vector<TaskRecord> records;
        for (const Json& item : doc) records.push_back(task_record_from_json(item));
        const MetricsReport report = compute_metrics(records);
        *report_json_out = dup_string(report_to_json(report).dump(2));
    });
}

sg_status sg_metrics_format(const char* report_json, const char* layout, char** text_out) {
    if (auto bad = require(report_json != nullptr && text_out != nullptr,
                           "report_json and text_out are required"))
        return bad;
    return guarded([&] {
        Json doc;
        try {
            doc = Json::parse(report_json);
        } catch (const nlohmann::json::parse_error& e) {
            throw Error(ErrorCode::parse, std::string("report parse error: ") + e.what());
        }
        const ReportLayout chosen =
            layout != nullptr && *layout != '\0' ? report_layout_from_string(layout)
                                                 : ReportLayout::table;
        *text_out = dup_string(format_report(report_from_json(doc), chosen));
    });
}

sg_status sg_serve(sg_runtime* rt, const char* listen_address) {
    if (auto bad = require(rt != nullptr, "runtime is required")) return bad;
    return guarded([&] {
        {
            std::lock_guard lock(rt->serve_mu);
            if (rt->serving) throw Error(ErrorCode::bad_state, "gateway already serving");
            rt->gateway = std::make_unique<Gateway>(*rt->runtime);
            const std::string addr = listen_address != nullptr && *listen_address != '\0'
                                         ? listen_address
                                         : rt->config.listen_address;
            const auto colon = addr.rfind(':');
            if (colon == std::string::npos) {
                throw Error(ErrorCode::invalid_argument, "listen address must be host:port");
            }
            rt->gateway->start(addr.substr(0, colon), std::stoi(addr.substr(colon + 1)));
            rt->serving = true;
        }
        std::unique_lock lock(rt->serve_mu);
        rt->serve_cv.wait(lock, [&] { return !rt->serving; });
        rt->gateway.reset();
    });
}

sg_status sg_serve_stop(sg_runtime* rt) {
    if (auto bad = require(rt != nullptr, "runtime is required")) return bad;
    return guarded([&] {
        std::lock_guard lock(rt->serve_mu);
        if (!rt->serving) return;
        rt->gateway->stop();
        rt->serving = false;
        rt->serve_cv.notify_all();
    });
}

} // extern "C"
