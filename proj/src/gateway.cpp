#include "gateway.hpp"

#include "httplib.h"

#include "error.hpp"

namespace stepguard {

namespace {

int status_for(ErrorCode code) {
    switch (code) {
        case ErrorCode::invalid_argument:
        case ErrorCode::parse:
        case ErrorCode::schema_version: return 400;
        case ErrorCode::not_found: return 404;
        case ErrorCode::duplicate:
        case ErrorCode::bad_state: return 409;
        case ErrorCode::backend: return 502;
        case ErrorCode::io:
        case ErrorCode::internal: return 500;
    }
    return 500;
}

void reply_json(httplib::Response& res, int status, const Json& body) {
    res.status = status;
    res.set_content(body.dump(2) + "\n", "application/json");
}

void reply_error(httplib::Response& res, int status, const std::string& reason) {
    reply_json(res, status, Json{{"error", reason}});
}

Json parse_body(const httplib::Request& req) {
    if (req.body.empty()) return Json::object();
    try {
        Json doc = Json::parse(req.body);
        if (!doc.is_object()) {
            throw Error(ErrorCode::parse, "request body must be a JSON object");
        }
        return doc;
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::parse, std::string("malformed request body: ") + e.what());
    }
}

template <typename Fn>
void handle(httplib::Response& res, Fn&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        reply_error(res, status_for(e.code()), e.what());
    } catch (const std::exception& e) {
        reply_error(res, 500, e.what());
    }
}

} // namespace

class Gateway::Impl {
public:
    httplib::Server server;
};

Gateway::Gateway(Runtime& runtime) : runtime_(runtime), impl_(std::make_unique<Impl>()) {
    auto& server = impl_->server;

    server.Post("/sessions", [this](const httplib::Request& req, httplib::Response& res) {
        handle(res, [&] {
            const Json body = parse_body(req);
            if (!body.contains("task_goal") || !body.at("task_goal").is_string()) {
                throw Error(ErrorCode::invalid_argument, "task_goal is required");
            }
            std::optional<Category> scope;
            if (body.contains("policy_scope") && !body.at("policy_scope").is_null()) {
                const auto name = body.at("policy_scope").get<std::string>();
                if (!name.empty()) scope = category_from_string(name);
            }
            Strategy strategy = runtime_.config().strategy_default;
            if (body.contains("strategy") && !body.at("strategy").is_null()) {
                strategy = strategy_from_string(body.at("strategy").get<std::string>());
            }
            std::string task_id;
            if (body.contains("task_id")) task_id = body.at("task_id").get<std::string>();
            const std::string id = runtime_.create_session(
                body.at("task_goal").get<std::string>(), scope, strategy, task_id);
            reply_json(res, 200,
                       Json{{"session_id", id},
                            {"status", "active"},
                            {"strategy", std::string(to_string(strategy))}});
        });
    });

    server.Post(R"(/sessions/([^/]+)/steps)",
                [this](const httplib::Request& req, httplib::Response& res) {
                    handle(res, [&] {
                        const std::string session_id = req.matches[1];
                        const Json body = parse_body(req);
                        if (!body.contains("thought") || !body.contains("proposed_action")) {
                            throw Error(ErrorCode::invalid_argument,
                                        "thought and proposed_action are required");
                        }
                        const auto verdict =
                            runtime_.submit_step(session_id, body.at("thought").get<std::string>(),
                                                 body.at("proposed_action").get<std::string>());
                        Json out;
                        out["session_id"] = session_id;
                        if (verdict) {
                            out["evaluated"] = true;
                            out["step_index"] = verdict->step_index;
                            out.update(verdict_to_json(*verdict));
                        } else {
                            out["evaluated"] = false; // strategy none bypasses evaluation
                        }
                        reply_json(res, 200, out);
                    });
                });

    server.Post(R"(/sessions/([^/]+)/close)",
                [this](const httplib::Request& req, httplib::Response& res) {
                    handle(res, [&] {
                        const std::string session_id = req.matches[1];
                        const Json body = parse_body(req);
                        std::optional<GroundTruth> gt;
                        if (body.contains("ground_truth") && !body.at("ground_truth").is_null()) {
                            gt = ground_truth_from_json(body.at("ground_truth"));
                        }
                        const SessionCloseResult result = runtime_.close_session(session_id, gt);
                        Json outcomes = Json::array();
                        for (const UpdateOutcome& o : result.outcomes) {
                            outcomes.push_back(outcome_to_json(o));
                        }
                        reply_json(res, 200,
                                   Json{{"session_id", result.session_id},
                                        {"status", "closed"},
                                        {"flushed", result.outcomes.size()},
                                        {"outcomes", std::move(outcomes)}});
                    });
                });

    server.Post("/policies/ingest", [this](const httplib::Request& req, httplib::Response& res) {
        handle(res, [&] {
            const Json body = parse_body(req);
            SourceKind kind = SourceKind::plain_text;
            if (body.contains("kind")) {
                kind = source_kind_from_string(body.at("kind").get<std::string>());
            }
            SourceDocument doc;
            if (body.contains("content")) {
                std::string doc_id = body.contains("doc_id")
                                         ? body.at("doc_id").get<std::string>()
                                         : std::string("inline");
                doc = make_source_document(std::move(doc_id), kind,
                                           body.at("content").get<std::string>(), "inline");
            } else if (body.contains("path")) {
                doc = extract_text(body.at("path").get<std::string>(), kind);
            } else {
                throw Error(ErrorCode::invalid_argument, "provide either content or path");
            }
            const IngestResult result = runtime_.ingest(doc);
            reply_json(res, 200,
                       Json{{"doc_id", result.doc_id},
                            {"drafts_extracted", result.drafts_extracted},
                            {"drafts_after_dedup", result.drafts_after_dedup},
                            {"ingested", result.policy_ids.size()},
                            {"policy_ids", result.policy_ids}});
        });
    });

    server.Get("/policies", [this](const httplib::Request& req, httplib::Response& res) {
        handle(res, [&] {
            std::optional<Category> category;
            if (req.has_param("category")) {
                category = category_from_string(req.get_param_value("category"));
            }
            std::optional<std::string> scope_hint;
            if (req.has_param("scope_hint")) scope_hint = req.get_param_value("scope_hint");
            Json items = Json::array();
            for (const Policy& p : runtime_.query_policies(category, scope_hint)) {
                items.push_back(policy_to_json(p));
            }
            reply_json(res, 200, Json{{"count", items.size()}, {"policies", std::move(items)}});
        });
    });

    server.Get("/metrics", [this](const httplib::Request&, httplib::Response& res) {
        handle(res, [&] {
            const auto records = runtime_.task_records();
            if (records.empty()) {
                throw Error(ErrorCode::bad_state, "no task records recorded yet");
            }
            const MetricsReport report = compute_metrics(records);
            reply_json(res, 200,
                       Json{{"n_records", records.size()},
                            {"report", report_to_json(report)},
                            {"table", format_report(report, ReportLayout::table)}});
        });
    });
}

Gateway::~Gateway() { stop(); }

void Gateway::start(const std::string& host, int port) {
    auto& server = impl_->server;
    if (port == 0) {
        port_ = server.bind_to_any_port(host);
        if (port_ <= 0) throw Error(ErrorCode::io, "cannot bind gateway to " + host);
    } else {
        if (!server.bind_to_port(host, port)) {
            throw Error(ErrorCode::io, "cannot bind gateway to " + host + ":" + std::to_string(port));
        }
        port_ = port;
    }
    thread_ = std::thread([this] { impl_->server.listen_after_bind(); });
    server.wait_until_ready();
}

void Gateway::start() {
    const std::string& addr = runtime_.config().listen_address;
    const auto colon = addr.rfind(':');
    if (colon == std::string::npos) {
        throw Error(ErrorCode::invalid_argument, "listen_address must be host:port");
    }
    start(addr.substr(0, colon), std::stoi(addr.substr(colon + 1)));
}

void Gateway::stop() {
    if (impl_) impl_->server.stop();
    if (thread_.joinable()) thread_.join();
}

} // namespace stepguard
