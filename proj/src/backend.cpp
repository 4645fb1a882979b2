#include "backend.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include "httplib.h"

#include "error.hpp"

namespace stepguard {

namespace {

void require_string(const Json& doc, const char* key) {
    if (!doc.contains(key) || !doc.at(key).is_string()) {
        throw Error(ErrorCode::parse, std::string("payload missing string field: ") + key);
    }
}

void require_bool(const Json& doc, const char* key) {
    if (!doc.contains(key) || !doc.at(key).is_boolean()) {
        throw Error(ErrorCode::parse, std::string("payload missing boolean field: ") + key);
    }
}

void validate_verdict(const Json& doc) {
    require_bool(doc, "policy_violation");
    require_bool(doc, "goal_drift");
    require_string(doc, "threat_explanation");
    require_string(doc, "deviation_explanation");
    require_string(doc, "guidance");
    if (!doc.contains("violated_policy_ids") || !doc.at("violated_policy_ids").is_array()) {
        throw Error(ErrorCode::parse, "payload missing array field: violated_policy_ids");
    }
    for (const Json& id : doc.at("violated_policy_ids")) {
        if (!id.is_string() || id.get<std::string>().empty()) {
            throw Error(ErrorCode::parse, "violated_policy_ids must hold non-empty strings");
        }
    }
    const bool flagged = doc.at("policy_violation").get<bool>();
    const bool has_ids = !doc.at("violated_policy_ids").empty();
    if (flagged != has_ids) {
        throw Error(ErrorCode::parse,
                    "policy_violation must be true exactly when violated_policy_ids is non-empty");
    }
    if (flagged) {
        const std::string threat = doc.at("threat_explanation").get<std::string>();
        const bool blank = std::all_of(threat.begin(), threat.end(),
                                       [](unsigned char c) { return std::isspace(c) != 0; });
        if (blank) {
            throw Error(ErrorCode::parse,
                        "threat_explanation is required when policy_violation is true");
        }
    }
}

void validate_policy_drafts(const Json& doc) {
    if (!doc.contains("policies") || !doc.at("policies").is_array()) {
        throw Error(ErrorCode::parse, "payload missing array field: policies");
    }
    for (const Json& item : doc.at("policies")) {
        require_string(item, "statement");
        require_string(item, "category");
        require_string(item, "risk_level");
        category_from_string(item.at("category").get<std::string>());
        risk_level_from_string(item.at("risk_level").get<std::string>());
        if (item.contains("constraints") && !item.at("constraints").is_array()) {
            throw Error(ErrorCode::parse, "constraints must be an array when present");
        }
    }
}

void validate_merge_decision(const Json& doc) {
    require_bool(doc, "merge");
}

} // namespace

void validate_payload(const std::string& schema, const Json& payload) {
    if (!payload.is_object()) {
        throw Error(ErrorCode::parse, "payload must be a JSON object");
    }
    if (schema == "verdict") {
        validate_verdict(payload);
    } else if (schema == "policy_drafts") {
        validate_policy_drafts(payload);
    } else if (schema == "merge_decision") {
        validate_merge_decision(payload);
    } else {
        throw Error(ErrorCode::invalid_argument, "unknown response schema: " + schema);
    }
}

VerdictPayload verdict_from_json(const Json& payload) {
    validate_payload("verdict", payload);
    VerdictPayload v;
    v.policy_violation = payload.at("policy_violation").get<bool>();
    v.violated_policy_ids = payload.at("violated_policy_ids").get<std::vector<std::string>>();
    v.goal_drift = payload.at("goal_drift").get<bool>();
    v.threat_explanation = payload.at("threat_explanation").get<std::string>();
    v.deviation_explanation = payload.at("deviation_explanation").get<std::string>();
    v.guidance = payload.at("guidance").get<std::string>();
    return v;
}

namespace {

std::string send_with_retries(ChatBackend& backend, const ChatRequest& request,
                              const CompleteOptions& opts) {
    int attempt = 0;
    int delay_ms = opts.backoff_ms;
    for (;;) {
        try {
            return backend.send(request);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::backend || attempt >= opts.max_retries) throw;
            if (delay_ms > 0) {
                std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms));
                delay_ms *= 2;
            }
            ++attempt;
        }
    }
}

std::optional<Json> try_parse(const std::string& schema, const std::string& raw) {
    Json doc;
    try {
        doc = Json::parse(raw);
    } catch (const nlohmann::json::parse_error&) {
        return std::nullopt;
    }
    try {
        validate_payload(schema, doc);
    } catch (const Error&) {
        return std::nullopt;
    }
    return doc;
}

} // namespace

Json complete(ChatBackend& backend, const ChatRequest& request, const CompleteOptions& opts) {
    if (request.temperature != 0.0) {
        throw Error(ErrorCode::invalid_argument, "temperature is locked at 0");
    }
    const std::string raw = send_with_retries(backend, request, opts);
    if (auto parsed = try_parse(request.response_schema, raw)) return *parsed;

    // One bounded repair round.
    ChatRequest repair = request;
    repair.user_payload += "\n\nYour previous reply could not be used: it must be a single JSON "
                           "object matching the \"" +
                           request.response_schema + "\" schema. Reply with only that JSON object.";
    const std::string retry_raw = send_with_retries(backend, repair, opts);
    if (auto parsed = try_parse(request.response_schema, retry_raw)) return *parsed;
    throw Error(ErrorCode::parse,
                "backend reply did not match schema \"" + request.response_schema +
                    "\" after one repair round");
}

// ---------------------------------------------------------------------------
// MockBackend

MockEntry MockBackend::entry_from_json(const Json& doc) {
    MockEntry entry;
    entry.role = doc.at("role").get<std::string>();
    if (doc.contains("match")) {
        const Json& m = doc.at("match");
        if (m.contains("task_id")) entry.match.task_id = m.at("task_id").get<std::string>();
        if (m.contains("step_index")) entry.match.step_index = m.at("step_index").get<std::int64_t>();
        if (m.contains("window_contains_step")) {
            entry.match.window_contains_step = m.at("window_contains_step").get<std::int64_t>();
        }
        if (m.contains("payload_contains")) {
            entry.match.payload_contains = m.at("payload_contains").get<std::string>();
        }
    }
    if (!doc.contains("respond")) {
        throw Error(ErrorCode::parse, "mock entry missing respond");
    }
    const Json& respond = doc.at("respond");
    const auto push_item = [&entry](const Json& item) {
        if (item.is_string()) {
            entry.responses.push_back(item.get<std::string>());
        } else {
            entry.responses.push_back(item.dump());
        }
    };
    if (respond.is_array()) {
        for (const Json& item : respond) push_item(item);
    } else {
        push_item(respond);
    }
    if (entry.responses.empty()) {
        throw Error(ErrorCode::parse, "mock entry with empty respond list");
    }
    if (doc.contains("once")) entry.once = doc.at("once").get<bool>();
    return entry;
}

std::unique_ptr<MockBackend> MockBackend::from_json(const Json& doc) {
    auto backend = std::make_unique<MockBackend>();
    if (!doc.contains("script") || !doc.at("script").is_array()) {
        throw Error(ErrorCode::parse, "mock script document requires a \"script\" array");
    }
    for (const Json& item : doc.at("script")) backend->add_entry(entry_from_json(item));
    return backend;
}

std::unique_ptr<MockBackend> MockBackend::from_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::io, "cannot open mock script: " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    try {
        return from_json(Json::parse(buffer.str()));
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::parse, std::string("mock script parse error: ") + e.what());
    }
}

void MockBackend::add_entry(MockEntry entry) {
    std::lock_guard lock(mu_);
    entries_.push_back(std::move(entry));
}

void MockBackend::prepend_entry(MockEntry entry) {
    std::lock_guard lock(mu_);
    // Cursor and retirement keys index into entries_; prepending would shift
    // them, so only allow it before any traffic.
    if (!cursor_.empty() || !retired_.empty()) {
        throw Error(ErrorCode::bad_state, "cannot prepend to a mock that already served requests");
    }
    entries_.insert(entries_.begin(), std::move(entry));
}

namespace {

bool entry_matches(const MockEntry& entry, const ChatRequest& request) {
    if (entry.role != request.meta.role) return false;
    const MockMatch& m = entry.match;
    if (m.task_id && *m.task_id != request.meta.task_id) return false;
    if (m.step_index && *m.step_index != request.meta.step_index) return false;
    if (m.window_contains_step) {
        const auto& steps = request.meta.window_steps;
        if (std::find(steps.begin(), steps.end(), *m.window_contains_step) == steps.end()) {
            return false;
        }
    }
    if (m.payload_contains &&
        request.user_payload.find(*m.payload_contains) == std::string::npos) {
        return false;
    }
    return true;
}

} // namespace

std::string MockBackend::send(const ChatRequest& request) {
    std::lock_guard lock(mu_);
    log_.push_back(request);
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        const MockEntry& entry = entries_[i];
        const auto key = std::make_pair(request.meta.session_id, i);
        if (entry.once && retired_.count(key)) continue;
        if (!entry_matches(entry, request)) continue;
        std::size_t& pos = cursor_[key];
        const std::size_t idx = std::min(pos, entry.responses.size() - 1);
        ++pos;
        if (entry.once && pos >= entry.responses.size()) retired_.insert(key);
        return entry.responses[idx];
    }
    throw Error(ErrorCode::backend,
                "mock script has no entry for role=" + request.meta.role +
                    " task=" + request.meta.task_id +
                    " step=" + std::to_string(request.meta.step_index));
}

std::vector<ChatRequest> MockBackend::request_log() const {
    std::lock_guard lock(mu_);
    return log_;
}

void MockBackend::clear_log() {
    std::lock_guard lock(mu_);
    log_.clear();
}

// ---------------------------------------------------------------------------
// HttpBackend

HttpBackend::HttpBackend(RemoteBackendConfig config) : config_(std::move(config)) {
    std::string rest = config_.endpoint;
    const std::string scheme = "http://";
    if (rest.rfind(scheme, 0) != 0) {
        throw Error(ErrorCode::invalid_argument,
                    "remote endpoint must be an http:// URL: " + config_.endpoint);
    }
    rest = rest.substr(scheme.size());
    const auto slash = rest.find('/');
    std::string authority = slash == std::string::npos ? rest : rest.substr(0, slash);
    path_ = slash == std::string::npos ? "/v1/chat/completions" : rest.substr(slash);
    const auto colon = authority.find(':');
    if (colon == std::string::npos) {
        host_ = authority;
    } else {
        host_ = authority.substr(0, colon);
        port_ = std::stoi(authority.substr(colon + 1));
    }
    if (host_.empty()) {
        throw Error(ErrorCode::invalid_argument, "remote endpoint missing host");
    }
}

std::string HttpBackend::send(const ChatRequest& request) {
    httplib::Client client(host_, port_);
    client.set_connection_timeout(config_.timeout_seconds, 0);
    client.set_read_timeout(config_.timeout_seconds, 0);

    Json body;
    body["model"] = request.model_name;
    body["temperature"] = request.temperature;
    body["messages"] = Json::array({Json{{"role", "system"}, {"content", request.system_prompt}},
                                    Json{{"role", "user"}, {"content", request.user_payload}}});
    body["response_format"] = Json{{"type", "json_object"}};

    httplib::Headers headers;
    if (!config_.api_key_env.empty()) {
        if (const char* key = std::getenv(config_.api_key_env.c_str()); key != nullptr && *key) {
            headers.emplace("Authorization", std::string("Bearer ") + key);
        }
    }

    const auto res = client.Post(path_, headers, body.dump(), "application/json");
    if (!res) {
        throw Error(ErrorCode::backend, "remote backend unreachable: " + config_.endpoint);
    }
    if (res->status != 200) {
        throw Error(ErrorCode::backend,
                    "remote backend returned status " + std::to_string(res->status));
    }
    Json doc;
    try {
        doc = Json::parse(res->body);
    } catch (const nlohmann::json::parse_error&) {
        throw Error(ErrorCode::backend, "remote backend returned unparseable body");
    }
    try {
        return doc.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception&) {
        throw Error(ErrorCode::backend, "remote backend reply missing choices[0].message.content");
    }
}

} // namespace stepguard
