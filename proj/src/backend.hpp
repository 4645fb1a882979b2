#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "policy.hpp"

namespace stepguard {

// Routing metadata carried alongside a chat request. The remote backend
// ignores it; the scripted mock keys matchers and cursors off it.
struct RequestMeta {
    std::string role; // "policy_agent" | "utility_agent"
    std::string session_id;
    std::string task_id;
    std::int64_t step_index = 0;
    std::vector<std::int64_t> window_steps;
};

struct ChatRequest {
    std::string system_prompt;
    std::string user_payload;
    std::string response_schema; // "verdict" | "policy_drafts" | "merge_decision"
    double temperature = 0.0;    // locked at 0
    std::string model_name;
    RequestMeta meta;
};

// Dual-objective evaluator output. policy_violation must agree with
// violated_policy_ids being non-empty; payloads breaking that are rejected
// at parse time.
struct VerdictPayload {
    bool policy_violation = false;
    std::vector<std::string> violated_policy_ids;
    bool goal_drift = false;
    std::string threat_explanation;
    std::string deviation_explanation;
    std::string guidance;
};

class ChatBackend {
public:
    virtual ~ChatBackend() = default;
    // Raw model text for one request. Throws Error(backend) on transport failure.
    virtual std::string send(const ChatRequest& request) = 0;
    virtual std::string name() const = 0;
};

struct CompleteOptions {
    int max_retries = 2;  // additional transport attempts after the first
    int backoff_ms = 250; // doubled per retry; 0 disables sleeping
};

// Sends the request, validates the reply against request.response_schema,
// and on a malformed reply re-asks once with a repair instruction before
// giving up. Transport failures retry with exponential backoff. Throws
// Error(backend) for transport exhaustion and Error(parse) for a reply that
// stays malformed after the repair round.
Json complete(ChatBackend& backend, const ChatRequest& request, const CompleteOptions& opts = {});

// Schema validation for the structured payloads this system consumes.
void validate_payload(const std::string& schema, const Json& payload);
VerdictPayload verdict_from_json(const Json& payload);

// ---------------------------------------------------------------------------
// Scripted mock

struct MockMatch {
    std::optional<std::string> task_id;
    std::optional<std::int64_t> step_index;
    std::optional<std::int64_t> window_contains_step;
    std::optional<std::string> payload_contains;
};

struct MockEntry {
    std::string role;
    MockMatch match;
    std::vector<std::string> responses; // raw reply texts; last one repeats
    bool once = false;                  // retire the entry after one delivery
};

// Deterministic scripted backend. Entries are tried in order; the first one
// whose role and matchers fit the request answers it. Entries with several
// responses hand them out one at a time per session (repair re-asks land on
// the next item). Every request is logged for inspection by tests.
class MockBackend : public ChatBackend {
public:
    MockBackend() = default;
    static std::unique_ptr<MockBackend> from_json(const Json& doc); // {"script": [...]}
    static std::unique_ptr<MockBackend> from_file(const std::string& path);
    static MockEntry entry_from_json(const Json& doc);

    void add_entry(MockEntry entry);
    void prepend_entry(MockEntry entry);

    std::string send(const ChatRequest& request) override;
    std::string name() const override { return "mock"; }

    std::vector<ChatRequest> request_log() const;
    void clear_log();

private:
    mutable std::mutex mu_;
    std::vector<MockEntry> entries_;
    std::map<std::pair<std::string, std::size_t>, std::size_t> cursor_;
    std::set<std::pair<std::string, std::size_t>> retired_;
    std::vector<ChatRequest> log_;
};

// ---------------------------------------------------------------------------
// Remote chat-completion backend (plain HTTP; credentials via environment)

struct RemoteBackendConfig {
    std::string endpoint;            // e.g. http://127.0.0.1:9000/v1/chat/completions
    std::string api_key_env;         // name of env var holding the bearer token
    int timeout_seconds = 30;
    std::map<std::string, std::string> model_by_role; // policy_agent / utility_agent
};

class HttpBackend : public ChatBackend {
public:
    explicit HttpBackend(RemoteBackendConfig config);
    std::string send(const ChatRequest& request) override;
    std::string name() const override { return "remote"; }
    const RemoteBackendConfig& config() const { return config_; }

private:
    RemoteBackendConfig config_;
    std::string host_;
    int port_ = 80;
    std::string path_;
};

} // namespace stepguard
