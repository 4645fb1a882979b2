#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "backend.hpp"
#include "enhancement.hpp"
#include "evaluation.hpp"
#include "metrics.hpp"
#include "policy.hpp"
#include "prompts.hpp"
#include "update.hpp"

namespace stepguard {

struct BackendSelection {
    std::string type = "mock"; // "mock" | "remote"
    std::string script_path;   // mock fixture file (optional)
    RemoteBackendConfig remote;
};

struct RuntimeConfig {
    std::string database_path; // empty: in-memory only
    BackendSelection backend;
    Strategy strategy_default = Strategy::second_order_markov;
    double theta = 0.85;
    QueueCapacity queue_capacity = default_queue_capacity();
    DedupScope dedup_scope = DedupScope::tier_category;
    bool immediate_flush = false; // flush violations per step instead of at close
    double enhancement_sim_threshold = 0.85;
    double temperature = 0.0; // validated: must be 0
    std::string listen_address = "127.0.0.1:8787";
    prompts::OrganizationContext organization;
    std::map<std::string, std::string> model_by_role = {
        {"policy_agent", "policy-agent"},
        {"utility_agent", "utility-agent"},
    };
    CompleteOptions complete_options;

    static RuntimeConfig from_json(const Json& doc);
    static RuntimeConfig from_file(const std::string& path);
    void validate() const;
};

std::unique_ptr<ChatBackend> make_backend(const BackendSelection& selection);

struct GroundTruth {
    std::string task_id; // defaults to the session id
    bool completed = false;
    std::vector<EntryResult> entries;
};

GroundTruth ground_truth_from_json(const Json& doc);

struct SessionCloseResult {
    std::string session_id;
    std::vector<UpdateOutcome> outcomes;
    std::optional<TaskRecord> record; // present when ground truth was supplied
};

// Orchestrates sessions over one policy database. Reads run on an immutable
// snapshot; every mutation (ingest, violation flush) funnels through one
// writer lock and republishes the snapshot.
class Runtime {
public:
    explicit Runtime(RuntimeConfig config);
    Runtime(RuntimeConfig config, std::unique_ptr<ChatBackend> backend);

    const RuntimeConfig& config() const { return config_; }
    ChatBackend& backend() { return *backend_; }
    MockBackend* mock_backend(); // nullptr when the backend is remote

    std::shared_ptr<const PolicyDatabase> snapshot() const;
    void reload_database(); // re-read database_path (no-op without one)
    void persist() const;   // write the snapshot to database_path

    std::string create_session(std::string task_goal, std::optional<Category> policy_scope,
                               Strategy strategy, std::string task_id = {});
    // nullopt when the session strategy is none (step recorded, not evaluated).
    std::optional<EvaluationVerdict> submit_step(const std::string& session_id,
                                                 std::string thought, std::string proposed_action);
    SessionCloseResult close_session(const std::string& session_id,
                                     const std::optional<GroundTruth>& ground_truth);
    bool session_active(const std::string& session_id) const;

    IngestResult ingest(const SourceDocument& doc);
    std::vector<Policy> query_policies(std::optional<Category> category,
                                       std::optional<std::string> scope_hint) const;

    std::vector<TaskRecord> task_records() const;
    MetricsReport metrics_report() const; // throws when no records exist

private:
    struct Session {
        std::string id;
        std::string task_id;
        std::string task_goal;
        std::optional<Category> policy_scope;
        Strategy strategy = Strategy::second_order_markov;
        std::vector<ReasoningStep> history;
        std::vector<ViolationReference> pending_violations;
        std::vector<UpdateOutcome> flush_outcomes; // immediate-flush accumulation
        std::vector<std::string> flagged_policy_ids;
        bool closed = false;
        std::mutex step_mu; // steps within a session run strictly serially
    };

    Session& session_ref(const std::string& session_id);
    std::vector<UpdateOutcome> flush_violations(std::vector<ViolationReference> violations);
    UpdateConfig update_config() const;

    RuntimeConfig config_;
    std::unique_ptr<ChatBackend> backend_;

    mutable std::mutex db_mu_;     // guards snapshot swap
    mutable std::mutex writer_mu_; // serializes database mutations and persistence
    std::shared_ptr<const PolicyDatabase> db_;

    mutable std::mutex sessions_mu_;
    std::map<std::string, std::unique_ptr<Session>> sessions_;
    std::uint64_t session_counter_ = 0;

    mutable std::mutex records_mu_;
    std::vector<TaskRecord> records_;
};

} // namespace stepguard
