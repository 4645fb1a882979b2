#include "runtime.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "error.hpp"

namespace stepguard {

RuntimeConfig RuntimeConfig::from_json(const Json& doc) {
    RuntimeConfig cfg;
    if (doc.contains("database_path")) cfg.database_path = doc.at("database_path").get<std::string>();
    if (doc.contains("backend")) {
        const Json& b = doc.at("backend");
        if (b.contains("type")) cfg.backend.type = b.at("type").get<std::string>();
        if (b.contains("script_path")) cfg.backend.script_path = b.at("script_path").get<std::string>();
        if (b.contains("endpoint")) cfg.backend.remote.endpoint = b.at("endpoint").get<std::string>();
        if (b.contains("api_key_env")) {
            cfg.backend.remote.api_key_env = b.at("api_key_env").get<std::string>();
        }
        if (b.contains("timeout_seconds")) {
            cfg.backend.remote.timeout_seconds = b.at("timeout_seconds").get<int>();
        }
    }
    if (doc.contains("strategy_default")) {
        cfg.strategy_default = strategy_from_string(doc.at("strategy_default").get<std::string>());
    }
    if (doc.contains("theta")) cfg.theta = doc.at("theta").get<double>();
    if (doc.contains("queue_capacity")) {
        for (RiskLevel level : {RiskLevel::low, RiskLevel::medium, RiskLevel::high}) {
            const std::string key(to_string(level));
            if (doc.at("queue_capacity").contains(key)) {
                cfg.queue_capacity[level] = doc.at("queue_capacity").at(key).get<std::size_t>();
            }
        }
    }
    if (doc.contains("dedup_scope")) {
        cfg.dedup_scope = dedup_scope_from_string(doc.at("dedup_scope").get<std::string>());
    }
    if (doc.contains("immediate_flush")) cfg.immediate_flush = doc.at("immediate_flush").get<bool>();
    if (doc.contains("enhancement_sim_threshold")) {
        cfg.enhancement_sim_threshold = doc.at("enhancement_sim_threshold").get<double>();
    }
    if (doc.contains("temperature")) cfg.temperature = doc.at("temperature").get<double>();
    if (doc.contains("listen_address")) {
        cfg.listen_address = doc.at("listen_address").get<std::string>();
    }
    if (doc.contains("organization")) {
        const Json& org = doc.at("organization");
        if (org.contains("name")) cfg.organization.name = org.at("name").get<std::string>();
        if (org.contains("description")) {
            cfg.organization.description = org.at("description").get<std::string>();
        }
        if (org.contains("policy_subject")) {
            cfg.organization.policy_subject = org.at("policy_subject").get<std::string>();
        }
    }
    if (doc.contains("models")) {
        for (const auto& [role, model] : doc.at("models").items()) {
            cfg.model_by_role[role] = model.get<std::string>();
        }
    }
    if (doc.contains("max_retries")) cfg.complete_options.max_retries = doc.at("max_retries").get<int>();
    if (doc.contains("backoff_ms")) cfg.complete_options.backoff_ms = doc.at("backoff_ms").get<int>();
    cfg.validate();
    return cfg;
}

RuntimeConfig RuntimeConfig::from_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::io, "cannot read config: " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    try {
        return from_json(Json::parse(buffer.str()));
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::parse, std::string("config parse error: ") + e.what());
    }
}

void RuntimeConfig::validate() const {
    if (temperature != 0.0) {
        throw Error(ErrorCode::invalid_argument, "temperature is locked at 0");
    }
    if (!(theta > 0.0 && theta <= 1.0)) {
        throw Error(ErrorCode::invalid_argument, "theta must be in (0, 1]");
    }
    if (!(enhancement_sim_threshold > 0.0 && enhancement_sim_threshold <= 1.0)) {
        throw Error(ErrorCode::invalid_argument, "enhancement_sim_threshold must be in (0, 1]");
    }
    if (backend.type != "mock" && backend.type != "remote") {
        throw Error(ErrorCode::invalid_argument, "backend.type must be \"mock\" or \"remote\"");
    }
    if (backend.type == "remote" && backend.remote.endpoint.empty()) {
        throw Error(ErrorCode::invalid_argument, "remote backend requires an endpoint");
    }
    for (RiskLevel level : {RiskLevel::low, RiskLevel::medium, RiskLevel::high}) {
        const auto it = queue_capacity.find(level);
        if (it == queue_capacity.end() || it->second < 1) {
            throw Error(ErrorCode::invalid_argument, "queue capacities must cover all tiers");
        }
    }
}

std::unique_ptr<ChatBackend> make_backend(const BackendSelection& selection) {
    if (selection.type == "remote") {
        return std::make_unique<HttpBackend>(selection.remote);
    }
    if (!selection.script_path.empty()) {
        return MockBackend::from_file(selection.script_path);
    }
    return std::make_unique<MockBackend>();
}

GroundTruth ground_truth_from_json(const Json& doc) {
    GroundTruth gt;
    if (doc.contains("task_id")) gt.task_id = doc.at("task_id").get<std::string>();
    gt.completed = doc.at("completed").get<bool>();
    if (doc.contains("entries")) {
        for (const Json& item : doc.at("entries")) {
            gt.entries.push_back(
                {item.at("policy_id").get<std::string>(), item.at("complied").get<bool>()});
        }
    }
    return gt;
}

Runtime::Runtime(RuntimeConfig config) : Runtime(std::move(config), nullptr) {}

Runtime::Runtime(RuntimeConfig config, std::unique_ptr<ChatBackend> backend)
    : config_(std::move(config)), backend_(std::move(backend)) {
    config_.validate();
    if (!backend_) backend_ = make_backend(config_.backend);
    if (!config_.database_path.empty() && std::filesystem::exists(config_.database_path)) {
        db_ = std::make_shared<PolicyDatabase>(PolicyDatabase::load(config_.database_path));
    } else {
        db_ = std::make_shared<PolicyDatabase>(config_.queue_capacity);
    }
}

MockBackend* Runtime::mock_backend() { return dynamic_cast<MockBackend*>(backend_.get()); }

std::shared_ptr<const PolicyDatabase> Runtime::snapshot() const {
    std::lock_guard lock(db_mu_);
    return db_;
}

void Runtime::reload_database() {
    if (config_.database_path.empty()) return;
    auto fresh = std::make_shared<PolicyDatabase>(PolicyDatabase::load(config_.database_path));
    std::lock_guard lock(db_mu_);
    db_ = std::move(fresh);
}

void Runtime::persist() const {
    if (config_.database_path.empty()) return;
    std::lock_guard writer(writer_mu_);
    snapshot()->save(config_.database_path);
}

UpdateConfig Runtime::update_config() const {
    UpdateConfig cfg;
    cfg.theta = config_.theta;
    cfg.capacity = config_.queue_capacity;
    cfg.scope = config_.dedup_scope;
    return cfg;
}

std::string Runtime::create_session(std::string task_goal, std::optional<Category> policy_scope,
                                    Strategy strategy, std::string task_id) {
    std::lock_guard lock(sessions_mu_);
    char buf[16];
    std::snprintf(buf, sizeof(buf), "s-%06llu",
                  static_cast<unsigned long long>(++session_counter_));
    auto session = std::make_unique<Session>();
    session->id = buf;
    session->task_id = task_id.empty() ? session->id : std::move(task_id);
    session->task_goal = std::move(task_goal);
    session->policy_scope = policy_scope;
    session->strategy = strategy;
    std::string id = session->id;
    sessions_.emplace(id, std::move(session));
    return id;
}

Runtime::Session& Runtime::session_ref(const std::string& session_id) {
    std::lock_guard lock(sessions_mu_);
    const auto it = sessions_.find(session_id);
    if (it == sessions_.end()) {
        throw Error(ErrorCode::not_found, "unknown session: " + session_id);
    }
    return *it->second;
}

bool Runtime::session_active(const std::string& session_id) const {
    std::lock_guard lock(sessions_mu_);
    const auto it = sessions_.find(session_id);
    return it != sessions_.end() && !it->second->closed;
}

std::vector<UpdateOutcome> Runtime::flush_violations(std::vector<ViolationReference> violations) {
    if (violations.empty()) return {};
    std::lock_guard writer(writer_mu_);
    auto next = std::make_shared<PolicyDatabase>(*snapshot());
    auto outcomes = apply_update(*next, violations, update_config());
    {
        std::lock_guard lock(db_mu_);
        db_ = std::move(next);
    }
    return outcomes;
}

std::optional<EvaluationVerdict> Runtime::submit_step(const std::string& session_id,
                                                      std::string thought,
                                                      std::string proposed_action) {
    Session& session = session_ref(session_id);
    std::lock_guard step_lock(session.step_mu);
    if (session.closed) {
        throw Error(ErrorCode::bad_state, "session is closed: " + session_id);
    }

    ReasoningStep step;
    step.index = static_cast<std::int64_t>(session.history.size()) + 1;
    step.thought = std::move(thought);
    step.proposed_action = std::move(proposed_action);
    step.timestamp = static_cast<std::uint64_t>(step.index);
    session.history.push_back(std::move(step));

    if (session.strategy == Strategy::none) return std::nullopt;

    const auto db = snapshot();
    EvaluationContext ctx;
    ctx.strategy = session.strategy;
    ctx.window = select_window(session.history, session.strategy);
    ctx.task_goal = session.task_goal;
    ctx.candidate_policies = db->query(session.policy_scope, std::nullopt);
    for (const Policy* p : ctx.candidate_policies) {
        ctx.queued_violations.insert(ctx.queued_violations.end(), p->violation_queue.begin(),
                                     p->violation_queue.end());
    }
    std::sort(ctx.queued_violations.begin(), ctx.queued_violations.end(),
              [](const ViolationReference& a, const ViolationReference& b) {
                  return a.created_at < b.created_at;
              });
    ctx.session_id = session.id;
    ctx.task_id = session.task_id;
    const auto model = config_.model_by_role.find("utility_agent");
    if (model != config_.model_by_role.end()) ctx.model_name = model->second;

    EvaluationVerdict verdict = evaluate_step(ctx, *backend_, config_.complete_options);

    for (const std::string& id : verdict.violated_policy_ids) {
        if (std::find(session.flagged_policy_ids.begin(), session.flagged_policy_ids.end(), id) ==
            session.flagged_policy_ids.end()) {
            session.flagged_policy_ids.push_back(id);
        }
    }
    if (!verdict.emitted_violations.empty()) {
        if (config_.immediate_flush) {
            auto outcomes = flush_violations(verdict.emitted_violations);
            session.flush_outcomes.insert(session.flush_outcomes.end(),
                                          std::make_move_iterator(outcomes.begin()),
                                          std::make_move_iterator(outcomes.end()));
        } else {
            session.pending_violations.insert(session.pending_violations.end(),
                                              verdict.emitted_violations.begin(),
                                              verdict.emitted_violations.end());
        }
    }
    return verdict;
}

SessionCloseResult Runtime::close_session(const std::string& session_id,
                                          const std::optional<GroundTruth>& ground_truth) {
    Session& session = session_ref(session_id);
    std::lock_guard step_lock(session.step_mu);
    if (session.closed) {
        throw Error(ErrorCode::bad_state, "session already closed: " + session_id);
    }

    SessionCloseResult result;
    result.session_id = session.id;
    result.outcomes = std::move(session.flush_outcomes);
    auto flushed = flush_violations(std::move(session.pending_violations));
    result.outcomes.insert(result.outcomes.end(), std::make_move_iterator(flushed.begin()),
                           std::make_move_iterator(flushed.end()));
    session.pending_violations.clear();
    session.closed = true;
    persist();

    if (ground_truth) {
        std::vector<EntryResult> entries = ground_truth->entries;
        for (const std::string& flagged : session.flagged_policy_ids) {
            const auto it = std::find_if(entries.begin(), entries.end(),
                                         [&](const EntryResult& e) { return e.policy_id == flagged; });
            if (it == entries.end()) {
                entries.push_back({flagged, false});
            } else {
                it->complied = false;
            }
        }
        const std::string task_id =
            !ground_truth->task_id.empty()
                ? ground_truth->task_id
                : (session.task_id.empty() ? session.id : session.task_id);
        result.record = make_task_record(task_id, ground_truth->completed, std::move(entries));
        std::lock_guard lock(records_mu_);
        records_.push_back(*result.record);
    }
    return result;
}

IngestResult Runtime::ingest(const SourceDocument& doc) {
    IngestResult result;
    {
        std::lock_guard writer(writer_mu_);
        auto next = std::make_shared<PolicyDatabase>(*snapshot());
        const auto model = config_.model_by_role.find("policy_agent");
        result = ingest_document(doc, *backend_, *next, config_.enhancement_sim_threshold,
                                 config_.organization,
                                 model == config_.model_by_role.end() ? "policy-agent"
                                                                      : model->second,
                                 config_.complete_options);
        std::lock_guard lock(db_mu_);
        db_ = std::move(next);
    }
    persist();
    return result;
}

std::vector<Policy> Runtime::query_policies(std::optional<Category> category,
                                            std::optional<std::string> scope_hint) const {
    const auto db = snapshot();
    std::vector<Policy> out;
    for (const Policy* p : db->query(category, std::move(scope_hint))) out.push_back(*p);
    return out;
}

std::vector<TaskRecord> Runtime::task_records() const {
    std::lock_guard lock(records_mu_);
    return records_;
}

MetricsReport Runtime::metrics_report() const {
    return compute_metrics(task_records());
}

} // namespace stepguard
