#include "policy.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "error.hpp"

namespace stepguard {

std::string_view to_string(RiskLevel level) {
    switch (level) {
        case RiskLevel::low: return "low";
        case RiskLevel::medium: return "medium";
        case RiskLevel::high: return "high";
    }
    return "medium";
}

std::string_view to_string(Category category) {
    switch (category) {
        case Category::consent: return "consent";
        case Category::boundary: return "boundary";
        case Category::execution: return "execution";
        case Category::injection: return "injection";
        case Category::other: return "other";
    }
    return "other";
}

RiskLevel risk_level_from_string(std::string_view name) {
    if (name == "low") return RiskLevel::low;
    if (name == "medium") return RiskLevel::medium;
    if (name == "high") return RiskLevel::high;
    throw Error(ErrorCode::invalid_argument, "unknown risk level: " + std::string(name));
}

Category category_from_string(std::string_view name) {
    if (name == "consent") return Category::consent;
    if (name == "boundary") return Category::boundary;
    if (name == "execution") return Category::execution;
    if (name == "injection") return Category::injection;
    if (name == "other") return Category::other;
    throw Error(ErrorCode::invalid_argument, "unknown category: " + std::string(name));
}

QueueCapacity default_queue_capacity() {
    return {{RiskLevel::low, 5}, {RiskLevel::medium, 7}, {RiskLevel::high, 10}};
}

PolicyDatabase::PolicyDatabase() : capacity_(default_queue_capacity()) {}

PolicyDatabase::PolicyDatabase(QueueCapacity capacity) : capacity_(std::move(capacity)) {
    for (const auto& [level, cap] : capacity_) {
        (void)level;
        if (cap < 1) throw Error(ErrorCode::invalid_argument, "queue capacity must be >= 1");
    }
    for (RiskLevel level : {RiskLevel::low, RiskLevel::medium, RiskLevel::high}) {
        if (!capacity_.count(level)) {
            throw Error(ErrorCode::invalid_argument, "queue capacity missing a risk level");
        }
    }
}

void PolicyDatabase::check_queue_bounds(const Policy& policy) const {
    if (policy.violation_queue.size() > capacity_for(policy.risk_level)) {
        throw Error(ErrorCode::invalid_argument,
                    "violation queue exceeds capacity for policy " + policy.id);
    }
}

void PolicyDatabase::insert_policy(Policy policy) {
    if (policy.id.empty()) throw Error(ErrorCode::invalid_argument, "policy id must be non-empty");
    if (policy.definition.empty()) {
        throw Error(ErrorCode::invalid_argument, "policy definition must be non-empty");
    }
    if (index_.count(policy.id)) {
        throw Error(ErrorCode::duplicate, "duplicate policy id: " + policy.id);
    }
    check_queue_bounds(policy);
    index_.emplace(policy.id, policies_.size());
    policies_.push_back(std::move(policy));
}

bool PolicyDatabase::contains(std::string_view id) const {
    return index_.find(id) != index_.end();
}

const Policy* PolicyDatabase::find(std::string_view id) const {
    const auto it = index_.find(id);
    return it == index_.end() ? nullptr : &policies_[it->second];
}

Policy* PolicyDatabase::find_mutable(std::string_view id) {
    const auto it = index_.find(id);
    return it == index_.end() ? nullptr : &policies_[it->second];
}

namespace {

std::string ascii_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

} // namespace

std::vector<const Policy*> PolicyDatabase::query(std::optional<Category> category,
                                                 std::optional<std::string> scope_hint) const {
    std::vector<const Policy*> out;
    std::string hint;
    if (scope_hint) hint = ascii_lower(*scope_hint);
    for (const Policy& p : policies_) {
        if (category && p.category != *category) continue;
        if (scope_hint && ascii_lower(p.scope).find(hint) == std::string::npos) continue;
        out.push_back(&p);
    }
    return out;
}

std::size_t PolicyDatabase::capacity_for(RiskLevel level) const {
    const auto it = capacity_.find(level);
    if (it == capacity_.end()) throw Error(ErrorCode::internal, "capacity map incomplete");
    return it->second;
}

Json violation_to_json(const ViolationReference& v) {
    Json doc;
    doc["policy_id"] = v.policy_id;
    doc["canonical_text"] = v.canonical_text;
    doc["step_index"] = v.step_index;
    doc["task_goal"] = v.task_goal;
    doc["risk_level"] = to_string(v.risk_level);
    doc["created_at"] = v.created_at;
    return doc;
}

ViolationReference violation_from_json(const Json& doc) {
    ViolationReference v;
    v.policy_id = doc.at("policy_id").get<std::string>();
    v.canonical_text = doc.at("canonical_text").get<std::string>();
    if (v.canonical_text.empty()) {
        throw Error(ErrorCode::parse, "violation reference with empty canonical_text");
    }
    v.step_index = doc.at("step_index").get<std::int64_t>();
    v.task_goal = doc.at("task_goal").get<std::string>();
    v.risk_level = risk_level_from_string(doc.at("risk_level").get<std::string>());
    v.created_at = doc.at("created_at").get<std::uint64_t>();
    return v;
}

Json policy_to_json(const Policy& p) {
    Json doc;
    doc["id"] = p.id;
    doc["category"] = to_string(p.category);
    doc["scope"] = p.scope;
    doc["definition"] = p.definition;
    doc["constraints"] = p.constraints;
    doc["risk_level"] = to_string(p.risk_level);
    doc["source"] = Json{{"doc_id", p.source.doc_id}, {"location", p.source.location}};
    Json queue = Json::array();
    for (const ViolationReference& v : p.violation_queue) queue.push_back(violation_to_json(v));
    doc["violation_queue"] = std::move(queue);
    return doc;
}

Policy policy_from_json(const Json& doc) {
    Policy p;
    p.id = doc.at("id").get<std::string>();
    p.category = category_from_string(doc.at("category").get<std::string>());
    p.scope = doc.at("scope").get<std::string>();
    p.definition = doc.at("definition").get<std::string>();
    p.constraints = doc.at("constraints").get<std::vector<std::string>>();
    p.risk_level = risk_level_from_string(doc.at("risk_level").get<std::string>());
    const Json& src = doc.at("source");
    p.source.doc_id = src.at("doc_id").get<std::string>();
    p.source.location = src.at("location").get<std::string>();
    std::uint64_t last_created = 0;
    for (const Json& item : doc.at("violation_queue")) {
        ViolationReference v = violation_from_json(item);
        if (v.created_at <= last_created) {
            throw Error(ErrorCode::parse, "violation queue for " + p.id + " is not oldest-first");
        }
        last_created = v.created_at;
        p.violation_queue.push_back(std::move(v));
    }
    return p;
}

Json PolicyDatabase::to_json() const {
    Json doc;
    doc["schema_version"] = kSchemaVersion;
    Json caps;
    for (RiskLevel level : {RiskLevel::low, RiskLevel::medium, RiskLevel::high}) {
        caps[std::string(to_string(level))] = capacity_for(level);
    }
    doc["queue_capacity"] = std::move(caps);
    doc["next_sequence"] = next_sequence_;
    Json items = Json::array();
    for (const Policy& p : policies_) items.push_back(policy_to_json(p));
    doc["policies"] = std::move(items);
    return doc;
}

PolicyDatabase PolicyDatabase::from_json(const Json& doc) {
    if (!doc.contains("schema_version")) {
        throw Error(ErrorCode::parse, "policy database missing schema_version");
    }
    const int version = doc.at("schema_version").get<int>();
    if (version != kSchemaVersion) {
        throw Error(ErrorCode::schema_version,
                    "unsupported policy database schema_version " + std::to_string(version));
    }
    QueueCapacity caps;
    for (RiskLevel level : {RiskLevel::low, RiskLevel::medium, RiskLevel::high}) {
        caps[level] = doc.at("queue_capacity").at(std::string(to_string(level))).get<std::size_t>();
    }
    PolicyDatabase db(std::move(caps));
    db.next_sequence_ = doc.at("next_sequence").get<std::uint64_t>();
    for (const Json& item : doc.at("policies")) {
        Policy p = policy_from_json(item);
        for (const ViolationReference& v : p.violation_queue) {
            if (v.created_at >= db.next_sequence_) {
                throw Error(ErrorCode::parse, "created_at beyond next_sequence");
            }
        }
        db.insert_policy(std::move(p));
    }
    return db;
}

void PolicyDatabase::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::io, "cannot open for writing: " + path);
    out << to_json().dump(2) << '\n';
    if (!out) throw Error(ErrorCode::io, "write failed: " + path);
}

PolicyDatabase PolicyDatabase::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::io, "cannot open for reading: " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    Json doc;
    try {
        doc = Json::parse(buffer.str());
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::parse, std::string("policy database parse error: ") + e.what());
    }
    try {
        return from_json(doc);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::parse, std::string("policy database malformed: ") + e.what());
    }
}

} // namespace stepguard
