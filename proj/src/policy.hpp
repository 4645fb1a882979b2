#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace stepguard {

using Json = nlohmann::ordered_json;

enum class RiskLevel { low = 0, medium = 1, high = 2 };
enum class Category { consent, boundary, execution, injection, other };

std::string_view to_string(RiskLevel level);
std::string_view to_string(Category category);
RiskLevel risk_level_from_string(std::string_view name);
Category category_from_string(std::string_view name);

struct PolicySource {
    std::string doc_id;
    std::string location;

    bool operator==(const PolicySource&) const = default;
};

// A recorded negative example of policy-violating behavior. created_at is a
// database-wide monotonic sequence number assigned at insertion; zero means
// "not yet queued".
struct ViolationReference {
    std::string policy_id;
    std::string canonical_text;
    std::int64_t step_index = 0;
    std::string task_goal;
    RiskLevel risk_level = RiskLevel::medium;
    std::uint64_t created_at = 0;

    bool operator==(const ViolationReference&) const = default;
};

struct Policy {
    std::string id;
    Category category = Category::other;
    std::string scope;
    std::string definition;
    std::vector<std::string> constraints;
    RiskLevel risk_level = RiskLevel::medium;
    PolicySource source;
    std::vector<ViolationReference> violation_queue; // oldest first

    bool operator==(const Policy&) const = default;
};

using QueueCapacity = std::map<RiskLevel, std::size_t>;

QueueCapacity default_queue_capacity(); // low 5, medium 7, high 10

// Structured policy store. Policies keep insertion order (persisted order is
// deterministic); lookups go through an id index. Mutations must be funneled
// through a single writer; see runtime.hpp.
class PolicyDatabase {
public:
    static constexpr int kSchemaVersion = 1;

    PolicyDatabase();
    explicit PolicyDatabase(QueueCapacity capacity);

    void insert_policy(Policy policy); // throws duplicate on existing id
    bool contains(std::string_view id) const;
    const Policy* find(std::string_view id) const;
    Policy* find_mutable(std::string_view id);

    std::vector<const Policy*> query(std::optional<Category> category,
                                     std::optional<std::string> scope_hint) const;

    const std::vector<Policy>& policies() const { return policies_; }
    std::size_t size() const { return policies_.size(); }

    std::size_t capacity_for(RiskLevel level) const;
    const QueueCapacity& queue_capacity() const { return capacity_; }

    std::uint64_t next_sequence() const { return next_sequence_; }
    std::uint64_t take_sequence() { return next_sequence_++; }

    Json to_json() const;
    static PolicyDatabase from_json(const Json& doc);

    void save(const std::string& path) const;
    static PolicyDatabase load(const std::string& path);

    bool operator==(const PolicyDatabase&) const = default;

private:
    void check_queue_bounds(const Policy& policy) const;

    std::vector<Policy> policies_;
    std::map<std::string, std::size_t, std::less<>> index_;
    QueueCapacity capacity_;
    std::uint64_t next_sequence_ = 1;
};

Json violation_to_json(const ViolationReference& v);
ViolationReference violation_from_json(const Json& doc);
Json policy_to_json(const Policy& p);
Policy policy_from_json(const Json& doc);

} // namespace stepguard
