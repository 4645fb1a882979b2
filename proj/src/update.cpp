#include "update.hpp"

#include <algorithm>

#include "error.hpp"
#include "similarity.hpp"

namespace stepguard {

DedupScope dedup_scope_from_string(std::string_view name) {
    if (name == "tier_category") return DedupScope::tier_category;
    if (name == "per_policy") return DedupScope::per_policy;
    throw Error(ErrorCode::invalid_argument, "unknown dedup scope: " + std::string(name));
}

std::string_view to_string(DedupScope scope) {
    return scope == DedupScope::tier_category ? "tier_category" : "per_policy";
}

void UpdateConfig::validate() const {
    if (!(theta > 0.0 && theta <= 1.0)) {
        throw Error(ErrorCode::invalid_argument, "theta must be in (0, 1]");
    }
    for (RiskLevel level : {RiskLevel::low, RiskLevel::medium, RiskLevel::high}) {
        const auto it = capacity.find(level);
        if (it == capacity.end() || it->second < 1) {
            throw Error(ErrorCode::invalid_argument, "queue capacities must be >= 1 for every tier");
        }
    }
}

Json outcome_to_json(const UpdateOutcome& outcome) {
    Json doc;
    doc["policy_id"] = outcome.policy_id;
    doc["inserted"] = outcome.inserted;
    doc["evicted"] = outcome.evicted ? violation_to_json(*outcome.evicted) : Json(nullptr);
    doc["duplicate_of"] = outcome.duplicate_of ? violation_to_json(*outcome.duplicate_of) : Json(nullptr);
    doc["error"] = outcome.error ? Json(*outcome.error) : Json(nullptr);
    return doc;
}

std::optional<ViolationReference> dedup_scan(const std::vector<ViolationReference>& queue_scope,
                                             const ViolationReference& candidate, double theta) {
    const std::string folded = sim::fold_for_comparison(candidate.canonical_text);
    const ViolationReference* oldest = nullptr;
    for (const ViolationReference& queued : queue_scope) {
        if (sim::gestalt_ratio(folded, sim::fold_for_comparison(queued.canonical_text)) < theta) {
            continue;
        }
        if (oldest == nullptr || queued.created_at < oldest->created_at) oldest = &queued;
    }
    if (oldest == nullptr) return std::nullopt;
    return *oldest;
}

namespace {

std::vector<ViolationReference> collect_scope(const PolicyDatabase& db, const Policy& target,
                                              DedupScope scope) {
    std::vector<ViolationReference> out;
    if (scope == DedupScope::per_policy) {
        out = target.violation_queue;
        return out;
    }
    for (const Policy& p : db.policies()) {
        if (p.category != target.category || p.risk_level != target.risk_level) continue;
        out.insert(out.end(), p.violation_queue.begin(), p.violation_queue.end());
    }
    std::sort(out.begin(), out.end(), [](const ViolationReference& a, const ViolationReference& b) {
        return a.created_at < b.created_at;
    });
    return out;
}

} // namespace

std::vector<UpdateOutcome> apply_update(PolicyDatabase& db,
                                        const std::vector<ViolationReference>& violations,
                                        const UpdateConfig& cfg) {
    cfg.validate();
    std::vector<UpdateOutcome> outcomes;
    outcomes.reserve(violations.size());

    for (const ViolationReference& incoming : violations) {
        UpdateOutcome outcome;
        outcome.policy_id = incoming.policy_id;

        Policy* target = db.find_mutable(incoming.policy_id);
        if (target == nullptr) {
            outcome.error = "unknown policy id: " + incoming.policy_id;
            outcomes.push_back(std::move(outcome));
            continue;
        }
        if (incoming.canonical_text.empty()) {
            outcome.error = "violation reference has empty canonical_text";
            outcomes.push_back(std::move(outcome));
            continue;
        }

        const RiskLevel tier = target->risk_level;
        const auto scope_entries = collect_scope(db, *target, cfg.scope);
        if (auto duplicate = dedup_scan(scope_entries, incoming, cfg.theta)) {
            outcome.duplicate_of = std::move(duplicate);
            outcomes.push_back(std::move(outcome));
            continue;
        }

        // The database's own capacity map is its invariant; the config may
        // only tighten it, never stretch a persisted queue past its bound.
        const std::size_t cap = [&] {
            const std::size_t db_cap = db.capacity_for(tier);
            const auto it = cfg.capacity.find(tier);
            return it == cfg.capacity.end() ? db_cap : std::min(db_cap, it->second);
        }();
        if (target->violation_queue.size() >= cap) {
            outcome.evicted = target->violation_queue.front();
            target->violation_queue.erase(target->violation_queue.begin());
        }

        ViolationReference stored = incoming;
        stored.risk_level = tier;
        stored.created_at = db.take_sequence();
        target->violation_queue.push_back(std::move(stored));
        outcome.inserted = true;
        outcomes.push_back(std::move(outcome));
    }
    return outcomes;
}

} // namespace stepguard
