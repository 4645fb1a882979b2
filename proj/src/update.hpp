#pragma once

#include <optional>
#include <string>
#include <vector>

#include "policy.hpp"

namespace stepguard {

// Which queued references a new violation is compared against before insertion.
enum class DedupScope {
    tier_category, // all queued references sharing the risk tier and policy category
    per_policy,    // only the target policy's own queue
};

DedupScope dedup_scope_from_string(std::string_view name);
std::string_view to_string(DedupScope scope);

struct UpdateConfig {
    double theta = 0.85;
    QueueCapacity capacity = default_queue_capacity();
    DedupScope scope = DedupScope::tier_category;

    void validate() const; // 0 < theta <= 1, capacities >= 1
};

struct UpdateOutcome {
    std::string policy_id;
    bool inserted = false;
    std::optional<ViolationReference> evicted;
    std::optional<ViolationReference> duplicate_of;
    std::optional<std::string> error;
};

Json outcome_to_json(const UpdateOutcome& outcome);

// First (oldest by created_at) queued entry whose case-folded similarity to
// `candidate` meets `theta`, if any.
std::optional<ViolationReference> dedup_scan(const std::vector<ViolationReference>& queue_scope,
                                             const ViolationReference& candidate, double theta);

// Feedback-driven policy update: route each violation by risk level, drop it
// if a queued reference in scope is similar at or above theta, otherwise
// append to the target policy's queue, evicting the oldest entry when the
// tier capacity is reached. Violations are processed in input order; an
// unknown policy id yields a per-item error outcome and processing continues.
std::vector<UpdateOutcome> apply_update(PolicyDatabase& db,
                                        const std::vector<ViolationReference>& violations,
                                        const UpdateConfig& cfg);

} // namespace stepguard
