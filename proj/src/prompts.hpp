#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "policy.hpp"

namespace stepguard::prompts {

struct OrganizationContext {
    std::string name = "Example Organization";
    std::string description = "An organization operating autonomous web agents.";
    std::string policy_subject = "autonomous web agent behavior";
};

// Policy-agent messages: document refinement and duplicate adjudication.
std::string policy_system_prompt(const OrganizationContext& org);
std::string refinement_payload(const std::string& doc_id, const std::string& content);
std::string merge_payload(const std::string& statement_a, const std::string& statement_b);

// Utility-agent messages: the three-stage step evaluation.
struct WindowLine {
    std::int64_t index = 0;
    std::string thought;
    std::string proposed_action;
};

std::string utility_system_prompt();
std::string evaluation_payload(const std::string& task_goal,
                               const std::vector<WindowLine>& window,
                               const std::vector<const Policy*>& candidate_policies,
                               const std::vector<ViolationReference>& queued_violations);

} // namespace stepguard::prompts
