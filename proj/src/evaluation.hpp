#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "backend.hpp"
#include "policy.hpp"

namespace stepguard {

enum class Strategy { none, full_trajectory, current_step, second_order_markov };

Strategy strategy_from_string(std::string_view name); // accepts "markovian" as an alias
std::string_view to_string(Strategy strategy);

// One web-agent reasoning output r_t.
struct ReasoningStep {
    std::int64_t index = 0; // 1-based, strictly increasing within a session
    std::string thought;
    std::string proposed_action;
    std::uint64_t timestamp = 0; // sequence number, not wall clock
};

// Window selection per strategy: the full history, the current step alone, or
// the two-step Markov window [r_{t-1}, r_t] (just [r_1] at t = 1).
std::vector<ReasoningStep> select_window(const std::vector<ReasoningStep>& history,
                                         Strategy strategy);

struct EvaluationContext {
    Strategy strategy = Strategy::second_order_markov;
    std::vector<ReasoningStep> window;
    std::string task_goal;
    std::vector<const Policy*> candidate_policies;
    std::vector<ViolationReference> queued_violations; // negative examples
    std::string session_id;
    std::string task_id;
    std::string model_name = "utility-agent";
};

EvaluationContext make_context(const std::vector<ReasoningStep>& history, Strategy strategy,
                               std::string task_goal,
                               std::vector<const Policy*> candidate_policies,
                               std::vector<ViolationReference> queued_violations);

// Reflection frame handed back to the web agent: four metacognitive stages in
// fixed order, with the critical-evaluation stage carrying the explanations
// and revision guidelines.
struct OptimizationGuidance {
    std::string threat_explanation;
    std::string deviation_explanation;
    std::vector<std::string> guidelines;
    std::string reflection_frame;
};

struct EvaluationVerdict {
    std::int64_t step_index = 0;
    bool policy_flag = false;
    bool goal_flag = false;
    bool unavailable = false; // fail-closed marker: evaluator could not run
    std::vector<std::string> violated_policy_ids;
    std::optional<OptimizationGuidance> guidance;
    std::vector<ViolationReference> emitted_violations;
};

OptimizationGuidance build_guidance(const VerdictPayload& payload, const std::string& task_goal);

// One backend round for the window's latest step. Backend failures produce
// the fail-closed "evaluation unavailable" verdict instead of propagating.
EvaluationVerdict evaluate_step(const EvaluationContext& ctx, ChatBackend& backend,
                                const CompleteOptions& opts = {});

EvaluationVerdict unavailable_verdict(std::int64_t step_index, const std::string& reason);

Json guidance_to_json(const OptimizationGuidance& guidance);
Json verdict_to_json(const EvaluationVerdict& verdict);

// Replays one trajectory under each strategy; Strategy::none contributes an
// empty verdict stream.
std::map<Strategy, std::vector<EvaluationVerdict>> run_strategy_comparison(
    const std::vector<ReasoningStep>& steps, const std::string& task_goal,
    const std::vector<const Policy*>& candidate_policies,
    const std::vector<ViolationReference>& queued_violations,
    const std::vector<Strategy>& strategies, ChatBackend& backend,
    const CompleteOptions& opts = {});

} // namespace stepguard
