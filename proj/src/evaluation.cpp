#include "evaluation.hpp"

#include <sstream>

#include "error.hpp"
#include "prompts.hpp"
#include "similarity.hpp"

namespace stepguard {

Strategy strategy_from_string(std::string_view name) {
    if (name == "none") return Strategy::none;
    if (name == "full_trajectory") return Strategy::full_trajectory;
    if (name == "current_step") return Strategy::current_step;
    if (name == "second_order_markov" || name == "markovian") return Strategy::second_order_markov;
    throw Error(ErrorCode::invalid_argument, "unknown strategy: " + std::string(name));
}

std::string_view to_string(Strategy strategy) {
    switch (strategy) {
        case Strategy::none: return "none";
        case Strategy::full_trajectory: return "full_trajectory";
        case Strategy::current_step: return "current_step";
        case Strategy::second_order_markov: return "second_order_markov";
    }
    return "none";
}

std::vector<ReasoningStep> select_window(const std::vector<ReasoningStep>& history,
                                         Strategy strategy) {
    if (history.empty()) {
        throw Error(ErrorCode::invalid_argument, "select_window requires a non-empty history");
    }
    switch (strategy) {
        case Strategy::none:
            throw Error(ErrorCode::invalid_argument, "strategy none bypasses evaluation");
        case Strategy::full_trajectory:
            return history;
        case Strategy::current_step:
            return {history.back()};
        case Strategy::second_order_markov:
            if (history.size() == 1) return {history.front()};
            return {history[history.size() - 2], history.back()};
    }
    throw Error(ErrorCode::internal, "unreachable");
}

EvaluationContext make_context(const std::vector<ReasoningStep>& history, Strategy strategy,
                               std::string task_goal,
                               std::vector<const Policy*> candidate_policies,
                               std::vector<ViolationReference> queued_violations) {
    EvaluationContext ctx;
    ctx.strategy = strategy;
    ctx.window = select_window(history, strategy);
    ctx.task_goal = std::move(task_goal);
    ctx.candidate_policies = std::move(candidate_policies);
    ctx.queued_violations = std::move(queued_violations);
    return ctx;
}

namespace {

std::vector<std::string> split_guidelines(const std::string& guidance) {
    std::vector<std::string> out;
    std::istringstream in(guidance);
    std::string line;
    while (std::getline(in, line)) {
        const auto begin = line.find_first_not_of(" \t-");
        if (begin == std::string::npos) continue;
        const auto end = line.find_last_not_of(" \t\r");
        out.push_back(line.substr(begin, end - begin + 1));
    }
    return out;
}

} // namespace

OptimizationGuidance build_guidance(const VerdictPayload& payload, const std::string& task_goal) {
    OptimizationGuidance g;
    g.threat_explanation = payload.threat_explanation;
    g.deviation_explanation = payload.deviation_explanation;
    g.guidelines = split_guidelines(payload.guidance);

    std::ostringstream frame;
    frame << "== Reflection before your next step ==\n"
          << "Stage 1 (comprehend): Re-read the task goal and your latest reasoning step.\n"
          << "  Task goal: " << task_goal << "\n"
          << "Stage 2 (initial judgment): State what your previous step was trying to do and "
             "which assumption made it look safe.\n"
          << "Stage 3 (critical evaluation): Weigh that judgment against the findings below.\n"
          << "  Threat assessment: "
          << (g.threat_explanation.empty() ? "(no policy threat identified)" : g.threat_explanation)
          << "\n"
          << "  Deviation assessment: "
          << (g.deviation_explanation.empty() ? "(no goal deviation identified)"
                                              : g.deviation_explanation)
          << "\n"
          << "  Guidelines:\n";
    if (g.guidelines.empty()) {
        frame << "    - (none provided)\n";
    } else {
        for (const std::string& line : g.guidelines) {
            frame << "    - " << line << "\n";
        }
    }
    frame << "Stage 4 (final decision): Produce a revised reasoning step that resolves every "
             "finding above while still pursuing the task goal.";
    g.reflection_frame = frame.str();
    return g;
}

EvaluationVerdict unavailable_verdict(std::int64_t step_index, const std::string& reason) {
    EvaluationVerdict verdict;
    verdict.step_index = step_index;
    verdict.unavailable = true;
    OptimizationGuidance g;
    g.threat_explanation = "evaluation unavailable: " + reason;
    g.guidelines = {"Hold the proposed action; it has not been checked against policy.",
                    "Resubmit this reasoning step once the evaluator is reachable."};
    std::ostringstream frame;
    frame << "== Evaluation unavailable ==\n"
          << "The step evaluator could not run (" << reason << ").\n"
          << "Hold the proposed action and resubmit this step; do not proceed unchecked.";
    g.reflection_frame = frame.str();
    verdict.guidance = std::move(g);
    return verdict;
}

EvaluationVerdict evaluate_step(const EvaluationContext& ctx, ChatBackend& backend,
                                const CompleteOptions& opts) {
    if (ctx.strategy == Strategy::none) {
        throw Error(ErrorCode::invalid_argument, "strategy none bypasses evaluation");
    }
    if (ctx.window.empty()) {
        throw Error(ErrorCode::invalid_argument, "evaluation window must be non-empty");
    }
    const ReasoningStep& current = ctx.window.back();

    std::vector<prompts::WindowLine> lines;
    lines.reserve(ctx.window.size());
    for (const ReasoningStep& step : ctx.window) {
        lines.push_back({step.index, step.thought, step.proposed_action});
    }

    ChatRequest request;
    request.system_prompt = prompts::utility_system_prompt();
    request.user_payload =
        prompts::evaluation_payload(ctx.task_goal, lines, ctx.candidate_policies,
                                    ctx.queued_violations);
    request.response_schema = "verdict";
    request.model_name = ctx.model_name;
    request.meta.role = "utility_agent";
    request.meta.session_id = ctx.session_id;
    request.meta.task_id = ctx.task_id;
    request.meta.step_index = current.index;
    for (const ReasoningStep& step : ctx.window) {
        request.meta.window_steps.push_back(step.index);
    }

    VerdictPayload payload;
    try {
        payload = verdict_from_json(complete(backend, request, opts));
    } catch (const Error& e) {
        if (e.code() == ErrorCode::backend || e.code() == ErrorCode::parse) {
            return unavailable_verdict(current.index, e.what());
        }
        throw;
    }

    EvaluationVerdict verdict;
    verdict.step_index = current.index;
    verdict.policy_flag = payload.policy_violation;
    verdict.goal_flag = payload.goal_drift;
    verdict.violated_policy_ids = payload.violated_policy_ids;
    if (verdict.policy_flag || verdict.goal_flag) {
        verdict.guidance = build_guidance(payload, ctx.task_goal);
    }
    if (verdict.policy_flag) {
        for (const std::string& policy_id : payload.violated_policy_ids) {
            ViolationReference ref;
            ref.policy_id = policy_id;
            ref.canonical_text = sim::canonicalize(payload.threat_explanation);
            ref.step_index = current.index;
            ref.task_goal = ctx.task_goal;
            ref.risk_level = RiskLevel::medium;
            for (const Policy* p : ctx.candidate_policies) {
                if (p->id == policy_id) {
                    ref.risk_level = p->risk_level;
                    break;
                }
            }
            verdict.emitted_violations.push_back(std::move(ref));
        }
    }
    return verdict;
}

Json guidance_to_json(const OptimizationGuidance& guidance) {
    Json doc;
    doc["threat_explanation"] = guidance.threat_explanation;
    doc["deviation_explanation"] = guidance.deviation_explanation;
    doc["guidelines"] = guidance.guidelines;
    doc["reflection_frame"] = guidance.reflection_frame;
    return doc;
}

Json verdict_to_json(const EvaluationVerdict& verdict) {
    Json doc;
    doc["step_index"] = verdict.step_index;
    doc["policy_violation"] = verdict.policy_flag;
    doc["goal_drift"] = verdict.goal_flag;
    doc["evaluation_unavailable"] = verdict.unavailable;
    doc["violated_policy_ids"] = verdict.violated_policy_ids;
    doc["guidance"] = verdict.guidance ? guidance_to_json(*verdict.guidance) : Json(nullptr);
    return doc;
}

std::map<Strategy, std::vector<EvaluationVerdict>> run_strategy_comparison(
    const std::vector<ReasoningStep>& steps, const std::string& task_goal,
    const std::vector<const Policy*>& candidate_policies,
    const std::vector<ViolationReference>& queued_violations,
    const std::vector<Strategy>& strategies, ChatBackend& backend, const CompleteOptions& opts) {
    std::map<Strategy, std::vector<EvaluationVerdict>> results;
    for (const Strategy strategy : strategies) {
        auto& stream = results[strategy];
        if (strategy == Strategy::none) continue;
        std::vector<ReasoningStep> history;
        for (const ReasoningStep& step : steps) {
            history.push_back(step);
            EvaluationContext ctx = make_context(history, strategy, task_goal, candidate_policies,
                                                 queued_violations);
            ctx.session_id = std::string(to_string(strategy));
            stream.push_back(evaluate_step(ctx, backend, opts));
        }
    }
    return results;
}

} // namespace stepguard
