#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "json.hpp"

namespace stepguard {

using Json = nlohmann::ordered_json;

struct EntryResult {
    std::string policy_id;
    bool complied = true;

    bool operator==(const EntryResult&) const = default;
};

// Per-task outcome: C_i (completed) and P_i (compliant). P_i derives from the
// entry results; a task with no applicable entries is vacuously compliant.
struct TaskRecord {
    std::string task_id;
    bool completed = false;
    bool compliant = true;
    std::vector<EntryResult> entry_results;

    bool operator==(const TaskRecord&) const = default;
};

TaskRecord make_task_record(std::string task_id, bool completed,
                            std::vector<EntryResult> entries);

struct MetricsReport {
    std::size_t n_tasks = 0;
    double completion = 0.0;
    double pcr_per_task = 0.0;
    double pcr_per_entry = 0.0;
    double cup = 0.0;
    double violation_gap = 0.0; // completion - cup

    bool operator==(const MetricsReport&) const = default;
};

// Completion = mean C_i, per-task PCR = mean P_i, CuP = mean C_i*P_i,
// per-entry PCR = complied (task, policy) pairs over all pairs (1.0 when no
// task has entries). Throws on an empty record set.
MetricsReport compute_metrics(const std::vector<TaskRecord>& records);

enum class ReportLayout { table, machine };
ReportLayout report_layout_from_string(std::string_view name);

// Deterministic rendering: fixed row order, three decimal places.
std::string format_report(const MetricsReport& report, ReportLayout layout);

Json report_to_json(const MetricsReport& report);
MetricsReport report_from_json(const Json& doc);
Json task_record_to_json(const TaskRecord& record);
TaskRecord task_record_from_json(const Json& doc);

} // namespace stepguard
