#include "metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "error.hpp"

namespace stepguard {

TaskRecord make_task_record(std::string task_id, bool completed,
                            std::vector<EntryResult> entries) {
    TaskRecord record;
    record.task_id = std::move(task_id);
    record.completed = completed;
    record.entry_results = std::move(entries);
    record.compliant = std::all_of(record.entry_results.begin(), record.entry_results.end(),
                                   [](const EntryResult& e) { return e.complied; });
    return record;
}

MetricsReport compute_metrics(const std::vector<TaskRecord>& records) {
    if (records.empty()) {
        throw Error(ErrorCode::invalid_argument, "compute_metrics requires at least one record");
    }
    MetricsReport report;
    report.n_tasks = records.size();
    std::size_t completed = 0, compliant = 0, both = 0;
    std::size_t entries = 0, complied_entries = 0;
    for (const TaskRecord& r : records) {
        if (r.completed) ++completed;
        if (r.compliant) ++compliant;
        if (r.completed && r.compliant) ++both;
        for (const EntryResult& e : r.entry_results) {
            ++entries;
            if (e.complied) ++complied_entries;
        }
    }
    const double n = static_cast<double>(records.size());
    report.completion = static_cast<double>(completed) / n;
    report.pcr_per_task = static_cast<double>(compliant) / n;
    report.cup = static_cast<double>(both) / n;
    report.pcr_per_entry =
        entries == 0 ? 1.0
                     : static_cast<double>(complied_entries) / static_cast<double>(entries);
    report.violation_gap = report.completion - report.cup;
    return report;
}

ReportLayout report_layout_from_string(std::string_view name) {
    if (name == "table") return ReportLayout::table;
    if (name == "machine") return ReportLayout::machine;
    throw Error(ErrorCode::invalid_argument, "unknown report layout: " + std::string(name));
}

namespace {

std::string three_places(double value) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3f", value);
    return buf;
}

} // namespace

std::string format_report(const MetricsReport& report, ReportLayout layout) {
    if (layout == ReportLayout::machine) {
        return report_to_json(report).dump(2) + "\n";
    }
    std::ostringstream out;
    out << "Metric           Value\n"
        << "---------------  -----\n"
        << "Completion       " << three_places(report.completion) << "\n"
        << "PCR (per task)   " << three_places(report.pcr_per_task) << "\n"
        << "PCR (per entry)  " << three_places(report.pcr_per_entry) << "\n"
        << "CuP              " << three_places(report.cup) << "\n"
        << "Violation gap    " << three_places(report.violation_gap) << "\n"
        << "Tasks            " << report.n_tasks << "\n";
    return out.str();
}

Json report_to_json(const MetricsReport& report) {
    Json doc;
    doc["n_tasks"] = report.n_tasks;
    doc["completion"] = report.completion;
    doc["pcr_per_task"] = report.pcr_per_task;
    doc["pcr_per_entry"] = report.pcr_per_entry;
    doc["cup"] = report.cup;
    doc["violation_gap"] = report.violation_gap;
    return doc;
}

MetricsReport report_from_json(const Json& doc) {
    MetricsReport report;
    report.n_tasks = doc.at("n_tasks").get<std::size_t>();
    report.completion = doc.at("completion").get<double>();
    report.pcr_per_task = doc.at("pcr_per_task").get<double>();
    report.pcr_per_entry = doc.at("pcr_per_entry").get<double>();
    report.cup = doc.at("cup").get<double>();
    report.violation_gap = doc.at("violation_gap").get<double>();
    return report;
}

Json task_record_to_json(const TaskRecord& record) {
    Json doc;
    doc["task_id"] = record.task_id;
    doc["completed"] = record.completed;
    doc["compliant"] = record.compliant;
    Json entries = Json::array();
    for (const EntryResult& e : record.entry_results) {
        entries.push_back(Json{{"policy_id", e.policy_id}, {"complied", e.complied}});
    }
    doc["entry_results"] = std::move(entries);
    return doc;
}

TaskRecord task_record_from_json(const Json& doc) {
    std::vector<EntryResult> entries;
    if (doc.contains("entry_results")) {
        for (const Json& item : doc.at("entry_results")) {
            entries.push_back({item.at("policy_id").get<std::string>(),
                               item.at("complied").get<bool>()});
        }
    } else if (doc.contains("entries")) {
        for (const Json& item : doc.at("entries")) {
            entries.push_back({item.at("policy_id").get<std::string>(),
                               item.at("complied").get<bool>()});
        }
    }
    return make_task_record(doc.at("task_id").get<std::string>(),
                            doc.at("completed").get<bool>(), std::move(entries));
}

} // namespace stepguard
