#include "harness.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "error.hpp"

namespace stepguard {

namespace {

Json all_clear_payload() {
    Json body;
    body["policy_violation"] = false;
    body["violated_policy_ids"] = Json::array();
    body["goal_drift"] = false;
    body["threat_explanation"] = "";
    body["deviation_explanation"] = "";
    body["guidance"] = "";
    return body;
}

TrajectoryFixture fixture_from_json(const Json& doc, const std::string& origin) {
    TrajectoryFixture fixture;
    fixture.task_id = doc.at("task_id").get<std::string>();
    fixture.task_goal = doc.at("task_goal").get<std::string>();
    if (doc.contains("policy_scope") && !doc.at("policy_scope").is_null()) {
        const auto name = doc.at("policy_scope").get<std::string>();
        if (!name.empty()) fixture.policy_scope = category_from_string(name);
    }
    if (!doc.contains("steps") || !doc.at("steps").is_array() || doc.at("steps").empty()) {
        throw Error(ErrorCode::parse,
                    origin + ": fixture " + fixture.task_id + " needs a non-empty steps array");
    }
    for (const Json& step : doc.at("steps")) {
        fixture.steps.emplace_back(step.at("thought").get<std::string>(),
                                   step.at("proposed_action").get<std::string>());
    }
    if (!doc.contains("ground_truth")) {
        throw Error(ErrorCode::parse,
                    origin + ": fixture " + fixture.task_id + " is missing ground_truth");
    }
    const Json& gt = doc.at("ground_truth");
    fixture.gt_completed = gt.at("completed").get<bool>();
    if (gt.contains("entries")) {
        for (const Json& item : gt.at("entries")) {
            fixture.gt_entries.push_back(
                {item.at("policy_id").get<std::string>(), item.at("complied").get<bool>()});
        }
    }
    if (doc.contains("mock")) {
        for (const auto& [key, value] : doc.at("mock").items()) {
            std::size_t consumed = 0;
            const long long step_index = std::stoll(key, &consumed);
            if (consumed != key.size() || step_index < 1) {
                throw Error(ErrorCode::parse, origin + ": fixture " + fixture.task_id +
                                                  " mock key is not a step index: " + key);
            }
            fixture.mock_by_step[step_index] = value;
        }
    }
    return fixture;
}

} // namespace

FixtureSuite suite_from_json(const Json& doc, const std::string& origin) {
    FixtureSuite suite;
    if (doc.contains("suite")) suite.name = doc.at("suite").get<std::string>();
    if (!doc.contains("fixtures") || !doc.at("fixtures").is_array() || doc.at("fixtures").empty()) {
        throw Error(ErrorCode::parse, origin + ": suite needs a non-empty fixtures array");
    }
    for (const Json& item : doc.at("fixtures")) {
        suite.fixtures.push_back(fixture_from_json(item, origin));
    }
    std::stable_sort(suite.fixtures.begin(), suite.fixtures.end(),
                     [](const TrajectoryFixture& a, const TrajectoryFixture& b) {
                         return a.task_id < b.task_id;
                     });
    for (std::size_t i = 1; i < suite.fixtures.size(); ++i) {
        if (suite.fixtures[i].task_id == suite.fixtures[i - 1].task_id) {
            throw Error(ErrorCode::parse,
                        origin + ": duplicate task_id " + suite.fixtures[i].task_id);
        }
    }
    if (doc.contains("script")) {
        for (const Json& item : doc.at("script")) suite.script.push_back(item);
    }
    if (doc.contains("default_response")) suite.default_response = doc.at("default_response");
    return suite;
}

FixtureSuite load_suite(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::io, "cannot read fixtures: " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    Json doc;
    try {
        doc = Json::parse(buffer.str());
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::parse, path + ": " + e.what());
    }
    try {
        return suite_from_json(doc, path);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::parse, path + ": malformed suite: " + e.what());
    }
}

std::unique_ptr<MockBackend> build_suite_mock(const FixtureSuite& suite,
                                              const std::string& extra_script_path) {
    auto mock = std::make_unique<MockBackend>();
    for (const TrajectoryFixture& fixture : suite.fixtures) {
        for (const auto& [step_index, respond] : fixture.mock_by_step) {
            Json entry;
            entry["role"] = "utility_agent";
            entry["match"] = Json{{"task_id", fixture.task_id}, {"step_index", step_index}};
            entry["respond"] = respond;
            mock->add_entry(MockBackend::entry_from_json(entry));
        }
    }
    if (!extra_script_path.empty()) {
        std::ifstream in(extra_script_path, std::ios::binary);
        if (!in) throw Error(ErrorCode::io, "cannot open mock script: " + extra_script_path);
        std::stringstream buffer;
        buffer << in.rdbuf();
        Json doc;
        try {
            doc = Json::parse(buffer.str());
        } catch (const nlohmann::json::parse_error& e) {
            throw Error(ErrorCode::parse, extra_script_path + ": " + e.what());
        }
        if (!doc.contains("script") || !doc.at("script").is_array()) {
            throw Error(ErrorCode::parse, extra_script_path + ": requires a \"script\" array");
        }
        for (const Json& item : doc.at("script")) {
            mock->add_entry(MockBackend::entry_from_json(item));
        }
    }
    for (const Json& item : suite.script) {
        mock->add_entry(MockBackend::entry_from_json(item));
    }
    Json catch_all;
    catch_all["role"] = "utility_agent";
    catch_all["respond"] = suite.default_response ? *suite.default_response : all_clear_payload();
    mock->add_entry(MockBackend::entry_from_json(catch_all));
    return mock;
}

ReplayResult replay_suite(Runtime& runtime, const FixtureSuite& suite, Strategy strategy) {
    ReplayResult result;
    for (const TrajectoryFixture& fixture : suite.fixtures) {
        const std::string session_id =
            runtime.create_session(fixture.task_goal, fixture.policy_scope, strategy,
                                   fixture.task_id);
        for (const auto& [thought, action] : fixture.steps) {
            const auto verdict = runtime.submit_step(session_id, thought, action);
            if (!verdict) continue; // strategy none: zero verdicts
            Json line;
            line["task_id"] = fixture.task_id;
            line["session_id"] = session_id;
            line["strategy"] = std::string(to_string(strategy));
            line.update(verdict_to_json(*verdict));
            result.verdict_log.push_back(std::move(line));
        }
        GroundTruth gt;
        gt.task_id = fixture.task_id;
        gt.completed = fixture.gt_completed;
        gt.entries = fixture.gt_entries;
        const SessionCloseResult closed = runtime.close_session(session_id, gt);
        for (const UpdateOutcome& outcome : closed.outcomes) {
            if (outcome.error) {
                ++result.errors;
            } else if (outcome.inserted) {
                ++result.inserted;
                if (outcome.evicted) ++result.evicted;
            } else if (outcome.duplicate_of) {
                ++result.duplicates;
            }
        }
        if (closed.record) result.records.push_back(*closed.record);
    }
    result.report = compute_metrics(result.records);
    return result;
}

void write_replay_outputs(const std::string& out_dir, const ReplayResult& result) {
    std::filesystem::create_directories(out_dir);
    const auto write_file = [&](const std::string& name, const std::string& content) {
        const std::string path = (std::filesystem::path(out_dir) / name).string();
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::io, "cannot write " + path);
        out << content;
    };
    write_file("report.json", report_to_json(result.report).dump(2) + "\n");
    write_file("report.txt", format_report(result.report, ReportLayout::table));
    Json records = Json::array();
    for (const TaskRecord& record : result.records) records.push_back(task_record_to_json(record));
    write_file("records.json", records.dump(2) + "\n");
    std::string verdicts;
    for (const Json& line : result.verdict_log) verdicts += line.dump() + "\n";
    write_file("verdicts.jsonl", verdicts);
}

namespace {

std::unique_ptr<ChatBackend> backend_for_suite(const RuntimeConfig& config,
                                               const FixtureSuite& suite) {
    if (config.backend.type == "remote") return make_backend(config.backend);
    return build_suite_mock(suite, config.backend.script_path);
}

Json outcome_counts(const ReplayResult& result) {
    return Json{{"inserted", result.inserted},
                {"duplicates", result.duplicates},
                {"evicted", result.evicted},
                {"errors", result.errors}};
}

Json summary_for(const FixtureSuite& suite, Strategy strategy, const ReplayResult& result) {
    Json summary;
    summary["suite"] = suite.name;
    summary["strategy"] = std::string(to_string(strategy));
    summary["n_fixtures"] = suite.fixtures.size();
    summary["report"] = report_to_json(result.report);
    summary["update_outcomes"] = outcome_counts(result);
    return summary;
}

} // namespace

Json run_replay(const RuntimeConfig& config, const std::string& fixtures_path, Strategy strategy,
                const std::string& out_dir) {
    const FixtureSuite suite = load_suite(fixtures_path);
    Runtime runtime(config, backend_for_suite(config, suite));
    const ReplayResult result = replay_suite(runtime, suite, strategy);
    runtime.persist();
    if (!out_dir.empty()) write_replay_outputs(out_dir, result);
    return summary_for(suite, strategy, result);
}

Json run_rounds(const RuntimeConfig& config, const std::string& fixtures_path, Strategy strategy,
                int rounds, const std::string& out_dir) {
    if (rounds < 1) throw Error(ErrorCode::invalid_argument, "rounds must be >= 1");
    const FixtureSuite suite = load_suite(fixtures_path);
    Runtime runtime(config, backend_for_suite(config, suite));
    Json per_round = Json::array();
    for (int round = 1; round <= rounds; ++round) {
        const ReplayResult result = replay_suite(runtime, suite, strategy);
        runtime.persist();
        Json summary = summary_for(suite, strategy, result);
        summary["round"] = round;
        if (!out_dir.empty()) {
            const std::string round_dir =
                (std::filesystem::path(out_dir) / ("round-" + std::to_string(round))).string();
            write_replay_outputs(round_dir, result);
            runtime.snapshot()->save(
                (std::filesystem::path(round_dir) / "db.json").string());
        }
        per_round.push_back(std::move(summary));
    }
    Json out;
    out["suite"] = suite.name;
    out["rounds"] = std::move(per_round);
    return out;
}

Json run_compare(const RuntimeConfig& config, const std::string& fixtures_path,
                 const std::vector<Strategy>& strategies, const std::string& out_dir) {
    const FixtureSuite suite = load_suite(fixtures_path);

    // Every strategy replays from the same starting database.
    std::string initial_db_bytes;
    if (!config.database_path.empty() && std::filesystem::exists(config.database_path)) {
        std::ifstream in(config.database_path, std::ios::binary);
        std::stringstream buffer;
        buffer << in.rdbuf();
        initial_db_bytes = buffer.str();
    }

    Json comparison = Json::array();
    for (const Strategy strategy : strategies) {
        RuntimeConfig per_strategy = config;
        std::string strategy_dir;
        if (!out_dir.empty()) {
            strategy_dir =
                (std::filesystem::path(out_dir) / std::string(to_string(strategy))).string();
            std::filesystem::create_directories(strategy_dir);
        }
        if (!strategy_dir.empty()) {
            const std::string db_copy = (std::filesystem::path(strategy_dir) / "db.json").string();
            if (!initial_db_bytes.empty()) {
                std::ofstream out(db_copy, std::ios::binary | std::ios::trunc);
                out << initial_db_bytes;
            }
            per_strategy.database_path = db_copy;
        } else if (!initial_db_bytes.empty()) {
            const std::string db_copy =
                (std::filesystem::temp_directory_path() /
                 ("compare-db-" + std::string(to_string(strategy)) + ".json"))
                    .string();
            std::ofstream out(db_copy, std::ios::binary | std::ios::trunc);
            out << initial_db_bytes;
            per_strategy.database_path = db_copy;
        } else {
            per_strategy.database_path.clear();
        }
        Runtime runtime(per_strategy, backend_for_suite(per_strategy, suite));
        const ReplayResult result = replay_suite(runtime, suite, strategy);
        runtime.persist();
        if (!strategy_dir.empty()) write_replay_outputs(strategy_dir, result);
        comparison.push_back(summary_for(suite, strategy, result));
    }
    Json out;
    out["suite"] = suite.name;
    out["comparison"] = std::move(comparison);
    return out;
}

} // namespace stepguard
