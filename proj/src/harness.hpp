#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "backend.hpp"
#include "metrics.hpp"
#include "runtime.hpp"

namespace stepguard {

// One recorded web-agent trajectory, replayed as a session. Ground truth
// carries the completion bit and per-policy applicability; the mock map keys
// canned evaluator replies by step index.
struct TrajectoryFixture {
    std::string task_id;
    std::string task_goal;
    std::optional<Category> policy_scope;
    std::vector<std::pair<std::string, std::string>> steps; // thought, proposed_action
    bool gt_completed = false;
    std::vector<EntryResult> gt_entries;
    std::map<std::int64_t, Json> mock_by_step; // respond values (object, string, or array)
};

struct FixtureSuite {
    std::string name;
    std::vector<TrajectoryFixture> fixtures; // sorted by task_id
    std::vector<Json> script;                // suite-level mock entries
    std::optional<Json> default_response;    // catch-all; all-clear when absent
};

FixtureSuite load_suite(const std::string& path); // parse errors carry file diagnostics
FixtureSuite suite_from_json(const Json& doc, const std::string& origin);

// Compiles the suite's embedded scripts (fixture step entries first, then an
// optional external script file, then suite-level entries, then the default
// catch-all) into a scripted backend.
std::unique_ptr<MockBackend> build_suite_mock(const FixtureSuite& suite,
                                              const std::string& extra_script_path = {});

struct ReplayResult {
    std::vector<TaskRecord> records;
    std::vector<Json> verdict_log; // one entry per evaluated step
    MetricsReport report;
    std::size_t inserted = 0;
    std::size_t duplicates = 0;
    std::size_t evicted = 0;
    std::size_t errors = 0;
};

// Runs every fixture as a create/steps/close session against the runtime.
ReplayResult replay_suite(Runtime& runtime, const FixtureSuite& suite, Strategy strategy);

// Writes report.json, report.txt, records.json, and verdicts.jsonl.
void write_replay_outputs(const std::string& out_dir, const ReplayResult& result);

// CLI-facing runs; each builds its own runtime from the config.
Json run_replay(const RuntimeConfig& config, const std::string& fixtures_path, Strategy strategy,
                const std::string& out_dir);
Json run_rounds(const RuntimeConfig& config, const std::string& fixtures_path, Strategy strategy,
                int rounds, const std::string& out_dir);
Json run_compare(const RuntimeConfig& config, const std::string& fixtures_path,
                 const std::vector<Strategy>& strategies, const std::string& out_dir);

} // namespace stepguard
