/* stepguard.h - C API for the step-wise agent guardrail runtime.
 *
 * The runtime evaluates web-agent reasoning steps against a structured policy
 * database, hands back corrective guidance, and feeds confirmed violations
 * through a similarity-filtered, risk-tiered FIFO update pipeline.
 *
 * All functions returning sg_status use SG_OK (0) for success; on failure
 * sg_last_error() describes the problem for the calling thread. Strings
 * returned through char** out-parameters are heap-allocated JSON documents
 * (UTF-8) that the caller releases with sg_string_free().
 */

#ifndef STEPGUARD_H
#define STEPGUARD_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum sg_status {
    SG_OK = 0,
    SG_ERR_INVALID_ARGUMENT = 1,
    SG_ERR_NOT_FOUND = 2,
    SG_ERR_DUPLICATE = 3,
    SG_ERR_PARSE = 4,
    SG_ERR_SCHEMA_VERSION = 5,
    SG_ERR_BACKEND = 6,
    SG_ERR_BAD_STATE = 7,
    SG_ERR_IO = 8,
    SG_ERR_INTERNAL = 9
} sg_status;

/* Opaque runtime handle: configuration + backend + policy database + sessions. */
typedef struct sg_runtime sg_runtime;

const char* sg_version(void);

/* Thread-local message describing the most recent failure on this thread. */
const char* sg_last_error(void);

void sg_string_free(char* s);

/* Opens a runtime from a JSON configuration document (not a path). An empty
 * or NULL string uses the defaults: in-memory database, unscripted mock
 * backend, markovian strategy, theta 0.85, queue capacities 5/7/10.
 * Returns NULL on error. */
sg_runtime* sg_runtime_open(const char* config_json);
void sg_runtime_close(sg_runtime* rt);

/* Similarity score in [0,1] between two UTF-8 texts (gestalt pattern
 * matching over Unicode scalar values). Total function; never fails. */
double sg_similarity(const char* a, const char* b);

/* --- policy database ---------------------------------------------------- */

/* Runs the enhancement pipeline (extract, refine, dedup, structure) on a
 * document. Exactly one of `path` or `content` must be non-NULL. `kind` is
 * "plain_text", "markdown", or "pdf_extracted_text" (NULL = plain_text).
 * *summary_json_out: {"doc_id", "drafts_extracted", "drafts_after_dedup",
 * "ingested", "policy_ids"}. */
sg_status sg_ingest(sg_runtime* rt, const char* path, const char* content, const char* doc_id,
                    const char* kind, char** summary_json_out);

/* *policies_json_out: {"count", "policies": [...]} filtered by optional
 * category and case-insensitive scope substring (NULL = no filter). */
sg_status sg_query_policies(sg_runtime* rt, const char* category, const char* scope_hint,
                            char** policies_json_out);

/* --- sessions ------------------------------------------------------------ */

/* policy_scope: optional category filter (NULL = all categories).
 * strategy: "none", "full_trajectory", "current_step", "second_order_markov"
 * (alias "markovian"), or NULL for the configured default. */
sg_status sg_session_create(sg_runtime* rt, const char* task_goal, const char* policy_scope,
                            const char* strategy, char** session_id_out);

/* Evaluates one reasoning step. *verdict_json_out carries the dual-objective
 * verdict: {"evaluated", "step_index", "policy_violation", "goal_drift",
 * "evaluation_unavailable", "violated_policy_ids", "guidance"}. A backend
 * failure is reported fail-closed inside the verdict, not as an sg_status
 * error. */
sg_status sg_session_step(sg_runtime* rt, const char* session_id, const char* thought,
                          const char* proposed_action, char** verdict_json_out);

/* Flushes the session's violations through the update pipeline and persists
 * the database. ground_truth_json (optional, may be NULL):
 * {"task_id"?, "completed", "entries": [{"policy_id", "complied"}]}.
 * *outcomes_json_out: {"session_id", "flushed", "outcomes": [...]}. */
sg_status sg_session_close(sg_runtime* rt, const char* session_id, const char* ground_truth_json,
                           char** outcomes_json_out);

/* --- batch replay -------------------------------------------------------- */

/* Replays a trajectory fixture suite (one session per fixture) against the
 * runtime's configuration. out_dir (optional) receives report.json,
 * report.txt, records.json, and verdicts.jsonl. */
sg_status sg_replay(sg_runtime* rt, const char* fixtures_path, const char* strategy,
                    const char* out_dir, char** summary_json_out);

/* Same suite replayed `rounds` times against the evolving database. */
sg_status sg_replay_rounds(sg_runtime* rt, const char* fixtures_path, const char* strategy,
                           int rounds, const char* out_dir, char** summary_json_out);

/* Replays the suite once per strategy, each from a copy of the starting
 * database. strategies_csv: comma-separated names, or "all". */
sg_status sg_compare_strategies(sg_runtime* rt, const char* fixtures_path,
                                const char* strategies_csv, const char* out_dir,
                                char** summary_json_out);

/* --- metrics -------------------------------------------------------------- */

/* records_json: array of {"task_id", "completed", "entry_results"|"entries"}.
 * *report_json_out: {"n_tasks", "completion", "pcr_per_task",
 * "pcr_per_entry", "cup", "violation_gap"}. */
sg_status sg_metrics_compute(const char* records_json, char** report_json_out);

/* layout: "table" or "machine". */
sg_status sg_metrics_format(const char* report_json, const char* layout, char** text_out);

/* --- service -------------------------------------------------------------- */

/* Serves the HTTP gateway. listen_address "host:port" overrides the config
 * (NULL = config value). Blocks until sg_serve_stop is called from another
 * thread (or the process is signalled). */
sg_status sg_serve(sg_runtime* rt, const char* listen_address);
sg_status sg_serve_stop(sg_runtime* rt);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* STEPGUARD_H */
