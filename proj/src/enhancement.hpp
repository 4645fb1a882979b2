#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "backend.hpp"
#include "policy.hpp"
#include "prompts.hpp"

namespace stepguard {

enum class SourceKind { plain_text, markdown, pdf_extracted_text };

SourceKind source_kind_from_string(std::string_view name);
std::string_view to_string(SourceKind kind);

struct SourceDocument {
    std::string doc_id;
    SourceKind kind = SourceKind::plain_text;
    std::string content; // normalized: LF line endings, control characters stripped
    std::string origin;  // path or URL
};

struct SourceSpan {
    std::string doc_id;
    std::size_t begin = 0;
    std::size_t end = 0;

    bool operator==(const SourceSpan&) const = default;
};

struct DraftPolicy {
    std::string raw_statement;
    std::string refined_statement;
    Category proposed_category = Category::other;
    RiskLevel proposed_risk_level = RiskLevel::medium;
    std::string scope = "general";
    std::vector<std::string> constraints;
    std::vector<SourceSpan> source_spans; // merged duplicates accumulate spans
};

// Tool seam: an external extractor (e.g. a PDF text tool) can be plugged in
// per source kind; one tool handles one extraction step.
using TextExtractor = std::function<std::string(const std::string& path)>;
using ExtractorRegistry = std::map<SourceKind, TextExtractor>;

// Builds a normalized document from raw content. Throws on empty content.
SourceDocument make_source_document(std::string doc_id, SourceKind kind, std::string content,
                                    std::string origin);

// Reads and normalizes a source file (or delegates to a registered extractor).
SourceDocument extract_text(const std::string& path, SourceKind kind,
                            const ExtractorRegistry* registry = nullptr);

// LLM refinement: one backend call per document; drafts with an empty refined
// statement are dropped. An empty result is valid.
std::vector<DraftPolicy> refine_policies(const SourceDocument& doc, ChatBackend& backend,
                                         const prompts::OrganizationContext& org,
                                         const std::string& model_name = "policy-agent",
                                         const CompleteOptions& opts = {});

// Two-stage deduplication: pattern-matching similarity on refined statements
// nominates candidate pairs, the backend adjudicates merge (absorb provenance)
// versus drop. Byte-identical statements collapse without consulting the
// backend. Survivors keep first-seen order and no two survivors reach the
// threshold.
std::vector<DraftPolicy> dedup_policies(std::vector<DraftPolicy> drafts, ChatBackend& backend,
                                        double sim_threshold,
                                        const std::string& model_name = "policy-agent",
                                        const CompleteOptions& opts = {});

// Turns deduplicated drafts into stored policies with stable content-hash ids
// (deterministic suffix on collision). Returns the new ids in insertion order.
std::vector<std::string> structure_policies(const std::vector<DraftPolicy>& drafts,
                                            PolicyDatabase& db);

struct IngestResult {
    std::string doc_id;
    std::size_t drafts_extracted = 0;
    std::size_t drafts_after_dedup = 0;
    std::vector<std::string> policy_ids;
};

IngestResult ingest_document(const SourceDocument& doc, ChatBackend& backend, PolicyDatabase& db,
                             double sim_threshold, const prompts::OrganizationContext& org,
                             const std::string& model_name = "policy-agent",
                             const CompleteOptions& opts = {});

} // namespace stepguard
