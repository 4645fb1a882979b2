#include "enhancement.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "error.hpp"
#include "similarity.hpp"

namespace stepguard {

SourceKind source_kind_from_string(std::string_view name) {
    if (name == "plain_text") return SourceKind::plain_text;
    if (name == "markdown") return SourceKind::markdown;
    if (name == "pdf_extracted_text") return SourceKind::pdf_extracted_text;
    throw Error(ErrorCode::invalid_argument, "unsupported source kind: " + std::string(name));
}

std::string_view to_string(SourceKind kind) {
    switch (kind) {
        case SourceKind::plain_text: return "plain_text";
        case SourceKind::markdown: return "markdown";
        case SourceKind::pdf_extracted_text: return "pdf_extracted_text";
    }
    return "plain_text";
}

namespace {

// Unify line endings and drop control characters; markup stays verbatim.
std::string normalize_content(std::string_view raw) {
    std::string out;
    out.reserve(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        const char c = raw[i];
        if (c == '\r') {
            if (i + 1 < raw.size() && raw[i + 1] == '\n') continue;
            out.push_back('\n');
            continue;
        }
        if (c == '\n' || c == '\t') {
            out.push_back(c);
            continue;
        }
        if (static_cast<unsigned char>(c) < 0x20 || c == '\x7f') continue;
        out.push_back(c);
    }
    return out;
}

bool is_blank(const std::string& text) {
    return std::all_of(text.begin(), text.end(),
                       [](unsigned char c) { return std::isspace(c) != 0; });
}

} // namespace

SourceDocument make_source_document(std::string doc_id, SourceKind kind, std::string content,
                                    std::string origin) {
    SourceDocument doc;
    doc.doc_id = std::move(doc_id);
    doc.kind = kind;
    doc.content = normalize_content(content);
    doc.origin = std::move(origin);
    if (doc.content.empty() || is_blank(doc.content)) {
        throw Error(ErrorCode::invalid_argument, "source document has no content: " + doc.doc_id);
    }
    return doc;
}

SourceDocument extract_text(const std::string& path, SourceKind kind,
                            const ExtractorRegistry* registry) {
    std::string raw;
    if (registry != nullptr) {
        const auto it = registry->find(kind);
        if (it != registry->end()) raw = it->second(path);
    }
    if (raw.empty()) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw Error(ErrorCode::io, "cannot read source: " + path);
        std::stringstream buffer;
        buffer << in.rdbuf();
        raw = buffer.str();
    }
    const std::string doc_id = std::filesystem::path(path).stem().string();
    return make_source_document(doc_id.empty() ? path : doc_id, kind, std::move(raw), path);
}

std::vector<DraftPolicy> refine_policies(const SourceDocument& doc, ChatBackend& backend,
                                         const prompts::OrganizationContext& org,
                                         const std::string& model_name,
                                         const CompleteOptions& opts) {
    ChatRequest request;
    request.system_prompt = prompts::policy_system_prompt(org);
    request.user_payload = prompts::refinement_payload(doc.doc_id, doc.content);
    request.response_schema = "policy_drafts";
    request.model_name = model_name;
    request.meta.role = "policy_agent";
    request.meta.task_id = doc.doc_id;

    const Json payload = complete(backend, request, opts);
    std::vector<DraftPolicy> drafts;
    for (const Json& item : payload.at("policies")) {
        DraftPolicy draft;
        draft.refined_statement = sim::canonicalize(item.at("statement").get<std::string>());
        if (draft.refined_statement.empty()) continue; // reject, keep the rest
        draft.proposed_category = category_from_string(item.at("category").get<std::string>());
        draft.proposed_risk_level = risk_level_from_string(item.at("risk_level").get<std::string>());
        if (item.contains("scope") && item.at("scope").is_string() &&
            !item.at("scope").get<std::string>().empty()) {
            draft.scope = item.at("scope").get<std::string>();
        }
        if (item.contains("constraints")) {
            for (const Json& c : item.at("constraints")) {
                if (c.is_string() && !c.get<std::string>().empty()) {
                    draft.constraints.push_back(c.get<std::string>());
                }
            }
        }
        if (draft.constraints.empty()) draft.constraints.push_back(draft.refined_statement);

        std::string excerpt;
        if (item.contains("excerpt") && item.at("excerpt").is_string()) {
            excerpt = item.at("excerpt").get<std::string>();
        }
        SourceSpan span{doc.doc_id, 0, doc.content.size()};
        if (!excerpt.empty()) {
            const auto pos = doc.content.find(excerpt);
            if (pos != std::string::npos) {
                span.begin = pos;
                span.end = pos + excerpt.size();
            }
        }
        draft.raw_statement = excerpt.empty() ? draft.refined_statement : excerpt;
        draft.source_spans.push_back(span);
        drafts.push_back(std::move(draft));
    }
    return drafts;
}

namespace {

bool confirm_merge(ChatBackend& backend, const DraftPolicy& kept, const DraftPolicy& incoming,
                   const std::string& model_name, const CompleteOptions& opts) {
    ChatRequest request;
    request.system_prompt = "You adjudicate duplicate policy statements.";
    request.user_payload = prompts::merge_payload(kept.refined_statement, incoming.refined_statement);
    request.response_schema = "merge_decision";
    request.model_name = model_name;
    request.meta.role = "policy_agent";
    return complete(backend, request, opts).at("merge").get<bool>();
}

} // namespace

std::vector<DraftPolicy> dedup_policies(std::vector<DraftPolicy> drafts, ChatBackend& backend,
                                        double sim_threshold, const std::string& model_name,
                                        const CompleteOptions& opts) {
    std::vector<DraftPolicy> survivors;
    for (DraftPolicy& draft : drafts) {
        bool absorbed = false;
        for (DraftPolicy& kept : survivors) {
            if (kept.refined_statement == draft.refined_statement) {
                kept.source_spans.insert(kept.source_spans.end(), draft.source_spans.begin(),
                                         draft.source_spans.end());
                absorbed = true;
                break;
            }
            const double score =
                sim::canonical_ratio(kept.refined_statement, draft.refined_statement);
            if (score < sim_threshold) continue;
            if (confirm_merge(backend, kept, draft, model_name, opts)) {
                kept.source_spans.insert(kept.source_spans.end(), draft.source_spans.begin(),
                                         draft.source_spans.end());
            }
            absorbed = true; // either merged or dropped; never two near-duplicates survive
            break;
        }
        if (!absorbed) survivors.push_back(std::move(draft));
    }
    return survivors;
}

namespace {

std::uint64_t fnv1a64(std::string_view data) {
    std::uint64_t hash = 1469598103934665603ull;
    for (const char c : data) {
        hash ^= static_cast<unsigned char>(c);
        hash *= 1099511628211ull;
    }
    return hash;
}

std::string stable_policy_id(const DraftPolicy& draft) {
    std::string key = draft.refined_statement;
    key.push_back('\x1f');
    key += to_string(draft.proposed_category);
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(key)));
    return std::string("pol-") + std::string(buf).substr(0, 12);
}

} // namespace

std::vector<std::string> structure_policies(const std::vector<DraftPolicy>& drafts,
                                            PolicyDatabase& db) {
    std::vector<std::string> ids;
    for (const DraftPolicy& draft : drafts) {
        Policy policy;
        std::string id = stable_policy_id(draft);
        for (int suffix = 2; db.contains(id); ++suffix) {
            id = stable_policy_id(draft) + "-" + std::to_string(suffix);
        }
        policy.id = id;
        policy.category = draft.proposed_category;
        policy.scope = draft.scope;
        policy.definition = draft.refined_statement;
        policy.constraints = draft.constraints;
        policy.risk_level = draft.proposed_risk_level;
        if (!draft.source_spans.empty()) {
            const SourceSpan& primary = draft.source_spans.front();
            policy.source.doc_id = primary.doc_id;
            policy.source.location =
                "chars " + std::to_string(primary.begin) + "-" + std::to_string(primary.end);
        }
        db.insert_policy(std::move(policy));
        ids.push_back(std::move(id));
    }
    return ids;
}

IngestResult ingest_document(const SourceDocument& doc, ChatBackend& backend, PolicyDatabase& db,
                             double sim_threshold, const prompts::OrganizationContext& org,
                             const std::string& model_name, const CompleteOptions& opts) {
    IngestResult result;
    result.doc_id = doc.doc_id;
    auto drafts = refine_policies(doc, backend, org, model_name, opts);
    result.drafts_extracted = drafts.size();
    auto survivors = dedup_policies(std::move(drafts), backend, sim_threshold, model_name, opts);
    result.drafts_after_dedup = survivors.size();
    result.policy_ids = structure_policies(survivors, db);
    return result;
}

} // namespace stepguard
