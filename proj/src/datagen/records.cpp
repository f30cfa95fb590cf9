#include "instret/datagen/records.hpp"

#include "instret/core/error.hpp"

namespace instret::datagen {

std::string make_record_id(const std::string& query_id, InstructionStyle style, LengthFormat length)
{
    return query_id + "/" + std::string(to_string(style)) + "/" + std::string(to_string(length));
}

std::string_view to_string(CandidateLabel label)
{
    return label == CandidateLabel::InstructionPositive ? "instruction_positive" : "instruction_negative";
}

std::string_view to_string(ExplanationTag tag)
{
    switch (tag) {
    case ExplanationTag::DifferentInterpretation: return "different_interpretation";
    case ExplanationTag::Omission: return "omission";
    case ExplanationTag::MentionNonRelevantFlag: return "mention_non_relevant_flag";
    case ExplanationTag::None: return "none";
    }
    return "none";
}

CandidateLabel parse_candidate_label(std::string_view name)
{
    if (name == "instruction_positive") {
        return CandidateLabel::InstructionPositive;
    }
    if (name == "instruction_negative") {
        return CandidateLabel::InstructionNegative;
    }
    throw ValidationError("unknown candidate label '" + std::string(name) + "'");
}

ExplanationTag parse_explanation_tag_name(std::string_view name)
{
    for (auto tag : {ExplanationTag::DifferentInterpretation, ExplanationTag::Omission,
                     ExplanationTag::MentionNonRelevantFlag, ExplanationTag::None}) {
        if (to_string(tag) == name) {
            return tag;
        }
    }
    throw ValidationError("unknown explanation tag '" + std::string(name) + "'");
}

namespace {

template <typename Fn>
auto rethrow_at(std::size_t line, const char* field, Fn fn)
{
    try {
        return fn();
    } catch (const ParseError&) {
        throw;
    } catch (const ValidationError& e) {
        throw ParseError(line, field, e.what());
    }
}

bool optional_bool(const Json& value, const char* field, std::size_t line, bool fallback)
{
    auto it = value.find(field);
    if (it == value.end() || it->is_null()) {
        return fallback;
    }
    if (!it->is_boolean()) {
        throw ParseError(line, field, "expected a boolean");
    }
    return it->get<bool>();
}

std::string string_or_empty(const Json& value, const char* field, std::size_t line)
{
    return optional_string(value, field, line).value_or("");
}

}  // namespace

Json to_json(const InstructionRecord& record)
{
    Json out = Json::object();
    out["record_id"] = record.record_id;
    out["query_id"] = record.query_id;
    out["status"] = record.failed ? "failed" : "ok";
    out["instruction"] = record.failed ? Json(nullptr) : Json(record.instruction);
    out["style"] = std::string(to_string(record.style));
    out["length"] = std::string(to_string(record.length));
    out["original_positive_still_relevant"] =
        record.original_positive_still_relevant ? Json(*record.original_positive_still_relevant) : Json(nullptr);
    out["judge_raw"] = record.judge_raw;
    out["backend_failure"] = record.backend_failure;
    out["error"] = record.error;
    out["raw_response"] = record.raw_response;
    return out;
}

InstructionRecord record_from_json(const Json& value, std::size_t line)
{
    InstructionRecord record;
    record.record_id = require_string(value, "record_id", line);
    record.query_id = require_string(value, "query_id", line);
    const auto status = require_string(value, "status", line);
    if (status != "ok" && status != "failed") {
        throw ParseError(line, "status", "expected 'ok' or 'failed'");
    }
    record.failed = status == "failed";
    record.instruction = string_or_empty(value, "instruction", line);
    if (!record.failed && record.instruction.empty()) {
        throw ParseError(line, "instruction", "ok record needs a non-empty instruction");
    }
    record.style = rethrow_at(line, "style", [&] { return parse_style(require_string(value, "style", line)); });
    record.length = rethrow_at(line, "length", [&] { return parse_length(require_string(value, "length", line)); });
    if (auto it = value.find("original_positive_still_relevant"); it != value.end() && !it->is_null()) {
        if (!it->is_boolean()) {
            throw ParseError(line, "original_positive_still_relevant", "expected a boolean or null");
        }
        record.original_positive_still_relevant = it->get<bool>();
    }
    record.judge_raw = string_or_empty(value, "judge_raw", line);
    record.backend_failure = optional_bool(value, "backend_failure", line, false);
    record.error = string_or_empty(value, "error", line);
    record.raw_response = string_or_empty(value, "raw_response", line);
    return record;
}

std::vector<InstructionRecord> parse_records(std::istream& in)
{
    std::vector<InstructionRecord> records;
    for_each_json_line(in, [&](const Json& value, std::size_t line) { records.push_back(record_from_json(value, line)); });
    return records;
}

void write_records(std::span<const InstructionRecord> records, std::ostream& out)
{
    for (const auto& record : records) {
        out << dump_line(to_json(record)) << '\n';
    }
}

Json to_json(const CandidateSet& set)
{
    Json out = Json::object();
    out["record_id"] = set.record_id;
    out["query_id"] = set.query_id;
    out["status"] = set.failed ? "failed" : "ok";
    out["backend_failure"] = set.backend_failure;
    out["error"] = set.error;
    out["raw_response"] = set.raw_response;
    Json candidates = Json::array();
    for (const auto& candidate : set.candidates) {
        Json entry = to_json(candidate.passage);
        entry["label"] = std::string(to_string(candidate.label));
        entry["tag"] = std::string(to_string(candidate.tag));
        entry["explanation"] = candidate.explanation;
        if (candidate.verdict) {
            entry["judge_relevant"] = candidate.verdict->relevant;
            entry["judge_failed"] = candidate.verdict->failed;
            entry["judge_raw"] = candidate.verdict->raw;
        } else {
            entry["judge_relevant"] = nullptr;
            entry["judge_failed"] = nullptr;
            entry["judge_raw"] = nullptr;
        }
        entry["judge_keep"] = candidate.judge_keep;
        candidates.push_back(std::move(entry));
    }
    out["candidates"] = std::move(candidates);
    return out;
}

CandidateSet candidate_set_from_json(const Json& value, std::size_t line)
{
    CandidateSet set;
    set.record_id = require_string(value, "record_id", line);
    set.query_id = require_string(value, "query_id", line);
    const auto status = require_string(value, "status", line);
    if (status != "ok" && status != "failed") {
        throw ParseError(line, "status", "expected 'ok' or 'failed'");
    }
    set.failed = status == "failed";
    set.backend_failure = optional_bool(value, "backend_failure", line, false);
    set.error = string_or_empty(value, "error", line);
    set.raw_response = string_or_empty(value, "raw_response", line);
    const auto& candidates = require_field(value, "candidates", line);
    if (!candidates.is_array()) {
        throw ParseError(line, "candidates", "expected an array");
    }
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const auto& entry = candidates[i];
        const auto where = "candidates[" + std::to_string(i) + "]";
        CandidatePassage candidate;
        candidate.passage = passage_from_json(entry, line, where);
        candidate.label = rethrow_at(line, "label", [&] { return parse_candidate_label(require_string(entry, "label", line)); });
        candidate.tag = rethrow_at(line, "tag", [&] { return parse_explanation_tag_name(require_string(entry, "tag", line)); });
        candidate.explanation = string_or_empty(entry, "explanation", line);
        if (auto it = entry.find("judge_relevant"); it != entry.end() && !it->is_null()) {
            JudgeVerdict verdict;
            if (!it->is_boolean()) {
                throw ParseError(line, where + ".judge_relevant", "expected a boolean or null");
            }
            verdict.relevant = it->get<bool>();
            verdict.failed = optional_bool(entry, "judge_failed", line, false);
            verdict.raw = string_or_empty(entry, "judge_raw", line);
            candidate.verdict = verdict;
        }
        candidate.judge_keep = optional_bool(entry, "judge_keep", line, false);
        if (candidate.tag == ExplanationTag::None && candidate.label == CandidateLabel::InstructionNegative) {
            throw ParseError(line, where + ".tag", "tag 'none' is reserved for the instruction positive");
        }
        set.candidates.push_back(std::move(candidate));
    }
    return set;
}

std::vector<CandidateSet> parse_candidate_sets(std::istream& in)
{
    std::vector<CandidateSet> sets;
    for_each_json_line(in, [&](const Json& value, std::size_t line) { sets.push_back(candidate_set_from_json(value, line)); });
    return sets;
}

void write_candidate_sets(std::span<const CandidateSet> sets, std::ostream& out)
{
    for (const auto& set : sets) {
        out << dump_line(to_json(set)) << '\n';
    }
}

}  // namespace instret::datagen
