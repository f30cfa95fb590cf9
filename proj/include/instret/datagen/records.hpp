#pragma once

#include <cstddef>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "instret/core/jsonl.hpp"
#include "instret/core/types.hpp"

namespace instret::datagen {

/// One generated instruction for a (query, style, length) cell.
struct InstructionRecord {
    std::string record_id;  // "<query_id>/<style>/<length>"
    std::string query_id;
    std::string instruction;
    InstructionStyle style = InstructionStyle::None;
    LengthFormat length = LengthFormat::Short;
    /// Judge verdict on the source positive under query + instruction;
    /// nullopt until judged.
    std::optional<bool> original_positive_still_relevant;
    std::string judge_raw;
    bool failed = false;
    bool backend_failure = false;
    std::string error;
    std::string raw_response;

    bool operator==(const InstructionRecord&) const = default;
};

std::string make_record_id(const std::string& query_id, InstructionStyle style, LengthFormat length);

enum class CandidateLabel { InstructionPositive, InstructionNegative };
enum class ExplanationTag { DifferentInterpretation, Omission, MentionNonRelevantFlag, None };

std::string_view to_string(CandidateLabel label);
std::string_view to_string(ExplanationTag tag);
CandidateLabel parse_candidate_label(std::string_view name);
ExplanationTag parse_explanation_tag_name(std::string_view name);

struct JudgeVerdict {
    bool relevant = false;
    bool failed = false;
    std::string raw;

    bool operator==(const JudgeVerdict&) const = default;
};

/// A generated passage. The tag is None only for the instruction positive.
struct CandidatePassage {
    Passage passage;
    CandidateLabel label = CandidateLabel::InstructionNegative;
    ExplanationTag tag = ExplanationTag::None;
    std::string explanation;
    std::optional<JudgeVerdict> verdict;
    bool judge_keep = false;

    bool operator==(const CandidatePassage&) const = default;
};

/// Candidates generated for one instruction record.
struct CandidateSet {
    std::string record_id;
    std::string query_id;
    bool failed = false;
    bool backend_failure = false;
    std::string error;
    std::string raw_response;
    std::vector<CandidatePassage> candidates;

    bool operator==(const CandidateSet&) const = default;
};

Json to_json(const InstructionRecord& record);
InstructionRecord record_from_json(const Json& value, std::size_t line);
std::vector<InstructionRecord> parse_records(std::istream& in);
void write_records(std::span<const InstructionRecord> records, std::ostream& out);

Json to_json(const CandidateSet& set);
CandidateSet candidate_set_from_json(const Json& value, std::size_t line);
std::vector<CandidateSet> parse_candidate_sets(std::istream& in);
void write_candidate_sets(std::span<const CandidateSet> sets, std::ostream& out);

}  // namespace instret::datagen
