#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "instret/core/jsonl.hpp"
#include "instret/core/types.hpp"
#include "instret/datagen/backend.hpp"
#include "instret/datagen/records.hpp"
#include "instret/datagen/templates.hpp"

namespace instret::datagen {

/// Parses `text` as JSON; on failure strips everything before the first
/// '{' / '[' and after the last '}' / ']' and tries exactly once more.
std::optional<Json> parse_json_lenient(std::string_view text);

/// Reads a judge answer ("true"/"false", "yes"/"no", ...). nullopt when the
/// answer is neither.
std::optional<bool> parse_judge_answer(std::string_view raw);

/// Maps a free-text explanation ("omission - it does not mention ...") to
/// its tag. nullopt when no tag is recognisable.
std::optional<ExplanationTag> classify_explanation(std::string_view explanation);

/// Fills the instruction-generation template for one (style, length) cell,
/// with the positive as document [1] and `non_relevant` numbered after it,
/// and parses the JSON reply. Failures (backend or unparseable reply) come
/// back as a record with `failed` set.
InstructionRecord gen_instructions(const InstructedQuery& query, const Passage& positive,
                                   std::span<const Passage> non_relevant, InstructionStyle style, LengthFormat length,
                                   LmBackend& backend, const PromptTemplates& templates);

/// Asks the judge whether `passage` is relevant to query + instruction. A
/// backend failure or unreadable answer yields `failed` with relevant=false.
JudgeVerdict judge_relevance(const std::string& query_id, const std::string& record_id, std::string_view query,
                             std::string_view instruction, const Passage& passage, std::string_view role,
                             LmBackend& judge, const PromptTemplates& templates);

/// Records the judge's verdict on the source positive in `record` and returns
/// it; judge failures count as not relevant.
bool judge_original_positive(InstructionRecord& record, std::string_view query, const Passage& positive,
                             LmBackend& judge, const PromptTemplates& templates);

/// One instruction positive and three instruction negatives from a single
/// reply. Anything else (wrong count, missing keys, unknown tag) marks the
/// set failed.
CandidateSet gen_candidates(const InstructionRecord& record, std::string_view query, LmBackend& backend,
                            const PromptTemplates& templates);

/// Judges every candidate. Instruction negatives are kept iff judged NOT
/// relevant, the instruction positive iff judged relevant; judge failures
/// never keep a candidate.
void filter_candidates(CandidateSet& set, std::string_view query, std::string_view instruction, LmBackend& judge,
                       const PromptTemplates& templates);

struct AssembleOptions {
    std::size_t negatives_per_instance = 15;
    std::uint64_t seed = 0;
};

struct AssembleResult {
    std::vector<TrainInstance> instances;
    std::vector<Json> audit;
};

/// Builds one training instance per usable record. The positive is the
/// source positive when the judge kept it, else the kept generated positive,
/// else the instance falls back to the instruction-free source. Negatives are
/// the kept instruction negatives followed by a seeded sample (without
/// replacement) of the source's hard pool, N in total.
AssembleResult assemble_training_set(std::span<const TrainInstance> sources,
                                     std::span<const InstructionRecord> records,
                                     std::span<const CandidateSet> candidates, const AssembleOptions& options);

struct GenerationOptions {
    std::uint64_t seed = 0;
    bool exhaustive_grid = false;
    std::size_t non_relevant_docs = 3;
    std::size_t jobs = 8;
};

/// (style, length) cells for a query: all 16 with the exhaustive grid,
/// otherwise one seeded draw.
std::vector<std::pair<InstructionStyle, LengthFormat>> plan_cells(const std::string& query_id, std::uint64_t seed,
                                                                  bool exhaustive_grid);

/// Instruction generation plus the original-positive judgment for every
/// source instance, in source order.
std::vector<InstructionRecord> generate_instruction_records(std::span<const TrainInstance> sources,
                                                            LmBackend& generator, LmBackend& judge,
                                                            const PromptTemplates& templates,
                                                            const GenerationOptions& options);

/// Candidate generation and filtering for every successful record, in
/// record order.
std::vector<CandidateSet> mine_instruction_negatives(std::span<const TrainInstance> sources,
                                                     std::span<const InstructionRecord> records, LmBackend& generator,
                                                     LmBackend& judge, const PromptTemplates& templates,
                                                     std::size_t jobs);

struct PipelineResult {
    std::vector<InstructionRecord> records;
    std::vector<CandidateSet> candidates;
    AssembleResult assembled;
};

PipelineResult run_pipeline(std::span<const TrainInstance> sources, LmBackend& instruction_generator,
                            LmBackend& negative_generator, LmBackend& judge, const PromptTemplates& templates,
                            const GenerationOptions& generation, const AssembleOptions& assembly);

}  // namespace instret::datagen
