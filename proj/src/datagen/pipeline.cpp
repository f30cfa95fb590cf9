#include "instret/datagen/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <unordered_map>
#include <unordered_set>

#include <spdlog/spdlog.h>

#include "instret/core/error.hpp"
#include "instret/util/parallel.hpp"
#include "instret/util/random.hpp"

namespace instret::datagen {

namespace {

std::string lowercase(std::string_view text)
{
    std::string out(text);
    for (auto& c : out) {
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    return out;
}

std::string_view trim(std::string_view text)
{
    const auto* ws = " \t\r\n\"'`.*";
    const auto first = text.find_first_not_of(ws);
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = text.find_last_not_of(ws);
    return text.substr(first, last - first + 1);
}

bool starts_with(std::string_view text, std::string_view prefix)
{
    return text.substr(0, prefix.size()) == prefix;
}

}  // namespace

std::optional<Json> parse_json_lenient(std::string_view text)
{
    auto attempt = [](std::string_view candidate) -> std::optional<Json> {
        auto value = Json::parse(candidate.begin(), candidate.end(), nullptr, false);
        if (value.is_discarded()) {
            return std::nullopt;
        }
        return value;
    };
    if (auto value = attempt(text)) {
        return value;
    }
    const auto first = text.find_first_of("{[");
    const auto last = text.find_last_of("}]");
    if (first == std::string_view::npos || last == std::string_view::npos || last < first) {
        return std::nullopt;
    }
    return attempt(text.substr(first, last - first + 1));
}

std::optional<bool> parse_judge_answer(std::string_view raw)
{
    const auto answer = lowercase(trim(raw));
    for (std::string_view no : {"false", "no", "not relevant", "non-relevant", "irrelevant"}) {
        if (starts_with(answer, no)) {
            return false;
        }
    }
    for (std::string_view yes : {"true", "yes", "relevant"}) {
        if (starts_with(answer, yes)) {
            return true;
        }
    }
    return std::nullopt;
}

std::optional<ExplanationTag> classify_explanation(std::string_view explanation)
{
    auto text = lowercase(trim(explanation));
    for (auto& c : text) {
        if (c == '_') {
            c = ' ';
        }
    }
    // The tag leads the explanation ("omission - ..."); match the head first.
    const auto head_end = text.find_first_of("-:(");
    const auto head = std::string(trim(std::string_view(text).substr(0, head_end)));
    const std::pair<std::string_view, ExplanationTag> names[] = {
        {"different interpretation", ExplanationTag::DifferentInterpretation},
        {"omission", ExplanationTag::Omission},
        {"mention non-relevant flag", ExplanationTag::MentionNonRelevantFlag},
        {"mention non relevant flag", ExplanationTag::MentionNonRelevantFlag},
        {"none", ExplanationTag::None},
    };
    for (const auto& [name, tag] : names) {
        if (head == name) {
            return tag;
        }
    }
    for (const auto& [name, tag] : names) {
        if (tag != ExplanationTag::None && starts_with(text, name)) {
            return tag;
        }
    }
    if (text.find("interpretation") != std::string::npos) {
        return ExplanationTag::DifferentInterpretation;
    }
    if (text.find("non-relevant flag") != std::string::npos || text.find("non relevant flag") != std::string::npos) {
        return ExplanationTag::MentionNonRelevantFlag;
    }
    if (text.find("omission") != std::string::npos) {
        return ExplanationTag::Omission;
    }
    if (head == "none" || starts_with(text, "none")) {
        return ExplanationTag::None;
    }
    return std::nullopt;
}

// --- Instruction generation -------------------------------------------------

InstructionRecord gen_instructions(const InstructedQuery& query, const Passage& positive,
                                   std::span<const Passage> non_relevant, InstructionStyle style, LengthFormat length,
                                   LmBackend& backend, const PromptTemplates& templates)
{
    if (query.instruction) {
        throw ValidationError("query '" + query.query_id + "' already has an instruction");
    }
    InstructionRecord record;
    record.query_id = query.query_id;
    record.record_id = make_record_id(query.query_id, style, length);
    record.style = style;
    record.length = length;

    auto prompt = fill_template(templates.instruction_generation,
                                {{"REL_DOCS_NUM_FILL_ME", "1"},
                                 {"NON_REL_DOCS_NUM_FILL_ME", std::to_string(non_relevant.size())},
                                 {"QUERY_FILL_ME", query.query},
                                 {"POS_DOC_FILL_ME", format_documents(std::span<const Passage>(&positive, 1), 1)},
                                 {"NEG_DOC_FILL_ME", format_documents(non_relevant, 2)},
                                 {"LENGTH_FORMAT_FILL_ME", length_format_phrase(length)},
                                 {"STYLE_FILL_ME", style_phrase(style)}});
    for (auto blank = prompt.find("\n\n\n\n"); blank != std::string::npos; blank = prompt.find("\n\n\n\n")) {
        prompt.erase(blank, 2);
    }

    LmRequest request{templates.system, std::move(prompt),
                      {{"task", "instruction"},
                       {"query_id", query.query_id},
                       {"record_id", record.record_id},
                       {"style", std::string(to_string(style))},
                       {"length", std::string(to_string(length))}}};
    try {
        record.raw_response = backend.complete(request);
    } catch (const BackendError& e) {
        record.failed = true;
        record.backend_failure = true;
        record.error = e.what();
        spdlog::warn("instruction generation failed for {}: {}", record.record_id, e.what());
        return record;
    }

    auto parsed = parse_json_lenient(record.raw_response);
    if (!parsed || !parsed->is_object() || !parsed->contains("instruction") || !(*parsed)["instruction"].is_string()
        || (*parsed)["instruction"].get<std::string>().empty()) {
        record.failed = true;
        record.error = parsed ? "reply has no non-empty \"instruction\" string" : "reply is not valid JSON";
        spdlog::warn("skipping {}: {}", record.record_id, record.error);
        return record;
    }
    record.instruction = (*parsed)["instruction"].get<std::string>();
    return record;
}

// --- Judging ------------------------------------------------------------------

JudgeVerdict judge_relevance(const std::string& query_id, const std::string& record_id, std::string_view query,
                             std::string_view instruction, const Passage& passage, std::string_view role,
                             LmBackend& judge, const PromptTemplates& templates)
{
    const auto document = passage.title.empty() ? passage.text : passage.title + " " + passage.text;
    auto prompt = fill_template(templates.judge, {{"QUERY_FILL_ME", joined_text(query, std::string(instruction))},
                                                  {"PASSAGE_FILL_ME", document}});
    LmRequest request{"", std::move(prompt),
                      {{"task", "judge"},
                       {"query_id", query_id},
                       {"record_id", record_id},
                       {"doc_id", passage.doc_id},
                       {"role", std::string(role)}}};
    JudgeVerdict verdict;
    try {
        verdict.raw = judge.complete(request);
    } catch (const BackendError& e) {
        verdict.failed = true;
        verdict.raw = e.what();
        spdlog::warn("judge failed for {} / {}: {}", record_id, passage.doc_id, e.what());
        return verdict;
    }
    if (auto answer = parse_judge_answer(verdict.raw)) {
        verdict.relevant = *answer;
    } else {
        verdict.failed = true;
        spdlog::warn("unreadable judge answer for {} / {}: '{}'", record_id, passage.doc_id, verdict.raw);
    }
    return verdict;
}

bool judge_original_positive(InstructionRecord& record, std::string_view query, const Passage& positive,
                             LmBackend& judge, const PromptTemplates& templates)
{
    auto verdict = judge_relevance(record.query_id, record.record_id, query, record.instruction, positive,
                                   "original_positive", judge, templates);
    const bool relevant = !verdict.failed && verdict.relevant;
    record.original_positive_still_relevant = relevant;
    record.judge_raw = verdict.raw;
    return relevant;
}

// --- Candidate generation ---------------------------------------------------

namespace {

std::optional<bool> read_matches_both(const Json& value)
{
    if (value.is_boolean()) {
        return value.get<bool>();
    }
    if (value.is_string()) {
        const auto text = lowercase(trim(value.get<std::string>()));
        if (text == "true" || text == "yes") {
            return true;
        }
        if (text == "false" || text == "no") {
            return false;
        }
    }
    return std::nullopt;
}

/// Entries of a candidate reply: a bare array, an object wrapping one array,
/// or an object whose members are all entry objects.
std::optional<std::vector<Json>> candidate_entries(const Json& reply)
{
    if (reply.is_array()) {
        return std::vector<Json>(reply.begin(), reply.end());
    }
    if (!reply.is_object() || reply.contains("matches_both")) {
        return std::nullopt;
    }
    for (const auto& [key, value] : reply.items()) {
        if (value.is_array()) {
            return std::vector<Json>(value.begin(), value.end());
        }
    }
    std::vector<Json> entries;
    for (const auto& [key, value] : reply.items()) {
        if (!value.is_object()) {
            return std::nullopt;
        }
        entries.push_back(value);
    }
    return entries;
}

}  // namespace

CandidateSet gen_candidates(const InstructionRecord& record, std::string_view query, LmBackend& backend,
                            const PromptTemplates& templates)
{
    CandidateSet set;
    set.record_id = record.record_id;
    set.query_id = record.query_id;
    auto fail = [&](std::string reason) {
        set.failed = true;
        set.error = std::move(reason);
        set.candidates.clear();
        spdlog::warn("skipping candidates for {}: {}", set.record_id, set.error);
        return set;
    };

    auto prompt = fill_template(templates.instruction_negatives,
                                {{"QUERY_FILL_ME", std::string(query)}, {"INSTRUCTION_FILL_ME", record.instruction}});
    LmRequest request{templates.system, std::move(prompt),
                      {{"task", "candidates"}, {"query_id", record.query_id}, {"record_id", record.record_id}}};
    try {
        set.raw_response = backend.complete(request);
    } catch (const BackendError& e) {
        set.backend_failure = true;
        return fail(e.what());
    }

    auto reply = parse_json_lenient(set.raw_response);
    if (!reply) {
        return fail("reply is not valid JSON");
    }
    auto entries = candidate_entries(*reply);
    if (!entries) {
        return fail("reply does not contain a list of candidates");
    }
    if (entries->size() != 4) {
        return fail("expected 4 candidates, got " + std::to_string(entries->size()));
    }

    int negative_number = 0;
    int positives = 0;
    for (std::size_t i = 0; i < entries->size(); ++i) {
        const auto& entry = (*entries)[i];
        if (!entry.is_object()) {
            return fail("candidate " + std::to_string(i) + " is not an object");
        }
        for (const char* key : {"matches_both", "explanation", "title", "passage"}) {
            if (!entry.contains(key)) {
                return fail("candidate " + std::to_string(i) + " is missing \"" + key + "\"");
            }
        }
        auto matches_both = read_matches_both(entry["matches_both"]);
        if (!matches_both) {
            return fail("candidate " + std::to_string(i) + " has an unreadable \"matches_both\"");
        }
        if (!entry["explanation"].is_string() || !entry["title"].is_string() || !entry["passage"].is_string()) {
            return fail("candidate " + std::to_string(i) + " has non-string fields");
        }
        CandidatePassage candidate;
        candidate.explanation = entry["explanation"].get<std::string>();
        candidate.passage.title = entry["title"].get<std::string>();
        candidate.passage.text = entry["passage"].get<std::string>();
        if (*matches_both) {
            ++positives;
            candidate.label = CandidateLabel::InstructionPositive;
            candidate.tag = ExplanationTag::None;
            candidate.passage.doc_id = "gen/" + record.record_id + "/pos";
        } else {
            auto tag = classify_explanation(candidate.explanation);
            if (!tag || *tag == ExplanationTag::None) {
                return fail("candidate " + std::to_string(i) + " has no instruction-negative tag in its explanation");
            }
            candidate.label = CandidateLabel::InstructionNegative;
            candidate.tag = *tag;
            candidate.passage.doc_id = "gen/" + record.record_id + "/neg" + std::to_string(++negative_number);
        }
        set.candidates.push_back(std::move(candidate));
    }
    if (positives != 1) {
        return fail("expected exactly 1 instruction positive, got " + std::to_string(positives));
    }
    return set;
}

void filter_candidates(CandidateSet& set, std::string_view query, std::string_view instruction, LmBackend& judge,
                       const PromptTemplates& templates)
{
    for (auto& candidate : set.candidates) {
        const bool positive = candidate.label == CandidateLabel::InstructionPositive;
        auto verdict = judge_relevance(set.query_id, set.record_id, query, instruction, candidate.passage,
                                       to_string(candidate.label), judge, templates);
        if (verdict.failed) {
            candidate.judge_keep = false;
        } else {
            candidate.judge_keep = positive ? verdict.relevant : !verdict.relevant;
        }
        candidate.verdict = std::move(verdict);
    }
}

// --- Assembly -----------------------------------------------------------------

namespace {

Json audit_event(const std::string& record_id, const std::string& query_id, const char* event)
{
    Json out = Json::object();
    out["record_id"] = record_id;
    out["query_id"] = query_id;
    out["event"] = event;
    return out;
}

std::vector<TrainNegative> sample_hard(const TrainInstance& source, const std::unordered_set<std::string>& exclude,
                                       std::size_t count, std::uint64_t seed, const std::string& stream)
{
    std::vector<const Passage*> pool;
    std::unordered_set<std::string> seen;
    for (const auto& negative : source.negatives) {
        const auto& id = negative.passage.doc_id;
        if (exclude.count(id) == 0 && seen.insert(id).second) {
            pool.push_back(&negative.passage);
        }
    }
    if (count > pool.size()) {
        throw ValidationError("query '" + source.query_id + "': needs " + std::to_string(count)
                              + " hard negatives but the pool has " + std::to_string(pool.size()));
    }
    util::Rng rng(util::derive_seed(seed, stream));
    std::vector<TrainNegative> out;
    out.reserve(count);
    for (auto index : rng.sample_indices(pool.size(), count)) {
        out.push_back({*pool[index], NegativeSource::Hard});
    }
    return out;
}

}  // namespace

AssembleResult assemble_training_set(std::span<const TrainInstance> sources,
                                     std::span<const InstructionRecord> records,
                                     std::span<const CandidateSet> candidates, const AssembleOptions& options)
{
    const auto n = options.negatives_per_instance;
    std::unordered_map<std::string, const TrainInstance*> source_by_id;
    for (const auto& source : sources) {
        if (!source_by_id.emplace(source.query_id, &source).second) {
            throw ValidationError("source instances repeat query_id '" + source.query_id + "'");
        }
    }
    std::unordered_map<std::string, const CandidateSet*> candidates_by_record;
    for (const auto& set : candidates) {
        if (!candidates_by_record.emplace(set.record_id, &set).second) {
            throw ValidationError("candidate sets repeat record_id '" + set.record_id + "'");
        }
    }

    AssembleResult result;
    for (const auto& record : records) {
        auto source_it = source_by_id.find(record.query_id);
        if (source_it == source_by_id.end()) {
            auto event = audit_event(record.record_id, record.query_id, "skipped");
            event["reason"] = "no source instance for query";
            result.audit.push_back(std::move(event));
            continue;
        }
        const auto& source = *source_it->second;
        if (record.failed) {
            auto event = audit_event(record.record_id, record.query_id, "skipped");
            event["reason"] = "instruction generation failed: " + record.error;
            result.audit.push_back(std::move(event));
            continue;
        }

        std::vector<TrainNegative> instruction_negatives;
        const CandidatePassage* generated_positive = nullptr;
        auto set_it = candidates_by_record.find(record.record_id);
        if (set_it == candidates_by_record.end() || set_it->second->failed) {
            auto event = audit_event(record.record_id, record.query_id, "candidates_unavailable");
            event["reason"] = set_it == candidates_by_record.end() ? "no candidate set" : set_it->second->error;
            result.audit.push_back(std::move(event));
        } else {
            for (const auto& candidate : set_it->second->candidates) {
                auto event = audit_event(record.record_id, record.query_id, "candidate");
                event["doc_id"] = candidate.passage.doc_id;
                event["label"] = std::string(to_string(candidate.label));
                event["tag"] = std::string(to_string(candidate.tag));
                event["judge_relevant"] = candidate.verdict ? Json(candidate.verdict->relevant) : Json(nullptr);
                event["judge_failed"] = candidate.verdict ? Json(candidate.verdict->failed) : Json(nullptr);
                event["kept"] = candidate.judge_keep;
                std::string reason = "kept";
                if (!candidate.judge_keep) {
                    if (!candidate.verdict) {
                        reason = "not judged";
                    } else if (candidate.verdict->failed) {
                        reason = "judge failure";
                    } else if (candidate.label == CandidateLabel::InstructionNegative) {
                        reason = "judge found it relevant to query+instruction";
                    } else {
                        reason = "judge found it not relevant to query+instruction";
                    }
                }
                event["reason"] = reason;
                result.audit.push_back(std::move(event));
                if (!candidate.judge_keep) {
                    continue;
                }
                if (candidate.label == CandidateLabel::InstructionNegative) {
                    instruction_negatives.push_back({candidate.passage, NegativeSource::Instruction});
                } else {
                    generated_positive = &candidate;
                }
            }
        }

        const bool original_ok = record.original_positive_still_relevant.value_or(false);
        TrainInstance instance;
        instance.query_id = record.query_id;
        instance.query = source.query;
        std::string choice;
        if (original_ok || generated_positive != nullptr) {
            instance.instruction = record.instruction;
            instance.style = record.style;
            instance.length = record.length;
            instance.positive = original_ok ? source.positive : generated_positive->passage;
            choice = original_ok ? "original" : "substituted";
            if (instruction_negatives.size() > n) {
                instruction_negatives.resize(n);
            }
            instance.negatives = std::move(instruction_negatives);
        } else {
            instance.positive = source.positive;
            choice = "fallback";
        }

        std::unordered_set<std::string> exclude{source.positive.doc_id, instance.positive.doc_id};
        for (const auto& negative : instance.negatives) {
            exclude.insert(negative.passage.doc_id);
        }
        auto hard = sample_hard(source, exclude, n - instance.negatives.size(), options.seed, "hard:" + record.record_id);
        const auto instruction_count = instance.negatives.size();
        instance.negatives.insert(instance.negatives.end(), std::make_move_iterator(hard.begin()),
                                  std::make_move_iterator(hard.end()));
        validate(instance);

        auto event = audit_event(record.record_id, record.query_id, "instance");
        event["positive"] = choice;
        event["positive_doc_id"] = instance.positive.doc_id;
        event["original_positive_still_relevant"] =
            record.original_positive_still_relevant ? Json(*record.original_positive_still_relevant) : Json(nullptr);
        event["instruction_negatives"] = instruction_count;
        event["hard_negatives"] = instance.negatives.size() - instruction_count;
        result.audit.push_back(std::move(event));
        result.instances.push_back(std::move(instance));
    }
    return result;
}

// --- Orchestration ------------------------------------------------------------

std::vector<std::pair<InstructionStyle, LengthFormat>> plan_cells(const std::string& query_id, std::uint64_t seed,
                                                                  bool exhaustive_grid)
{
    std::vector<std::pair<InstructionStyle, LengthFormat>> grid;
    for (auto style : kAllStyles) {
        for (auto length : kAllLengths) {
            grid.emplace_back(style, length);
        }
    }
    if (exhaustive_grid) {
        return grid;
    }
    util::Rng rng(util::derive_seed(seed, "cell:" + query_id));
    return {grid[rng.uniform_index(grid.size())]};
}

namespace {

void check_sources(std::span<const TrainInstance> sources)
{
    std::unordered_set<std::string> seen;
    for (const auto& source : sources) {
        if (source.instruction) {
            throw ValidationError("source instance '" + source.query_id + "' already has an instruction");
        }
        if (!seen.insert(source.query_id).second) {
            throw ValidationError("source instances repeat query_id '" + source.query_id + "'");
        }
    }
}

}  // namespace

std::vector<InstructionRecord> generate_instruction_records(std::span<const TrainInstance> sources,
                                                            LmBackend& generator, LmBackend& judge,
                                                            const PromptTemplates& templates,
                                                            const GenerationOptions& options)
{
    check_sources(sources);
    std::vector<std::vector<InstructionRecord>> per_source(sources.size());
    util::parallel_for(sources.size(), options.jobs, [&](std::size_t i) {
        const auto& source = sources[i];
        InstructedQuery query{source.query_id, source.query, std::nullopt, std::nullopt, std::nullopt};

        std::vector<Passage> pool;
        for (const auto& negative : source.negatives) {
            pool.push_back(negative.passage);
        }
        util::Rng rng(util::derive_seed(options.seed, "nonrel:" + source.query_id));
        std::vector<Passage> non_relevant;
        for (auto index : rng.sample_indices(pool.size(), std::min(options.non_relevant_docs, pool.size()))) {
            non_relevant.push_back(pool[index]);
        }

        for (auto [style, length] : plan_cells(source.query_id, options.seed, options.exhaustive_grid)) {
            auto record = gen_instructions(query, source.positive, non_relevant, style, length, generator, templates);
            if (!record.failed) {
                judge_original_positive(record, source.query, source.positive, judge, templates);
            }
            per_source[i].push_back(std::move(record));
        }
    });
    std::vector<InstructionRecord> records;
    for (auto& group : per_source) {
        std::move(group.begin(), group.end(), std::back_inserter(records));
    }
    return records;
}

std::vector<CandidateSet> mine_instruction_negatives(std::span<const TrainInstance> sources,
                                                     std::span<const InstructionRecord> records, LmBackend& generator,
                                                     LmBackend& judge, const PromptTemplates& templates,
                                                     std::size_t jobs)
{
    std::unordered_map<std::string, const TrainInstance*> source_by_id;
    for (const auto& source : sources) {
        source_by_id.emplace(source.query_id, &source);
    }
    std::vector<std::optional<CandidateSet>> sets(records.size());
    util::parallel_for(records.size(), jobs, [&](std::size_t i) {
        const auto& record = records[i];
        if (record.failed) {
            return;
        }
        auto source = source_by_id.find(record.query_id);
        if (source == source_by_id.end()) {
            throw ValidationError("record '" + record.record_id + "' has no source instance");
        }
        const auto& query = source->second->query;
        auto set = gen_candidates(record, query, generator, templates);
        if (!set.failed) {
            filter_candidates(set, query, record.instruction, judge, templates);
        }
        sets[i] = std::move(set);
    });
    std::vector<CandidateSet> out;
    for (auto& set : sets) {
        if (set) {
            out.push_back(std::move(*set));
        }
    }
    return out;
}

PipelineResult run_pipeline(std::span<const TrainInstance> sources, LmBackend& instruction_generator,
                            LmBackend& negative_generator, LmBackend& judge, const PromptTemplates& templates,
                            const GenerationOptions& generation, const AssembleOptions& assembly)
{
    PipelineResult result;
    result.records = generate_instruction_records(sources, instruction_generator, judge, templates, generation);
    result.candidates = mine_instruction_negatives(sources, result.records, negative_generator, judge, templates,
                                                   generation.jobs);
    result.assembled = assemble_training_set(sources, result.records, result.candidates, assembly);
    return result;
}

}  // namespace instret::datagen
