#include "instret/core/types.hpp"

#include <unordered_set>

#include "instret/core/error.hpp"

namespace instret {

std::string_view to_string(InstructionStyle style)
{
    switch (style) {
    case InstructionStyle::None: return "none";
    case InstructionStyle::Negation: return "negation";
    case InstructionStyle::Background: return "background";
    case InstructionStyle::Persona: return "persona";
    }
    return "none";
}

std::string_view to_string(LengthFormat length)
{
    switch (length) {
    case LengthFormat::Short: return "short";
    case LengthFormat::Medium: return "medium";
    case LengthFormat::Long: return "long";
    case LengthFormat::VeryLong: return "very_long";
    }
    return "short";
}

InstructionStyle parse_style(std::string_view name)
{
    for (auto style : kAllStyles) {
        if (to_string(style) == name) {
            return style;
        }
    }
    throw ValidationError("unknown instruction style '" + std::string(name) + "'");
}

LengthFormat parse_length(std::string_view name)
{
    for (auto length : kAllLengths) {
        if (to_string(length) == name) {
            return length;
        }
    }
    throw ValidationError("unknown length format '" + std::string(name) + "'");
}

std::string_view to_string(NegativeSource source)
{
    return source == NegativeSource::Hard ? "hard" : "instruction";
}

NegativeSource parse_negative_source(std::string_view name)
{
    if (name == "hard") {
        return NegativeSource::Hard;
    }
    if (name == "instruction") {
        return NegativeSource::Instruction;
    }
    throw ValidationError("unknown negative source '" + std::string(name) + "'");
}

namespace {

void check_tags(const std::string& id,
                const std::optional<std::string>& instruction,
                const std::optional<InstructionStyle>& style,
                const std::optional<LengthFormat>& length)
{
    const bool has = instruction.has_value();
    if (style.has_value() != has || length.has_value() != has) {
        throw ValidationError("query '" + id + "': style/length tags must be present iff an instruction is");
    }
}

}  // namespace

void validate(const InstructedQuery& query)
{
    if (query.query_id.empty()) {
        throw ValidationError("query with empty query_id");
    }
    if (query.query.empty()) {
        throw ValidationError("query '" + query.query_id + "' has empty text");
    }
    check_tags(query.query_id, query.instruction, query.style, query.length);
}

std::string joined_text(std::string_view query, const std::optional<std::string>& instruction)
{
    std::string out(query);
    if (instruction && !instruction->empty()) {
        out += ' ';
        out += *instruction;
    }
    return out;
}

void validate(const TrainInstance& instance)
{
    const auto& id = instance.query_id;
    if (id.empty()) {
        throw ValidationError("train instance with empty query_id");
    }
    if (instance.query.empty()) {
        throw ValidationError("train instance '" + id + "' has empty query");
    }
    check_tags(id, instance.instruction, instance.style, instance.length);
    if (instance.positive.doc_id.empty()) {
        throw ValidationError("train instance '" + id + "' positive has empty doc_id");
    }

    std::unordered_set<std::string> seen;
    bool hard_seen = false;
    for (const auto& negative : instance.negatives) {
        const auto& doc = negative.passage.doc_id;
        if (doc.empty()) {
            throw ValidationError("train instance '" + id + "' has a negative with empty doc_id");
        }
        if (doc == instance.positive.doc_id) {
            throw ValidationError("train instance '" + id + "': negative repeats positive doc_id '" + doc + "'");
        }
        if (!seen.insert(doc).second) {
            throw ValidationError("train instance '" + id + "': duplicate negative doc_id '" + doc + "'");
        }
        if (negative.source == NegativeSource::Hard) {
            hard_seen = true;
        } else if (hard_seen) {
            throw ValidationError("train instance '" + id + "': instruction negative '" + doc
                                  + "' follows a hard negative");
        }
    }
}

std::size_t word_count(std::string_view text)
{
    auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; };
    std::size_t count = 0;
    bool in_word = false;
    for (char c : text) {
        if (is_space(c)) {
            in_word = false;
        } else if (!in_word) {
            in_word = true;
            ++count;
        }
    }
    return count;
}

}  // namespace instret
