#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace instret {

struct Passage {
    std::string doc_id;
    std::string title;
    std::string text;

    bool operator==(const Passage&) const = default;
};

enum class InstructionStyle { None, Negation, Background, Persona };
enum class LengthFormat { Short, Medium, Long, VeryLong };

inline constexpr InstructionStyle kAllStyles[] = {
    InstructionStyle::None, InstructionStyle::Negation, InstructionStyle::Background, InstructionStyle::Persona};
inline constexpr LengthFormat kAllLengths[] = {
    LengthFormat::Short, LengthFormat::Medium, LengthFormat::Long, LengthFormat::VeryLong};

std::string_view to_string(InstructionStyle style);
std::string_view to_string(LengthFormat length);
/// Throws ValidationError on an unknown name.
InstructionStyle parse_style(std::string_view name);
LengthFormat parse_length(std::string_view name);

/// A query, optionally joined with a free-form instruction. The style and
/// length tags are present exactly when the instruction is.
struct InstructedQuery {
    std::string query_id;
    std::string query;
    std::optional<std::string> instruction;
    std::optional<InstructionStyle> style;
    std::optional<LengthFormat> length;

    bool operator==(const InstructedQuery&) const = default;
};

void validate(const InstructedQuery& query);

/// Text seen by an encoder: the query, then a single space and the
/// instruction when there is a non-empty one.
std::string joined_text(std::string_view query, const std::optional<std::string>& instruction);

enum class NegativeSource { Hard, Instruction };

std::string_view to_string(NegativeSource source);
NegativeSource parse_negative_source(std::string_view name);

struct TrainNegative {
    Passage passage;
    NegativeSource source = NegativeSource::Hard;

    bool operator==(const TrainNegative&) const = default;
};

struct TrainInstance {
    std::string query_id;
    std::string query;
    std::optional<std::string> instruction;
    std::optional<InstructionStyle> style;
    std::optional<LengthFormat> length;
    Passage positive;
    /// Instruction negatives first, then sampled hard negatives.
    std::vector<TrainNegative> negatives;

    bool operator==(const TrainInstance&) const = default;
};

/// Throws ValidationError when a negative repeats or equals the positive.
/// Also enforces negative ordering and tags present iff an instruction is.
void validate(const TrainInstance& instance);

/// Number of words when splitting on ASCII whitespace.
std::size_t word_count(std::string_view text);

}  // namespace instret
