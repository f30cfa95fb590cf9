#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>

#include "instret/core/types.hpp"

namespace instret::datagen {

inline constexpr int kTemplateVersion = 1;

/// Prompt texts with `NAME_FILL_ME` slots.
struct PromptTemplates {
    std::string system;
    std::string instruction_generation;
    std::string instruction_negatives;
    std::string judge;

    /// Bundled v1 templates.
    static PromptTemplates bundled();
    /// `<dir>/{system,instruction_generation,instruction_negatives,judge}.v<N>.txt`.
    static PromptTemplates from_directory(const std::filesystem::path& dir, int version = kTemplateVersion);
};

/// Replaces every `*_FILL_ME` slot of the template in one pass (inserted
/// values are not rescanned). Throws ValidationError when the template has a
/// slot without a value.
std::string fill_template(std::string_view tmpl, const std::map<std::string, std::string>& values);

/// Phrase substituted for LENGTH_FORMAT_FILL_ME, e.g. "short (1-2 sentences)".
std::string length_format_phrase(LengthFormat length);
/// Paragraph substituted for STYLE_FILL_ME; empty for InstructionStyle::None.
std::string style_phrase(InstructionStyle style);

/// "Document [n]:\nTitle: ...\nText: ..." blocks separated by blank lines,
/// numbered from `first_number`.
std::string format_documents(std::span<const Passage> docs, int first_number);

}  // namespace instret::datagen
