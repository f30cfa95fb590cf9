#include "instret/datagen/templates.hpp"

#include "instret/core/error.hpp"
#include "instret/util/assets.hpp"
#include "instret/util/files.hpp"

namespace instret::datagen {

PromptTemplates PromptTemplates::bundled()
{
    return {std::string(assets::get("templates/system.v1.txt")),
            std::string(assets::get("templates/instruction_generation.v1.txt")),
            std::string(assets::get("templates/instruction_negatives.v1.txt")),
            std::string(assets::get("templates/judge.v1.txt"))};
}

PromptTemplates PromptTemplates::from_directory(const std::filesystem::path& dir, int version)
{
    auto load = [&](const char* stem) {
        return util::read_file(dir / (std::string(stem) + ".v" + std::to_string(version) + ".txt"));
    };
    return {load("system"), load("instruction_generation"), load("instruction_negatives"), load("judge")};
}

namespace {

constexpr std::string_view kSlotSuffix = "_FILL_ME";

bool is_slot_char(char c)
{
    return (c >= 'A' && c <= 'Z') || c == '_';
}

}  // namespace

std::string fill_template(std::string_view tmpl, const std::map<std::string, std::string>& values)
{
    std::string out;
    out.reserve(tmpl.size());
    std::size_t pos = 0;
    while (pos < tmpl.size()) {
        const auto hit = tmpl.find(kSlotSuffix, pos);
        if (hit == std::string_view::npos) {
            out.append(tmpl.substr(pos));
            break;
        }
        std::size_t start = hit;
        while (start > pos && is_slot_char(tmpl[start - 1])) {
            --start;
        }
        const std::string slot(tmpl.substr(start, hit + kSlotSuffix.size() - start));
        auto value = values.find(slot);
        if (value == values.end()) {
            throw ValidationError("template slot " + slot + " has no value");
        }
        out.append(tmpl.substr(pos, start - pos));
        out.append(value->second);
        pos = hit + kSlotSuffix.size();
    }
    return out;
}

std::string length_format_phrase(LengthFormat length)
{
    switch (length) {
    case LengthFormat::Short: return "short (1-2 sentences)";
    case LengthFormat::Medium: return "medium (3-6 sentences)";
    case LengthFormat::Long: return "long (one paragraph)";
    case LengthFormat::VeryLong: return "very long (two paragraphs)";
    }
    return "short (1-2 sentences)";
}

std::string style_phrase(InstructionStyle style)
{
    switch (style) {
    case InstructionStyle::None: return "";
    case InstructionStyle::Negation:
        return "Write the instruction using negation: explicitly state which kinds of documents or information are "
               "not relevant.";
    case InstructionStyle::Background:
        return "Begin the instruction with generic background information about the topic before stating what makes "
               "a document relevant.";
    case InstructionStyle::Persona:
        return "Write the instruction from the point of view of a persona: the person issuing the query describes who "
               "they are and why they need the information.";
    }
    return "";
}

std::string format_documents(std::span<const Passage> docs, int first_number)
{
    std::string out;
    for (std::size_t i = 0; i < docs.size(); ++i) {
        if (i > 0) {
            out += "\n\n";
        }
        out += "Document [" + std::to_string(first_number + static_cast<int>(i)) + "]:\n";
        out += "Title: " + docs[i].title + "\n";
        out += "Text: " + docs[i].text;
    }
    return out;
}

}  // namespace instret::datagen
