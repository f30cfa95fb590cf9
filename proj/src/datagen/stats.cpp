#include "instret/datagen/stats.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>

#include <fmt/format.h>

#include "instret/core/error.hpp"

namespace instret::datagen {

namespace {

WordCountStats summarize(const std::vector<std::size_t>& counts)
{
    WordCountStats out;
    out.count = counts.size();
    out.min = *std::min_element(counts.begin(), counts.end());
    out.max = *std::max_element(counts.begin(), counts.end());
    double sum = 0.0;
    for (auto c : counts) {
        sum += static_cast<double>(c);
    }
    out.mean = sum / static_cast<double>(counts.size());
    out.rounded_mean = std::lround(out.mean);
    return out;
}

}  // namespace

DatasetStats dataset_stats(std::span<const TrainInstance> instances)
{
    std::vector<std::size_t> all;
    std::map<InstructionStyle, std::vector<std::size_t>> by_style;
    std::map<LengthFormat, std::vector<std::size_t>> by_length;
    std::map<std::pair<InstructionStyle, LengthFormat>, std::vector<std::size_t>> by_cell;
    for (const auto& instance : instances) {
        if (!instance.instruction) {
            continue;
        }
        const auto words = word_count(*instance.instruction);
        const auto style = instance.style.value_or(InstructionStyle::None);
        const auto length = instance.length.value_or(LengthFormat::Short);
        all.push_back(words);
        by_style[style].push_back(words);
        by_length[length].push_back(words);
        by_cell[{style, length}].push_back(words);
    }
    if (all.empty()) {
        throw ValidationError("dataset_stats: no instances with an instruction");
    }
    DatasetStats stats;
    stats.overall = summarize(all);
    for (const auto& [style, counts] : by_style) {
        stats.by_style.emplace_back(style, summarize(counts));
    }
    for (const auto& [length, counts] : by_length) {
        stats.by_length.emplace_back(length, summarize(counts));
    }
    for (const auto& [cell, counts] : by_cell) {
        stats.by_cell.push_back({cell.first, cell.second, summarize(counts)});
    }
    return stats;
}

std::string render_stats_tsv(const DatasetStats& stats)
{
    std::string out = "group\tstyle\tlength\tcount\tmin\tmean\tmax\n";
    auto row = [&](std::string_view group, std::string_view style, std::string_view length, const WordCountStats& s) {
        out += fmt::format("{}\t{}\t{}\t{}\t{}\t{}\t{}\n", group, style, length, s.count, s.min, s.rounded_mean, s.max);
    };
    for (const auto& [length, s] : stats.by_length) {
        row("length", "*", to_string(length), s);
    }
    for (const auto& [style, s] : stats.by_style) {
        row("style", to_string(style), "*", s);
    }
    for (const auto& cell : stats.by_cell) {
        row("cell", to_string(cell.style), to_string(cell.length), cell.words);
    }
    row("all", "*", "*", stats.overall);
    return out;
}

double agreement(const std::vector<bool>& labels_a, const std::vector<bool>& labels_b)
{
    if (labels_a.size() != labels_b.size()) {
        throw ValidationError(fmt::format("agreement: label vectors differ in length ({} vs {})", labels_a.size(),
                                          labels_b.size()));
    }
    if (labels_a.empty()) {
        throw ValidationError("agreement: label vectors are empty");
    }
    std::size_t matches = 0;
    for (std::size_t i = 0; i < labels_a.size(); ++i) {
        matches += labels_a[i] == labels_b[i] ? 1 : 0;
    }
    return static_cast<double>(matches) / static_cast<double>(labels_a.size());
}

std::vector<bool> parse_labels(std::string_view text)
{
    std::vector<bool> labels;
    std::size_t line_number = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos) {
            end = text.size();
        }
        ++line_number;
        std::string line(text.substr(start, end - start));
        start = end + 1;
        while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back()))) {
            line.pop_back();
        }
        line.erase(0, std::min(line.find_first_not_of(" \t"), line.size()));
        if (line.empty()) {
            continue;
        }
        std::transform(line.begin(), line.end(), line.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        if (line == "1" || line == "true" || line == "yes") {
            labels.push_back(true);
        } else if (line == "0" || line == "false" || line == "no") {
            labels.push_back(false);
        } else {
            throw ParseError(line_number, "label", "expected 1/0, true/false or yes/no, got '" + line + "'");
        }
    }
    return labels;
}

}  // namespace instret::datagen
