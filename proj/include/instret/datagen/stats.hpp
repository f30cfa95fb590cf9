#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "instret/core/types.hpp"

namespace instret::datagen {

struct WordCountStats {
    std::size_t count = 0;
    std::size_t min = 0;
    double mean = 0.0;
    long rounded_mean = 0;  // nearest integer, halves away from zero
    std::size_t max = 0;
};

struct CellStats {
    InstructionStyle style;
    LengthFormat length;
    WordCountStats words;
};

struct DatasetStats {
    WordCountStats overall;
    std::vector<std::pair<InstructionStyle, WordCountStats>> by_style;  // only styles present
    std::vector<std::pair<LengthFormat, WordCountStats>> by_length;
    std::vector<CellStats> by_cell;
};

/// Instruction word counts (ASCII whitespace split) over every instance that
/// carries an instruction. Throws ValidationError when there is none.
DatasetStats dataset_stats(std::span<const TrainInstance> instances);

/// TSV with columns group, style, length, count, min, mean, max.
std::string render_stats_tsv(const DatasetStats& stats);

/// Fraction of positions where the two binary label vectors agree.
double agreement(const std::vector<bool>& labels_a, const std::vector<bool>& labels_b);

/// One label per line: 1/0, true/false, yes/no (case-insensitive).
std::vector<bool> parse_labels(std::string_view text);

}  // namespace instret::datagen
