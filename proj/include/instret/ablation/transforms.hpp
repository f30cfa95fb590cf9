#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "instret/core/types.hpp"

namespace instret::ablation {

enum class TransformKind { RepeatQuery, GenericInstruction, SwapInstruction };

std::string_view to_string(TransformKind kind);
/// Accepts "repeat_query", "generic_instruction", "swap_instruction".
TransformKind parse_transform_kind(std::string_view name);

inline constexpr std::size_t kGenericPoolSize = 50;

struct TransformSpec {
    TransformKind kind = TransformKind::RepeatQuery;
    std::uint64_t seed = 0;
    std::vector<std::string> generic_pool;
    bool derangement = false;  // swap only: forbid fixed points

    /// Requires exactly kGenericPoolSize distinct, non-empty entries for
    /// generic_instruction.
    void validate() const;
};

/// The bundled generic retrieval task descriptions, one per line.
std::vector<std::string> bundled_generic_pool();
std::vector<std::string> load_generic_pool(const std::filesystem::path& path);

struct RepeatResult {
    TrainInstance instance;
    bool passed_through = false;  // no instruction to replace
};

/// Replaces the instruction with the query repeated ceil(instruction words /
/// query words) times, joined by single spaces.
RepeatResult repeat_query(const TrainInstance& instance);

/// Replaces the instruction with a draw from `pool` seeded by (seed, index),
/// so the assignment of instance i does not depend on the others.
TrainInstance generic_instruction(const TrainInstance& instance, std::size_t index, std::span<const std::string> pool,
                                  std::uint64_t seed);

/// Permutes (instruction, style, length) across instances with a seeded
/// uniform permutation. Everything else, including instruction-source
/// negatives, stays with its query.
std::vector<TrainInstance> swap_instructions(std::span<const TrainInstance> instances, std::uint64_t seed,
                                             bool derangement = false);

struct TransformResult {
    std::vector<TrainInstance> instances;
    std::size_t passed_through = 0;
};

/// Applies `spec` to a whole dataset after validating it.
TransformResult apply_transform(std::span<const TrainInstance> instances, const TransformSpec& spec);

}  // namespace instret::ablation
