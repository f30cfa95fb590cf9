#include "instret/ablation/transforms.hpp"

#include <numeric>
#include <unordered_set>

#include <fmt/format.h>

#include "instret/core/error.hpp"
#include "instret/util/assets.hpp"
#include "instret/util/files.hpp"
#include "instret/util/random.hpp"

namespace instret::ablation {

std::string_view to_string(TransformKind kind)
{
    switch (kind) {
    case TransformKind::RepeatQuery:
        return "repeat_query";
    case TransformKind::GenericInstruction:
        return "generic_instruction";
    case TransformKind::SwapInstruction:
        return "swap_instruction";
    }
    throw ValidationError("unknown transform kind");
}

TransformKind parse_transform_kind(std::string_view name)
{
    for (auto kind : {TransformKind::RepeatQuery, TransformKind::GenericInstruction, TransformKind::SwapInstruction}) {
        if (name == to_string(kind)) {
            return kind;
        }
    }
    throw ValidationError(fmt::format("unknown transform '{}' (expected repeat_query, generic_instruction or "
                                      "swap_instruction)",
                                      name));
}

void TransformSpec::validate() const
{
    if (kind != TransformKind::GenericInstruction) {
        return;
    }
    if (generic_pool.size() != kGenericPoolSize) {
        throw ValidationError(
            fmt::format("generic pool must have {} entries, has {}", kGenericPoolSize, generic_pool.size()));
    }
    std::unordered_set<std::string_view> seen;
    for (const auto& entry : generic_pool) {
        if (entry.empty()) {
            throw ValidationError("generic pool has an empty entry");
        }
        if (!seen.insert(entry).second) {
            throw ValidationError("generic pool repeats '" + entry + "'");
        }
    }
}

std::vector<std::string> bundled_generic_pool()
{
    return util::split_lines(assets::get("generic_instructions.txt"));
}

std::vector<std::string> load_generic_pool(const std::filesystem::path& path)
{
    return util::read_lines(path);
}

RepeatResult repeat_query(const TrainInstance& instance)
{
    RepeatResult result{instance, false};
    if (!instance.instruction) {
        result.passed_through = true;
        return result;
    }
    const auto query_words = word_count(instance.query);
    if (query_words == 0) {
        throw ValidationError("query '" + instance.query_id + "' has no words to repeat");
    }
    const auto target = word_count(*instance.instruction);
    const auto repetitions = std::max<std::size_t>(1, (target + query_words - 1) / query_words);

    // Re-join on single spaces so the output never carries the query's own
    // odd spacing.
    std::string normalized;
    std::size_t pos = 0;
    const std::string_view ws = " \t\n\r\f\v";
    const std::string_view query = instance.query;
    while ((pos = query.find_first_not_of(ws, pos)) != std::string_view::npos) {
        const auto end = std::min(query.find_first_of(ws, pos), query.size());
        if (!normalized.empty()) {
            normalized += ' ';
        }
        normalized.append(query.substr(pos, end - pos));
        pos = end;
    }
    std::string repeated = normalized;
    for (std::size_t i = 1; i < repetitions; ++i) {
        repeated += ' ';
        repeated += normalized;
    }
    result.instance.instruction = std::move(repeated);
    return result;
}

TrainInstance generic_instruction(const TrainInstance& instance, std::size_t index, std::span<const std::string> pool,
                                  std::uint64_t seed)
{
    if (pool.empty()) {
        throw ValidationError("generic pool is empty");
    }
    util::Rng rng(util::derive_seed(seed, static_cast<std::uint64_t>(index)));
    TrainInstance out = instance;
    out.instruction = pool[rng.uniform_index(pool.size())];
    if (!out.style) {
        out.style = InstructionStyle::None;
        out.length = LengthFormat::Short;
    }
    return out;
}

std::vector<TrainInstance> swap_instructions(std::span<const TrainInstance> instances, std::uint64_t seed,
                                             bool derangement)
{
    const auto n = instances.size();
    if (derangement && n == 1) {
        throw ValidationError("a single instance has no derangement");
    }
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    util::Rng rng(seed);
    auto has_fixed_point = [&] {
        for (std::size_t i = 0; i < n; ++i) {
            if (perm[i] == i) {
                return true;
            }
        }
        return false;
    };
    // Rejection keeps the derangement uniform; about e draws on average.
    do {
        rng.shuffle(std::span<std::size_t>(perm));
    } while (derangement && has_fixed_point());

    std::vector<TrainInstance> out(instances.begin(), instances.end());
    for (std::size_t i = 0; i < n; ++i) {
        const auto& donor = instances[perm[i]];
        out[i].instruction = donor.instruction;
        out[i].style = donor.style;
        out[i].length = donor.length;
    }
    return out;
}

TransformResult apply_transform(std::span<const TrainInstance> instances, const TransformSpec& spec)
{
    spec.validate();
    TransformResult result;
    switch (spec.kind) {
    case TransformKind::RepeatQuery:
        for (const auto& instance : instances) {
            auto repeated = repeat_query(instance);
            result.passed_through += repeated.passed_through ? 1 : 0;
            result.instances.push_back(std::move(repeated.instance));
        }
        break;
    case TransformKind::GenericInstruction:
        for (std::size_t i = 0; i < instances.size(); ++i) {
            result.instances.push_back(generic_instruction(instances[i], i, spec.generic_pool, spec.seed));
        }
        break;
    case TransformKind::SwapInstruction:
        result.instances = swap_instructions(instances, spec.seed, spec.derangement);
        break;
    }
    for (const auto& instance : result.instances) {
        validate(instance);
    }
    return result;
}

}  // namespace instret::ablation
