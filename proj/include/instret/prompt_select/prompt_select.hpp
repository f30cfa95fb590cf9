#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "instret/bm25/bm25.hpp"
#include "instret/core/judgments.hpp"
#include "instret/core/types.hpp"

namespace instret::prompt_select {

/// Ordered, non-empty list of distinct prompts.
class PromptPool {
  public:
    explicit PromptPool(std::vector<std::string> prompts);

    /// The ten bundled retrieval prompts.
    static PromptPool bundled();
    static PromptPool from_file(const std::filesystem::path& path);

    const std::vector<std::string>& prompts() const noexcept { return prompts_; }
    std::size_t size() const noexcept { return prompts_.size(); }
    const std::string& operator[](std::size_t i) const { return prompts_.at(i); }

  private:
    std::vector<std::string> prompts_;
};

/// Seeded sample of n query ids without replacement, returned sorted.
std::vector<std::string> sample_dev(std::span<const std::string> query_ids, std::size_t n, std::uint64_t seed);

/// Sets the query's instruction to `prompt`; an empty prompt leaves the query
/// as it is. Encoders then see "query prompt".
InstructedQuery apply_prompt(const InstructedQuery& query, const std::string& prompt);

/// Index of the highest dev score; the lowest index wins ties.
std::size_t select_prompt(std::span<const double> dev_scores);

struct PromptEvalReport {
    std::string dataset;
    std::vector<std::string> prompts;
    std::optional<std::vector<double>> dev_scores;  // absent without a dev split
    std::vector<double> test_scores;
    double baseline = 0.0;                  // no prompt
    std::optional<std::size_t> selected;    // from dev scores only
    std::size_t best = 0;                   // test argmax
    double stddev_x100 = 0.0;               // population sigma of test scores, x100

    std::optional<double> selected_test() const;
    double best_test() const { return test_scores.at(best); }
};

/// Builds the report; throws when score vectors do not match the pool.
PromptEvalReport report(const PromptPool& pool, const std::optional<std::vector<double>>& dev_scores,
                        std::span<const double> test_scores, double baseline, std::string dataset = {});

/// `dataset prompt_index dev test` rows followed by the summary rows.
std::string render_tsv(const PromptEvalReport& report);
/// One-row table: Dataset | None | Selected Prompt | Best Prompt | σ.
std::string render_markdown(std::span<const PromptEvalReport> reports);

/// Mean nDCG@k of BM25 over `queries` with each prompt applied, one value
/// per prompt, plus the no-prompt baseline as the last element.
std::vector<double> bm25_prompt_scores(const bm25::InvertedIndex& index, std::span<const InstructedQuery> queries,
                                       const Judgments& judgments, const PromptPool& pool, int k, std::size_t jobs);

}  // namespace instret::prompt_select
