#include "instret/prompt_select/prompt_select.hpp"

#include <algorithm>
#include <unordered_set>

#include <fmt/format.h>

#include "instret/core/error.hpp"
#include "instret/core/text.hpp"
#include "instret/metrics/metrics.hpp"
#include "instret/util/assets.hpp"
#include "instret/util/files.hpp"
#include "instret/util/parallel.hpp"
#include "instret/util/random.hpp"

namespace instret::prompt_select {

PromptPool::PromptPool(std::vector<std::string> prompts) : prompts_(std::move(prompts))
{
    if (prompts_.empty()) {
        throw ValidationError("prompt pool is empty");
    }
    std::unordered_set<std::string_view> seen;
    for (const auto& prompt : prompts_) {
        if (!seen.insert(prompt).second) {
            throw ValidationError("prompt pool repeats '" + prompt + "'");
        }
    }
}

PromptPool PromptPool::bundled()
{
    return PromptPool(util::split_lines(assets::get("retrieval_prompts.txt")));
}

PromptPool PromptPool::from_file(const std::filesystem::path& path)
{
    return PromptPool(util::read_lines(path));
}

std::vector<std::string> sample_dev(std::span<const std::string> query_ids, std::size_t n, std::uint64_t seed)
{
    if (n > query_ids.size()) {
        throw ValidationError(fmt::format("cannot sample {} dev queries from {}", n, query_ids.size()));
    }
    util::Rng rng(seed);
    std::vector<std::string> out;
    out.reserve(n);
    for (auto index : rng.sample_indices(query_ids.size(), n)) {
        out.push_back(query_ids[index]);
    }
    std::sort(out.begin(), out.end());
    return out;
}

InstructedQuery apply_prompt(const InstructedQuery& query, const std::string& prompt)
{
    if (prompt.empty()) {
        return query;
    }
    InstructedQuery out = query;
    out.instruction = prompt;
    out.style = InstructionStyle::None;
    out.length = LengthFormat::Short;
    return out;
}

std::size_t select_prompt(std::span<const double> dev_scores)
{
    if (dev_scores.empty()) {
        throw ValidationError("no dev scores to select from");
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < dev_scores.size(); ++i) {
        if (dev_scores[i] > dev_scores[best]) {
            best = i;
        }
    }
    return best;
}

std::optional<double> PromptEvalReport::selected_test() const
{
    if (!selected) {
        return std::nullopt;
    }
    return test_scores.at(*selected);
}

PromptEvalReport report(const PromptPool& pool, const std::optional<std::vector<double>>& dev_scores,
                        std::span<const double> test_scores, double baseline, std::string dataset)
{
    if (test_scores.size() != pool.size()) {
        throw ValidationError(
            fmt::format("{} test scores for a pool of {} prompts", test_scores.size(), pool.size()));
    }
    if (dev_scores && dev_scores->size() != pool.size()) {
        throw ValidationError(fmt::format("{} dev scores for a pool of {} prompts", dev_scores->size(), pool.size()));
    }
    PromptEvalReport out;
    out.dataset = std::move(dataset);
    out.prompts = pool.prompts();
    out.dev_scores = dev_scores;
    out.test_scores.assign(test_scores.begin(), test_scores.end());
    out.baseline = baseline;
    if (dev_scores) {
        out.selected = select_prompt(*dev_scores);
    }
    out.best = select_prompt(test_scores);
    out.stddev_x100 = metrics::population_stddev_x100(test_scores);
    return out;
}

std::string render_tsv(const PromptEvalReport& report)
{
    const auto& name = report.dataset.empty() ? std::string("-") : report.dataset;
    std::string out = "dataset\tprompt\tdev\ttest\n";
    for (std::size_t i = 0; i < report.prompts.size(); ++i) {
        const auto dev = report.dev_scores ? text::format_score((*report.dev_scores)[i]) : std::string("-");
        out += fmt::format("{}\t{}\t{}\t{}\n", name, i, dev, text::format_score(report.test_scores[i]));
    }
    out += fmt::format("{}\tnone\t-\t{}\n", name, text::format_score(report.baseline));
    if (report.selected) {
        out += fmt::format("{}\tselected={}\t{}\t{}\n", name, *report.selected,
                           text::format_score((*report.dev_scores)[*report.selected]),
                           text::format_score(*report.selected_test()));
    } else {
        out += fmt::format("{}\tselected=-\t-\t-\n", name);
    }
    out += fmt::format("{}\tbest={}\t-\t{}\n", name, report.best, text::format_score(report.best_test()));
    out += fmt::format("{}\tstddev_x100\t-\t{}\n", name, text::format_score(report.stddev_x100));
    return out;
}

std::string render_markdown(std::span<const PromptEvalReport> reports)
{
    std::string out = "| Dataset | None | Selected Prompt | Best Prompt | σ |\n|---|---|---|---|---|\n";
    auto pct = [](double v) { return fmt::format("{:.1f}", v * 100.0); };
    for (const auto& r : reports) {
        const auto selected = r.selected_test() ? pct(*r.selected_test()) : std::string();
        out += fmt::format("| {} | {} | {} | {} | {:.1f} |\n", r.dataset.empty() ? "-" : r.dataset, pct(r.baseline),
                           selected, pct(r.best_test()), r.stddev_x100);
    }
    return out;
}

std::vector<double> bm25_prompt_scores(const bm25::InvertedIndex& index, std::span<const InstructedQuery> queries,
                                       const Judgments& judgments, const PromptPool& pool, int k, std::size_t jobs)
{
    // Slot pool.size() is the bare-query baseline.
    std::vector<double> scores(pool.size() + 1, 0.0);
    util::parallel_for(scores.size(), jobs, [&](std::size_t p) {
        const std::string prompt = p < pool.size() ? pool[p] : std::string();
        std::vector<InstructedQuery> prompted;
        prompted.reserve(queries.size());
        for (const auto& query : queries) {
            InstructedQuery bare = query;
            bare.instruction.reset();
            bare.style.reset();
            bare.length.reset();
            prompted.push_back(apply_prompt(bare, prompt));
        }
        const auto run = index.search_all(prompted, static_cast<std::size_t>(k), "bm25");
        scores[p] = metrics::ndcg_at_k(run, judgments, k).mean;
    });
    return scores;
}

}  // namespace instret::prompt_select
