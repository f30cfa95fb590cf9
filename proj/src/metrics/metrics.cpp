#include "instret/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "instret/core/error.hpp"
#include "instret/core/text.hpp"

namespace instret::metrics {

namespace {

void check_cutoff(int k)
{
    if (k < 1) {
        throw ValidationError("metric cutoff k must be >= 1, got " + std::to_string(k));
    }
}

double gain_of(int grade, Gain gain)
{
    return gain == Gain::Linear ? static_cast<double>(grade) : std::exp2(static_cast<double>(grade)) - 1.0;
}

int grade_of(const Judgments::DocGrades& grades, const std::string& doc_id)
{
    auto it = grades.find(doc_id);
    return it == grades.end() ? 0 : it->second;
}

std::size_t depth(std::span<const ScoredDoc> ranking, int k)
{
    return std::min(ranking.size(), static_cast<std::size_t>(k));
}

template <typename Kernel>
MetricReport evaluate(std::string name, int k, const RunList& run, const Judgments& judgments,
                      const MetricOptions& options, Kernel kernel)
{
    check_cutoff(k);
    MetricReport report;
    report.metric_name = std::move(name);
    report.k = k;
    for (const auto& [query, docs] : run.queries()) {
        if (!judgments.has_query(query)) {
            if (options.unjudged == UnjudgedPolicy::ScoreZero) {
                report.per_query[query] = 0.0;
            } else {
                report.unjudged.push_back(query);
            }
            continue;
        }
        const auto& grades = judgments.for_query(query);
        if (judgments.relevant_count(query) == 0) {
            report.no_relevant.push_back(query);
            continue;
        }
        report.per_query[query] = kernel(std::span<const ScoredDoc>(docs), grades);
    }
    double sum = 0.0;
    for (const auto& [query, value] : report.per_query) {
        sum += value;
    }
    report.mean = report.per_query.empty() ? 0.0 : sum / static_cast<double>(report.per_query.size());
    return report;
}

}  // namespace

double ndcg_for_query(std::span<const ScoredDoc> ranking, const Judgments::DocGrades& grades, int k, Gain gain)
{
    check_cutoff(k);
    double dcg = 0.0;
    const auto n = depth(ranking, k);
    for (std::size_t i = 0; i < n; ++i) {
        const int grade = grade_of(grades, ranking[i].doc_id);
        if (grade > 0) {
            dcg += gain_of(grade, gain) / std::log2(static_cast<double>(i) + 2.0);
        }
    }

    std::vector<int> ideal;
    ideal.reserve(grades.size());
    for (const auto& [doc, grade] : grades) {
        if (grade > 0) {
            ideal.push_back(grade);
        }
    }
    std::sort(ideal.begin(), ideal.end(), std::greater<>());
    double idcg = 0.0;
    const auto ideal_depth = std::min(ideal.size(), static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < ideal_depth; ++i) {
        idcg += gain_of(ideal[i], gain) / std::log2(static_cast<double>(i) + 2.0);
    }
    return idcg > 0.0 ? dcg / idcg : 0.0;
}

double average_precision_for_query(std::span<const ScoredDoc> ranking, const Judgments::DocGrades& grades, int k)
{
    check_cutoff(k);
    std::size_t relevant_total = 0;
    for (const auto& [doc, grade] : grades) {
        if (grade >= 1) {
            ++relevant_total;
        }
    }
    if (relevant_total == 0) {
        return 0.0;
    }
    double sum = 0.0;
    std::size_t hits = 0;
    const auto n = depth(ranking, k);
    for (std::size_t i = 0; i < n; ++i) {
        if (grade_of(grades, ranking[i].doc_id) >= 1) {
            ++hits;
            sum += static_cast<double>(hits) / static_cast<double>(i + 1);
        }
    }
    return sum / static_cast<double>(relevant_total);
}

double reciprocal_rank_for_query(std::span<const ScoredDoc> ranking, const Judgments::DocGrades& grades, int k)
{
    check_cutoff(k);
    const auto n = depth(ranking, k);
    for (std::size_t i = 0; i < n; ++i) {
        if (grade_of(grades, ranking[i].doc_id) >= 1) {
            return 1.0 / static_cast<double>(i + 1);
        }
    }
    return 0.0;
}

MetricReport ndcg_at_k(const RunList& run, const Judgments& judgments, int k, const MetricOptions& options)
{
    return evaluate("ndcg@" + std::to_string(k), k, run, judgments, options,
                    [&](std::span<const ScoredDoc> ranking, const Judgments::DocGrades& grades) {
                        return ndcg_for_query(ranking, grades, k, options.gain);
                    });
}

MetricReport map_at_k(const RunList& run, const Judgments& judgments, int k, const MetricOptions& options)
{
    return evaluate("map@" + std::to_string(k), k, run, judgments, options,
                    [&](std::span<const ScoredDoc> ranking, const Judgments::DocGrades& grades) {
                        return average_precision_for_query(ranking, grades, k);
                    });
}

MetricReport mrr_at_k(const RunList& run, const Judgments& judgments, int k, const MetricOptions& options)
{
    return evaluate("mrr@" + std::to_string(k), k, run, judgments, options,
                    [&](std::span<const ScoredDoc> ranking, const Judgments::DocGrades& grades) {
                        return reciprocal_rank_for_query(ranking, grades, k);
                    });
}

double rank_shift(long long rank_before, long long rank_after)
{
    if (rank_before < 1 || rank_after < 1) {
        throw ValidationError("ranks must be >= 1 (got " + std::to_string(rank_before) + ", "
                              + std::to_string(rank_after) + ")");
    }
    const auto before = static_cast<double>(rank_before);
    const auto after = static_cast<double>(rank_after);
    if (rank_after > rank_before) {
        return 1.0 - before / after;
    }
    if (rank_after < rank_before) {
        return after / before - 1.0;
    }
    return 0.0;
}

double p_mrr(std::span<const PairedRankCase> cases, long long max_rank, PmrrAggregation aggregation)
{
    if (cases.empty()) {
        throw ValidationError("p-MRR needs at least one paired case");
    }
    if (max_rank < 1) {
        throw ValidationError("p-MRR max_rank must be >= 1");
    }
    auto signed_shift = [max_rank](const PairedRankCase& c) {
        const auto before = c.rank_before.value_or(max_rank + 1);
        const auto after = c.rank_after.value_or(max_rank + 1);
        const double shift = rank_shift(before, after);
        return c.expected == ExpectedDirection::Demote ? shift : -shift;
    };

    if (aggregation == PmrrAggregation::PerCase) {
        double sum = 0.0;
        for (const auto& c : cases) {
            sum += signed_shift(c);
        }
        return 100.0 * sum / static_cast<double>(cases.size());
    }

    std::map<std::string, std::pair<double, std::size_t>> by_query;
    for (const auto& c : cases) {
        auto& [sum, count] = by_query[c.query_id];
        sum += signed_shift(c);
        ++count;
    }
    double total = 0.0;
    for (const auto& [query, acc] : by_query) {
        total += acc.first / static_cast<double>(acc.second);
    }
    return 100.0 * total / static_cast<double>(by_query.size());
}

std::vector<PairedRankCase> paired_cases(const RunList& before, const RunList& after, const Judgments& demote,
                                         const Judgments* promote, long long max_rank)
{
    auto rank_in = [max_rank](const RunList& run, const std::string& query,
                              const std::string& doc) -> std::optional<long long> {
        auto ranking = run.ranking(query);
        for (std::size_t i = 0; i < ranking.size() && static_cast<long long>(i) < max_rank; ++i) {
            if (ranking[i].doc_id == doc) {
                return static_cast<long long>(i + 1);
            }
        }
        return std::nullopt;
    };

    std::vector<PairedRankCase> cases;
    auto collect = [&](const Judgments& judgments, ExpectedDirection direction) {
        for (const auto& [query, docs] : judgments.queries()) {
            for (const auto& [doc, grade] : docs) {
                if (grade < 1) {
                    continue;
                }
                cases.push_back({query, doc, rank_in(before, query, doc), rank_in(after, query, doc), direction});
            }
        }
    };
    collect(demote, ExpectedDirection::Demote);
    if (promote != nullptr) {
        collect(*promote, ExpectedDirection::Promote);
    }
    return cases;
}

MetricReport robustness_at_k(std::span<const RunList> runs_by_prompt, const Judgments& judgments, int k,
                             const MetricOptions& options)
{
    if (runs_by_prompt.empty()) {
        throw ValidationError("robustness needs at least one prompt run");
    }
    const auto& reference = runs_by_prompt.front().queries();
    for (std::size_t p = 1; p < runs_by_prompt.size(); ++p) {
        const auto& other = runs_by_prompt[p].queries();
        std::vector<std::string> difference;
        for (const auto& [query, docs] : reference) {
            if (other.count(query) == 0) {
                difference.push_back(query);
            }
        }
        for (const auto& [query, docs] : other) {
            if (reference.count(query) == 0) {
                difference.push_back(query);
            }
        }
        if (!difference.empty()) {
            std::sort(difference.begin(), difference.end());
            std::string listed;
            for (const auto& query : difference) {
                listed += (listed.empty() ? "" : ", ") + query;
            }
            throw ValidationError("prompt run " + std::to_string(p) + " covers different queries than run 0: "
                                  + listed);
        }
    }

    MetricReport report = ndcg_at_k(runs_by_prompt.front(), judgments, k, options);
    for (std::size_t p = 1; p < runs_by_prompt.size(); ++p) {
        auto other = ndcg_at_k(runs_by_prompt[p], judgments, k, options);
        for (auto& [query, value] : report.per_query) {
            value = std::min(value, other.per_query.at(query));
        }
    }
    report.metric_name = "robustness@" + std::to_string(k);
    double sum = 0.0;
    for (const auto& [query, value] : report.per_query) {
        sum += value;
    }
    report.mean = report.per_query.empty() ? 0.0 : sum / static_cast<double>(report.per_query.size());
    return report;
}

double population_stddev_x100(std::span<const double> values)
{
    if (values.empty()) {
        throw ValidationError("standard deviation of an empty set");
    }
    double mean = 0.0;
    for (double v : values) {
        mean += v;
    }
    mean /= static_cast<double>(values.size());
    double squares = 0.0;
    for (double v : values) {
        squares += (v - mean) * (v - mean);
    }
    return 100.0 * std::sqrt(squares / static_cast<double>(values.size()));
}

double prompt_stddev(std::span<const RunList> runs_by_prompt, const Judgments& judgments, int k,
                     const MetricOptions& options)
{
    std::vector<double> means;
    means.reserve(runs_by_prompt.size());
    for (const auto& run : runs_by_prompt) {
        means.push_back(ndcg_at_k(run, judgments, k, options).mean);
    }
    return population_stddev_x100(means);
}

void write_report_tsv(const MetricReport& report, std::ostream& out)
{
    for (const auto& [query, value] : report.per_query) {
        out << report.metric_name << '\t' << query << '\t' << text::format_score(value) << '\n';
    }
    out << report.metric_name << "\tall\t" << text::format_score(report.mean) << '\n';
}

}  // namespace instret::metrics
