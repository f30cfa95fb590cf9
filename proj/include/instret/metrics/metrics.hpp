#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "instret/core/judgments.hpp"
#include "instret/core/run.hpp"

namespace instret::metrics {

/// Linear gain is rel/log2(i+1), the trec_eval convention; exponential gain
/// uses (2^rel - 1) in the numerator.
enum class Gain { Linear, Exponential };

/// What to do with a query that appears in the run but has no judgments.
enum class UnjudgedPolicy { Exclude, ScoreZero };

struct MetricOptions {
    Gain gain = Gain::Linear;
    UnjudgedPolicy unjudged = UnjudgedPolicy::Exclude;
};

/// Per-query values and their arithmetic mean. Queries without any relevant
/// document are not scored; they are listed in `no_relevant` (and unjudged
/// run queries in `unjudged` when excluded).
struct MetricReport {
    std::string metric_name;
    int k = 0;
    std::map<std::string, double> per_query;
    double mean = 0.0;
    std::vector<std::string> no_relevant;
    std::vector<std::string> unjudged;
};

// Single-query kernels over a ranked list and that query's grades.
double ndcg_for_query(std::span<const ScoredDoc> ranking, const Judgments::DocGrades& grades, int k, Gain gain = Gain::Linear);
double average_precision_for_query(std::span<const ScoredDoc> ranking, const Judgments::DocGrades& grades, int k);
double reciprocal_rank_for_query(std::span<const ScoredDoc> ranking, const Judgments::DocGrades& grades, int k);

MetricReport ndcg_at_k(const RunList& run, const Judgments& judgments, int k, const MetricOptions& options = {});
MetricReport map_at_k(const RunList& run, const Judgments& judgments, int k = 1000, const MetricOptions& options = {});
MetricReport mrr_at_k(const RunList& run, const Judgments& judgments, int k, const MetricOptions& options = {});

/// Relative rank movement of one document between two rankings: 0 when
/// unchanged, 1 - before/after for a demotion (positive), after/before - 1
/// for a promotion (negative). Both ranks must be >= 1.
double rank_shift(long long rank_before, long long rank_after);

enum class ExpectedDirection { Demote, Promote };

/// One document whose relevance the instruction changed. An absent rank
/// means the document was not retrieved within the cutoff.
struct PairedRankCase {
    std::string query_id;
    std::string doc_id;
    std::optional<long long> rank_before;
    std::optional<long long> rank_after;
    ExpectedDirection expected = ExpectedDirection::Demote;
};

/// PerCase averages all cases directly; PerQuery averages within each query
/// first and then across queries (the FollowIR reference aggregation).
enum class PmrrAggregation { PerCase, PerQuery };

/// 100 x mean signed rank shift, in (-100, 100]. Absent ranks are imputed as
/// max_rank + 1. Throws ValidationError on an empty case list.
double p_mrr(std::span<const PairedRankCase> cases, long long max_rank,
             PmrrAggregation aggregation = PmrrAggregation::PerCase);

/// Builds cases from the runs without and with the instruction. Docs judged
/// >= 1 in `demote` are expected to drop, those in `promote` to rise. Ranks
/// deeper than max_rank count as absent.
std::vector<PairedRankCase> paired_cases(const RunList& before, const RunList& after, const Judgments& demote,
                                         const Judgments* promote, long long max_rank);

/// Per query, the minimum nDCG@k over prompts; then the mean over queries.
/// All runs must cover the same queries.
MetricReport robustness_at_k(std::span<const RunList> runs_by_prompt, const Judgments& judgments, int k,
                             const MetricOptions& options = {});

/// Population standard deviation of values, reported x100.
double population_stddev_x100(std::span<const double> values);

/// Population standard deviation of the per-prompt mean nDCG@k, x100.
double prompt_stddev(std::span<const RunList> runs_by_prompt, const Judgments& judgments, int k,
                     const MetricOptions& options = {});

/// `metric<TAB>query_id<TAB>value` rows in query order, then an `all` row.
void write_report_tsv(const MetricReport& report, std::ostream& out);

}  // namespace instret::metrics
