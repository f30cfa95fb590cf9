#include "instret/dense/search.hpp"

#include <algorithm>
#include <atomic>
#include <numeric>
#include <thread>
#include <vector>

#include "instret/core/error.hpp"

namespace instret::dense {

double inner_product(std::span<const float> a, std::span<const float> b)
{
    double sum = 0.0;
    for (std::size_t d = 0; d < a.size(); ++d) {
        sum += static_cast<double>(a[d]) * static_cast<double>(b[d]);
    }
    return sum;
}

namespace {

std::vector<ScoredDoc> topk_for_query(std::span<const float> query, const EmbeddingMatrix& passages, std::size_t k,
                                      std::vector<double>& scores, std::vector<std::size_t>& order)
{
    const auto n = passages.rows();
    scores.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        scores[i] = inner_product(query, passages.row(i));
    }
    order.resize(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    const auto& ids = passages.ids();
    auto better = [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) {
            return scores[a] > scores[b];
        }
        return ids[a] < ids[b];
    };
    const auto keep = std::min(k, n);
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep), order.end(), better);

    std::vector<ScoredDoc> hits;
    hits.reserve(keep);
    for (std::size_t i = 0; i < keep; ++i) {
        hits.push_back({ids[order[i]], scores[order[i]]});
    }
    return hits;
}

}  // namespace

RunList search_topk(const EmbeddingMatrix& queries, const EmbeddingMatrix& passages, std::size_t k,
                    const std::string& run_tag, std::size_t threads)
{
    if (k < 1) {
        throw ValidationError("search k must be >= 1");
    }
    if (queries.rows() > 0 && passages.rows() > 0 && queries.dim() != passages.dim()) {
        throw ValidationError("dimension mismatch: queries have dim " + std::to_string(queries.dim())
                              + ", passages have dim " + std::to_string(passages.dim()));
    }
    if (threads == 0) {
        threads = std::max(1U, std::thread::hardware_concurrency());
    }
    threads = std::min(threads, std::max<std::size_t>(1, queries.rows()));

    std::vector<std::vector<ScoredDoc>> results(queries.rows());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        std::vector<double> scores;
        std::vector<std::size_t> order;
        for (auto q = next++; q < queries.rows(); q = next++) {
            results[q] = topk_for_query(queries.row(q), passages, k, scores, order);
        }
    };
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(threads);
        for (std::size_t t = 0; t < threads; ++t) {
            pool.emplace_back(worker);
        }
    }

    RunList run(run_tag);
    for (std::size_t q = 0; q < queries.rows(); ++q) {
        run.add_query(queries.ids()[q], std::move(results[q]));
    }
    return run;
}

}  // namespace instret::dense
