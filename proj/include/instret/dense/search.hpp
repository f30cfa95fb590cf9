#pragma once

#include <cstddef>
#include <span>
#include <string>

#include "instret/core/run.hpp"
#include "instret/dense/embedding.hpp"

namespace instret::dense {

/// Inner product accumulated in double over ascending dimension index.
double inner_product(std::span<const float> a, std::span<const float> b);

/// Exact top-k inner-product search. Each query row yields its k best
/// passages (ties by ascending doc id). Output is identical for any thread
/// count; `threads == 0` uses the hardware concurrency.
RunList search_topk(const EmbeddingMatrix& queries, const EmbeddingMatrix& passages, std::size_t k,
                    const std::string& run_tag, std::size_t threads = 1);

}  // namespace instret::dense
