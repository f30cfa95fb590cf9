#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "instret/cli/cli.hpp"
#include "instret/cli/manifest.hpp"

namespace instret::cli {

struct GlobalArgs {
    std::uint64_t seed = 0;
    std::size_t jobs = 8;
    std::string manifest;  // override; stdout commands write one only when set
};

struct BackendArgs {
    std::string backend;
    std::string judge_backend;  // defaults to backend
    std::string cache_dir;
    int retries = 4;
    int retry_backoff_ms = 1000;
    double temperature = 0.0;
    int max_tokens = 2048;
    int timeout = 120;
    std::string api_key_env = "OPENAI_API_KEY";
    std::string templates;  // directory; bundled templates when empty
};

struct GenInstructionsArgs {
    std::string input;
    std::string output;
    bool exhaustive_grid = false;
    std::size_t non_relevant_docs = 3;
};

struct MineNegativesArgs {
    std::string input;
    std::string records;
    std::string output;
};

struct AssembleArgs {
    std::string input;
    std::string records;
    std::string candidates;
    std::string output;
    std::string audit;
    std::size_t negatives = 15;
};

struct AblateArgs {
    std::string input;
    std::string output;
    std::string transform;
    std::string pool;
    bool derangement = false;
};

struct StatsArgs {
    std::string input;
    std::string format = "tsv";
};

struct IndexBm25Args {
    std::string corpus;
    std::string output;
    double k1 = 0.9;
    double b = 0.4;
};

struct IndexDenseArgs {
    std::string embeddings;
    std::string output;
    bool normalize = false;
};

struct SearchBm25Args {
    std::string index;
    std::string queries;
    std::string output;
    std::size_t k = 1000;
    std::string tag = "bm25";
    std::string prompt;
    bool ignore_instructions = false;
};

struct SearchDenseArgs {
    std::string index;
    std::string queries;
    std::string output;
    std::size_t k = 1000;
    std::string tag = "dense";
};

struct EvalArgs {
    std::vector<std::string> runs;
    std::string qrels;
    std::vector<std::string> metrics;
    std::string gain = "linear";
    std::string unjudged = "exclude";
    std::string run_before;
    std::string run_after;
    std::string demote;
    std::string promote;
    long long max_rank = 1000;
    std::string aggregation = "per-case";
    bool summary_only = false;
};

struct PromptSelectArgs {
    // BM25 mode
    std::string corpus;
    std::string index;
    std::string queries;
    std::string dev_queries;
    std::size_t dev_size = 10;
    // precomputed-run mode
    std::vector<std::string> test_runs;
    std::vector<std::string> dev_runs;
    std::string baseline_run;
    // shared
    std::string qrels;
    std::string dev_qrels;
    std::string pool;
    int k = 10;
    std::string dataset;
    std::string format = "tsv";
    std::string output;
};

struct AgreementArgs {
    std::string a;
    std::string b;
};

/// Everything a handler needs besides its own arguments.
struct Context {
    GlobalArgs global;
    Json config;  // effective configuration for the manifest
    std::ostream* out = nullptr;
    std::ostream* err = nullptr;
};

int gen_instructions(const Context& ctx, const BackendArgs& backend, const GenInstructionsArgs& args);
int mine_negatives(const Context& ctx, const BackendArgs& backend, const MineNegativesArgs& args);
int assemble(const Context& ctx, const AssembleArgs& args);
int ablate(const Context& ctx, const AblateArgs& args);
int stats(const Context& ctx, const StatsArgs& args);
int index_bm25(const Context& ctx, const IndexBm25Args& args);
int index_dense(const Context& ctx, const IndexDenseArgs& args);
int search_bm25(const Context& ctx, const SearchBm25Args& args);
int search_dense(const Context& ctx, const SearchDenseArgs& args);
int eval(const Context& ctx, const EvalArgs& args);
int prompt_select(const Context& ctx, const PromptSelectArgs& args);
int agreement(const Context& ctx, const AgreementArgs& args);

}  // namespace instret::cli
