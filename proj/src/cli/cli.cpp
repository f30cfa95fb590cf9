#include "instret/cli/cli.hpp"

#include <CLI11.hpp>

#include "commands.hpp"
#include "instret/core/error.hpp"

namespace instret::cli {

namespace {

bool skip_in_config(const CLI::Option* opt)
{
    const auto name = opt->get_single_name();
    return name.empty() || name == "help" || name == "help-all" || name == "config";
}

/// Effective option values of `app` and its selected subcommands, in
/// definition order.
Json collect_config(const CLI::App* app)
{
    Json out = Json::object();
    for (const auto* opt : app->get_options()) {
        if (skip_in_config(opt)) {
            continue;
        }
        const auto name = opt->get_single_name();
        if (opt->get_expected_max() == 0) {
            out[name] = opt->count() > 0;
        } else if (opt->get_expected_max() > 1) {
            Json values = Json::array();
            for (const auto& v : opt->results()) {
                values.push_back(v);
            }
            out[name] = std::move(values);
        } else if (!opt->results().empty()) {
            out[name] = opt->results().back();
        } else {
            out[name] = opt->get_default_str();
        }
    }
    for (const auto* sub : app->get_subcommands()) {
        out[sub->get_name()] = collect_config(sub);
    }
    return out;
}

void add_backend_options(CLI::App* cmd, BackendArgs& args)
{
    cmd->add_option("--backend", args.backend, "Generator: mock:<table.jsonl> or openai:<model>[@base_url]")
        ->required();
    cmd->add_option("--judge-backend", args.judge_backend, "Judge backend (default: --backend)");
    cmd->add_option("--cache-dir", args.cache_dir, "Response cache directory (off when empty)");
    cmd->add_option("--retries", args.retries, "Attempts per request")->check(CLI::Range(1, 100));
    cmd->add_option("--retry-backoff-ms", args.retry_backoff_ms, "Initial retry backoff")->check(CLI::NonNegativeNumber);
    cmd->add_option("--temperature", args.temperature, "Sampling temperature")->check(CLI::Range(0.0, 2.0));
    cmd->add_option("--max-tokens", args.max_tokens, "Completion token limit")->check(CLI::PositiveNumber);
    cmd->add_option("--timeout", args.timeout, "HTTP timeout in seconds")->check(CLI::PositiveNumber);
    cmd->add_option("--api-key-env", args.api_key_env, "Environment variable holding the API key");
    cmd->add_option("--templates", args.templates, "Prompt template directory (default: bundled)")
        ->check(CLI::ExistingDirectory);
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Instruction-retrieval toolkit: data generation, indexing, search, evaluation", "instret"};
    app.option_defaults()->always_capture_default();
    app.failure_message(CLI::FailureMessage::help);
    app.require_subcommand(1);
    app.fallthrough();
    app.set_config("--config", "", "TOML file with the same keys as the flags");

    Context ctx;
    ctx.out = &out;
    ctx.err = &err;
    app.add_option("--seed", ctx.global.seed, "Seed for every random choice");
    app.add_option("--jobs", ctx.global.jobs, "Worker/in-flight request limit (0 = hardware threads)");
    app.add_option("--manifest", ctx.global.manifest, "Manifest path (default: <output>.manifest.json)");

    BackendArgs backend;
    std::function<int()> handler;

    GenInstructionsArgs gen;
    auto* gen_cmd = app.add_subcommand("gen-instructions", "Generate one instruction per query cell and judge the positive");
    gen_cmd->add_option("--input", gen.input, "Source train JSONL (no instructions)")->required()->check(CLI::ExistingFile);
    gen_cmd->add_option("--output", gen.output, "Instruction records JSONL")->required();
    gen_cmd->add_flag("--exhaustive-grid", gen.exhaustive_grid, "All 16 style/length cells per query");
    gen_cmd->add_option("--non-relevant-docs", gen.non_relevant_docs, "Hard negatives shown as non-relevant examples");
    add_backend_options(gen_cmd, backend);
    gen_cmd->callback([&] { handler = [&] { return gen_instructions(ctx, backend, gen); }; });

    MineNegativesArgs mine;
    auto* mine_cmd = app.add_subcommand("mine-negatives", "Generate and judge instruction-negative candidates");
    mine_cmd->add_option("--input", mine.input, "Source train JSONL")->required()->check(CLI::ExistingFile);
    mine_cmd->add_option("--records", mine.records, "Instruction records JSONL")->required()->check(CLI::ExistingFile);
    mine_cmd->add_option("--output", mine.output, "Candidate sets JSONL")->required();
    add_backend_options(mine_cmd, backend);
    mine_cmd->callback([&] { handler = [&] { return mine_negatives(ctx, backend, mine); }; });

    AssembleArgs assemble_args;
    auto* assemble_cmd = app.add_subcommand("assemble", "Build instruction training instances");
    assemble_cmd->add_option("--input", assemble_args.input, "Source train JSONL")->required()->check(CLI::ExistingFile);
    assemble_cmd->add_option("--records", assemble_args.records, "Instruction records JSONL")
        ->required()
        ->check(CLI::ExistingFile);
    assemble_cmd->add_option("--candidates", assemble_args.candidates, "Candidate sets JSONL")
        ->required()
        ->check(CLI::ExistingFile);
    assemble_cmd->add_option("--output", assemble_args.output, "Train JSONL")->required();
    assemble_cmd->add_option("--audit", assemble_args.audit, "Audit JSONL (default: <output>.audit.jsonl)");
    assemble_cmd->add_option("--negatives", assemble_args.negatives, "Negatives per instance")
        ->check(CLI::PositiveNumber);
    assemble_cmd->callback([&] { handler = [&] { return assemble(ctx, assemble_args); }; });

    AblateArgs ablate_args;
    auto* ablate_cmd = app.add_subcommand("ablate", "Null-hypothesis dataset transforms");
    ablate_cmd->add_option("--input", ablate_args.input, "Train JSONL")->required()->check(CLI::ExistingFile);
    ablate_cmd->add_option("--output", ablate_args.output, "Transformed train JSONL")->required();
    ablate_cmd->add_option("--transform", ablate_args.transform, "Transform kind")
        ->required()
        ->check(CLI::IsMember({"repeat_query", "generic_instruction", "swap_instruction"}));
    ablate_cmd->add_option("--pool", ablate_args.pool, "Generic instruction pool, one per line (default: bundled)")
        ->check(CLI::ExistingFile);
    ablate_cmd->add_flag("--derangement", ablate_args.derangement, "Swap: no query keeps its own instruction");
    ablate_cmd->callback([&] { handler = [&] { return ablate(ctx, ablate_args); }; });

    StatsArgs stats_args;
    auto* stats_cmd = app.add_subcommand("stats", "Instruction word-count statistics by style and length");
    stats_cmd->add_option("--input", stats_args.input, "Train JSONL")->required()->check(CLI::ExistingFile);
    stats_cmd->add_option("--format", stats_args.format, "Output format")->check(CLI::IsMember({"tsv", "json"}));
    stats_cmd->callback([&] { handler = [&] { return stats(ctx, stats_args); }; });

    auto* index_cmd = app.add_subcommand("index", "Build a BM25 or dense index");
    index_cmd->require_subcommand(1);
    IndexBm25Args index_bm25_args;
    auto* index_bm25_cmd = index_cmd->add_subcommand("bm25", "Inverted index over a corpus JSONL");
    index_bm25_cmd->add_option("--corpus", index_bm25_args.corpus, "Corpus JSONL")->required()->check(CLI::ExistingFile);
    index_bm25_cmd->add_option("--output", index_bm25_args.output, "Index file")->required();
    index_bm25_cmd->add_option("--k1", index_bm25_args.k1, "BM25 k1")->check(CLI::NonNegativeNumber);
    index_bm25_cmd->add_option("--b", index_bm25_args.b, "BM25 b")->check(CLI::Range(0.0, 1.0));
    index_bm25_cmd->callback([&] { handler = [&] { return index_bm25(ctx, index_bm25_args); }; });
    IndexDenseArgs index_dense_args;
    auto* index_dense_cmd = index_cmd->add_subcommand("dense", "Validated (optionally normalized) EMB1 passage matrix");
    index_dense_cmd->add_option("--embeddings", index_dense_args.embeddings, "Passage EMB1 file (+ .ids)")
        ->required()
        ->check(CLI::ExistingFile);
    index_dense_cmd->add_option("--output", index_dense_args.output, "Output EMB1 file")->required();
    index_dense_cmd->add_flag("--normalize", index_dense_args.normalize, "L2-normalize every row");
    index_dense_cmd->callback([&] { handler = [&] { return index_dense(ctx, index_dense_args); }; });

    auto* search_cmd = app.add_subcommand("search", "Retrieve a TREC run");
    search_cmd->require_subcommand(1);
    SearchBm25Args search_bm25_args;
    auto* search_bm25_cmd = search_cmd->add_subcommand("bm25", "BM25 over a built index");
    search_bm25_cmd->add_option("--index", search_bm25_args.index, "Index file")->required()->check(CLI::ExistingFile);
    search_bm25_cmd->add_option("--queries", search_bm25_args.queries, "Queries JSONL")
        ->required()
        ->check(CLI::ExistingFile);
    search_bm25_cmd->add_option("--output", search_bm25_args.output, "Run file")->required();
    search_bm25_cmd->add_option("--k", search_bm25_args.k, "Depth")->check(CLI::PositiveNumber);
    search_bm25_cmd->add_option("--tag", search_bm25_args.tag, "Run tag");
    search_bm25_cmd->add_option("--prompt", search_bm25_args.prompt, "Prompt set as every query's instruction");
    search_bm25_cmd->add_flag("--ignore-instructions", search_bm25_args.ignore_instructions,
                              "Search with the bare queries");
    search_bm25_cmd->callback([&] { handler = [&] { return search_bm25(ctx, search_bm25_args); }; });
    SearchDenseArgs search_dense_args;
    auto* search_dense_cmd = search_cmd->add_subcommand("dense", "Exact inner-product search");
    search_dense_cmd->add_option("--index", search_dense_args.index, "Passage EMB1 file")
        ->required()
        ->check(CLI::ExistingFile);
    search_dense_cmd->add_option("--queries", search_dense_args.queries, "Query EMB1 file")
        ->required()
        ->check(CLI::ExistingFile);
    search_dense_cmd->add_option("--output", search_dense_args.output, "Run file")->required();
    search_dense_cmd->add_option("--k", search_dense_args.k, "Depth")->check(CLI::PositiveNumber);
    search_dense_cmd->add_option("--tag", search_dense_args.tag, "Run tag");
    search_dense_cmd->callback([&] { handler = [&] { return search_dense(ctx, search_dense_args); }; });

    EvalArgs eval_args;
    auto* eval_cmd = app.add_subcommand("eval", "Score runs against qrels (TSV on stdout)");
    eval_cmd->add_option("--run", eval_args.runs, "Run file; repeat for robustness@k / stddev@k (one per prompt)")
        ->check(CLI::ExistingFile);
    eval_cmd->add_option("--qrels", eval_args.qrels, "Qrels file")->check(CLI::ExistingFile);
    eval_cmd->add_option("--metric", eval_args.metrics,
                         "ndcg@k, map@k, mrr@k, robustness@k, stddev@k or p-mrr (repeatable)")
        ->required();
    eval_cmd->add_option("--gain", eval_args.gain, "nDCG gain")->check(CLI::IsMember({"linear", "exponential"}));
    eval_cmd->add_option("--unjudged", eval_args.unjudged, "Run queries absent from qrels")
        ->check(CLI::IsMember({"exclude", "zero"}));
    eval_cmd->add_option("--run-before", eval_args.run_before, "p-MRR: run without the instruction")
        ->check(CLI::ExistingFile);
    eval_cmd->add_option("--run-after", eval_args.run_after, "p-MRR: run with the instruction")
        ->check(CLI::ExistingFile);
    eval_cmd->add_option("--demote", eval_args.demote, "p-MRR: qrels of docs the instruction makes non-relevant")
        ->check(CLI::ExistingFile);
    eval_cmd->add_option("--promote", eval_args.promote, "p-MRR: qrels of docs the instruction makes relevant")
        ->check(CLI::ExistingFile);
    eval_cmd->add_option("--max-rank", eval_args.max_rank, "p-MRR: deepest rank considered")
        ->check(CLI::PositiveNumber);
    eval_cmd->add_option("--aggregation", eval_args.aggregation, "p-MRR averaging")
        ->check(CLI::IsMember({"per-case", "per-query"}));
    eval_cmd->add_flag("--summary-only", eval_args.summary_only, "Print only the `all` rows");
    eval_cmd->callback([&] { handler = [&] { return eval(ctx, eval_args); }; });

    PromptSelectArgs ps;
    auto* ps_cmd = app.add_subcommand("prompt-select", "Pick a prompt on a sampled dev set and report test scores");
    ps_cmd->add_option("--corpus", ps.corpus, "BM25 mode: corpus JSONL")->check(CLI::ExistingFile);
    ps_cmd->add_option("--index", ps.index, "BM25 mode: prebuilt index")->check(CLI::ExistingFile);
    ps_cmd->add_option("--queries", ps.queries, "BM25 mode: test queries JSONL")->check(CLI::ExistingFile);
    ps_cmd->add_option("--dev-queries", ps.dev_queries, "BM25 mode: dev queries JSONL")->check(CLI::ExistingFile);
    ps_cmd->add_option("--dev-size", ps.dev_size, "Dev queries sampled")->check(CLI::PositiveNumber);
    ps_cmd->add_option("--test-runs", ps.test_runs, "Run mode: one test run per prompt, in pool order")
        ->check(CLI::ExistingFile);
    ps_cmd->add_option("--dev-runs", ps.dev_runs, "Run mode: one dev run per prompt, in pool order")
        ->check(CLI::ExistingFile);
    ps_cmd->add_option("--baseline-run", ps.baseline_run, "Run mode: test run without a prompt")
        ->check(CLI::ExistingFile);
    ps_cmd->add_option("--qrels", ps.qrels, "Test qrels")->required()->check(CLI::ExistingFile);
    ps_cmd->add_option("--dev-qrels", ps.dev_qrels, "Dev qrels (omit when the dataset has no dev split)")
        ->check(CLI::ExistingFile);
    ps_cmd->add_option("--pool", ps.pool, "Prompt pool, one per line (default: bundled)")->check(CLI::ExistingFile);
    ps_cmd->add_option("--k", ps.k, "nDCG cutoff")->check(CLI::PositiveNumber);
    ps_cmd->add_option("--dataset", ps.dataset, "Dataset name for the report");
    ps_cmd->add_option("--format", ps.format, "Report format")->check(CLI::IsMember({"tsv", "markdown"}));
    ps_cmd->add_option("--output", ps.output, "Write the report here instead of stdout");
    ps_cmd->callback([&] { handler = [&] { return prompt_select(ctx, ps); }; });

    AgreementArgs agreement_args;
    auto* agreement_cmd = app.add_subcommand("agreement", "Fraction of matching binary labels");
    agreement_cmd->add_option("--a", agreement_args.a, "Labels, one per line")->required()->check(CLI::ExistingFile);
    agreement_cmd->add_option("--b", agreement_args.b, "Labels, one per line")->required()->check(CLI::ExistingFile);
    agreement_cmd->callback([&] { handler = [&] { return agreement(ctx, agreement_args); }; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return kExitValidation;
    }
    if (!handler) {
        err << app.help();
        return kExitValidation;
    }

    ctx.config = collect_config(&app);
    try {
        return handler();
    } catch (const BackendError& e) {
        err << "backend error: " << e.what() << "\n";
        return kExitBackend;
    } catch (const instret::ParseError& e) {
        err << "parse error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitValidation;
    }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    std::vector<const char*> argv;
    argv.reserve(args.size());
    for (const auto& arg : args) {
        argv.push_back(arg.c_str());
    }
    return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace instret::cli
