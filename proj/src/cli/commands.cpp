#include "commands.hpp"

#include <atomic>
#include <fstream>
#include <memory>
#include <sstream>

#include <fmt/format.h>

#include "instret/ablation/transforms.hpp"
#include "instret/bm25/bm25.hpp"
#include "instret/core/error.hpp"
#include "instret/core/judgments.hpp"
#include "instret/core/run.hpp"
#include "instret/core/text.hpp"
#include "instret/datagen/backend.hpp"
#include "instret/datagen/pipeline.hpp"
#include "instret/datagen/records.hpp"
#include "instret/datagen/stats.hpp"
#include "instret/datagen/templates.hpp"
#include "instret/dense/embedding.hpp"
#include "instret/dense/search.hpp"
#include "instret/metrics/metrics.hpp"
#include "instret/prompt_select/prompt_select.hpp"
#include "instret/util/files.hpp"

namespace instret::cli {

namespace {

std::ifstream open_input(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ValidationError("cannot open '" + path + "'");
    }
    return in;
}

template <typename Parse>
auto read_with(const std::string& path, Parse parse)
{
    auto in = open_input(path);
    try {
        return parse(in);
    } catch (const instret::ParseError& e) {
        throw ValidationError(path + ": " + e.what());
    }
}

std::vector<TrainInstance> read_train(const std::string& path)
{
    return read_with(path, [](std::istream& in) { return parse_train(in); });
}

RunList read_run(const std::string& path)
{
    return read_with(path, [](std::istream& in) { return parse_run(in); });
}

Judgments read_qrels(const std::string& path)
{
    return read_with(path, [](std::istream& in) { return parse_qrels(in); });
}

std::vector<InstructedQuery> read_queries(const std::string& path)
{
    return read_with(path, [](std::istream& in) { return parse_queries(in); });
}

template <typename Write>
void write_output(const std::string& path, Write write)
{
    std::ostringstream buffer;
    write(buffer);
    util::write_file_atomic(path, buffer.str());
}

void finish(const Context& ctx, Manifest& manifest, const std::string& output)
{
    manifest.set_config(ctx.config);
    const auto path = ctx.global.manifest.empty() ? Manifest::default_path(output)
                                                  : std::filesystem::path(ctx.global.manifest);
    manifest.write(path);
}

/// Stdout commands only write a manifest when one was asked for.
void finish_stdout(const Context& ctx, Manifest& manifest, std::string_view printed)
{
    if (ctx.global.manifest.empty()) {
        return;
    }
    manifest.add_stdout("report", printed);
    manifest.set_config(ctx.config);
    manifest.write(ctx.global.manifest);
}

/// Counts backend failures that the pipeline absorbs into records, so the
/// command can still exit with the backend status.
class FailureCounter final : public datagen::LmBackend {
  public:
    explicit FailureCounter(std::shared_ptr<datagen::LmBackend> inner) : inner_(std::move(inner)) {}

    std::string complete(const datagen::LmRequest& request) override
    {
        try {
            return inner_->complete(request);
        } catch (const BackendError&) {
            ++failures_;
            throw;
        }
    }
    const std::string& model() const override { return inner_->model(); }
    datagen::DecodingParams params() const override { return inner_->params(); }
    std::size_t call_count() const override { return inner_->call_count(); }
    std::size_t failures() const { return failures_.load(); }

  private:
    std::shared_ptr<datagen::LmBackend> inner_;
    std::atomic<std::size_t> failures_{0};
};

struct Backends {
    std::shared_ptr<FailureCounter> generator;
    std::shared_ptr<FailureCounter> judge;
    datagen::PromptTemplates templates;

    std::size_t failures() const
    {
        return generator->failures() + (judge == generator ? 0 : judge->failures());
    }
};

Backends make_backends(const BackendArgs& args)
{
    datagen::BackendOptions options;
    options.cache_dir = args.cache_dir;
    options.retry.max_attempts = args.retries;
    options.retry.initial_backoff = std::chrono::milliseconds(args.retry_backoff_ms);
    options.params.temperature = args.temperature;
    options.params.max_tokens = args.max_tokens;
    options.api_key_env = args.api_key_env;
    options.timeout = std::chrono::seconds(args.timeout);

    Backends out;
    out.generator = std::make_shared<FailureCounter>(datagen::make_backend(args.backend, options));
    if (args.judge_backend.empty() || args.judge_backend == args.backend) {
        out.judge = out.generator;
    } else {
        out.judge = std::make_shared<FailureCounter>(datagen::make_backend(args.judge_backend, options));
    }
    out.templates = args.templates.empty() ? datagen::PromptTemplates::bundled()
                                           : datagen::PromptTemplates::from_directory(args.templates);
    return out;
}

int backend_status(const Context& ctx, const Backends& backends, std::string_view what)
{
    const auto failures = backends.failures();
    if (failures == 0) {
        return kExitOk;
    }
    *ctx.err << fmt::format("{}: {} backend call(s) failed after retries; affected items were skipped\n", what,
                            failures);
    return kExitBackend;
}

}  // namespace

int gen_instructions(const Context& ctx, const BackendArgs& backend, const GenInstructionsArgs& args)
{
    const auto sources = read_train(args.input);
    auto backends = make_backends(backend);
    datagen::GenerationOptions options;
    options.seed = ctx.global.seed;
    options.exhaustive_grid = args.exhaustive_grid;
    options.non_relevant_docs = args.non_relevant_docs;
    options.jobs = ctx.global.jobs;
    const auto records = datagen::generate_instruction_records(sources, *backends.generator, *backends.judge,
                                                               backends.templates, options);
    write_output(args.output, [&](std::ostream& out) { datagen::write_records(records, out); });

    std::size_t failed = 0;
    std::size_t still_relevant = 0;
    for (const auto& record : records) {
        failed += record.failed ? 1 : 0;
        still_relevant += record.original_positive_still_relevant.value_or(false) ? 1 : 0;
    }
    Manifest manifest("gen-instructions");
    manifest.add_input("sources", args.input);
    manifest.add_output("records", args.output);
    manifest.set_summary({{"records", records.size()}, {"failed", failed}, {"positive_still_relevant", still_relevant}});
    finish(ctx, manifest, args.output);
    *ctx.err << fmt::format("gen-instructions: {} records ({} failed), {} backend calls\n", records.size(), failed,
                            backends.generator->call_count());
    return backend_status(ctx, backends, "gen-instructions");
}

int mine_negatives(const Context& ctx, const BackendArgs& backend, const MineNegativesArgs& args)
{
    const auto sources = read_train(args.input);
    const auto records = read_with(args.records, [](std::istream& in) { return datagen::parse_records(in); });
    auto backends = make_backends(backend);
    const auto sets = datagen::mine_instruction_negatives(sources, records, *backends.generator, *backends.judge,
                                                          backends.templates, ctx.global.jobs);
    write_output(args.output, [&](std::ostream& out) { datagen::write_candidate_sets(sets, out); });

    std::size_t failed = 0;
    std::size_t kept = 0;
    std::size_t negatives = 0;
    for (const auto& set : sets) {
        failed += set.failed ? 1 : 0;
        for (const auto& candidate : set.candidates) {
            if (candidate.label == datagen::CandidateLabel::InstructionNegative) {
                ++negatives;
                kept += candidate.judge_keep ? 1 : 0;
            }
        }
    }
    Manifest manifest("mine-negatives");
    manifest.add_input("sources", args.input);
    manifest.add_input("records", args.records);
    manifest.add_output("candidates", args.output);
    manifest.set_summary({{"candidate_sets", sets.size()},
                          {"failed", failed},
                          {"instruction_negatives", negatives},
                          {"instruction_negatives_kept", kept}});
    finish(ctx, manifest, args.output);
    *ctx.err << fmt::format("mine-negatives: {} sets ({} failed), kept {}/{} instruction negatives\n", sets.size(),
                            failed, kept, negatives);
    return backend_status(ctx, backends, "mine-negatives");
}

int assemble(const Context& ctx, const AssembleArgs& args)
{
    const auto sources = read_train(args.input);
    const auto records = read_with(args.records, [](std::istream& in) { return datagen::parse_records(in); });
    const auto sets = read_with(args.candidates, [](std::istream& in) { return datagen::parse_candidate_sets(in); });
    datagen::AssembleOptions options;
    options.negatives_per_instance = args.negatives;
    options.seed = ctx.global.seed;
    const auto result = datagen::assemble_training_set(sources, records, sets, options);

    const auto audit_path = args.audit.empty() ? args.output + ".audit.jsonl" : args.audit;
    write_output(args.output, [&](std::ostream& out) { write_train(result.instances, out); });
    write_output(audit_path, [&](std::ostream& out) {
        for (const auto& event : result.audit) {
            out << dump_line(event) << '\n';
        }
    });

    std::size_t substituted = 0;
    std::size_t fallback = 0;
    for (const auto& event : result.audit) {
        if (event.at("event") == "instance") {
            substituted += event.at("positive") == "substituted" ? 1 : 0;
            fallback += event.at("positive") == "fallback" ? 1 : 0;
        }
    }
    Manifest manifest("assemble");
    manifest.add_input("sources", args.input);
    manifest.add_input("records", args.records);
    manifest.add_input("candidates", args.candidates);
    manifest.add_output("train", args.output);
    manifest.add_output("audit", audit_path);
    manifest.set_summary(
        {{"instances", result.instances.size()}, {"substituted", substituted}, {"fallback", fallback}});
    finish(ctx, manifest, args.output);
    *ctx.err << fmt::format("assemble: {} instances ({} substituted positives, {} fallbacks)\n",
                            result.instances.size(), substituted, fallback);
    return kExitOk;
}

int ablate(const Context& ctx, const AblateArgs& args)
{
    const auto instances = read_train(args.input);
    ablation::TransformSpec spec;
    spec.kind = ablation::parse_transform_kind(args.transform);
    spec.seed = ctx.global.seed;
    spec.derangement = args.derangement;
    if (spec.kind == ablation::TransformKind::GenericInstruction) {
        spec.generic_pool = args.pool.empty() ? ablation::bundled_generic_pool() : ablation::load_generic_pool(args.pool);
    }
    const auto result = ablation::apply_transform(instances, spec);
    write_output(args.output, [&](std::ostream& out) { write_train(result.instances, out); });

    Manifest manifest("ablate");
    manifest.add_input("train", args.input);
    if (!args.pool.empty()) {
        manifest.add_input("pool", args.pool);
    }
    manifest.add_output("train", args.output);
    manifest.set_summary({{"instances", result.instances.size()}, {"passed_through", result.passed_through}});
    finish(ctx, manifest, args.output);
    if (result.passed_through > 0) {
        *ctx.err << fmt::format("ablate: {} instance(s) without an instruction passed through unchanged\n",
                                result.passed_through);
    }
    return kExitOk;
}

int stats(const Context& ctx, const StatsArgs& args)
{
    const auto instances = read_train(args.input);
    const auto result = datagen::dataset_stats(instances);
    std::string printed;
    if (args.format == "json") {
        auto entry = [](const datagen::WordCountStats& s) {
            return Json{{"count", s.count}, {"min", s.min}, {"mean", s.mean}, {"rounded_mean", s.rounded_mean},
                        {"max", s.max}};
        };
        Json out = Json::object();
        out["overall"] = entry(result.overall);
        out["by_length"] = Json::object();
        for (const auto& [length, s] : result.by_length) {
            out["by_length"][std::string(to_string(length))] = entry(s);
        }
        out["by_style"] = Json::object();
        for (const auto& [style, s] : result.by_style) {
            out["by_style"][std::string(to_string(style))] = entry(s);
        }
        out["by_cell"] = Json::array();
        for (const auto& cell : result.by_cell) {
            auto e = entry(cell.words);
            e["style"] = std::string(to_string(cell.style));
            e["length"] = std::string(to_string(cell.length));
            out["by_cell"].push_back(std::move(e));
        }
        printed = out.dump(2) + "\n";
    } else {
        printed = datagen::render_stats_tsv(result);
    }
    *ctx.out << printed;
    Manifest manifest("stats");
    manifest.add_input("train", args.input);
    finish_stdout(ctx, manifest, printed);
    return kExitOk;
}

int index_bm25(const Context& ctx, const IndexBm25Args& args)
{
    const auto corpus = read_with(args.corpus, [](std::istream& in) { return parse_corpus(in); });
    const auto index = bm25::InvertedIndex::build(corpus, {args.k1, args.b});
    util::write_file_atomic(args.output, index.serialize());
    Manifest manifest("index bm25");
    manifest.add_input("corpus", args.corpus);
    manifest.add_output("index", args.output);
    manifest.set_summary({{"documents", index.doc_count()}, {"vocabulary", index.vocabulary_size()}});
    finish(ctx, manifest, args.output);
    return kExitOk;
}

int index_dense(const Context& ctx, const IndexDenseArgs& args)
{
    auto matrix = dense::load_embeddings(args.embeddings);
    if (args.normalize) {
        matrix = dense::normalize(matrix);
    }
    dense::save_embeddings(matrix, args.output);
    Manifest manifest("index dense");
    manifest.add_input("embeddings", args.embeddings);
    manifest.add_input("ids", dense::ids_path_for(args.embeddings));
    manifest.add_output("embeddings", args.output);
    manifest.add_output("ids", dense::ids_path_for(args.output));
    manifest.set_summary({{"rows", matrix.rows()}, {"dim", matrix.dim()}, {"normalized", matrix.normalized()}});
    finish(ctx, manifest, args.output);
    if (!matrix.normalized()) {
        *ctx.err << "index dense: rows are not unit-norm; scores are raw inner products\n";
    }
    return kExitOk;
}

int search_bm25(const Context& ctx, const SearchBm25Args& args)
{
    const auto index = bm25::InvertedIndex::deserialize(util::read_file(args.index));
    auto queries = read_queries(args.queries);
    for (auto& query : queries) {
        if (args.ignore_instructions) {
            query.instruction.reset();
            query.style.reset();
            query.length.reset();
        }
        query = prompt_select::apply_prompt(query, args.prompt);
    }
    const auto run = index.search_all(queries, args.k, args.tag);
    write_output(args.output, [&](std::ostream& out) { write_run(run, out); });
    Manifest manifest("search bm25");
    manifest.add_input("index", args.index);
    manifest.add_input("queries", args.queries);
    manifest.add_output("run", args.output);
    finish(ctx, manifest, args.output);
    return kExitOk;
}

int search_dense(const Context& ctx, const SearchDenseArgs& args)
{
    const auto passages = dense::load_embeddings(args.index);
    const auto queries = dense::load_embeddings(args.queries);
    const auto run = dense::search_topk(queries, passages, args.k, args.tag, ctx.global.jobs);
    write_output(args.output, [&](std::ostream& out) { write_run(run, out); });
    Manifest manifest("search dense");
    manifest.add_input("passages", args.index);
    manifest.add_input("queries", args.queries);
    manifest.add_output("run", args.output);
    finish(ctx, manifest, args.output);
    return kExitOk;
}

namespace {

struct MetricSpec {
    std::string name;
    int k = 0;
};

MetricSpec parse_metric(const std::string& text)
{
    if (text == "p-mrr" || text == "pmrr") {
        return {"p-mrr", 0};
    }
    const auto at = text.find('@');
    MetricSpec spec{text.substr(0, at), 0};
    if (at == std::string::npos) {
        if (spec.name == "map") {
            spec.k = 1000;
            return spec;
        }
        throw ValidationError("metric '" + text + "' needs a cutoff, e.g. " + text + "@10");
    }
    long long k = 0;
    if (!text::parse_int(std::string_view(text).substr(at + 1), k) || k <= 0 || k > 1000000) {
        throw ValidationError("bad cutoff in metric '" + text + "'");
    }
    spec.k = static_cast<int>(k);
    for (const char* known : {"ndcg", "map", "mrr", "robustness", "stddev"}) {
        if (spec.name == known) {
            return spec;
        }
    }
    throw ValidationError("unknown metric '" + text + "'");
}

void print_summary(std::ostream& out, const std::string& name, double value)
{
    out << name << "\tall\t" << text::format_score(value) << '\n';
}

}  // namespace

int eval(const Context& ctx, const EvalArgs& args)
{
    std::vector<MetricSpec> specs;
    for (const auto& text : args.metrics) {
        specs.push_back(parse_metric(text));
    }
    metrics::MetricOptions options;
    options.gain = args.gain == "exponential" ? metrics::Gain::Exponential : metrics::Gain::Linear;
    options.unjudged = args.unjudged == "zero" ? metrics::UnjudgedPolicy::ScoreZero : metrics::UnjudgedPolicy::Exclude;

    const bool needs_runs = std::any_of(specs.begin(), specs.end(), [](const auto& s) { return s.name != "p-mrr"; });
    if (needs_runs && (args.runs.empty() || args.qrels.empty())) {
        throw ValidationError("--run and --qrels are required for ndcg/map/mrr/robustness/stddev");
    }
    std::vector<RunList> runs;
    Judgments judgments;
    Manifest manifest("eval");
    if (needs_runs) {
        for (const auto& path : args.runs) {
            runs.push_back(read_run(path));
            manifest.add_input("run", path);
        }
        judgments = read_qrels(args.qrels);
        manifest.add_input("qrels", args.qrels);
    }

    std::ostringstream out;
    for (const auto& spec : specs) {
        if (spec.name == "robustness") {
            auto report = metrics::robustness_at_k(runs, judgments, spec.k, options);
            if (args.summary_only) {
                print_summary(out, report.metric_name, report.mean);
            } else {
                metrics::write_report_tsv(report, out);
            }
        } else if (spec.name == "stddev") {
            print_summary(out, fmt::format("stddev@{}", spec.k),
                          metrics::prompt_stddev(runs, judgments, spec.k, options));
        } else if (spec.name == "p-mrr") {
            if (args.run_before.empty() || args.run_after.empty() || args.demote.empty()) {
                throw ValidationError("p-mrr needs --run-before, --run-after and --demote");
            }
            const auto before = read_run(args.run_before);
            const auto after = read_run(args.run_after);
            const auto demote = read_qrels(args.demote);
            std::optional<Judgments> promote;
            if (!args.promote.empty()) {
                promote = read_qrels(args.promote);
            }
            manifest.add_input("run_before", args.run_before);
            manifest.add_input("run_after", args.run_after);
            manifest.add_input("demote", args.demote);
            if (promote) {
                manifest.add_input("promote", args.promote);
            }
            const auto cases =
                metrics::paired_cases(before, after, demote, promote ? &*promote : nullptr, args.max_rank);
            const auto aggregation = args.aggregation == "per-query" ? metrics::PmrrAggregation::PerQuery
                                                                     : metrics::PmrrAggregation::PerCase;
            print_summary(out, "p-mrr", metrics::p_mrr(cases, args.max_rank, aggregation));
        } else {
            for (const auto& run : runs) {
                metrics::MetricReport report;
                if (spec.name == "ndcg") {
                    report = metrics::ndcg_at_k(run, judgments, spec.k, options);
                } else if (spec.name == "map") {
                    report = metrics::map_at_k(run, judgments, spec.k, options);
                } else {
                    report = metrics::mrr_at_k(run, judgments, spec.k, options);
                }
                if (runs.size() > 1) {
                    report.metric_name += ":" + run.tag();
                }
                if (args.summary_only) {
                    print_summary(out, report.metric_name, report.mean);
                } else {
                    metrics::write_report_tsv(report, out);
                }
                if (!report.no_relevant.empty() || !report.unjudged.empty()) {
                    *ctx.err << fmt::format("{}: {} queries without relevant docs, {} unjudged queries not scored\n",
                                            report.metric_name, report.no_relevant.size(), report.unjudged.size());
                }
            }
        }
    }
    const auto printed = out.str();
    *ctx.out << printed;
    finish_stdout(ctx, manifest, printed);
    return kExitOk;
}

int prompt_select(const Context& ctx, const PromptSelectArgs& args)
{
    const auto pool =
        args.pool.empty() ? prompt_select::PromptPool::bundled() : prompt_select::PromptPool::from_file(args.pool);
    const auto test_judgments = read_qrels(args.qrels);
    std::optional<Judgments> dev_judgments;
    if (!args.dev_qrels.empty()) {
        dev_judgments = read_qrels(args.dev_qrels);
    }
    Manifest manifest("prompt-select");
    manifest.add_input("qrels", args.qrels);
    if (dev_judgments) {
        manifest.add_input("dev_qrels", args.dev_qrels);
    }
    if (!args.pool.empty()) {
        manifest.add_input("pool", args.pool);
    }

    std::optional<std::vector<double>> dev_scores;
    std::vector<double> test_scores;
    double baseline = 0.0;
    const bool run_mode = !args.test_runs.empty();
    if (run_mode) {
        if (args.test_runs.size() != pool.size()) {
            throw ValidationError(
                fmt::format("{} test runs for a pool of {} prompts", args.test_runs.size(), pool.size()));
        }
        if (args.baseline_run.empty()) {
            throw ValidationError("--baseline-run is required with --test-runs");
        }
        auto mean_ndcg = [&](const std::string& path, const Judgments& judgments) {
            manifest.add_input("run", path);
            return metrics::ndcg_at_k(read_run(path), judgments, args.k).mean;
        };
        for (const auto& path : args.test_runs) {
            test_scores.push_back(mean_ndcg(path, test_judgments));
        }
        baseline = mean_ndcg(args.baseline_run, test_judgments);
        if (!args.dev_runs.empty()) {
            if (!dev_judgments) {
                throw ValidationError("--dev-runs need --dev-qrels");
            }
            dev_scores.emplace();
            for (const auto& path : args.dev_runs) {
                dev_scores->push_back(mean_ndcg(path, *dev_judgments));
            }
        }
    } else {
        if (args.queries.empty() || (args.corpus.empty() == args.index.empty())) {
            throw ValidationError("BM25 mode needs --queries and exactly one of --corpus / --index "
                                  "(or pass --test-runs for precomputed runs)");
        }
        const auto index = args.index.empty()
                               ? bm25::InvertedIndex::build(
                                     read_with(args.corpus, [](std::istream& in) { return parse_corpus(in); }))
                               : bm25::InvertedIndex::deserialize(util::read_file(args.index));
        manifest.add_input(args.index.empty() ? "corpus" : "index", args.index.empty() ? args.corpus : args.index);
        const auto queries = read_queries(args.queries);
        manifest.add_input("queries", args.queries);
        auto scores = prompt_select::bm25_prompt_scores(index, queries, test_judgments, pool, args.k, ctx.global.jobs);
        baseline = scores.back();
        scores.pop_back();
        test_scores = std::move(scores);

        if (!args.dev_queries.empty()) {
            if (!dev_judgments) {
                throw ValidationError("--dev-queries need --dev-qrels");
            }
            const auto all_dev = read_queries(args.dev_queries);
            manifest.add_input("dev_queries", args.dev_queries);
            std::vector<std::string> ids;
            for (const auto& query : all_dev) {
                if (dev_judgments->relevant_count(query.query_id) > 0) {
                    ids.push_back(query.query_id);
                }
            }
            const auto sampled = prompt_select::sample_dev(ids, args.dev_size, ctx.global.seed);
            std::vector<InstructedQuery> dev;
            for (const auto& query : all_dev) {
                if (std::binary_search(sampled.begin(), sampled.end(), query.query_id)) {
                    dev.push_back(query);
                }
            }
            auto dev_all = prompt_select::bm25_prompt_scores(index, dev, *dev_judgments, pool, args.k, ctx.global.jobs);
            dev_all.pop_back();
            dev_scores = std::move(dev_all);
        }
    }

    const auto result = prompt_select::report(pool, dev_scores, test_scores, baseline, args.dataset);
    const auto printed = args.format == "markdown" ? prompt_select::render_markdown(std::span(&result, 1))
                                                   : prompt_select::render_tsv(result);
    if (args.output.empty()) {
        *ctx.out << printed;
        finish_stdout(ctx, manifest, printed);
    } else {
        util::write_file_atomic(args.output, printed);
        manifest.add_output("report", args.output);
        finish(ctx, manifest, args.output);
    }
    return kExitOk;
}

int agreement(const Context& ctx, const AgreementArgs& args)
{
    const auto a = datagen::parse_labels(util::read_file(args.a));
    const auto b = datagen::parse_labels(util::read_file(args.b));
    const auto value = datagen::agreement(a, b);
    std::size_t matches = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        matches += a[i] == b[i] ? 1 : 0;
    }
    const auto printed = fmt::format("agreement\t{}\nmatches\t{}\ntotal\t{}\n", text::format_score(value), matches,
                                     a.size());
    *ctx.out << printed;
    Manifest manifest("agreement");
    manifest.add_input("a", args.a);
    manifest.add_input("b", args.b);
    finish_stdout(ctx, manifest, printed);
    return kExitOk;
}

}  // namespace instret::cli
