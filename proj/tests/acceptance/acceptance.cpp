// Acceptance suite: one test per criterion, reported as a single PASS/FAIL
// line each on stdout. Failure details go to stderr.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "instret/ablation/transforms.hpp"
#include "instret/bm25/bm25.hpp"
#include "instret/core/judgments.hpp"
#include "instret/core/jsonl.hpp"
#include "instret/core/run.hpp"
#include "instret/datagen/backend.hpp"
#include "instret/datagen/pipeline.hpp"
#include "instret/datagen/records.hpp"
#include "instret/dense/embedding.hpp"
#include "instret/dense/search.hpp"
#include "instret/metrics/metrics.hpp"
#include "instret/prompt_select/prompt_select.hpp"
#include "instret/util/random.hpp"
#include "oracles/oracles.hpp"
#include "support/support.hpp"

using namespace instret;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point start)
{
    return std::chrono::duration<double>(Clock::now() - start).count();
}

oracle::Scored to_oracle(std::span<const ScoredDoc> ranking)
{
    oracle::Scored out;
    for (const auto& d : ranking) {
        out.emplace_back(d.doc_id, d.score);
    }
    return out;
}

std::string random_words(util::Rng& rng, std::size_t count, const char* prefix)
{
    std::string out;
    for (std::size_t i = 0; i < count; ++i) {
        // Irregular separators so whitespace handling is exercised too.
        out += (i == 0 ? "" : (rng.next() % 4 == 0 ? "  \t" : " "));
        out += prefix + std::to_string(rng.next() % 1000);
    }
    return out;
}

/// Same docs and queries as `base`, with scores redrawn from a coarse grid.
RunList reshuffled(const RunList& base, util::Rng& rng)
{
    RunList out("prompt");
    for (const auto& [query, docs] : base.queries()) {
        std::vector<ScoredDoc> redrawn = docs;
        for (auto& d : redrawn) {
            d.score = static_cast<double>(rng.next() % 40) / 4.0;
        }
        out.add_query(query, std::move(redrawn));
    }
    return out;
}

std::vector<std::string> ids_of(const std::vector<TrainInstance>& sources)
{
    std::vector<std::string> ids;
    for (const auto& s : sources) {
        ids.push_back(s.query_id);
    }
    return ids;
}

}  // namespace

TEST(Acceptance, MetricOracleEquivalence)
{
    const auto start = Clock::now();
    util::Rng rng(20240601);
    std::size_t compared = 0;
    for (int c = 0; c < 200; ++c) {
        auto rc = support::random_case(rng);
        auto check = [&](const metrics::MetricReport& report, auto&& reference) {
            for (const auto& [query, value] : report.per_query) {
                const double expected = reference(to_oracle(rc.run.ranking(query)), rc.qrels.for_query(query));
                ASSERT_NEAR(value, expected, 1e-9) << report.metric_name << " case " << c << " query " << query;
                ++compared;
            }
        };
        for (int k : {5, 10}) {
            check(metrics::ndcg_at_k(rc.run, rc.qrels, k),
                  [k](const oracle::Scored& s, const oracle::Grades& g) { return oracle::ndcg(s, g, k); });
        }
        for (int k : {10, 1000}) {
            check(metrics::map_at_k(rc.run, rc.qrels, k),
                  [k](const oracle::Scored& s, const oracle::Grades& g) { return oracle::average_precision(s, g, k); });
        }
        check(metrics::mrr_at_k(rc.run, rc.qrels, 10),
              [](const oracle::Scored& s, const oracle::Grades& g) { return oracle::reciprocal_rank(s, g, 10); });
    }
    EXPECT_GT(compared, 1000U);
    EXPECT_LT(seconds_since(start), 10.0);
}

TEST(Acceptance, HandVerifiedNdcg)
{
    RunList run("hand");
    run.add_query("q", {{"a", 3.0}, {"b", 2.0}, {"c", 1.0}});
    Judgments qrels;
    qrels.add("q", "a", 1);
    qrels.add("q", "b", 0);
    qrels.add("q", "c", 1);
    const auto report = metrics::ndcg_at_k(run, qrels, 10);
    // (1 + 1/log2(4)) / (1 + 1/log2(3)).
    EXPECT_NEAR(report.mean, 0.9197, 1e-4);
    EXPECT_NEAR(report.mean, 0.9197207891481876, 1e-12);
}

TEST(Acceptance, PmrrEndpointProperties)
{
    constexpr long long kMaxRank = 100;
    util::Rng rng(77);

    // Identical runs give exactly zero.
    for (int c = 0; c < 20; ++c) {
        auto rc = support::random_case(rng);
        Judgments demote;
        for (const auto& [query, grades] : rc.qrels.queries()) {
            for (const auto& [doc, grade] : grades) {
                demote.add(query, doc, 1);
            }
        }
        if (demote.empty()) {
            continue;
        }
        auto cases = metrics::paired_cases(rc.run, rc.run, demote, nullptr, kMaxRank);
        EXPECT_EQ(metrics::p_mrr(cases, kMaxRank), 0.0);
    }

    // Every demote-expected doc leaves rank 1 for max_rank + 1.
    std::vector<metrics::PairedRankCase> dropped;
    for (int i = 0; i < 25; ++i) {
        dropped.push_back({"q" + std::to_string(i), "d", 1, kMaxRank + 1, metrics::ExpectedDirection::Demote});
    }
    EXPECT_NEAR(metrics::p_mrr(dropped, kMaxRank), 99.00990099009901, 1e-9);
    EXPECT_NEAR(metrics::p_mrr(dropped, kMaxRank), 100.0 * (1.0 - 1.0 / 101.0), 1e-9);

    // Antisymmetry and range on random rank pairs.
    for (int i = 0; i < 1000; ++i) {
        const long long before = 1 + static_cast<long long>(rng.next() % (kMaxRank + 1));
        const long long after = 1 + static_cast<long long>(rng.next() % (kMaxRank + 1));
        std::vector<metrics::PairedRankCase> demote{{"q", "d", before, after, metrics::ExpectedDirection::Demote}};
        std::vector<metrics::PairedRankCase> promote{{"q", "d", before, after, metrics::ExpectedDirection::Promote}};
        const double d = metrics::p_mrr(demote, kMaxRank);
        const double p = metrics::p_mrr(promote, kMaxRank);
        ASSERT_EQ(d, -p) << before << " -> " << after;
        for (double value : {d, p}) {
            ASSERT_GT(value, -100.0);
            ASSERT_LE(value, 100.0);
        }
    }
}

TEST(Acceptance, RobustnessAtK)
{
    util::Rng rng(4242);
    std::size_t checked = 0;
    for (int c = 0; c < 100; ++c) {
        auto rc = support::random_case(rng);
        std::vector<RunList> prompts{rc.run};
        const std::size_t extra = 1 + rng.next() % 9;
        for (std::size_t p = 0; p < extra; ++p) {
            prompts.push_back(reshuffled(rc.run, rng));
        }
        for (int k : {5, 10}) {
            const auto robust = metrics::robustness_at_k(prompts, rc.qrels, k);
            std::map<std::string, double> mean;
            for (const auto& run : prompts) {
                for (const auto& [query, value] : metrics::ndcg_at_k(run, rc.qrels, k).per_query) {
                    mean[query] += value / static_cast<double>(prompts.size());
                }
            }
            for (const auto& [query, value] : robust.per_query) {
                ASSERT_LE(value, mean.at(query) + 1e-12) << "case " << c << " query " << query;
                ++checked;
            }
            const auto single = metrics::robustness_at_k(std::span(prompts.data(), 1), rc.qrels, k);
            const auto ndcg = metrics::ndcg_at_k(prompts[0], rc.qrels, k);
            ASSERT_EQ(single.per_query, ndcg.per_query);
            ASSERT_EQ(single.mean, ndcg.mean);
        }
    }
    EXPECT_GT(checked, 100U);
}

TEST(Acceptance, DenseSearchExactness)
{
    constexpr std::size_t kRows = 1000;
    constexpr std::size_t kDim = 64;
    util::Rng rng(9001);
    auto random_matrix = [&](const char* prefix, std::vector<std::vector<float>>& rows) {
        std::vector<std::string> ids;
        std::vector<float> values;
        for (std::size_t r = 0; r < kRows; ++r) {
            ids.push_back(prefix + std::to_string(r));
            std::vector<float> row;
            for (std::size_t d = 0; d < kDim; ++d) {
                row.push_back(static_cast<float>(rng.uniform_real() * 2.0 - 1.0));
            }
            values.insert(values.end(), row.begin(), row.end());
            rows.push_back(std::move(row));
        }
        return dense::EmbeddingMatrix(std::move(ids), kDim, std::move(values));
    };
    std::vector<std::vector<float>> query_rows;
    std::vector<std::vector<float>> passage_rows;
    const auto queries = random_matrix("q", query_rows);
    const auto passages = random_matrix("p", passage_rows);

    const auto one = dense::search_topk(queries, passages, 10, "t", 1);
    const auto eight = dense::search_topk(queries, passages, 10, "t", 8);
    EXPECT_EQ(one, eight);

    const auto expected = oracle::dense_topk(query_rows, passage_rows, passages.ids(), 10);
    for (std::size_t q = 0; q < kRows; ++q) {
        const auto ranking = one.ranking(queries.ids()[q]);
        std::vector<std::string> got;
        for (const auto& d : ranking) {
            got.push_back(d.doc_id);
        }
        ASSERT_EQ(got, expected[q]) << "query " << q;
    }
}

TEST(Acceptance, Bm25Correctness)
{
    const std::vector<Passage> corpus{
        {"d1", "Volcano basics", "Volcanoes erupt lava and ash; lava flows cool into rock."},
        {"d2", "", "Ash clouds from an eruption can ground flights for days."},
        {"d3", "Cooking", "Slow cooking lava cake: chocolate, butter, eggs, sugar."},
        {"d4", "Geology", "Rock forms from cooled lava, magma and sediment over time."},
        {"d5", "Travel", "Flights to Iceland: tips for visiting volcano sites and hot springs."}};
    // Tokenized by hand so the oracle does not depend on the library tokenizer.
    const std::vector<std::vector<std::string>> docs{
        {"volcano", "basics", "volcanoes", "erupt", "lava", "and", "ash", "lava", "flows", "cool", "into", "rock"},
        {"ash", "clouds", "from", "an", "eruption", "can", "ground", "flights", "for", "days"},
        {"cooking", "slow", "cooking", "lava", "cake", "chocolate", "butter", "eggs", "sugar"},
        {"geology", "rock", "forms", "from", "cooled", "lava", "magma", "and", "sediment", "over", "time"},
        {"travel", "flights", "to", "iceland", "tips", "for", "visiting", "volcano", "sites", "and", "hot", "springs"}};
    const std::vector<std::vector<std::string>> queries{
        {"lava", "rock"}, {"volcano", "ash", "flights"}, {"lava", "lava", "cake"}, {"and", "from"}, {"missing"}};
    for (const bm25::Params params : {bm25::Params{}, bm25::Params{1.2, 0.75}, bm25::Params{0.5, 0.0}}) {
        const auto index = bm25::InvertedIndex::build(corpus, params);
        for (const auto& query : queries) {
            const auto got = index.score(query);
            const auto want = oracle::bm25_scores(docs, query, params.k1, params.b);
            ASSERT_EQ(got.size(), want.size());
            for (std::size_t i = 0; i < got.size(); ++i) {
                ASSERT_NEAR(got[i], want[i], 1e-6) << "doc " << i << " k1 " << params.k1 << " b " << params.b;
            }
        }
    }

    // Frozen independent evaluation at the default parameters.
    const auto index = bm25::InvertedIndex::build(corpus);
    const std::vector<double> lava_rock{0.8179368312404958, 0.0, 0.29293288083298213, 0.7418523975978603, 0.0};
    const auto got = index.score(bm25::tokenize("lava rock"));
    for (std::size_t i = 0; i < got.size(); ++i) {
        EXPECT_NEAR(got[i], lava_rock[i], 1e-6);
    }

    // b = 0: score rises strictly with tf whatever the document length.
    util::Rng rng(5);
    for (int c = 0; c < 200; ++c) {
        std::vector<Passage> built;
        const int max_tf = 2 + static_cast<int>(rng.next() % 12);
        for (int tf = 1; tf <= max_tf; ++tf) {
            std::string text;
            for (int i = 0; i < tf; ++i) {
                text += "term ";
            }
            const auto pad = rng.next() % 40;
            for (std::uint64_t i = 0; i < pad; ++i) {
                text += "filler" + std::to_string(i % 7) + " ";
            }
            built.push_back({"d" + std::to_string(tf), "", text});
        }
        built.push_back({"zz", "", "no match at all"});
        const double k1 = 0.1 + rng.uniform_real() * 2.9;
        const auto scores = bm25::InvertedIndex::build(built, {k1, 0.0}).score(bm25::tokenize("term"));
        for (int tf = 1; tf < max_tf; ++tf) {
            ASSERT_GT(scores[tf], scores[tf - 1]) << "case " << c << " tf " << tf;
        }
    }
}

TEST(Acceptance, PipelineSemanticsUnderMockBackends)
{
    constexpr std::size_t kQueries = 1000;
    constexpr std::size_t kNegatives = 15;
    const auto start = Clock::now();
    const auto sources = support::make_sources(kQueries);
    const auto ids = ids_of(sources);
    std::vector<std::string> rejected;
    util::Rng rng(31);
    for (const auto& id : ids) {
        if (rng.next() % 5 == 0) {
            rejected.push_back(id);
        }
    }
    support::TempDir dir;
    support::write_mock_table(dir / "mock.jsonl", support::mock_rows(ids, rejected));

    datagen::BackendOptions options;
    options.cache_dir = dir / "cache";
    const auto templates = datagen::PromptTemplates::bundled();
    datagen::GenerationOptions generation;
    generation.seed = 17;
    const datagen::AssembleOptions assembly{kNegatives, 17};

    auto render = [](const datagen::PipelineResult& result) {
        std::ostringstream out;
        datagen::write_records(result.records, out);
        datagen::write_candidate_sets(result.candidates, out);
        write_train(result.assembled.instances, out);
        for (const auto& event : result.assembled.audit) {
            out << dump_line(event);
        }
        return out.str();
    };

    const std::string spec = "mock:" + (dir / "mock.jsonl").string();
    auto cold = datagen::make_backend(spec, options);
    const auto first = datagen::run_pipeline(sources, *cold, *cold, *cold, templates, generation, assembly);
    EXPECT_GT(cold->call_count(), 0U);

    // (a) Substitution exactly for the queries whose original positive the judge rejects.
    const std::set<std::string> rejected_set(rejected.begin(), rejected.end());
    ASSERT_EQ(first.assembled.instances.size(), kQueries);
    std::size_t substituted = 0;
    for (std::size_t i = 0; i < kQueries; ++i) {
        const auto& instance = first.assembled.instances[i];
        const bool replaced = instance.positive.doc_id != sources[i].positive.doc_id;
        ASSERT_EQ(replaced, rejected_set.count(instance.query_id) == 1) << instance.query_id;
        substituted += replaced ? 1 : 0;
    }
    EXPECT_EQ(substituted, rejected.size());

    // (b) The judge rejects one negative in three.
    std::size_t negatives = 0;
    std::size_t kept = 0;
    for (const auto& set : first.candidates) {
        ASSERT_FALSE(set.failed) << set.error;
        for (const auto& candidate : set.candidates) {
            if (candidate.label == datagen::CandidateLabel::InstructionNegative) {
                ++negatives;
                kept += candidate.judge_keep ? 1 : 0;
            }
        }
    }
    ASSERT_EQ(negatives, 3 * kQueries);
    EXPECT_EQ(3 * kept, 2 * negatives);

    // (c) Exactly N negatives, instruction negatives first.
    for (const auto& instance : first.assembled.instances) {
        ASSERT_EQ(instance.negatives.size(), kNegatives);
        bool seen_hard = false;
        std::size_t instruction = 0;
        for (const auto& negative : instance.negatives) {
            if (negative.source == NegativeSource::Hard) {
                seen_hard = true;
            } else {
                ASSERT_FALSE(seen_hard) << instance.query_id;
                ++instruction;
            }
        }
        EXPECT_EQ(instruction, 2U);
    }

    // (d) Warm cache: every answer is served from disk, the table is never consulted.
    support::write_mock_table(dir / "mock.jsonl", {{{}, {}, std::nullopt, "fatal"}});
    auto warm = datagen::make_backend(spec, options);
    const auto second = datagen::run_pipeline(sources, *warm, *warm, *warm, templates, generation, assembly);
    EXPECT_EQ(warm->call_count(), 0U);
    EXPECT_EQ(render(second), render(first));

    EXPECT_LT(seconds_since(start), 30.0);
}

TEST(Acceptance, AblationTransforms)
{
    util::Rng rng(1234);
    for (int c = 0; c < 10000; ++c) {
        TrainInstance instance = support::make_sources(1, 0).front();
        instance.query = random_words(rng, 1 + rng.next() % 12, "q");
        instance.instruction = random_words(rng, 1 + rng.next() % 150, "i");
        instance.style = InstructionStyle::Persona;
        instance.length = LengthFormat::Long;
        const auto out = ablation::repeat_query(instance);
        ASSERT_FALSE(out.passed_through);
        ASSERT_GE(word_count(*out.instance.instruction), word_count(*instance.instruction)) << "case " << c;
    }

    auto data = support::make_sources(500, 2);
    for (auto& instance : data) {
        instance.instruction = random_words(rng, 1 + rng.next() % 30, "w");
        instance.style = InstructionStyle::Negation;
        instance.length = LengthFormat::Short;
    }
    for (std::uint64_t seed : {1, 2, 3}) {
        for (bool derangement : {false, true}) {
            const auto swapped = ablation::swap_instructions(data, seed, derangement);
            std::multiset<std::string> before;
            std::multiset<std::string> after;
            for (std::size_t i = 0; i < data.size(); ++i) {
                before.insert(*data[i].instruction);
                after.insert(*swapped[i].instruction);
            }
            ASSERT_EQ(before, after);
        }
    }

    const auto pool = ablation::bundled_generic_pool();
    ASSERT_EQ(pool.size(), 50U);
    ASSERT_EQ(std::set<std::string>(pool.begin(), pool.end()).size(), 50U);
    ablation::TransformSpec spec{ablation::TransformKind::GenericInstruction, 99, pool, false};
    const auto generic = ablation::apply_transform(data, spec);
    std::set<std::string> used;
    for (const auto& instance : generic.instances) {
        ASSERT_TRUE(std::find(pool.begin(), pool.end(), *instance.instruction) != pool.end());
        used.insert(*instance.instruction);
    }
    EXPECT_GT(used.size(), 40U);
}

TEST(Acceptance, PromptSelection)
{
    util::Rng rng(606);
    for (int c = 0; c < 2000; ++c) {
        const std::size_t n = 1 + rng.next() % 12;
        std::vector<std::string> prompts;
        std::vector<double> dev;
        std::vector<double> test;
        for (std::size_t i = 0; i < n; ++i) {
            prompts.push_back("prompt " + std::to_string(i));
            // A coarse grid makes ties common.
            dev.push_back(static_cast<double>(rng.next() % 6) / 5.0);
            test.push_back(static_cast<double>(rng.next() % 6) / 5.0);
        }
        std::size_t expected = 0;
        for (std::size_t i = 1; i < n; ++i) {
            if (dev[i] > dev[expected]) {
                expected = i;
            }
        }
        ASSERT_EQ(prompt_select::select_prompt(dev), expected);
        const auto report = prompt_select::report(prompt_select::PromptPool(prompts), dev, test, 0.5);
        ASSERT_EQ(report.selected, expected);
        ASSERT_LE(*report.selected_test(), report.best_test());
        ASSERT_EQ(report.best_test(), *std::max_element(test.begin(), test.end()));
    }
}

TEST(Acceptance, IoRoundTrips)
{
    util::Rng rng(8);
    for (int c = 0; c < 50; ++c) {
        auto rc = support::random_case(rng);
        if (rc.run.query_count() > 0) {
            std::ostringstream first;
            write_run(rc.run, first);
            std::istringstream in(first.str());
            std::ostringstream second;
            write_run(parse_run(in), second);
            ASSERT_EQ(second.str(), first.str());
        }
        if (!rc.qrels.empty()) {
            std::ostringstream first;
            write_qrels(rc.qrels, first);
            std::istringstream in(first.str());
            std::ostringstream second;
            write_qrels(parse_qrels(in), second);
            ASSERT_EQ(second.str(), first.str());
        }
    }

    const std::string canonical_run = "q1 Q0 d1 1 2.500000 bm25\nq1 Q0 d2 2 1.250000 bm25\nq2 Q0 d9 1 -0.500000 bm25\n";
    std::istringstream run_in(canonical_run);
    std::ostringstream run_out;
    write_run(parse_run(run_in), run_out);
    EXPECT_EQ(run_out.str(), canonical_run);

    const std::string canonical_qrels = "q1 0 d1 2\nq1 0 d2 0\nq2 0 d9 1\n";
    std::istringstream qrels_in(canonical_qrels);
    std::ostringstream qrels_out;
    write_qrels(parse_qrels(qrels_in), qrels_out);
    EXPECT_EQ(qrels_out.str(), canonical_qrels);

    std::vector<std::string> ids;
    std::vector<float> values;
    for (int r = 0; r < 37; ++r) {
        ids.push_back("p" + std::to_string(r));
        for (int d = 0; d < 16; ++d) {
            values.push_back(static_cast<float>(rng.uniform_real() - 0.5));
        }
    }
    const dense::EmbeddingMatrix matrix(ids, 16, values);
    const auto bytes = dense::encode_emb1(matrix);
    EXPECT_EQ(dense::encode_emb1(dense::decode_emb1(bytes, ids)), bytes);
    support::TempDir dir;
    dense::save_embeddings(matrix, dir / "m.emb");
    EXPECT_EQ(support::read_text(dir / "m.emb"), bytes);
    EXPECT_EQ(dense::load_embeddings(dir / "m.emb"), matrix);

    auto train = support::make_sources(20, 4);
    for (std::size_t i = 0; i < train.size(); i += 2) {
        train[i].instruction = "Passages must mention \"quotes\", unicode caf\xc3\xa9 and a\ttab.";
        train[i].style = InstructionStyle::Background;
        train[i].length = LengthFormat::VeryLong;
        train[i].negatives.front().source = NegativeSource::Instruction;
    }
    std::ostringstream first;
    write_train(train, first);
    std::istringstream in(first.str());
    const auto parsed = parse_train(in);
    EXPECT_EQ(parsed, train);
    std::ostringstream second;
    write_train(parsed, second);
    EXPECT_EQ(second.str(), first.str());
}

namespace {

const std::map<std::string, std::string>& criterion_names()
{
    static const std::map<std::string, std::string> names{
        {"MetricOracleEquivalence", "metric oracle equivalence"},
        {"HandVerifiedNdcg", "hand-verified nDCG case"},
        {"PmrrEndpointProperties", "p-MRR endpoint properties"},
        {"RobustnessAtK", "robustness@k"},
        {"DenseSearchExactness", "dense search exactness"},
        {"Bm25Correctness", "BM25 correctness"},
        {"PipelineSemanticsUnderMockBackends", "pipeline semantics under mock backends"},
        {"AblationTransforms", "ablation transforms"},
        {"PromptSelection", "prompt selection"},
        {"IoRoundTrips", "IO round trips"},
    };
    return names;
}

class CriterionPrinter : public testing::EmptyTestEventListener {
  public:
    void OnTestPartResult(const testing::TestPartResult& result) override
    {
        if (result.failed()) {
            std::cerr << result.file_name() << ":" << result.line_number() << ": " << result.summary() << "\n";
        }
    }

    void OnTestEnd(const testing::TestInfo& info) override
    {
        const auto it = criterion_names().find(info.name());
        const std::string name = it == criterion_names().end() ? info.name() : it->second;
        const auto* result = info.result();
        std::cout << (result->Passed() ? "PASS " : "FAIL ") << name << " (" << result->elapsed_time() << " ms)\n"
                  << std::flush;
    }
};

}  // namespace

int main(int argc, char** argv)
{
    testing::InitGoogleTest(&argc, argv);
    auto& listeners = testing::UnitTest::GetInstance()->listeners();
    delete listeners.Release(listeners.default_result_printer());
    listeners.Append(new CriterionPrinter);
    return RUN_ALL_TESTS();
}
