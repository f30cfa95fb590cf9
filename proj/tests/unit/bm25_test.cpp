#include <cmath>

#include <gtest/gtest.h>

#include "instret/bm25/bm25.hpp"
#include "instret/core/error.hpp"
#include "oracles/oracles.hpp"

using namespace instret;
using namespace instret::bm25;

namespace {

std::vector<Passage> toy_corpus()
{
    return {{"d1", "Volcano basics", "Volcanoes erupt lava and ash; lava flows cool into rock."},
            {"d2", "", "Ash clouds from an eruption can ground flights for days."},
            {"d3", "Cooking", "Slow cooking lava cake: chocolate, butter, eggs, sugar."},
            {"d4", "Geology", "Rock forms from cooled lava, magma and sediment over time."},
            {"d5", "Travel", "Flights to Iceland: tips for visiting volcano sites and hot springs."}};
}

}  // namespace

TEST(Tokenize, LowercasesAndSplitsOnPunctuation)
{
    EXPECT_EQ(tokenize("Hello, World! x2-y"), (std::vector<std::string>{"hello", "world", "x2", "y"}));
    EXPECT_EQ(tokenize("caf\xc3\xa9 ok"), (std::vector<std::string>{"caf\xc3\xa9", "ok"}));
    EXPECT_TRUE(tokenize(" ... ").empty());
}

TEST(Bm25, ToyCorpusMatchesFrozenFormulaValues)
{
    // Values from an independent script evaluating the formula directly.
    auto index = InvertedIndex::build(toy_corpus());
    auto check = [&](const std::string& query, std::vector<double> expected) {
        auto terms = tokenize(query);
        auto scores = index.score(terms);
        ASSERT_EQ(scores.size(), expected.size());
        for (std::size_t i = 0; i < scores.size(); ++i) {
            EXPECT_NEAR(scores[i], expected[i], 1e-9) << query << " doc " << i;
        }
    };
    check("lava rock", {0.8179368312404958, 0.0, 0.29293288083298213, 0.7418523975978603, 0.0});
    check("volcano ash flights", {0.9025450900555669, 0.9346641324062988, 0.0, 0.0, 0.9025450900555669});
    check("Lava lava cake", {0.36666428621271235, 0.0, 1.0463537292677052, 0.2826904724122485, 0.0});
    EXPECT_NEAR(index.average_length(), 10.8, 1e-12);
}

TEST(Bm25, SearchSkipsZeroScoresAndBreaksTiesById)
{
    auto index = InvertedIndex::build(toy_corpus());
    auto hits = index.search("volcano ash flights", 10);
    ASSERT_EQ(hits.size(), 3U);
    EXPECT_EQ(hits[0].doc_id, "d2");
    EXPECT_EQ(hits[1].doc_id, "d1");
    EXPECT_EQ(hits[2].doc_id, "d5");
    EXPECT_EQ(index.search("volcano ash flights", 1).size(), 1U);
    EXPECT_TRUE(index.search("unknownterm", 10).empty());
}

TEST(Bm25, SearchAllJoinsInstruction)
{
    auto index = InvertedIndex::build(toy_corpus());
    std::vector<InstructedQuery> queries{
        {"q1", "lava", "only cake recipes", InstructionStyle::None, LengthFormat::Short}};
    auto run = index.search_all(queries, 10, "bm25");
    EXPECT_EQ(run.ranking("q1")[0].doc_id, "d3");
}

TEST(Bm25, IdfAndPostings)
{
    auto index = InvertedIndex::build(toy_corpus());
    EXPECT_EQ(index.document_frequency("lava"), 3U);
    EXPECT_NEAR(index.idf("lava"), std::log(1.0 + (5 - 3 + 0.5) / 3.5), 1e-12);
    EXPECT_EQ(index.document_frequency("nothing"), 0U);
    ASSERT_NE(index.postings("lava"), nullptr);
    EXPECT_EQ(index.postings("lava")->front().tf, 2U);
    EXPECT_EQ(index.postings("nothing"), nullptr);
}

TEST(Bm25, BuildErrors)
{
    EXPECT_THROW(InvertedIndex::build({}), ValidationError);
    std::vector<Passage> dup{{"a", "", "x"}, {"a", "", "y"}};
    EXPECT_THROW(InvertedIndex::build(dup), ValidationError);
    std::vector<Passage> empty{{"a", "", "..."}};
    EXPECT_THROW(InvertedIndex::build(empty), ValidationError);
}

TEST(Bm25, SerializeRoundTripAndCorruption)
{
    auto index = InvertedIndex::build(toy_corpus(), {1.2, 0.75});
    auto bytes = index.serialize();
    auto back = InvertedIndex::deserialize(bytes);
    EXPECT_TRUE(back == index);
    EXPECT_EQ(back.serialize(), bytes);
    EXPECT_THROW(InvertedIndex::deserialize(bytes.substr(0, bytes.size() - 3)), ParseError);
    EXPECT_THROW(InvertedIndex::deserialize(bytes + "x"), ParseError);
    EXPECT_THROW(InvertedIndex::deserialize("NOTANIDX" + bytes.substr(8)), ParseError);
}

TEST(Bm25, ZeroBIsMonotoneInTf)
{
    std::vector<Passage> corpus;
    for (int tf = 1; tf <= 8; ++tf) {
        std::string text;
        for (int i = 0; i < tf; ++i) {
            text += "term ";
        }
        for (int pad = 0; pad < (tf * 7) % 5; ++pad) {
            text += "filler ";
        }
        corpus.push_back({"d" + std::to_string(tf), "", text});
    }
    corpus.push_back({"other", "", "unrelated words here"});
    auto index = InvertedIndex::build(corpus, {0.9, 0.0});
    auto scores = index.score(tokenize("term"));
    for (std::size_t i = 1; i + 1 < scores.size(); ++i) {
        EXPECT_GT(scores[i], scores[i - 1]);
    }
}

TEST(Bm25, MatchesOracleOnRandomParams)
{
    auto corpus = toy_corpus();
    std::vector<std::vector<std::string>> docs;
    for (const auto& p : corpus) {
        docs.push_back(tokenize(p.title + " " + p.text));
    }
    for (double k1 : {0.5, 0.9, 1.2, 2.0}) {
        for (double b : {0.0, 0.4, 0.75, 1.0}) {
            auto index = InvertedIndex::build(corpus, {k1, b});
            auto terms = tokenize("lava rock flights ash cake");
            auto expected = oracle::bm25_scores(docs, terms, k1, b);
            auto actual = index.score(terms);
            for (std::size_t i = 0; i < expected.size(); ++i) {
                EXPECT_NEAR(actual[i], expected[i], 1e-9);
            }
        }
    }
}
