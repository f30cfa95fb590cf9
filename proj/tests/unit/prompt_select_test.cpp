#include <gtest/gtest.h>

#include "instret/bm25/bm25.hpp"
#include "instret/core/error.hpp"
#include "instret/prompt_select/prompt_select.hpp"

using namespace instret;
using namespace instret::prompt_select;

TEST(PromptSelect, PoolValidation)
{
    EXPECT_EQ(PromptPool::bundled().size(), 10U);
    EXPECT_THROW(PromptPool({}), ValidationError);
    EXPECT_THROW(PromptPool({"a", "a"}), ValidationError);
}

TEST(PromptSelect, SelectionUsesDevOnlyAndLowestIndexWinsTies)
{
    std::vector<double> dev{0.2, 0.5, 0.5, 0.1};
    EXPECT_EQ(select_prompt(dev), 1U);
    EXPECT_THROW(select_prompt(std::vector<double>{}), ValidationError);

    PromptPool pool({"p0", "p1", "p2", "p3"});
    std::vector<double> test{0.9, 0.3, 0.4, 0.2};
    auto r = report(pool, dev, test, 0.25, "toy");
    ASSERT_TRUE(r.selected.has_value());
    EXPECT_EQ(*r.selected, 1U);
    EXPECT_DOUBLE_EQ(*r.selected_test(), 0.3);
    EXPECT_EQ(r.best, 0U);
    EXPECT_NEAR(r.stddev_x100, 26.925824035672523, 1e-9);

    auto without_dev = report(pool, std::nullopt, test, 0.25);
    EXPECT_FALSE(without_dev.selected.has_value());
    EXPECT_THROW(report(pool, std::nullopt, std::vector<double>{0.1}, 0.0), ValidationError);

    std::vector<PromptEvalReport> reports{r};
    const auto md = render_markdown(reports);
    EXPECT_NE(md.find("| toy | 25.0 | 30.0 | 90.0 | 26.9 |"), std::string::npos) << md;
    EXPECT_NE(render_tsv(r).find("selected"), std::string::npos);
}

TEST(PromptSelect, DevSampleIsSeededAndSorted)
{
    std::vector<std::string> ids{"e", "d", "c", "b", "a"};
    auto a = sample_dev(ids, 3, 4);
    EXPECT_EQ(a, sample_dev(ids, 3, 4));
    EXPECT_TRUE(std::is_sorted(a.begin(), a.end()));
    EXPECT_THROW(sample_dev(ids, 6, 4), ValidationError);
}

TEST(PromptSelect, ApplyPrompt)
{
    InstructedQuery q{"q", "text", std::nullopt, std::nullopt, std::nullopt};
    EXPECT_EQ(apply_prompt(q, ""), q);
    auto prompted = apply_prompt(q, "Retrieve passages");
    EXPECT_EQ(prompted.instruction, "Retrieve passages");
    EXPECT_EQ(prompted.query, "text");
}

TEST(PromptSelect, Bm25ScoresIncludeBaseline)
{
    std::vector<Passage> corpus{{"d1", "", "lava flows downhill"}, {"d2", "", "ice sheets melt"},
                                {"d3", "", "passages about retrieval"}};
    auto index = bm25::InvertedIndex::build(corpus);
    std::vector<InstructedQuery> queries{{"q1", "lava", std::nullopt, std::nullopt, std::nullopt}};
    Judgments judgments;
    judgments.add("q1", "d1", 1);
    PromptPool pool({"passages about retrieval", "lava lava"});
    auto scores = bm25_prompt_scores(index, queries, judgments, pool, 10, 2);
    ASSERT_EQ(scores.size(), 3U);
    EXPECT_DOUBLE_EQ(scores.back(), 1.0);
    EXPECT_DOUBLE_EQ(scores[1], 1.0);
    EXPECT_LT(scores[0], 1.0);
}
