#include <sstream>

#include <gtest/gtest.h>

#include "instret/core/error.hpp"
#include "instret/datagen/records.hpp"
#include "instret/datagen/templates.hpp"
#include "support/support.hpp"

using namespace instret;
using namespace instret::datagen;

TEST(Templates, BundledHaveExpectedSlots)
{
    auto t = PromptTemplates::bundled();
    EXPECT_FALSE(t.system.empty());
    for (const char* slot : {"QUERY_FILL_ME", "POS_DOC_FILL_ME", "NEG_DOC_FILL_ME", "LENGTH_FORMAT_FILL_ME",
                             "STYLE_FILL_ME", "REL_DOCS_NUM_FILL_ME", "NON_REL_DOCS_NUM_FILL_ME"}) {
        EXPECT_NE(t.instruction_generation.find(slot), std::string::npos) << slot;
    }
    EXPECT_NE(t.instruction_negatives.find("INSTRUCTION_FILL_ME"), std::string::npos);
    EXPECT_NE(t.judge.find("PASSAGE_FILL_ME"), std::string::npos);
}

TEST(Templates, FillIsSinglePassAndStrict)
{
    EXPECT_EQ(fill_template("Q: QUERY_FILL_ME.", {{"QUERY_FILL_ME", "x INSTRUCTION_FILL_ME"}}),
              "Q: x INSTRUCTION_FILL_ME.");
    EXPECT_THROW(fill_template("QUERY_FILL_ME and INSTRUCTION_FILL_ME", {{"QUERY_FILL_ME", "x"}}), ValidationError);
    EXPECT_EQ(fill_template("no slots", {{"QUERY_FILL_ME", "unused"}}), "no slots");
}

TEST(Templates, FromDirectoryReadsVersionedFiles)
{
    support::TempDir dir;
    for (const char* name : {"system", "instruction_generation", "instruction_negatives", "judge"}) {
        support::write_text(dir / (std::string(name) + ".v2.txt"), std::string(name) + " text\n");
    }
    auto t = PromptTemplates::from_directory(dir.path(), 2);
    EXPECT_EQ(t.judge.substr(0, 5), "judge");
    EXPECT_THROW(PromptTemplates::from_directory(dir.path(), 3), ValidationError);
}

TEST(Templates, PhrasesAndDocuments)
{
    EXPECT_EQ(length_format_phrase(LengthFormat::Short), "short (1-2 sentences)");
    EXPECT_EQ(style_phrase(InstructionStyle::None), "");
    EXPECT_FALSE(style_phrase(InstructionStyle::Persona).empty());
    std::vector<Passage> docs{{"a", "T1", "x"}, {"b", "T2", "y"}};
    const auto text = format_documents(docs, 2);
    EXPECT_NE(text.find("Document [2]:\nTitle: T1\nText: x"), std::string::npos);
    EXPECT_NE(text.find("Document [3]:"), std::string::npos);
}

TEST(Records, RecordRoundTrip)
{
    InstructionRecord ok;
    ok.record_id = make_record_id("q1", InstructionStyle::Background, LengthFormat::VeryLong);
    EXPECT_EQ(ok.record_id, "q1/background/very_long");
    ok.query_id = "q1";
    ok.instruction = "Relevant documents explain X.";
    ok.style = InstructionStyle::Background;
    ok.length = LengthFormat::VeryLong;
    ok.original_positive_still_relevant = false;
    ok.judge_raw = "false";
    ok.raw_response = "{\"instruction\": \"Relevant documents explain X.\"}";
    InstructionRecord failed;
    failed.record_id = "q2/none/short";
    failed.query_id = "q2";
    failed.failed = true;
    failed.backend_failure = true;
    failed.error = "timeout";
    std::vector<InstructionRecord> records{ok, failed};

    std::ostringstream out;
    write_records(records, out);
    std::istringstream in(out.str());
    auto back = parse_records(in);
    EXPECT_EQ(back, records);
    std::ostringstream again;
    write_records(back, again);
    EXPECT_EQ(again.str(), out.str());
}

TEST(Records, CandidateSetRoundTrip)
{
    CandidateSet set;
    set.record_id = "q1/none/short";
    set.query_id = "q1";
    set.raw_response = "[...]";
    CandidatePassage pos;
    pos.passage = {"gen/q1/none/short/pos", "T", "text"};
    pos.label = CandidateLabel::InstructionPositive;
    pos.explanation = "fits";
    pos.verdict = JudgeVerdict{true, false, "true"};
    pos.judge_keep = true;
    CandidatePassage neg;
    neg.passage = {"gen/q1/none/short/neg1", "T", "text 2"};
    neg.tag = ExplanationTag::Omission;
    neg.explanation = "omission";
    neg.verdict = JudgeVerdict{false, true, "maybe"};
    set.candidates = {pos, neg};
    std::vector<CandidateSet> sets{set};

    std::ostringstream out;
    write_candidate_sets(sets, out);
    std::istringstream in(out.str());
    EXPECT_EQ(parse_candidate_sets(in), sets);
}

TEST(Records, RejectsMalformedRows)
{
    std::istringstream bad_status(
        R"({"record_id":"a","query_id":"q","status":"weird","instruction":"x","style":"none","length":"short"})" "\n");
    EXPECT_THROW(parse_records(bad_status), ParseError);
    std::istringstream bad_style(
        R"({"record_id":"a","query_id":"q","status":"ok","instruction":"x","style":"loud","length":"short"})" "\n");
    EXPECT_THROW(parse_records(bad_style), ParseError);
}
