#include "support.hpp"

#include <fstream>
#include <random>
#include <sstream>

#include <fmt/format.h>

#include "instret/core/jsonl.hpp"

namespace support {

TempDir::TempDir()
{
    std::random_device device;
    for (int attempt = 0; attempt < 100; ++attempt) {
        auto candidate = std::filesystem::temp_directory_path() / fmt::format("instret-test-{:016x}", device());
        if (std::filesystem::create_directory(candidate)) {
            path_ = candidate;
            return;
        }
    }
    throw std::runtime_error("cannot create a temporary directory");
}

TempDir::~TempDir()
{
    std::error_code ignored;
    std::filesystem::remove_all(path_, ignored);
}

RandomCase random_case(instret::util::Rng& rng, std::size_t max_queries, std::size_t max_docs)
{
    RandomCase out{instret::RunList("rand"), {}};
    const auto queries = 1 + rng.uniform_index(max_queries);
    for (std::size_t q = 0; q < queries; ++q) {
        const auto qid = fmt::format("q{}", q);
        const auto pool = 1 + rng.uniform_index(max_docs + 10);
        const auto retrieved = std::min<std::size_t>(1 + rng.uniform_index(max_docs), pool);
        std::vector<std::size_t> order(pool);
        for (std::size_t i = 0; i < pool; ++i) {
            order[i] = i;
        }
        rng.shuffle(std::span<std::size_t>(order));
        std::vector<instret::ScoredDoc> docs;
        for (std::size_t i = 0; i < retrieved; ++i) {
            docs.push_back({fmt::format("d{}", order[i]), static_cast<double>(rng.uniform_index(20)) / 4.0});
        }
        out.run.add_query(qid, std::move(docs));
        for (std::size_t d = 0; d < pool; ++d) {
            if (rng.uniform_real() < 0.4) {
                out.qrels.add(qid, fmt::format("d{}", d), static_cast<int>(rng.uniform_index(4)));
            }
        }
    }
    return out;
}

std::vector<instret::TrainInstance> make_sources(std::size_t queries, std::size_t hard_pool)
{
    std::vector<instret::TrainInstance> out;
    for (std::size_t q = 0; q < queries; ++q) {
        instret::TrainInstance instance;
        instance.query_id = fmt::format("q{:04}", q);
        instance.query = fmt::format("how do volcano type {} eruptions form", q);
        instance.positive = {fmt::format("p{:04}", q), "Volcanoes", fmt::format("Eruptions of type {} form when ...", q)};
        for (std::size_t h = 0; h < hard_pool; ++h) {
            instance.negatives.push_back({{fmt::format("h{:04}_{:02}", q, h), "", fmt::format("hard negative {}", h)},
                                          instret::NegativeSource::Hard});
        }
        out.push_back(std::move(instance));
    }
    return out;
}

std::string candidate_reply(const std::string& query_id)
{
    instret::Json reply = instret::Json::array();
    reply.push_back({{"title", "Fits"},
                     {"passage", "Passage for " + query_id + " meeting every condition."},
                     {"matches_both", true},
                     {"explanation", "matches query and instruction"}});
    reply.push_back({{"title", "Omits"},
                     {"passage", "Passage for " + query_id + " that leaves out the key detail."},
                     {"matches_both", false},
                     {"explanation", "omission - it does not mention the required detail"}});
    reply.push_back({{"title", "Other reading"},
                     {"passage", std::string("Passage ") + kRejectMarker + " for " + query_id + "."},
                     {"matches_both", false},
                     {"explanation", "different interpretation of the query"}});
    reply.push_back({{"title", "Flagged"},
                     {"passage", "Passage for " + query_id + " naming the excluded case."},
                     {"matches_both", "false"},
                     {"explanation", "mention non-relevant flag"}});
    return "Sure, here are the passages:\n" + reply.dump(2);
}

std::vector<instret::datagen::MockBackend::Row> mock_rows(const std::vector<std::string>& query_ids,
                                                          const std::vector<std::string>& reject_positive)
{
    using Row = instret::datagen::MockBackend::Row;
    std::vector<Row> rows;
    rows.push_back({{{"task", "instruction"}},
                    {},
                    R"({"instruction": "I only want passages that discuss the geology, not tourism or history."})",
                    ""});
    for (const auto& qid : query_ids) {
        rows.push_back({{{"task", "candidates"}, {"query_id", qid}}, {}, candidate_reply(qid), ""});
    }
    for (const auto& qid : reject_positive) {
        rows.push_back({{{"task", "judge"}, {"query_id", qid}, {"role", "original_positive"}}, {}, "false", ""});
    }
    rows.push_back({{{"task", "judge"}, {"role", "original_positive"}}, {}, "true", ""});
    rows.push_back({{{"task", "judge"}, {"role", "instruction_positive"}}, {}, "true", ""});
    rows.push_back({{{"task", "judge"}, {"role", "instruction_negative"}}, {kRejectMarker}, "true", ""});
    rows.push_back({{{"task", "judge"}, {"role", "instruction_negative"}}, {}, "false", ""});
    return rows;
}

void write_mock_table(const std::filesystem::path& path, const std::vector<instret::datagen::MockBackend::Row>& rows)
{
    std::string text;
    for (const auto& row : rows) {
        instret::Json value = instret::Json::object();
        if (!row.match.empty()) {
            value["match"] = row.match;
        }
        if (!row.contains.empty()) {
            value["contains"] = row.contains;
        }
        if (row.response) {
            value["response"] = *row.response;
        }
        if (!row.error.empty()) {
            value["error"] = row.error;
        }
        text += value.dump() + "\n";
    }
    write_text(path, text);
}

std::string read_text(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void write_text(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    out << text;
}

}  // namespace support
