#include "instret/core/run.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "instret/core/error.hpp"
#include "instret/core/text.hpp"

namespace instret {

bool ranks_before(const ScoredDoc& a, const ScoredDoc& b)
{
    if (a.score != b.score) {
        return a.score > b.score;
    }
    return a.doc_id < b.doc_id;
}

void sort_ranked(std::vector<ScoredDoc>& docs)
{
    std::sort(docs.begin(), docs.end(), ranks_before);
}

void RunList::add_query(const std::string& query_id, std::vector<ScoredDoc> docs)
{
    if (by_query_.count(query_id) != 0) {
        throw ValidationError("run already contains query '" + query_id + "'");
    }
    std::unordered_set<std::string> seen;
    seen.reserve(docs.size());
    for (const auto& doc : docs) {
        if (!std::isfinite(doc.score)) {
            throw ValidationError("query '" + query_id + "': non-finite score for doc '" + doc.doc_id + "'");
        }
        if (!seen.insert(doc.doc_id).second) {
            throw ValidationError("query '" + query_id + "': duplicate doc_id '" + doc.doc_id + "'");
        }
    }
    sort_ranked(docs);
    by_query_.emplace(query_id, std::move(docs));
}

bool RunList::has_query(const std::string& query_id) const
{
    return by_query_.count(query_id) != 0;
}

std::span<const ScoredDoc> RunList::ranking(const std::string& query_id) const
{
    auto it = by_query_.find(query_id);
    if (it == by_query_.end()) {
        return {};
    }
    return it->second;
}

void validate(const RunList& run)
{
    for (const auto& [query, docs] : run.queries()) {
        std::unordered_set<std::string> seen;
        for (std::size_t i = 0; i < docs.size(); ++i) {
            if (!seen.insert(docs[i].doc_id).second) {
                throw ValidationError("query '" + query + "': duplicate doc_id '" + docs[i].doc_id + "'");
            }
            if (i > 0 && !ranks_before(docs[i - 1], docs[i])) {
                throw ValidationError("query '" + query + "': rank " + std::to_string(i + 1)
                                      + " violates descending-score / ascending-doc_id order");
            }
        }
    }
}

namespace {

struct RunLine {
    long long rank;
    ScoredDoc doc;
    std::size_t line_no;
};

}  // namespace

RunList parse_run(std::istream& in)
{
    std::map<std::string, std::vector<RunLine>> lines_by_query;
    std::string tag;
    bool tag_set = false;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto fields = text::split_fields(line);
        if (fields.empty()) {
            continue;
        }
        if (fields.size() != 6) {
            throw ParseError(line_no, "", "expected 6 fields 'qid Q0 docid rank score tag', got "
                                              + std::to_string(fields.size()));
        }
        long long rank = 0;
        if (!text::parse_int(fields[3], rank) || rank < 1) {
            throw ParseError(line_no, "rank", "rank must be a positive integer");
        }
        double score = 0.0;
        if (!text::parse_double(fields[4], score)) {
            throw ParseError(line_no, "score", "score must be a finite number");
        }
        if (!tag_set) {
            tag = std::string(fields[5]);
            tag_set = true;
        } else if (fields[5] != tag) {
            throw ParseError(line_no, "tag", "mixed run tags ('" + tag + "' and '" + std::string(fields[5]) + "')");
        }
        lines_by_query[std::string(fields[0])].push_back({rank, {std::string(fields[2]), score}, line_no});
    }

    RunList run(tag);
    for (auto& [query, entries] : lines_by_query) {
        std::stable_sort(entries.begin(), entries.end(),
                         [](const RunLine& a, const RunLine& b) { return a.rank < b.rank; });
        std::vector<ScoredDoc> docs;
        docs.reserve(entries.size());
        for (std::size_t i = 0; i < entries.size(); ++i) {
            if (i > 0 && entries[i].rank == entries[i - 1].rank) {
                throw ValidationError("query '" + query + "': rank " + std::to_string(entries[i].rank)
                                      + " appears twice (line " + std::to_string(entries[i].line_no) + ")");
            }
            if (i > 0 && entries[i].doc.score > entries[i - 1].doc.score) {
                throw ValidationError("query '" + query + "': rank " + std::to_string(entries[i].rank)
                                      + " has a higher score than rank " + std::to_string(entries[i - 1].rank)
                                      + " (line " + std::to_string(entries[i].line_no) + ")");
            }
            docs.push_back(std::move(entries[i].doc));
        }
        run.add_query(query, std::move(docs));
    }
    return run;
}

void write_run(const RunList& run, std::ostream& out)
{
    struct Printed {
        const ScoredDoc* doc;
        std::string score;
        double rounded;
    };
    auto has_space = [](const std::string& s) { return s.find_first_of(" \t\r\n") != std::string::npos; };
    if (run.tag().empty() || has_space(run.tag())) {
        throw ValidationError("run tag must be a non-empty token, got '" + run.tag() + "'");
    }
    for (const auto& [query, docs] : run.queries()) {
        if (query.empty() || has_space(query)) {
            throw ValidationError("query id '" + query + "' cannot be written to a run file");
        }
        std::vector<Printed> printed;
        printed.reserve(docs.size());
        for (const auto& doc : docs) {
            if (doc.doc_id.empty() || has_space(doc.doc_id)) {
                throw ValidationError("doc id '" + doc.doc_id + "' cannot be written to a run file");
            }
            auto score = text::format_score(doc.score);
            double rounded = 0.0;
            text::parse_double(score, rounded);
            printed.push_back({&doc, std::move(score), rounded});
        }
        std::stable_sort(printed.begin(), printed.end(), [](const Printed& a, const Printed& b) {
            if (a.rounded != b.rounded) {
                return a.rounded > b.rounded;
            }
            return a.doc->doc_id < b.doc->doc_id;
        });
        std::size_t rank = 1;
        for (const auto& p : printed) {
            out << query << " Q0 " << p.doc->doc_id << ' ' << rank++ << ' ' << p.score << ' ' << run.tag() << '\n';
        }
    }
}

}  // namespace instret
