#include "instret/core/judgments.hpp"

#include "instret/core/error.hpp"
#include "instret/core/text.hpp"

namespace instret {

void Judgments::add(const std::string& query_id, const std::string& doc_id, int grade)
{
    if (grade < 0) {
        throw ValidationError("negative grade for (" + query_id + ", " + doc_id + ")");
    }
    auto [it, inserted] = by_query_[query_id].emplace(doc_id, grade);
    if (!inserted) {
        throw ValidationError("duplicate judgment for (" + query_id + ", " + doc_id + ")");
    }
    ++size_;
}

bool Judgments::has_query(const std::string& query_id) const
{
    return by_query_.count(query_id) != 0;
}

std::optional<int> Judgments::grade(const std::string& query_id, const std::string& doc_id) const
{
    auto q = by_query_.find(query_id);
    if (q == by_query_.end()) {
        return std::nullopt;
    }
    auto d = q->second.find(doc_id);
    if (d == q->second.end()) {
        return std::nullopt;
    }
    return d->second;
}

const Judgments::DocGrades& Judgments::for_query(const std::string& query_id) const
{
    static const DocGrades empty;
    auto q = by_query_.find(query_id);
    return q == by_query_.end() ? empty : q->second;
}

std::size_t Judgments::relevant_count(const std::string& query_id) const
{
    std::size_t count = 0;
    for (const auto& [doc, grade] : for_query(query_id)) {
        if (grade >= 1) {
            ++count;
        }
    }
    return count;
}

Judgments parse_qrels(std::istream& in)
{
    Judgments judgments;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto fields = text::split_fields(line);
        if (fields.empty()) {
            continue;
        }
        if (fields.size() < 4) {
            static const char* names[] = {"query_id", "iteration", "doc_id", "rel"};
            throw ParseError(line_no, names[fields.size()], "missing field (expected 'qid 0 docid rel')");
        }
        if (fields.size() > 4) {
            throw ParseError(line_no, "", "too many fields (expected 'qid 0 docid rel')");
        }
        long long grade = 0;
        if (!text::parse_int(fields[3], grade) || grade < 0 || grade > 1'000'000) {
            throw ParseError(line_no, "rel", "grade must be a non-negative integer, got '" + std::string(fields[3]) + "'");
        }
        try {
            judgments.add(std::string(fields[0]), std::string(fields[2]), static_cast<int>(grade));
        } catch (const ValidationError& e) {
            throw ParseError(line_no, "doc_id", e.what());
        }
    }
    return judgments;
}

void write_qrels(const Judgments& judgments, std::ostream& out)
{
    for (const auto& [query, docs] : judgments.queries()) {
        for (const auto& [doc, grade] : docs) {
            out << query << " 0 " << doc << ' ' << grade << '\n';
        }
    }
}

}  // namespace instret
