#pragma once

#include <cstddef>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace instret {

/// Graded relevance assessments (qrels). Grades are non-negative integers;
/// anything >= 1 counts as relevant for binary measures.
class Judgments {
  public:
    using DocGrades = std::map<std::string, int>;

    /// Throws ValidationError on a negative grade or an existing key.
    void add(const std::string& query_id, const std::string& doc_id, int grade);

    bool has_query(const std::string& query_id) const;
    /// Grade of (query, doc), or nullopt when unjudged.
    std::optional<int> grade(const std::string& query_id, const std::string& doc_id) const;
    /// Empty map when the query is not judged.
    const DocGrades& for_query(const std::string& query_id) const;
    std::size_t relevant_count(const std::string& query_id) const;

    const std::map<std::string, DocGrades>& queries() const noexcept { return by_query_; }
    std::size_t size() const noexcept { return size_; }
    bool empty() const noexcept { return size_ == 0; }

    bool operator==(const Judgments&) const = default;

  private:
    std::map<std::string, DocGrades> by_query_;
    std::size_t size_ = 0;
};

/// Reads `qid 0 docid rel` lines. Blank lines are skipped.
Judgments parse_qrels(std::istream& in);
/// Writes entries sorted by (query_id, doc_id), LF endings.
void write_qrels(const Judgments& judgments, std::ostream& out);

}  // namespace instret
