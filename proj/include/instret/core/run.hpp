#pragma once

#include <istream>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace instret {

struct ScoredDoc {
    std::string doc_id;
    double score = 0.0;

    bool operator==(const ScoredDoc&) const = default;
};

/// Descending score, ties by ascending doc_id.
bool ranks_before(const ScoredDoc& a, const ScoredDoc& b);
void sort_ranked(std::vector<ScoredDoc>& docs);

/// Ranked lists per query. Every list is kept in `ranks_before` order with
/// unique doc ids; rank i (1-based) is position i-1.
class RunList {
  public:
    RunList() = default;
    explicit RunList(std::string tag) : tag_(std::move(tag)) {}

    const std::string& tag() const noexcept { return tag_; }
    void set_tag(std::string tag) { tag_ = std::move(tag); }

    /// Sorts the list into rank order. Throws ValidationError when the query
    /// is already present or the list breaks run invariants.
    void add_query(const std::string& query_id, std::vector<ScoredDoc> docs);

    bool has_query(const std::string& query_id) const;
    /// Empty span when the query is absent.
    std::span<const ScoredDoc> ranking(const std::string& query_id) const;
    const std::map<std::string, std::vector<ScoredDoc>>& queries() const noexcept { return by_query_; }
    std::size_t query_count() const noexcept { return by_query_.size(); }

    bool operator==(const RunList&) const = default;

  private:
    std::string tag_;
    std::map<std::string, std::vector<ScoredDoc>> by_query_;
};

/// Asserts the rank-order and uniqueness invariants; throws ValidationError
/// naming the offending query.
void validate(const RunList& run);

/// Reads `qid Q0 docid rank score tag` lines. Within a query, ranks must be
/// unique and scores non-increasing in rank order; equal scores are then
/// re-ranked by ascending doc_id.
RunList parse_run(std::istream& in);

/// Writes queries in id order, ranks from 1, scores with six decimals. Docs
/// whose printed scores coincide are emitted by ascending doc_id, so the
/// output is always canonical.
void write_run(const RunList& run, std::ostream& out);

}  // namespace instret
