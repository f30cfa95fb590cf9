#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "instret/core/run.hpp"
#include "instret/core/types.hpp"

namespace instret::bm25 {

/// Lowercases ASCII letters and splits on ASCII non-alphanumerics. Bytes
/// >= 0x80 stay inside tokens so UTF-8 words are kept whole.
std::vector<std::string> tokenize(std::string_view text);

struct Params {
    double k1 = 0.9;
    double b = 0.4;
};

struct Posting {
    std::uint32_t doc = 0;
    std::uint32_t tf = 0;

    bool operator==(const Posting&) const = default;
};

/// Okapi BM25 over title + text, with Lucene's non-negative idf:
/// idf(t) = ln(1 + (N - df + 0.5) / (df + 0.5)).
class InvertedIndex {
  public:
    /// Throws ValidationError on an empty corpus.
    static InvertedIndex build(std::span<const Passage> corpus, Params params = {});

    /// Per-document scores in corpus order; unknown terms contribute 0 and
    /// repeated query terms count once.
    std::vector<double> score(std::span<const std::string> query_terms) const;
    /// Top-k docs with a positive score, ties by ascending doc id.
    std::vector<ScoredDoc> search(std::string_view query, std::size_t k) const;
    RunList search_all(std::span<const InstructedQuery> queries, std::size_t k, const std::string& run_tag) const;

    double idf(std::string_view term) const;
    std::uint32_t document_frequency(std::string_view term) const;
    const std::vector<Posting>* postings(std::string_view term) const;

    std::size_t doc_count() const noexcept { return doc_ids_.size(); }
    double average_length() const noexcept { return avg_length_; }
    const std::vector<std::uint32_t>& doc_lengths() const noexcept { return doc_lengths_; }
    const std::vector<std::string>& doc_ids() const noexcept { return doc_ids_; }
    std::size_t vocabulary_size() const noexcept { return terms_.size(); }
    Params params() const noexcept { return params_; }

    /// Versioned binary form; identical corpora give identical bytes.
    std::string serialize() const;
    static InvertedIndex deserialize(std::string_view bytes);

    bool operator==(const InvertedIndex&) const;

  private:
    Params params_;
    std::vector<std::string> doc_ids_;
    std::vector<std::uint32_t> doc_lengths_;
    double avg_length_ = 0.0;
    std::vector<std::string> terms_;  // sorted
    std::vector<std::vector<Posting>> postings_;
    std::unordered_map<std::string, std::uint32_t> term_lookup_;

    void rebuild_lookup();
};

}  // namespace instret::bm25
