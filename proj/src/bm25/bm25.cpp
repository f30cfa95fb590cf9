#include "instret/bm25/bm25.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <map>
#include <set>
#include <unordered_set>

#include "instret/core/error.hpp"

namespace instret::bm25 {

std::vector<std::string> tokenize(std::string_view text)
{
    std::vector<std::string> tokens;
    std::string current;
    for (char raw : text) {
        const auto c = static_cast<unsigned char>(raw);
        if (c >= 0x80 || std::isalnum(c) != 0) {
            current.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : raw);
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) {
        tokens.push_back(std::move(current));
    }
    return tokens;
}

InvertedIndex InvertedIndex::build(std::span<const Passage> corpus, Params params)
{
    if (corpus.empty()) {
        throw ValidationError("cannot build a BM25 index over an empty corpus");
    }
    InvertedIndex index;
    index.params_ = params;
    std::map<std::string, std::vector<Posting>> postings;
    std::uint64_t total_length = 0;
    std::unordered_set<std::string> seen_ids;
    for (std::uint32_t ordinal = 0; ordinal < corpus.size(); ++ordinal) {
        const auto& passage = corpus[ordinal];
        if (!seen_ids.insert(passage.doc_id).second) {
            throw ValidationError("corpus repeats doc_id '" + passage.doc_id + "'");
        }
        std::map<std::string, std::uint32_t> counts;
        std::uint32_t length = 0;
        for (const auto* field : {&passage.title, &passage.text}) {
            for (auto& token : tokenize(*field)) {
                ++counts[std::move(token)];
                ++length;
            }
        }
        for (auto& [term, tf] : counts) {
            postings[term].push_back({ordinal, tf});
        }
        index.doc_ids_.push_back(passage.doc_id);
        index.doc_lengths_.push_back(length);
        total_length += length;
    }
    if (total_length == 0) {
        throw ValidationError("corpus contains no indexable terms");
    }
    index.avg_length_ = static_cast<double>(total_length) / static_cast<double>(corpus.size());
    for (auto& [term, list] : postings) {
        index.terms_.push_back(term);
        index.postings_.push_back(std::move(list));
    }
    index.rebuild_lookup();
    return index;
}

void InvertedIndex::rebuild_lookup()
{
    term_lookup_.clear();
    term_lookup_.reserve(terms_.size());
    for (std::uint32_t i = 0; i < terms_.size(); ++i) {
        term_lookup_.emplace(terms_[i], i);
    }
}

const std::vector<Posting>* InvertedIndex::postings(std::string_view term) const
{
    auto it = term_lookup_.find(std::string(term));
    return it == term_lookup_.end() ? nullptr : &postings_[it->second];
}

std::uint32_t InvertedIndex::document_frequency(std::string_view term) const
{
    const auto* list = postings(term);
    return list == nullptr ? 0 : static_cast<std::uint32_t>(list->size());
}

double InvertedIndex::idf(std::string_view term) const
{
    const auto n = static_cast<double>(doc_count());
    const auto df = static_cast<double>(document_frequency(term));
    return std::log(1.0 + (n - df + 0.5) / (df + 0.5));
}

std::vector<double> InvertedIndex::score(std::span<const std::string> query_terms) const
{
    std::vector<double> scores(doc_count(), 0.0);
    std::set<std::string_view> unique(query_terms.begin(), query_terms.end());
    for (auto term : unique) {
        const auto* list = postings(term);
        if (list == nullptr) {
            continue;
        }
        const double weight = idf(term);
        for (const auto& posting : *list) {
            const double tf = posting.tf;
            const double norm = 1.0 - params_.b + params_.b * doc_lengths_[posting.doc] / avg_length_;
            scores[posting.doc] += weight * tf / (tf + params_.k1 * norm);
        }
    }
    return scores;
}

std::vector<ScoredDoc> InvertedIndex::search(std::string_view query, std::size_t k) const
{
    const auto terms = tokenize(query);
    const auto scores = score(terms);
    std::vector<ScoredDoc> hits;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (scores[i] > 0.0) {
            hits.push_back({doc_ids_[i], scores[i]});
        }
    }
    const auto keep = std::min(k, hits.size());
    std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(keep), hits.end(), ranks_before);
    hits.resize(keep);
    return hits;
}

RunList InvertedIndex::search_all(std::span<const InstructedQuery> queries, std::size_t k,
                                  const std::string& run_tag) const
{
    RunList run(run_tag);
    for (const auto& query : queries) {
        run.add_query(query.query_id, search(joined_text(query.query, query.instruction), k));
    }
    return run;
}

bool InvertedIndex::operator==(const InvertedIndex& other) const
{
    return params_.k1 == other.params_.k1 && params_.b == other.params_.b && doc_ids_ == other.doc_ids_
           && doc_lengths_ == other.doc_lengths_ && avg_length_ == other.avg_length_ && terms_ == other.terms_
           && postings_ == other.postings_;
}

namespace {

constexpr char kMagic[8] = {'I', 'R', 'B', 'M', '2', '5', 'I', 'X'};
constexpr std::uint32_t kVersion = 1;

class Writer {
  public:
    void u32(std::uint32_t v)
    {
        for (int i = 0; i < 4; ++i) {
            out_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
        }
    }
    void u64(std::uint64_t v)
    {
        for (int i = 0; i < 8; ++i) {
            out_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
        }
    }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void str(const std::string& s)
    {
        u32(static_cast<std::uint32_t>(s.size()));
        out_ += s;
    }
    void raw(const char* data, std::size_t n) { out_.append(data, n); }
    std::string take() { return std::move(out_); }

  private:
    std::string out_;
};

class Reader {
  public:
    explicit Reader(std::string_view bytes) : bytes_(bytes) {}

    std::uint64_t uint(int width, const char* field)
    {
        need(static_cast<std::size_t>(width), field);
        std::uint64_t v = 0;
        for (int i = 0; i < width; ++i) {
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
        }
        pos_ += static_cast<std::size_t>(width);
        return v;
    }
    std::uint32_t u32(const char* field) { return static_cast<std::uint32_t>(uint(4, field)); }
    double f64(const char* field) { return std::bit_cast<double>(uint(8, field)); }
    std::string str(const char* field)
    {
        const auto n = u32(field);
        need(n, field);
        std::string s(bytes_.substr(pos_, n));
        pos_ += n;
        return s;
    }
    std::string_view raw(std::size_t n, const char* field)
    {
        need(n, field);
        auto v = bytes_.substr(pos_, n);
        pos_ += n;
        return v;
    }
    bool done() const { return pos_ == bytes_.size(); }
    std::size_t pos() const { return pos_; }

  private:
    void need(std::size_t n, const char* field) const
    {
        if (bytes_.size() - pos_ < n) {
            throw ParseError(pos_, field, "truncated index file", ParseError::Location::ByteOffset);
        }
    }

    std::string_view bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

std::string InvertedIndex::serialize() const
{
    Writer w;
    w.raw(kMagic, sizeof(kMagic));
    w.u32(kVersion);
    w.f64(params_.k1);
    w.f64(params_.b);
    w.u32(static_cast<std::uint32_t>(doc_ids_.size()));
    for (std::size_t i = 0; i < doc_ids_.size(); ++i) {
        w.str(doc_ids_[i]);
        w.u32(doc_lengths_[i]);
    }
    w.u32(static_cast<std::uint32_t>(terms_.size()));
    for (std::size_t t = 0; t < terms_.size(); ++t) {
        w.str(terms_[t]);
        w.u32(static_cast<std::uint32_t>(postings_[t].size()));
        for (const auto& p : postings_[t]) {
            w.u32(p.doc);
            w.u32(p.tf);
        }
    }
    return w.take();
}

InvertedIndex InvertedIndex::deserialize(std::string_view bytes)
{
    Reader r(bytes);
    if (r.raw(sizeof(kMagic), "magic") != std::string_view(kMagic, sizeof(kMagic))) {
        throw ParseError(0, "magic", "not a BM25 index file", ParseError::Location::ByteOffset);
    }
    if (auto version = r.u32("version"); version != kVersion) {
        throw ParseError(8, "version", "unsupported index version " + std::to_string(version),
                         ParseError::Location::ByteOffset);
    }
    InvertedIndex index;
    index.params_.k1 = r.f64("k1");
    index.params_.b = r.f64("b");
    const auto docs = r.u32("doc_count");
    if (docs == 0) {
        throw ParseError(r.pos(), "doc_count", "index has no documents", ParseError::Location::ByteOffset);
    }
    std::uint64_t total = 0;
    for (std::uint32_t i = 0; i < docs; ++i) {
        index.doc_ids_.push_back(r.str("doc_id"));
        index.doc_lengths_.push_back(r.u32("doc_length"));
        total += index.doc_lengths_.back();
    }
    if (total == 0) {
        throw ParseError(r.pos(), "doc_length", "index has no terms", ParseError::Location::ByteOffset);
    }
    index.avg_length_ = static_cast<double>(total) / static_cast<double>(docs);
    const auto terms = r.u32("term_count");
    for (std::uint32_t t = 0; t < terms; ++t) {
        index.terms_.push_back(r.str("term"));
        const auto n = r.u32("posting_count");
        std::vector<Posting> list;
        list.reserve(n);
        for (std::uint32_t i = 0; i < n; ++i) {
            Posting p;
            p.doc = r.u32("posting_doc");
            p.tf = r.u32("posting_tf");
            if (p.doc >= docs) {
                throw ParseError(r.pos(), "posting_doc", "doc ordinal out of range", ParseError::Location::ByteOffset);
            }
            list.push_back(p);
        }
        index.postings_.push_back(std::move(list));
    }
    if (!r.done()) {
        throw ParseError(r.pos(), "", "trailing bytes after index", ParseError::Location::ByteOffset);
    }
    index.rebuild_lookup();
    return index;
}

}  // namespace instret::bm25
