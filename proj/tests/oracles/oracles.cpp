#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace oracle {

std::vector<std::string> full_sort(const Scored& docs)
{
    auto sorted = docs;
    std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) {
            return a.second > b.second;
        }
        return a.first < b.first;
    });
    std::vector<std::string> ids;
    for (const auto& d : sorted) {
        ids.push_back(d.first);
    }
    return ids;
}

namespace {

int grade_of(const Grades& grades, const std::string& id)
{
    auto it = grades.find(id);
    return it == grades.end() ? 0 : it->second;
}

double gain(int grade, bool exponential)
{
    return exponential ? std::pow(2.0, grade) - 1.0 : static_cast<double>(grade);
}

}  // namespace

double ndcg(const Scored& docs, const Grades& grades, int k, bool exponential)
{
    const auto ranked = full_sort(docs);
    double dcg = 0.0;
    for (int i = 0; i < k && i < static_cast<int>(ranked.size()); ++i) {
        dcg += gain(grade_of(grades, ranked[i]), exponential) / (std::log(i + 2.0) / std::log(2.0));
    }
    std::vector<int> ideal;
    for (const auto& [id, g] : grades) {
        ideal.push_back(g);
    }
    std::sort(ideal.rbegin(), ideal.rend());
    double idcg = 0.0;
    for (int i = 0; i < k && i < static_cast<int>(ideal.size()); ++i) {
        idcg += gain(ideal[i], exponential) / (std::log(i + 2.0) / std::log(2.0));
    }
    return idcg == 0.0 ? 0.0 : dcg / idcg;
}

double average_precision(const Scored& docs, const Grades& grades, int k)
{
    int total_relevant = 0;
    for (const auto& [id, g] : grades) {
        total_relevant += g >= 1 ? 1 : 0;
    }
    if (total_relevant == 0) {
        return 0.0;
    }
    const auto ranked = full_sort(docs);
    double sum = 0.0;
    for (int cut = 1; cut <= k && cut <= static_cast<int>(ranked.size()); ++cut) {
        if (grade_of(grades, ranked[cut - 1]) < 1) {
            continue;
        }
        // Precision at this cutoff, recounted from scratch.
        int hits = 0;
        for (int j = 0; j < cut; ++j) {
            hits += grade_of(grades, ranked[j]) >= 1 ? 1 : 0;
        }
        sum += static_cast<double>(hits) / cut;
    }
    return sum / total_relevant;
}

double reciprocal_rank(const Scored& docs, const Grades& grades, int k)
{
    const auto ranked = full_sort(docs);
    for (int i = 0; i < k && i < static_cast<int>(ranked.size()); ++i) {
        if (grade_of(grades, ranked[i]) >= 1) {
            return 1.0 / (i + 1);
        }
    }
    return 0.0;
}

std::vector<std::vector<std::string>> dense_topk(const std::vector<std::vector<float>>& queries,
                                                 const std::vector<std::vector<float>>& passages,
                                                 const std::vector<std::string>& passage_ids, std::size_t k)
{
    std::vector<std::vector<std::string>> out;
    for (const auto& q : queries) {
        Scored scored;
        for (std::size_t p = 0; p < passages.size(); ++p) {
            double s = 0.0;
            for (std::size_t d = 0; d < q.size(); ++d) {
                s += static_cast<double>(q[d]) * static_cast<double>(passages[p][d]);
            }
            scored.emplace_back(passage_ids[p], s);
        }
        auto ids = full_sort(scored);
        ids.resize(std::min(k, ids.size()));
        out.push_back(std::move(ids));
    }
    return out;
}

std::vector<double> bm25_scores(const std::vector<std::vector<std::string>>& docs,
                                const std::vector<std::string>& query_terms, double k1, double b)
{
    const double n = static_cast<double>(docs.size());
    double total = 0.0;
    for (const auto& d : docs) {
        total += static_cast<double>(d.size());
    }
    const double avgdl = total / n;
    const std::set<std::string> terms(query_terms.begin(), query_terms.end());
    std::vector<double> scores(docs.size(), 0.0);
    for (const auto& term : terms) {
        double df = 0.0;
        for (const auto& d : docs) {
            df += std::count(d.begin(), d.end(), term) > 0 ? 1.0 : 0.0;
        }
        const double idf = std::log(1.0 + (n - df + 0.5) / (df + 0.5));
        for (std::size_t i = 0; i < docs.size(); ++i) {
            const double tf = static_cast<double>(std::count(docs[i].begin(), docs[i].end(), term));
            const double dl = static_cast<double>(docs[i].size());
            scores[i] += idf * tf / (tf + k1 * (1.0 - b + b * dl / avgdl));
        }
    }
    return scores;
}

}  // namespace oracle
