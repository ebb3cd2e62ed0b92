#pragma once

// Independent reference implementations used by the unit and acceptance
// tests. Nothing here calls into the library's scoring code.

#include "haesum/corpus.hpp"

#include <map>
#include <random>
#include <string>
#include <vector>

namespace test {

struct RougeCase {
    std::string name;
    std::vector<std::string> candidate;
    std::vector<std::vector<std::string>> references;
    int n;  // 1, 2, or 0 for the LCS variant
    double precision, recall, f1;
};

// Worked by hand: n-gram multisets with clipped counts, LCS by inspection.
inline std::vector<RougeCase> hand_rouge_cases() {
    return {
        {"unigram subset", {"the", "cat", "sat"}, {{"the", "cat"}}, 1, 2.0 / 3.0, 1.0, 0.8},
        {"lcs swap", {"a", "b", "c", "d"}, {{"a", "c", "b", "d"}}, 0, 0.75, 0.75, 0.75},
        {"bigram overlap", {"the", "cat", "sat", "on", "the", "mat"}, {{"the", "cat", "lay", "on", "the", "mat"}}, 2,
         0.6, 0.6, 0.6},
        {"unigram clipping", {"the", "the", "the", "the"}, {{"the", "cat"}}, 1, 0.25, 0.5, 1.0 / 3.0},
        {"disjoint", {"a", "b"}, {{"c", "d"}}, 1, 0.0, 0.0, 0.0},
        {"empty candidate", {}, {{"a"}}, 1, 0.0, 0.0, 0.0},
        {"no candidate bigram", {"a"}, {{"a", "b"}}, 2, 0.0, 0.0, 0.0},
        {"lcs gapped", {"x", "a", "y", "b", "z"}, {{"a", "b", "c"}}, 0, 0.4, 2.0 / 3.0, 0.5},
        {"concatenated references", {"a", "b", "c"}, {{"a", "d"}, {"b", "e"}}, 1, 2.0 / 3.0, 0.5, 4.0 / 7.0},
        {"bigram clipping", {"a", "b", "a", "b"}, {{"a", "b", "x", "a", "b"}}, 2, 2.0 / 3.0, 0.5, 4.0 / 7.0},
        {"lcs repeats", {"a", "a", "b"}, {{"a", "b", "b"}}, 0, 2.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0},
    };
}

// Exact objective as a fraction: mean of the two n-gram f1 values, where
// f1 = 2 * overlap / (|candidate n-grams| + |reference n-grams|).
struct Fraction {
    long long num = 0;
    long long den = 1;
};

inline bool greater(const Fraction& a, const Fraction& b) {
    return static_cast<__int128>(a.num) * b.den > static_cast<__int128>(b.num) * a.den;
}

inline std::map<std::vector<std::string>, long long> ngrams(const std::vector<std::string>& t, std::size_t n) {
    std::map<std::vector<std::string>, long long> out;
    for (std::size_t i = 0; i + n <= t.size(); ++i) ++out[std::vector<std::string>(t.begin() + i, t.begin() + i + n)];
    return out;
}

inline Fraction f1_fraction(const std::vector<std::string>& cand, const std::vector<std::string>& ref, std::size_t n) {
    const auto c = ngrams(cand, n);
    const auto r = ngrams(ref, n);
    long long ct = 0, rt = 0, overlap = 0;
    for (const auto& [g, k] : c) ct += k;
    for (const auto& [g, k] : r) {
        rt += k;
        if (auto it = c.find(g); it != c.end()) overlap += std::min(k, it->second);
    }
    if (ct == 0 || rt == 0) return {0, 1};
    return {2 * overlap, ct + rt};
}

inline Fraction objective(const haesum::Document& doc, const std::vector<bool>& chosen) {
    std::vector<std::string> cand;
    for (std::size_t i = 0; i < doc.sentences.size(); ++i) {
        if (chosen[i]) cand.insert(cand.end(), doc.sentences[i].begin(), doc.sentences[i].end());
    }
    const auto ref = doc.abstract_tokens();
    const Fraction a = f1_fraction(cand, ref, 1);
    const Fraction b = f1_fraction(cand, ref, 2);
    return {a.num * b.den + b.num * a.den, 2 * a.den * b.den};
}

// Every step tries all remaining sentences and keeps the strict maximum
// (first index wins ties); stops when nothing improves the objective.
inline std::vector<int> exhaustive_greedy_trace(const haesum::Document& doc, int max_selected) {
    std::vector<bool> chosen(doc.sentences.size(), false);
    std::vector<int> trace;
    Fraction current{0, 1};
    while (static_cast<int>(trace.size()) < max_selected) {
        int best = -1;
        Fraction best_value = current;
        for (std::size_t i = 0; i < doc.sentences.size(); ++i) {
            if (chosen[i]) continue;
            chosen[i] = true;
            const Fraction v = objective(doc, chosen);
            chosen[i] = false;
            if (greater(v, best_value)) {
                best_value = v;
                best = static_cast<int>(i);
            }
        }
        if (best < 0) break;
        chosen[static_cast<std::size_t>(best)] = true;
        trace.push_back(best);
        current = best_value;
    }
    return trace;
}

// Up to 8 sentences over a six-word vocabulary, so overlaps and ties are common.
inline haesum::Document random_oracle_document(std::mt19937_64& rng) {
    static const char* words[] = {"a", "b", "c", "d", "e", "f"};
    auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
    auto sentence = [&] {
        std::vector<std::string> s(static_cast<std::size_t>(pick(1, 6)));
        for (auto& w : s) w = words[pick(0, 5)];
        return s;
    };
    haesum::Document doc;
    doc.id = "random";
    const int m = pick(1, 8);
    for (int i = 0; i < m; ++i) {
        doc.sentences.push_back(sentence());
        doc.section_ids.push_back(0);
    }
    const int a = pick(1, 3);
    for (int i = 0; i < a; ++i) doc.abstract.push_back(sentence());
    return doc;
}

}  // namespace test
