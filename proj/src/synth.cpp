#include "haesum/synth.hpp"

#include "haesum/tensor.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <vector>

namespace haesum {

namespace {

constexpr const char* kFiller[] = {
    "the",     "of",       "and",      "in",      "to",        "a",        "with",     "for",      "was",
    "were",    "is",       "by",       "on",      "as",        "that",     "this",     "from",     "at",
    "be",      "an",       "or",       "these",   "which",     "are",      "has",      "between",  "after",
    "study",   "patients", "data",     "analysis", "level",    "group",    "use",      "time",     "case",
    "value",   "rate",     "effect",   "number",  "high",      "low",      "total",    "based",    "present",
    "factor",  "type",     "process",  "role",    "system",    "area",     "range",    "point",    "change",
    "clinical", "response", "treatment", "control", "associated", "different", "cells",  "significant", "model",
    "activity", "function", "increase", "expression", "samples", "related", "specific", "human",  "years"};

constexpr const char* kSyllables[] = {"ba", "ke", "lo", "mu", "ri", "sa", "ti", "vo", "ne", "pa", "go",  "da",
                                      "fi", "ze", "ho", "ju", "wa", "xe", "qui", "ly", "cro", "pha", "ste", "tri"};

constexpr std::array<const char*, 4> kSectionNames = {"introduction", "methods", "results", "discussion"};

constexpr const char* kCues[4][8] = {
    {"background", "aim", "objective", "purpose", "motivation", "previously", "unknown", "investigate"},
    {"measured", "protocol", "sample", "randomized", "assay", "recruited", "procedure", "collected"},
    {"increased", "decreased", "observed", "compared", "ratio", "detected", "showed", "yielded"},
    {"conclude", "suggest", "findings", "therefore", "implications", "overall", "indicate", "support"}};

constexpr int kFillerCount = sizeof(kFiller) / sizeof(kFiller[0]);
constexpr int kSyllableCount = sizeof(kSyllables) / sizeof(kSyllables[0]);

std::string topic_word(int index) {
    std::string w;
    for (int i = 0; i < 3; ++i) {
        w += kSyllables[index % kSyllableCount];
        index /= kSyllableCount;
    }
    return w;
}

using Sentence = std::vector<std::string>;

class Generator {
public:
    Generator(std::mt19937_64& rng, const SynthOptions& options) : rng_(rng), opt_(options) {
        // Zipf-like weights over the filler list
        std::vector<double> w;
        for (int i = 0; i < kFillerCount; ++i) w.push_back(1.0 / (1.0 + 0.15 * i));
        filler_ = std::discrete_distribution<int>(w.begin(), w.end());
    }

    int uniform(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
    bool chance(double p) { return std::bernoulli_distribution(p)(rng_); }
    std::string topic() { return topic_word(uniform(0, opt_.topic_pool - 1)); }

    Sentence sentence(const std::vector<std::string>& inserts) {
        const int len = std::max<int>(uniform(opt_.min_length, opt_.max_length), static_cast<int>(inserts.size()) + 2);
        Sentence s;
        for (int i = 0; i < len; ++i) s.push_back(kFiller[filler_(rng_)]);
        std::vector<int> slots(static_cast<std::size_t>(len));
        for (int i = 0; i < len; ++i) slots[static_cast<std::size_t>(i)] = i;
        std::shuffle(slots.begin(), slots.end(), rng_);
        for (std::size_t i = 0; i < inserts.size(); ++i) s[static_cast<std::size_t>(slots[i])] = inserts[i];
        return s;
    }

    std::string filler() { return kFiller[filler_(rng_)]; }

private:
    std::mt19937_64& rng_;
    const SynthOptions& opt_;
    std::discrete_distribution<int> filler_;
};

std::string text_of(const Sentence& s) {
    std::string out;
    for (const auto& t : s) {
        if (!out.empty()) out += ' ';
        out += t;
    }
    return out + " .";
}

}  // namespace

std::string synth_record(std::mt19937_64& rng, const std::string& id, const SynthOptions& options) {
    Generator gen(rng, options);

    std::vector<std::string> keywords;
    std::set<std::string> used;
    while (static_cast<int>(keywords.size()) < options.keywords) {
        auto w = gen.topic();
        if (used.insert(w).second) keywords.push_back(w);
    }

    std::array<int, 4> sizes{};
    for (auto& s : sizes) s = gen.uniform(options.min_section, options.max_section);
    // key sentences per section: maybe one in the introduction, one in the
    // results, two or three in the discussion
    std::array<std::set<int>, 4> key;
    if (gen.chance(0.7)) key[0].insert(gen.uniform(0, sizes[0] - 1));
    key[2].insert(gen.uniform(0, sizes[2] - 1));
    const int discussion_keys = gen.uniform(2, 3);
    while (static_cast<int>(key[3].size()) < discussion_keys) key[3].insert(gen.uniform(0, sizes[3] - 1));

    nlohmann::json sections = nlohmann::json::array();
    nlohmann::json article = nlohmann::json::array();
    std::vector<Sentence> key_sentences;
    for (int sec = 0; sec < 4; ++sec) {
        nlohmann::json block = nlohmann::json::array();
        for (int i = 0; i < sizes[static_cast<std::size_t>(sec)]; ++i) {
            std::vector<std::string> inserts;
            if (gen.chance(0.5)) inserts.push_back(kCues[sec][gen.uniform(0, 7)]);
            const bool is_key = key[static_cast<std::size_t>(sec)].count(i) != 0;
            if (is_key) {
                std::vector<std::string> ks = keywords;
                std::shuffle(ks.begin(), ks.end(), rng);
                inserts.insert(inserts.end(), ks.begin(), ks.begin() + 3);
                if (gen.chance(0.5)) inserts.push_back(gen.topic());
            } else {
                if (gen.chance(0.2)) inserts.push_back(keywords[static_cast<std::size_t>(gen.uniform(0, options.keywords - 1))]);
                if (gen.chance(0.7)) {
                    const int n = gen.uniform(1, 2);
                    for (int k = 0; k < n; ++k) inserts.push_back(gen.topic());
                }
            }
            Sentence s = gen.sentence(inserts);
            if (is_key) key_sentences.push_back(s);
            block.push_back(text_of(s));
            article.push_back(text_of(s));
        }
        sections.push_back(block);
    }

    // Each abstract sentence restates a key sentence: the span covering its
    // keywords, padded to at least 60% of the sentence, plus a little filler.
    nlohmann::json abstract = nlohmann::json::array();
    const std::set<std::string> keyset(keywords.begin(), keywords.end());
    for (const auto& s : key_sentences) {
        int lo = static_cast<int>(s.size());
        int hi = -1;
        for (int i = 0; i < static_cast<int>(s.size()); ++i) {
            if (keyset.count(s[static_cast<std::size_t>(i)])) {
                lo = std::min(lo, i);
                hi = std::max(hi, i);
            }
        }
        const int want = static_cast<int>(0.6 * static_cast<double>(s.size()));
        while (hi - lo + 1 < want) {
            if (lo > 0 && (gen.chance(0.5) || hi + 1 >= static_cast<int>(s.size()))) --lo;
            else if (hi + 1 < static_cast<int>(s.size())) ++hi;
            else break;
        }
        Sentence a{gen.filler()};
        a.insert(a.end(), s.begin() + lo, s.begin() + hi + 1);
        a.push_back(gen.filler());
        abstract.push_back("<S> " + text_of(a) + " </S>");
    }

    nlohmann::json record = {{"article_id", id},
                             {"article_text", article},
                             {"abstract_text", abstract},
                             {"labels", nullptr},
                             {"section_names", kSectionNames},
                             {"sections", sections}};
    return record.dump();
}

void write_synthetic_corpus(const std::string& dir, const SynthCounts& counts, const SynthOptions& options) {
    std::filesystem::create_directories(dir);
    std::mt19937_64 rng(options.seed);
    auto write_split = [&](const std::string& name, std::size_t n) {
        std::ofstream out(dir + "/" + name + ".txt");
        if (!out) throw Error("corpus_io", "cannot write " + dir + "/" + name + ".txt");
        for (std::size_t i = 0; i < n; ++i) out << synth_record(rng, name + "-" + std::to_string(i), options) << '\n';
    };
    write_split("train", counts.train);
    write_split("val", counts.val);
    write_split("test", counts.test);

    // Word vectors: a shared direction per word class plus word-specific
    // noise, so classes are linearly separable as with pretrained vectors.
    std::mt19937_64 vrng(options.seed ^ 0x5bd1e995ULL);
    std::normal_distribution<double> normal(0.0, 1.0);
    const int dim = options.embedding_dim;
    std::vector<std::vector<double>> directions(6, std::vector<double>(static_cast<std::size_t>(dim)));
    for (auto& d : directions) {
        for (auto& x : d) x = normal(vrng);
    }
    std::ofstream out(dir + "/vectors.txt");
    if (!out) throw Error("corpus_io", "cannot write " + dir + "/vectors.txt");
    char buf[32];
    auto emit = [&](const std::string& word, int cls) {
        out << word;
        for (int j = 0; j < dim; ++j) {
            const double v = 0.3 * directions[static_cast<std::size_t>(cls)][static_cast<std::size_t>(j)] + 0.3 * normal(vrng);
            std::snprintf(buf, sizeof(buf), " %.5f", v);
            out << buf;
        }
        out << '\n';
    };
    for (int i = 0; i < kFillerCount; ++i) emit(kFiller[i], 0);
    for (int i = 0; i < options.topic_pool; ++i) emit(topic_word(i), 1);
    for (int sec = 0; sec < 4; ++sec) {
        for (int c = 0; c < 8; ++c) emit(kCues[sec][c], 2 + sec);
    }
}

}  // namespace haesum
