#include "haesum/rouge.hpp"

#include <algorithm>
#include <cstdint>
#include <unordered_map>

namespace haesum {

RougeScore RougeScore::from_counts(double overlap, double candidate_total, double reference_total) {
    RougeScore s;
    if (candidate_total <= 0.0 || reference_total <= 0.0) return s;
    s.precision = overlap / candidate_total;
    s.recall = overlap / reference_total;
    s.f1 = s.precision + s.recall > 0.0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
    return s;
}

namespace {

// Porter stemmer state over a single word; mirrors the reference C version.
class Porter {
public:
    explicit Porter(std::string w) : b_(std::move(w)), k_(static_cast<int>(b_.size()) - 1) {}

    std::string run() {
        if (k_ <= 1) return b_;
        step1ab();
        if (k_ > 0) {
            step1c();
            step2();
            step3();
            step4();
            step5();
        }
        return b_.substr(0, static_cast<std::size_t>(k_ + 1));
    }

private:
    bool cons(int i) const {
        switch (b_[static_cast<std::size_t>(i)]) {
            case 'a': case 'e': case 'i': case 'o': case 'u': return false;
            case 'y': return i == 0 ? true : !cons(i - 1);
            default: return true;
        }
    }

    // Number of VC sequences in b[0..j].
    int m() const {
        int n = 0;
        int i = 0;
        while (true) {
            if (i > j_) return n;
            if (!cons(i)) break;
            ++i;
        }
        ++i;
        while (true) {
            while (true) {
                if (i > j_) return n;
                if (cons(i)) break;
                ++i;
            }
            ++i;
            ++n;
            while (true) {
                if (i > j_) return n;
                if (!cons(i)) break;
                ++i;
            }
            ++i;
        }
    }

    bool vowel_in_stem() const {
        for (int i = 0; i <= j_; ++i) {
            if (!cons(i)) return true;
        }
        return false;
    }

    bool double_c(int j) const {
        if (j < 1) return false;
        if (b_[static_cast<std::size_t>(j)] != b_[static_cast<std::size_t>(j - 1)]) return false;
        return cons(j);
    }

    bool cvc(int i) const {
        if (i < 2 || !cons(i) || cons(i - 1) || !cons(i - 2)) return false;
        const char ch = b_[static_cast<std::size_t>(i)];
        return ch != 'w' && ch != 'x' && ch != 'y';
    }

    bool ends(std::string_view s) {
        const int len = static_cast<int>(s.size());
        if (len > k_ + 1) return false;
        if (b_.compare(static_cast<std::size_t>(k_ - len + 1), static_cast<std::size_t>(len), s) != 0) return false;
        j_ = k_ - len;
        return true;
    }

    void set_to(std::string_view s) {
        const int len = static_cast<int>(s.size());
        b_.replace(static_cast<std::size_t>(j_ + 1), static_cast<std::size_t>(k_ - j_), s);
        k_ = j_ + len;
        b_.resize(static_cast<std::size_t>(k_ + 1));
    }

    void r(std::string_view s) {
        if (m() > 0) set_to(s);
    }

    void step1ab() {
        if (b_[static_cast<std::size_t>(k_)] == 's') {
            if (ends("sses")) {
                k_ -= 2;
            } else if (ends("ies")) {
                set_to("i");
            } else if (b_[static_cast<std::size_t>(k_ - 1)] != 's') {
                --k_;
            }
        }
        if (ends("eed")) {
            if (m() > 0) --k_;
        } else if ((ends("ed") || ends("ing")) && vowel_in_stem()) {
            k_ = j_;
            if (ends("at")) {
                set_to("ate");
            } else if (ends("bl")) {
                set_to("ble");
            } else if (ends("iz")) {
                set_to("ize");
            } else if (double_c(k_)) {
                --k_;
                const char ch = b_[static_cast<std::size_t>(k_)];
                if (ch == 'l' || ch == 's' || ch == 'z') ++k_;
            } else if (m() == 1 && cvc(k_)) {
                j_ = k_;
                set_to("e");
            }
        }
        b_.resize(static_cast<std::size_t>(k_ + 1));
    }

    void step1c() {
        if (ends("y") && vowel_in_stem()) b_[static_cast<std::size_t>(k_)] = 'i';
    }

    void step2() {
        if (k_ < 1) return;
        switch (b_[static_cast<std::size_t>(k_ - 1)]) {
            case 'a':
                if (ends("ational")) { r("ate"); break; }
                if (ends("tional")) { r("tion"); break; }
                break;
            case 'c':
                if (ends("enci")) { r("ence"); break; }
                if (ends("anci")) { r("ance"); break; }
                break;
            case 'e':
                if (ends("izer")) { r("ize"); break; }
                break;
            case 'l':
                if (ends("bli")) { r("ble"); break; }
                if (ends("alli")) { r("al"); break; }
                if (ends("entli")) { r("ent"); break; }
                if (ends("eli")) { r("e"); break; }
                if (ends("ousli")) { r("ous"); break; }
                break;
            case 'o':
                if (ends("ization")) { r("ize"); break; }
                if (ends("ation")) { r("ate"); break; }
                if (ends("ator")) { r("ate"); break; }
                break;
            case 's':
                if (ends("alism")) { r("al"); break; }
                if (ends("iveness")) { r("ive"); break; }
                if (ends("fulness")) { r("ful"); break; }
                if (ends("ousness")) { r("ous"); break; }
                break;
            case 't':
                if (ends("aliti")) { r("al"); break; }
                if (ends("iviti")) { r("ive"); break; }
                if (ends("biliti")) { r("ble"); break; }
                break;
            case 'g':
                if (ends("logi")) { r("log"); break; }
                break;
            default: break;
        }
    }

    void step3() {
        switch (b_[static_cast<std::size_t>(k_)]) {
            case 'e':
                if (ends("icate")) { r("ic"); break; }
                if (ends("ative")) { r(""); break; }
                if (ends("alize")) { r("al"); break; }
                break;
            case 'i':
                if (ends("iciti")) { r("ic"); break; }
                break;
            case 'l':
                if (ends("ical")) { r("ic"); break; }
                if (ends("ful")) { r(""); break; }
                break;
            case 's':
                if (ends("ness")) { r(""); break; }
                break;
            default: break;
        }
    }

    void step4() {
        if (k_ < 1) return;
        switch (b_[static_cast<std::size_t>(k_ - 1)]) {
            case 'a': if (ends("al")) break; return;
            case 'c': if (ends("ance") || ends("ence")) break; return;
            case 'e': if (ends("er")) break; return;
            case 'i': if (ends("ic")) break; return;
            case 'l': if (ends("able") || ends("ible")) break; return;
            case 'n':
                if (ends("ant") || ends("ement") || ends("ment") || ends("ent")) break;
                return;
            case 'o':
                if (ends("ion") && j_ >= 0 &&
                    (b_[static_cast<std::size_t>(j_)] == 's' || b_[static_cast<std::size_t>(j_)] == 't')) {
                    break;
                }
                if (ends("ou")) break;
                return;
            case 's': if (ends("ism")) break; return;
            case 't': if (ends("ate") || ends("iti")) break; return;
            case 'u': if (ends("ous")) break; return;
            case 'v': if (ends("ive")) break; return;
            case 'z': if (ends("ize")) break; return;
            default: return;
        }
        if (m() > 1) k_ = j_;
    }

    void step5() {
        j_ = k_;
        if (b_[static_cast<std::size_t>(k_)] == 'e') {
            const int a = m();
            if (a > 1 || (a == 1 && !cvc(k_ - 1))) --k_;
        }
        if (b_[static_cast<std::size_t>(k_)] == 'l' && double_c(k_) && m() > 1) --k_;
    }

    std::string b_;
    int k_;
    int j_ = 0;
};

bool is_lower_ascii_word(const std::string& w) {
    return std::all_of(w.begin(), w.end(), [](char c) { return c >= 'a' && c <= 'z'; });
}

using NgramCounts = std::unordered_map<std::uint64_t, int>;

// Token ids are interned per call, so hashing an n-gram of ids is exact for n <= 2.
class Interner {
public:
    std::vector<std::uint32_t> intern(const Tokens& toks, const RougeOptions& options) {
        std::vector<std::uint32_t> out;
        out.reserve(toks.size());
        for (const auto& t : toks) {
            const std::string key = options.stem && is_lower_ascii_word(t) ? porter_stem(t) : t;
            auto [it, inserted] = ids_.emplace(key, static_cast<std::uint32_t>(ids_.size()));
            out.push_back(it->second);
        }
        return out;
    }

private:
    std::unordered_map<std::string, std::uint32_t> ids_;
};

NgramCounts count_ngrams(std::span<const std::uint32_t> ids, int n) {
    NgramCounts counts;
    if (static_cast<int>(ids.size()) < n) return counts;
    for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= ids.size(); ++i) {
        std::uint64_t key = ids[i];
        if (n == 2) key = (key << 32) | ids[i + 1];
        ++counts[key];
    }
    return counts;
}

RougeScore rouge_n_ids(std::span<const std::uint32_t> cand, std::span<const std::uint32_t> ref, int n) {
    const NgramCounts c = count_ngrams(cand, n);
    const NgramCounts r = count_ngrams(ref, n);
    double overlap = 0.0;
    for (const auto& [key, count] : c) {
        if (auto it = r.find(key); it != r.end()) overlap += std::min(count, it->second);
    }
    const double ct = std::max<double>(0.0, static_cast<double>(cand.size()) - (n - 1));
    const double rt = std::max<double>(0.0, static_cast<double>(ref.size()) - (n - 1));
    return RougeScore::from_counts(overlap, ct, rt);
}

}  // namespace

std::string porter_stem(std::string word) { return Porter(std::move(word)).run(); }

RougeScore rouge_n(const Tokens& candidate, const Tokens& reference, int n, const RougeOptions& options) {
    if (n != 1 && n != 2) throw Error("rouge_oracle", "rouge_n supports n in {1, 2}");
    Interner interner;
    const auto c = interner.intern(candidate, options);
    const auto r = interner.intern(reference, options);
    return rouge_n_ids(c, r, n);
}

RougeScore rouge_n(const Tokens& candidate, std::span<const Tokens> references, int n, const RougeOptions& options) {
    Tokens joined;
    for (const auto& r : references) joined.insert(joined.end(), r.begin(), r.end());
    return rouge_n(candidate, joined, n, options);
}

std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b) {
    if (a.empty() || b.empty()) return 0;
    std::vector<std::size_t> prev(b.size() + 1, 0);
    std::vector<std::size_t> cur(b.size() + 1, 0);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j) {
            cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

RougeScore rouge_l(const Tokens& candidate, const Tokens& reference, const RougeOptions& options) {
    if (!options.stem) {
        const double lcs = static_cast<double>(lcs_length(candidate, reference));
        return RougeScore::from_counts(lcs, static_cast<double>(candidate.size()), static_cast<double>(reference.size()));
    }
    Tokens c;
    Tokens r;
    for (const auto& t : candidate) c.push_back(is_lower_ascii_word(t) ? porter_stem(t) : t);
    for (const auto& t : reference) r.push_back(is_lower_ascii_word(t) ? porter_stem(t) : t);
    const double lcs = static_cast<double>(lcs_length(c, r));
    return RougeScore::from_counts(lcs, static_cast<double>(c.size()), static_cast<double>(r.size()));
}

RougeTriple rouge_all(const Tokens& candidate, const Tokens& reference, const RougeOptions& options) {
    return {rouge_n(candidate, reference, 1, options), rouge_n(candidate, reference, 2, options),
            rouge_l(candidate, reference, options)};
}

Tokens join_sentences(const Document& doc, std::span<const int> indices) {
    std::vector<int> order(indices.begin(), indices.end());
    std::sort(order.begin(), order.end());
    Tokens out;
    for (int i : order) {
        const auto& s = doc.sentences.at(static_cast<std::size_t>(i));
        out.insert(out.end(), s.begin(), s.end());
    }
    return out;
}

double oracle_objective(const Document& doc, std::span<const int> indices, const RougeOptions& options) {
    const Tokens cand = join_sentences(doc, indices);
    const Tokens ref = doc.abstract_tokens();
    return 0.5 * (rouge_n(cand, ref, 1, options).f1 + rouge_n(cand, ref, 2, options).f1);
}

OracleLabels greedy_oracle(const Document& doc, int max_selected, const RougeOptions& options) {
    if (doc.sentences.empty()) throw Error("rouge_oracle", "greedy_oracle needs at least one sentence");
    OracleLabels out;
    out.labels.assign(doc.sentences.size(), 0);
    const Tokens ref_tokens = doc.abstract_tokens();
    if (ref_tokens.empty() || max_selected <= 0) return out;

    Interner interner;
    const auto ref = interner.intern(ref_tokens, options);
    std::vector<std::vector<std::uint32_t>> sents;
    sents.reserve(doc.sentences.size());
    for (const auto& s : doc.sentences) sents.push_back(interner.intern(s, options));

    std::vector<bool> chosen(doc.sentences.size(), false);
    std::vector<std::uint32_t> cand;
    double current = 0.0;
    const int limit = std::min<int>(max_selected, static_cast<int>(doc.sentences.size()));
    for (int step = 0; step < limit; ++step) {
        int best = -1;
        double best_score = current;
        for (std::size_t i = 0; i < sents.size(); ++i) {
            if (chosen[i]) continue;
            cand.clear();
            for (std::size_t j = 0; j < sents.size(); ++j) {
                if (chosen[j] || j == i) cand.insert(cand.end(), sents[j].begin(), sents[j].end());
            }
            const double score = 0.5 * (rouge_n_ids(cand, ref, 1).f1 + rouge_n_ids(cand, ref, 2).f1);
            if (score > best_score) {
                best_score = score;
                best = static_cast<int>(i);
            }
        }
        if (best < 0) break;
        chosen[static_cast<std::size_t>(best)] = true;
        out.labels[static_cast<std::size_t>(best)] = 1;
        out.selection_order.push_back(best);
        out.step_scores.push_back(best_score);
        current = best_score;
    }
    out.achieved_score = current;
    return out;
}

}  // namespace haesum
