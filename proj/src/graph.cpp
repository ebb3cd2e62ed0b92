#include "haesum/graph.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

namespace haesum {

namespace {

// Common English function words; applied to word nodes only.
constexpr std::string_view kStopwords[] = {
    "i", "me", "my", "myself", "we", "our", "ours", "ourselves", "you", "you're", "you've", "you'll", "you'd",
    "your", "yours", "yourself", "yourselves", "he", "him", "his", "himself", "she", "she's", "her", "hers",
    "herself", "it", "it's", "its", "itself", "they", "them", "their", "theirs", "themselves", "what", "which",
    "who", "whom", "this", "that", "that'll", "these", "those", "am", "is", "are", "was", "were", "be", "been",
    "being", "have", "has", "had", "having", "do", "does", "did", "doing", "a", "an", "the", "and", "but", "if",
    "or", "because", "as", "until", "while", "of", "at", "by", "for", "with", "about", "against", "between",
    "into", "through", "during", "before", "after", "above", "below", "to", "from", "up", "down", "in", "out",
    "on", "off", "over", "under", "again", "further", "then", "once", "here", "there", "when", "where", "why",
    "how", "all", "any", "both", "each", "few", "more", "most", "other", "some", "such", "no", "nor", "not",
    "only", "own", "same", "so", "than", "too", "very", "s", "t", "can", "will", "just", "don", "don't",
    "should", "should've", "now", "d", "ll", "m", "o", "re", "ve", "y", "ain", "aren", "aren't", "couldn",
    "couldn't", "didn", "didn't", "doesn", "doesn't", "hadn", "hadn't", "hasn", "hasn't", "haven", "haven't",
    "isn", "isn't", "ma", "mightn", "mightn't", "mustn", "mustn't", "needn", "needn't", "shan", "shan't",
    "shouldn", "shouldn't", "wasn", "wasn't", "weren", "weren't", "won", "won't", "wouldn", "wouldn't"};

const std::set<std::string_view>& stopword_set() {
    static const std::set<std::string_view> set(std::begin(kStopwords), std::end(kStopwords));
    return set;
}

}  // namespace

bool is_stopword(std::string_view token) { return stopword_set().count(token) != 0; }

bool is_punctuation(std::string_view token) {
    return std::none_of(token.begin(), token.end(), [](char c) {
        const auto u = static_cast<unsigned char>(c);
        return std::isalnum(u) != 0 || u >= 0x80;
    });
}

IdfTable IdfTable::build(const std::vector<Document>& corpus) {
    IdfTable t;
    t.documents_ = corpus.size();
    for (const auto& doc : corpus) {
        std::set<std::string> seen;
        for (const auto& s : doc.sentences) seen.insert(s.begin(), s.end());
        for (const auto& tok : seen) ++t.df_[tok];
    }
    return t;
}

std::size_t IdfTable::document_frequency(const std::string& token) const {
    auto it = df_.find(token);
    return it == df_.end() ? 0 : it->second;
}

double IdfTable::idf(const std::string& token) const {
    if (documents_ == 0) return 0.0;
    const double df = static_cast<double>(document_frequency(token));
    return std::max(0.0, std::log(static_cast<double>(documents_) / (1.0 + df)));
}

void IdfTable::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw Error("graph_build", "cannot write " + path);
    out << "#documents\t" << documents_ << '\n';
    std::map<std::string, std::size_t> sorted(df_.begin(), df_.end());
    for (const auto& [tok, df] : sorted) out << tok << '\t' << df << '\n';
}

IdfTable IdfTable::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("graph_build", "cannot open idf table " + path);
    IdfTable t;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto tab = line.find('\t');
        if (tab == std::string::npos) throw Error("graph_build", path + ":" + std::to_string(line_no) + ": bad line");
        const std::string key = line.substr(0, tab);
        const std::size_t value = std::stoull(line.substr(tab + 1));
        if (line_no == 1) {
            if (key != "#documents") throw Error("graph_build", path + ": missing document count header");
            t.documents_ = value;
        } else {
            t.df_[key] = value;
        }
    }
    return t;
}

int weight_bin(double weight, const GraphOptions& options) {
    const double b = std::floor(weight / options.bin_width);
    if (!(b > 0.0)) return 0;
    return static_cast<int>(std::min<double>(b, options.num_bins - 1));
}

HeteroGraph build_hetero_graph(const Document& doc, const Vocabulary& vocab, const IdfTable& idf,
                               const GraphOptions& options) {
    HeteroGraph g;
    g.sentence_count = static_cast<int>(doc.sentences.size());

    auto keep = [&](const std::string& tok, bool filter) {
        if (is_punctuation(tok)) return false;
        return !(filter && is_stopword(tok));
    };

    bool filter = options.filter_stopwords;
    if (filter) {
        bool any = false;
        for (const auto& s : doc.sentences) {
            for (const auto& t : s) any = any || keep(t, true);
        }
        if (!any) {
            filter = false;
            g.stopword_fallback = true;
        }
    }

    std::unordered_map<std::string, int> node_of;
    for (std::size_t si = 0; si < doc.sentences.size(); ++si) {
        const auto& sent = doc.sentences[si];
        std::map<int, int> tf;  // word node -> count within the sentence
        for (const auto& tok : sent) {
            if (!keep(tok, filter)) continue;
            auto [it, inserted] = node_of.emplace(tok, static_cast<int>(g.words.size()));
            if (inserted) {
                g.words.push_back(tok);
                g.word_ids.push_back(vocab.id(tok));
            }
            ++tf[it->second];
        }
        const double len = static_cast<double>(sent.size());
        for (const auto& [node, count] : tf) {
            HeteroEdge e;
            e.sentence = static_cast<int>(si);
            e.word = node;
            e.weight = (static_cast<double>(count) / len) * idf.idf(g.words[static_cast<std::size_t>(node)]);
            e.bin = weight_bin(e.weight, options);
            g.edges.push_back(e);
        }
    }
    return g;
}

Matrix Hypergraph::dense() const {
    Matrix h = Matrix::Zero(node_count, edge_count);
    for (const auto& [n, e] : incidence) h(n, e) = 1.0;
    return h;
}

std::vector<int> Hypergraph::nodes_of_pairs() const {
    std::vector<int> out;
    out.reserve(incidence.size());
    for (const auto& p : incidence) out.push_back(p.first);
    return out;
}

std::vector<int> Hypergraph::edges_of_pairs() const {
    std::vector<int> out;
    out.reserve(incidence.size());
    for (const auto& p : incidence) out.push_back(p.second);
    return out;
}

void Hypergraph::validate() const {
    std::vector<int> row(static_cast<std::size_t>(node_count), 0);
    std::vector<int> col(static_cast<std::size_t>(edge_count), 0);
    for (const auto& [n, e] : incidence) {
        if (n < 0 || n >= node_count || e < 0 || e >= edge_count) {
            throw Error("graph_build", "incidence entry out of range");
        }
        ++row[static_cast<std::size_t>(n)];
        ++col[static_cast<std::size_t>(e)];
    }
    for (std::size_t i = 0; i < row.size(); ++i) {
        if (row[i] == 0) throw Error("graph_build", "sentence " + std::to_string(i) + " belongs to no hyperedge");
    }
    for (std::size_t j = 0; j < col.size(); ++j) {
        if (col[j] == 0) throw Error("graph_build", "hyperedge " + std::to_string(j) + " is empty");
    }
}

Hypergraph build_hypergraph(const Document& doc) {
    if (doc.section_ids.size() != doc.sentences.size()) {
        throw Error("graph_build", "document " + doc.id + " has " + std::to_string(doc.section_ids.size()) +
                                       " section ids for " + std::to_string(doc.sentences.size()) + " sentences");
    }
    std::map<int, int> column;
    for (int s : doc.section_ids) column.emplace(s, 0);
    int next = 0;
    for (auto& [section, col] : column) col = next++;

    Hypergraph h;
    h.node_count = static_cast<int>(doc.sentences.size());
    h.edge_count = next;
    h.incidence.reserve(doc.section_ids.size());
    for (std::size_t i = 0; i < doc.section_ids.size(); ++i) {
        h.incidence.emplace_back(static_cast<int>(i), column.at(doc.section_ids[i]));
    }
    return h;
}

}  // namespace haesum
