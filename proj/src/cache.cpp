#include "haesum/cache.hpp"

#include "haesum/rouge.hpp"

#include <json.hpp>

#include <algorithm>
#include <exception>
#include <fstream>
#include <thread>

namespace haesum {

namespace {

std::string join(const Tokens& t) {
    std::string s;
    for (const auto& tok : t) {
        if (!s.empty()) s += ' ';
        s += tok;
    }
    return s;
}

Tokens split(const std::string& s) {
    Tokens out;
    std::size_t start = 0;
    while (start <= s.size()) {
        const auto end = s.find(' ', start);
        const auto piece = s.substr(start, end == std::string::npos ? std::string::npos : end - start);
        if (!piece.empty()) out.push_back(piece);
        if (end == std::string::npos) break;
        start = end + 1;
    }
    return out;
}

nlohmann::json sentences_json(const std::vector<Tokens>& sentences) {
    auto arr = nlohmann::json::array();
    for (const auto& s : sentences) arr.push_back(join(s));
    return arr;
}

// Runs fn(i) for i in [0, n) on up to `workers` threads, each owning a
// contiguous range. The first exception is rethrown.
template <typename Fn>
void parallel_for(std::size_t n, int workers, Fn fn) {
    const auto threads = static_cast<std::size_t>(std::clamp(workers, 1, 64));
    if (threads == 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::exception_ptr> errors(threads);
    std::vector<std::thread> pool;
    const std::size_t chunk = (n + threads - 1) / threads;
    for (std::size_t t = 0; t < threads; ++t) {
        pool.emplace_back([&, t] {
            try {
                for (std::size_t i = t * chunk; i < std::min(n, (t + 1) * chunk); ++i) fn(i);
            } catch (...) {
                errors[t] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

}  // namespace

void write_cache(const std::string& path, const std::vector<Document>& docs, CacheHeader header) {
    std::ofstream out(path);
    if (!out) throw Error("corpus_io", "cannot write cache " + path);
    header.documents = docs.size();
    nlohmann::json h = {{"format", CacheHeader::format_name}, {"version", header.version},
                        {"split", header.split},             {"max_sentences", header.max_sentences},
                        {"max_tokens", header.max_tokens},   {"labeled", header.labeled},
                        {"oracle_max", header.oracle_max},   {"documents", header.documents}};
    out << h.dump() << '\n';
    for (const auto& d : docs) {
        nlohmann::json j = {{"id", d.id},
                            {"sentences", sentences_json(d.sentences)},
                            {"section_ids", d.section_ids},
                            {"abstract", sentences_json(d.abstract)}};
        if (d.oracle_labels) j["labels"] = *d.oracle_labels;
        out << j.dump() << '\n';
    }
    if (!out) throw Error("corpus_io", "cache write failed: " + path);
}

std::vector<Document> read_cache(const std::string& path, CacheHeader* header) {
    std::ifstream in(path);
    if (!in) throw Error("corpus_io", "cannot open cache " + path);
    std::string line;
    if (!std::getline(in, line)) throw Error("corpus_io", "empty cache file " + path);

    CacheHeader h;
    std::vector<Document> docs;
    std::size_t line_no = 1;
    try {
        const auto j = nlohmann::json::parse(line);
        if (j.value("format", "") != CacheHeader::format_name) throw Error("corpus_io", path + " is not a cache file");
        h.version = j.at("version").get<int>();
        if (h.version != CacheHeader::current_version) {
            throw Error("corpus_io", "cache format version " + std::to_string(h.version) + " is not supported");
        }
        h.split = j.value("split", "");
        h.max_sentences = j.value("max_sentences", 0);
        h.max_tokens = j.value("max_tokens", 0);
        h.labeled = j.value("labeled", false);
        h.oracle_max = j.value("oracle_max", 0);
        h.documents = j.value("documents", std::size_t{0});

        while (std::getline(in, line)) {
            ++line_no;
            if (line.empty()) continue;
            const auto r = nlohmann::json::parse(line);
            Document d;
            d.id = r.at("id").get<std::string>();
            for (const auto& s : r.at("sentences")) d.sentences.push_back(split(s.get<std::string>()));
            d.section_ids = r.at("section_ids").get<std::vector<int>>();
            for (const auto& s : r.at("abstract")) d.abstract.push_back(split(s.get<std::string>()));
            if (r.contains("labels")) d.oracle_labels = r.at("labels").get<std::vector<int>>();
            if (d.section_ids.size() != d.sentences.size() ||
                (d.oracle_labels && d.oracle_labels->size() != d.sentences.size())) {
                throw Error("corpus_io", "inconsistent document " + d.id);
            }
            docs.push_back(std::move(d));
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error("corpus_io", path + ":" + std::to_string(line_no) + ": " + e.what());
    }
    if (h.documents != docs.size()) {
        throw Error("corpus_io", path + ": header announces " + std::to_string(h.documents) + " documents, found " +
                                     std::to_string(docs.size()));
    }
    if (header) *header = h;
    return docs;
}

std::vector<DocumentBundle> make_bundles(const std::vector<Document>& docs, const Vocabulary& vocab,
                                         const IdfTable& idf, const ModelConfig& config, int workers) {
    std::vector<DocumentBundle> out(docs.size());
    parallel_for(docs.size(), workers, [&](std::size_t i) {
        const Document d = truncate(docs[i], config.max_sentences, config.max_tokens);
        out[i] = make_bundle(d, vocab, idf, config);
    });
    return out;
}

void label_documents(std::vector<Document>& docs, int oracle_max, int workers) {
    parallel_for(docs.size(), workers, [&](std::size_t i) {
        docs[i].oracle_labels = greedy_oracle(docs[i], oracle_max).labels;
    });
}

}  // namespace haesum
