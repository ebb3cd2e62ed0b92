#pragma once

#include "haesum/corpus.hpp"

#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

namespace test {

inline haesum::Document make_doc(const std::vector<std::string>& sentences, std::vector<int> sections = {},
                                 const std::vector<std::string>& abstract = {}, std::string id = "doc") {
    haesum::Document d;
    d.id = std::move(id);
    for (const auto& s : sentences) d.sentences.push_back(haesum::tokenize(s));
    if (sections.empty()) sections.assign(sentences.size(), 0);
    d.section_ids = std::move(sections);
    for (const auto& s : abstract) d.abstract.push_back(haesum::tokenize(s));
    return d;
}

// Fresh directory under the system temp dir, removed on scope exit.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() /
                ("haesum-" + tag + "-" + std::to_string(rd()) + "-" + std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    std::string path() const { return path_.string(); }
    std::string file(const std::string& name) const { return (path_ / name).string(); }

    void write(const std::string& name, const std::string& text) const {
        std::ofstream out(file(name));
        out << text;
    }

private:
    std::filesystem::path path_;
};

}  // namespace test

namespace test {

// Sentence i of the result is sentence perm[i] of `doc`; section ids and
// labels move along.
inline haesum::Document permute_document(const haesum::Document& doc, const std::vector<int>& perm) {
    haesum::Document out = doc;
    for (std::size_t i = 0; i < perm.size(); ++i) {
        const auto from = static_cast<std::size_t>(perm[i]);
        out.sentences[i] = doc.sentences[from];
        out.section_ids[i] = doc.section_ids[from];
        if (doc.oracle_labels) (*out.oracle_labels)[i] = (*doc.oracle_labels)[from];
    }
    return out;
}

}  // namespace test
