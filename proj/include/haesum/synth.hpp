#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace haesum {

// Generator for a PubMed-shaped corpus with known structure, used when the
// public release is not available. Every document has four sections
// (introduction, methods, results, discussion). A handful of "key" sentences
// carry recurring document keywords and are concentrated in the discussion;
// the abstract paraphrases them. Section membership is hinted by cue words.
struct SynthOptions {
    std::uint64_t seed = 1;
    int topic_pool = 3000;
    int keywords = 5;
    int min_section = 5;
    int max_section = 10;
    int min_length = 12;
    int max_length = 24;
    int embedding_dim = 300;
};

// One record in the line format of the public release (article_id,
// article_text, abstract_text with <S> tags, sections, section_names).
std::string synth_record(std::mt19937_64& rng, const std::string& id, const SynthOptions& options);

struct SynthCounts {
    std::size_t train = 2000;
    std::size_t val = 200;
    std::size_t test = 500;
};

// Writes train.txt, val.txt, test.txt and vectors.txt (word vectors in the
// usual `token v1 ... vd` text format) under `dir`.
void write_synthetic_corpus(const std::string& dir, const SynthCounts& counts, const SynthOptions& options);

}  // namespace haesum
