#ifndef GSCAP_DATASET_HPP
#define GSCAP_DATASET_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "gscap/tensor.hpp"
#include "gscap/vocab.hpp"

namespace gscap {

/// One image record: visual features, semantic likelihoods and at least one
/// reference caption (token sequences, no special tokens).
struct DatasetItem {
    std::string image_id;
    Tensor v; // visual features
    Tensor s; // semantic likelihoods in [0,1]
    std::vector<TokenSeq> captions;
};

struct Dataset {
    std::vector<DatasetItem> items;

    std::size_t visual_dim() const { return items.empty() ? 0 : items.front().v.size(); }
    std::size_t semantic_dim() const { return items.empty() ? 0 : items.front().s.size(); }
    std::vector<TokenSeq> all_captions() const;
};

struct DatasetStats {
    std::size_t n_items = 0;
    std::size_t n_captions = 0;
    std::size_t visual_dim = 0;
    std::size_t semantic_dim = 0;
    double mean_caption_len = 0.0;
    std::size_t distinct_tokens = 0;
};

DatasetStats dataset_stats(const Dataset& dataset);

/// JSON-lines reader. One item per line:
///   {"image_id": "...", "v": [...], "s": [...], "captions": [["tok", ...], ...]}
/// Every item is validated: consistent dims, s entries in [0,1], nonempty
/// captions, unique ids. expected dims of 0 mean "infer from the first item".
Dataset load_dataset(const std::string& path, std::size_t expected_visual_dim = 0,
                     std::size_t expected_semantic_dim = 0);

void save_dataset(const Dataset& dataset, const std::string& path);

struct SynthOptions {
    std::size_t n_items = 10;
    std::size_t visual_dim = 16;
    std::size_t semantic_dim = 12;
    std::size_t vocab_size = 30;  // distinct word types available to the rule
    std::size_t caption_len = 5;  // k of the planted top-k rule
    double visual_noise = 0.25;   // v is a noisy projection of s, like real features
    std::uint64_t seed = 1;
};

/// Deterministic synthetic dataset with a planted rule: each item's caption
/// is the word list of the top-k semantic indices in descending likelihood,
/// and v is a fixed seeded projection of s. A correct model can learn the
/// mapping, and tests can replay the rule as an oracle.
Dataset synth_dataset(const SynthOptions& opts);

/// Word token the planted rule uses for semantic index `index`.
std::string synth_token_for_index(std::size_t index, std::size_t vocab_size);

/// GloVe-style embedding table: one token per line followed by `embed_dim`
/// numbers. Vocabulary tokens absent from the file get seeded-random rows.
Tensor load_embeddings(const std::string& path, const Vocabulary& vocab, std::size_t embed_dim,
                       std::uint64_t seed);

/// Split a dataset deterministically into train/held-out parts.
std::pair<Dataset, Dataset> split_dataset(const Dataset& dataset, double held_out_frac,
                                          std::uint64_t seed);

} // namespace gscap

#endif
