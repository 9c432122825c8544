#pragma once

#include <filesystem>

#include "text.hpp"

namespace emo2vec {

// Corpus directory layout:
//   large.tsv                      distantly labeled corpus, unsplit
//   hashtag_map.tsv                hashtag -> emotion name (optional here)
//   small/<name>.train.tsv         pre-split small datasets
//   small/<name>.dev.tsv
//   small/<name>.test.tsv
//   small/<name>.meta.json         label names, task_kind, optional metric
//
// The large dataset comes back with every document in `train`; callers split
// it with apply_large_split before training.
MultiTaskCorpus load_corpus_dir(const std::filesystem::path& dir);

void apply_large_split(MultiTaskCorpus& corpus, SplitRatios ratios,
                       std::uint64_t seed);

// Writes one small dataset (splits + meta.json) under `small_dir`.
void save_small_dataset(const Dataset& dataset,
                        const std::filesystem::path& small_dir);

struct PrepareStats {
  std::size_t total = 0;
  std::size_t accepted = 0;
};

// Runs distant supervision over a raw corpus (one document per line) and
// writes the accepted records as a labeled TSV.
PrepareStats prepare_large(const std::filesystem::path& raw_path,
                           const HashtagMap& hashtag_map,
                           const std::filesystem::path& out_tsv);

}  // namespace emo2vec
