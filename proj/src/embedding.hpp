#pragma once

#include <cstdint>
#include <filesystem>

#include "tensor.hpp"
#include "text.hpp"

namespace emo2vec {

// The shared trainable table: one row per vocabulary entry. The PAD row is
// all zeros and frozen; padded positions must not leak into conv windows.
struct EmbeddingMatrix {
  Vocabulary vocab;
  std::size_t dim = 0;
  DenseMatrix table;  // vocab.size() x dim
};

// Rows i.i.d. uniform in [-0.5/dim, 0.5/dim] under seed; PAD row zeroed.
EmbeddingMatrix init_random(Vocabulary vocab, std::size_t dim,
                            std::uint64_t seed);

// Stacks the table rows for a sentence into a padded_len x dim matrix.
DenseMatrix lookup(const EmbeddingMatrix& matrix,
                   const EncodedSentence& sentence);

// Adjoint of lookup: buffer row ids[t] += upstream row t, duplicates summed,
// PAD contributions discarded.
void accumulate_sparse_grad(DenseMatrix& grad_buffer,
                            const EncodedSentence& sentence,
                            const DenseMatrix& upstream);

// Plain text vector format: optional `<count> <dim>` header, then one
// `word v1 ... vk` line per word. PAD/UNK rows are not exported. Values are
// written with 17 significant digits so a round trip is exact.
void export_text(const EmbeddingMatrix& matrix,
                 const std::filesystem::path& path);

// Accepts the same format back, with or without the header line, plain or
// gzip-compressed. Duplicate words keep the first occurrence.
EmbeddingMatrix import_text(const std::filesystem::path& path);

// Union-vocabulary concatenation: output dim is dim_a + dim_b, the missing
// side is zero-filled, ordering is a's words then b-only words sorted
// lexicographically.
EmbeddingMatrix concat(const EmbeddingMatrix& a, const EmbeddingMatrix& b);

}  // namespace emo2vec
