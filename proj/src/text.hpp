#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace emo2vec {

// A single training example. `label` indexes the owning dataset's label_names.
struct LabeledDocument {
  std::string text;
  int label = 0;

  bool operator==(const LabeledDocument&) const = default;
};

struct Vocabulary {
  static constexpr int kPadId = 0;
  static constexpr int kUnkId = 1;

  std::vector<std::string> words;  // id -> word, specials included
  std::unordered_map<std::string, int> ids;

  static Vocabulary with_specials();

  int size() const { return static_cast<int>(words.size()); }
  // Unknown words map to UNK.
  int id_of(std::string_view word) const;
  bool contains(std::string_view word) const;
  // Appends `word` with the next free id. Duplicate insertions are an error.
  int add(std::string word);
};

// Token ids padded to a fixed length. ids[true_len..] are all PAD.
struct EncodedSentence {
  std::vector<int> ids;
  std::size_t true_len = 0;

  std::size_t padded_len() const { return ids.size(); }
};

enum class TaskKind { multiclass, binary };

// Which test metric a dataset reports.
enum class MetricKind { accuracy, f1_positive, f1_ovr_mean };

struct Dataset {
  std::string name;
  std::vector<std::string> label_names;
  std::vector<LabeledDocument> train, dev, test;
  TaskKind task_kind = TaskKind::multiclass;
  MetricKind metric = MetricKind::accuracy;

  std::size_t num_labels() const { return label_names.size(); }
};

// The large distantly-labeled dataset plus the small task-specific ones.
struct MultiTaskCorpus {
  Dataset large;
  std::vector<Dataset> smalls;
};

// Lowercases, splits on whitespace, then splits the characters .,!?;:"()'
// into standalone tokens. Tokens starting with '#' or '@' are kept whole.
std::vector<std::string> tokenize(std::string_view text);

struct DistantLabel {
  int label = 0;
  std::string cleaned;  // trailing label hashtag removed, tokens space-joined
};

// Distant supervision over one raw document. Accepts only documents whose
// final token is a hashtag found in `hashtag_map` (keys are lowercase, no
// '#'), with no URL ("http"/"www."), no double quote (straight or curly), and
// at least 5 tokens once the label hashtag is removed. Filtered documents
// yield nullopt; this never throws.
std::optional<DistantLabel> distant_label(
    std::string_view raw_text,
    const std::unordered_map<std::string, int>& hashtag_map);

// Vocabulary over every token with corpus frequency >= min_count. Ids are
// assigned in descending frequency order, ties broken lexicographically.
Vocabulary build_vocab(const std::vector<std::vector<std::string>>& docs,
                       int min_count);

// Unknown words map to UNK; longer inputs truncate to padded_len; shorter
// ones are PAD-filled. padded_len must cover the widest CNN filter.
EncodedSentence encode(const std::vector<std::string>& tokens,
                       const Vocabulary& vocab, std::size_t padded_len);

struct SplitRatios {
  double train = 0.7;
  double dev = 0.15;
  double test = 0.15;
};

// Seeded shuffle, then floor(ratio*N) sized dev/test with the remainder going
// to train. Throws on fewer than 3 documents.
Dataset split_dataset(const std::vector<LabeledDocument>& docs,
                      std::vector<std::string> label_names, SplitRatios ratios,
                      std::uint64_t seed, std::string name = "",
                      TaskKind task_kind = TaskKind::multiclass);

// TSV dataset file: one `<label-string> <TAB> <text>` record per line.
struct LabeledFile {
  std::vector<LabeledDocument> docs;
  std::vector<std::string> label_names;  // first-appearance order
};

LabeledFile load_labeled_file(const std::filesystem::path& path);

// Like load_labeled_file but with a fixed label list; unknown labels are an
// error. Used for pre-split small datasets whose meta file pins the order.
std::vector<LabeledDocument> load_labeled_file_with_labels(
    const std::filesystem::path& path,
    const std::vector<std::string>& label_names);

void save_labeled_file(const std::vector<LabeledDocument>& docs,
                       const std::vector<std::string>& label_names,
                       const std::filesystem::path& path);

// Hashtag map file: one `hashtag <TAB> emotion-name` per line. Emotion names
// are interned into label_names in first-appearance order.
struct HashtagMap {
  std::unordered_map<std::string, int> tag_to_label;
  std::vector<std::string> label_names;
};

HashtagMap load_hashtag_map(const std::filesystem::path& path);

struct LabelStat {
  std::string label;
  std::size_t count = 0;
  double fraction = 0.0;
};

std::vector<LabelStat> label_distribution(
    const std::vector<LabeledDocument>& docs,
    const std::vector<std::string>& label_names);

}  // namespace emo2vec
