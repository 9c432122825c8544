#include "text.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "rng.hpp"
#include "util.hpp"

namespace emo2vec {

namespace {

constexpr std::string_view kPadWord = "<pad>";
constexpr std::string_view kUnkWord = "<unk>";

bool is_split_punct(char c) {
  switch (c) {
    case '.':
    case ',':
    case '!':
    case '?':
    case ';':
    case ':':
    case '"':
    case '(':
    case ')':
    case '\'':
      return true;
    default:
      return false;
  }
}

bool is_space(char c) {
  unsigned char u = static_cast<unsigned char>(c);
  return u == ' ' || u == '\t' || u == '\n' || u == '\r' || u == '\f' ||
         u == '\v';
}

}  // namespace

Vocabulary Vocabulary::with_specials() {
  Vocabulary v;
  v.words = {std::string(kPadWord), std::string(kUnkWord)};
  v.ids[v.words[0]] = kPadId;
  v.ids[v.words[1]] = kUnkId;
  return v;
}

int Vocabulary::id_of(std::string_view word) const {
  auto it = ids.find(std::string(word));
  return it == ids.end() ? kUnkId : it->second;
}

bool Vocabulary::contains(std::string_view word) const {
  return ids.find(std::string(word)) != ids.end();
}

int Vocabulary::add(std::string word) {
  int id = size();
  auto [it, inserted] = ids.emplace(word, id);
  if (!inserted) throw std::invalid_argument("vocabulary: duplicate word " + word);
  words.push_back(std::move(word));
  return id;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::string lowered = lowercase_ascii(text);
  std::vector<std::string> out;
  std::size_t i = 0;
  const std::size_t n = lowered.size();
  while (i < n) {
    while (i < n && is_space(lowered[i])) ++i;
    if (i >= n) break;
    std::size_t start = i;
    while (i < n && !is_space(lowered[i])) ++i;
    std::string_view chunk(lowered.data() + start, i - start);
    if (chunk.front() == '#' || chunk.front() == '@') {
      out.emplace_back(chunk);
      continue;
    }
    std::size_t run = 0;
    for (std::size_t p = 0; p < chunk.size(); ++p) {
      if (is_split_punct(chunk[p])) {
        if (p > run) out.emplace_back(chunk.substr(run, p - run));
        out.emplace_back(1, chunk[p]);
        run = p + 1;
      }
    }
    if (run < chunk.size()) out.emplace_back(chunk.substr(run));
  }
  return out;
}

std::optional<DistantLabel> distant_label(
    std::string_view raw_text,
    const std::unordered_map<std::string, int>& hashtag_map) {
  std::string lowered = lowercase_ascii(raw_text);
  if (lowered.find("http") != std::string::npos ||
      lowered.find("www.") != std::string::npos) {
    return std::nullopt;
  }
  // Straight or curly double quotes.
  if (raw_text.find('"') != std::string_view::npos ||
      raw_text.find("\xE2\x80\x9C") != std::string_view::npos ||
      raw_text.find("\xE2\x80\x9D") != std::string_view::npos) {
    return std::nullopt;
  }
  std::vector<std::string> tokens = tokenize(raw_text);
  if (tokens.empty()) return std::nullopt;
  const std::string& last = tokens.back();
  if (last.size() < 2 || last.front() != '#') return std::nullopt;
  auto it = hashtag_map.find(last.substr(1));
  if (it == hashtag_map.end()) return std::nullopt;
  tokens.pop_back();
  if (tokens.size() < 5) return std::nullopt;
  return DistantLabel{it->second, join(tokens, " ")};
}

Vocabulary build_vocab(const std::vector<std::vector<std::string>>& docs,
                       int min_count) {
  if (min_count < 1) throw std::invalid_argument("build_vocab: min_count must be >= 1");
  std::unordered_map<std::string, std::size_t> counts;
  for (const auto& doc : docs) {
    for (const auto& tok : doc) ++counts[tok];
  }
  std::vector<std::pair<std::string, std::size_t>> kept;
  kept.reserve(counts.size());
  for (auto& [word, count] : counts) {
    if (count >= static_cast<std::size_t>(min_count)) kept.emplace_back(word, count);
  }
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  Vocabulary vocab = Vocabulary::with_specials();
  for (auto& [word, count] : kept) vocab.add(word);
  return vocab;
}

EncodedSentence encode(const std::vector<std::string>& tokens,
                       const Vocabulary& vocab, std::size_t padded_len) {
  if (padded_len == 0) throw std::invalid_argument("encode: padded_len must be positive");
  EncodedSentence out;
  out.true_len = std::min(tokens.size(), padded_len);
  out.ids.assign(padded_len, Vocabulary::kPadId);
  for (std::size_t i = 0; i < out.true_len; ++i) {
    out.ids[i] = vocab.id_of(tokens[i]);
  }
  return out;
}

Dataset split_dataset(const std::vector<LabeledDocument>& docs,
                      std::vector<std::string> label_names, SplitRatios ratios,
                      std::uint64_t seed, std::string name,
                      TaskKind task_kind) {
  if (ratios.train <= 0.0 || ratios.dev <= 0.0 || ratios.test <= 0.0) {
    throw std::invalid_argument("split_dataset: ratios must be positive");
  }
  if (std::abs(ratios.train + ratios.dev + ratios.test - 1.0) > 1e-9) {
    throw std::invalid_argument("split_dataset: ratios must sum to 1");
  }
  if (docs.size() < 3) throw std::runtime_error("dataset too small to split");

  const std::size_t n = docs.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);

  const auto dev_n = static_cast<std::size_t>(std::floor(ratios.dev * static_cast<double>(n)));
  const auto test_n = static_cast<std::size_t>(std::floor(ratios.test * static_cast<double>(n)));
  const std::size_t train_n = n - dev_n - test_n;  // remainder goes to train

  Dataset out;
  out.name = std::move(name);
  out.label_names = std::move(label_names);
  out.task_kind = task_kind;
  out.train.reserve(train_n);
  out.dev.reserve(dev_n);
  out.test.reserve(test_n);
  for (std::size_t i = 0; i < n; ++i) {
    const LabeledDocument& d = docs[order[i]];
    if (i < train_n) {
      out.train.push_back(d);
    } else if (i < train_n + dev_n) {
      out.dev.push_back(d);
    } else {
      out.test.push_back(d);
    }
  }
  return out;
}

namespace {

// Shared line parser for TSV record files; yields (label, text) pairs.
std::vector<std::pair<std::string, std::string>> read_tsv_records(
    const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file: " + path.string());
  std::vector<std::pair<std::string, std::string>> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string where = path.string() + ":" + std::to_string(line_no);
    if (!valid_utf8(line)) throw ParseError(where + ": invalid UTF-8");
    std::size_t tab = line.find('\t');
    if (tab == std::string::npos) {
      throw ParseError(where + ": missing tab separator");
    }
    std::string label = line.substr(0, tab);
    std::string text = line.substr(tab + 1);
    if (label.empty()) throw ParseError(where + ": empty label");
    if (text.empty()) throw ParseError(where + ": empty text");
    records.emplace_back(std::move(label), std::move(text));
  }
  return records;
}

std::string sanitize_text(std::string_view text) {
  std::string out(text);
  for (char& c : out) {
    if (c == '\t' || c == '\n' || c == '\r') c = ' ';
  }
  return out;
}

}  // namespace

LabeledFile load_labeled_file(const std::filesystem::path& path) {
  LabeledFile out;
  std::unordered_map<std::string, int> label_ids;
  for (auto& [label, text] : read_tsv_records(path)) {
    auto [it, inserted] = label_ids.emplace(label, static_cast<int>(out.label_names.size()));
    if (inserted) out.label_names.push_back(label);
    out.docs.push_back({std::move(text), it->second});
  }
  return out;
}

std::vector<LabeledDocument> load_labeled_file_with_labels(
    const std::filesystem::path& path,
    const std::vector<std::string>& label_names) {
  std::unordered_map<std::string, int> label_ids;
  for (std::size_t i = 0; i < label_names.size(); ++i) {
    label_ids[label_names[i]] = static_cast<int>(i);
  }
  std::vector<LabeledDocument> docs;
  for (auto& [label, text] : read_tsv_records(path)) {
    auto it = label_ids.find(label);
    if (it == label_ids.end()) {
      throw ParseError(path.string() + ": unknown label \"" + label + "\"");
    }
    docs.push_back({std::move(text), it->second});
  }
  return docs;
}

void save_labeled_file(const std::vector<LabeledDocument>& docs,
                       const std::vector<std::string>& label_names,
                       const std::filesystem::path& path) {
  std::ostringstream out;
  for (const LabeledDocument& doc : docs) {
    if (doc.label < 0 || static_cast<std::size_t>(doc.label) >= label_names.size()) {
      throw std::invalid_argument("save_labeled_file: label index out of range");
    }
    out << label_names[doc.label] << '\t' << sanitize_text(doc.text) << '\n';
  }
  write_file(path, out.str());
}

HashtagMap load_hashtag_map(const std::filesystem::path& path) {
  HashtagMap out;
  std::unordered_map<std::string, int> label_ids;
  for (auto& [tag, emotion] : read_tsv_records(path)) {
    auto [it, inserted] = label_ids.emplace(emotion, static_cast<int>(out.label_names.size()));
    if (inserted) out.label_names.push_back(emotion);
    out.tag_to_label[lowercase_ascii(tag)] = it->second;
  }
  return out;
}

std::vector<LabelStat> label_distribution(
    const std::vector<LabeledDocument>& docs,
    const std::vector<std::string>& label_names) {
  std::vector<LabelStat> stats(label_names.size());
  for (std::size_t i = 0; i < label_names.size(); ++i) stats[i].label = label_names[i];
  for (const LabeledDocument& doc : docs) {
    if (doc.label >= 0 && static_cast<std::size_t>(doc.label) < stats.size()) {
      ++stats[doc.label].count;
    }
  }
  if (!docs.empty()) {
    for (LabelStat& s : stats) {
      s.fraction = static_cast<double>(s.count) / static_cast<double>(docs.size());
    }
  }
  return stats;
}

}  // namespace emo2vec
