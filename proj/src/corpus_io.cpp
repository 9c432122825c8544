#include "corpus_io.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "eval.hpp"
#include "util.hpp"

namespace emo2vec {

using nlohmann::json;

namespace {

Dataset load_small_dataset(const std::filesystem::path& small_dir,
                           const std::string& name) {
  const std::filesystem::path meta_path = small_dir / (name + ".meta.json");
  json meta;
  try {
    meta = json::parse(read_file(meta_path));
  } catch (const json::parse_error& e) {
    throw ParseError(meta_path.string() + ": " + e.what());
  }

  Dataset ds;
  ds.name = name;
  ds.label_names = meta.at("label_names").get<std::vector<std::string>>();
  const std::string kind = meta.value("task_kind", std::string("multiclass"));
  if (kind == "binary") {
    ds.task_kind = TaskKind::binary;
  } else if (kind == "multiclass") {
    ds.task_kind = TaskKind::multiclass;
  } else {
    throw ParseError(meta_path.string() + ": unknown task_kind \"" + kind + "\"");
  }
  if (ds.task_kind == TaskKind::binary && ds.label_names.size() != 2) {
    throw ParseError(meta_path.string() + ": binary task needs exactly 2 labels");
  }
  ds.metric = meta.contains("metric")
                  ? metric_from_name(meta["metric"].get<std::string>())
                  : default_metric(ds.task_kind);

  auto load_split = [&](const char* split) -> std::vector<LabeledDocument> {
    const std::filesystem::path p = small_dir / (name + "." + split + ".tsv");
    if (!std::filesystem::exists(p)) return {};
    return load_labeled_file_with_labels(p, ds.label_names);
  };
  ds.train = load_split("train");
  ds.dev = load_split("dev");
  ds.test = load_split("test");
  if (ds.train.empty()) {
    throw ParseError(small_dir.string() + ": dataset " + name + " has no train split");
  }
  return ds;
}

}  // namespace

MultiTaskCorpus load_corpus_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw IoError("corpus directory not found: " + dir.string());
  }
  MultiTaskCorpus corpus;

  const std::filesystem::path large_path = dir / "large.tsv";
  LabeledFile large = load_labeled_file(large_path);
  corpus.large.name = "large";
  corpus.large.label_names = std::move(large.label_names);
  corpus.large.train = std::move(large.docs);
  corpus.large.task_kind = corpus.large.label_names.size() == 2
                               ? TaskKind::binary
                               : TaskKind::multiclass;
  corpus.large.metric = MetricKind::accuracy;

  const std::filesystem::path small_dir = dir / "small";
  if (std::filesystem::is_directory(small_dir)) {
    std::vector<std::string> names;
    for (const auto& entry : std::filesystem::directory_iterator(small_dir)) {
      const std::string fname = entry.path().filename().string();
      const std::string suffix = ".meta.json";
      if (fname.size() > suffix.size() &&
          fname.compare(fname.size() - suffix.size(), suffix.size(), suffix) == 0) {
        names.push_back(fname.substr(0, fname.size() - suffix.size()));
      }
    }
    std::sort(names.begin(), names.end());
    for (const std::string& name : names) {
      corpus.smalls.push_back(load_small_dataset(small_dir, name));
    }
  }
  return corpus;
}

void apply_large_split(MultiTaskCorpus& corpus, SplitRatios ratios,
                       std::uint64_t seed) {
  std::vector<LabeledDocument> all;
  all.reserve(corpus.large.train.size() + corpus.large.dev.size() +
              corpus.large.test.size());
  for (auto* part : {&corpus.large.train, &corpus.large.dev, &corpus.large.test}) {
    all.insert(all.end(), part->begin(), part->end());
  }
  Dataset split = split_dataset(all, corpus.large.label_names, ratios, seed,
                                corpus.large.name, corpus.large.task_kind);
  split.metric = corpus.large.metric;
  corpus.large = std::move(split);
}

void save_small_dataset(const Dataset& dataset,
                        const std::filesystem::path& small_dir) {
  std::filesystem::create_directories(small_dir);
  json meta;
  meta["label_names"] = dataset.label_names;
  meta["task_kind"] = dataset.task_kind == TaskKind::binary ? "binary" : "multiclass";
  meta["metric"] = metric_name(dataset.metric);
  write_file(small_dir / (dataset.name + ".meta.json"), meta.dump(2) + "\n");
  save_labeled_file(dataset.train, dataset.label_names,
                    small_dir / (dataset.name + ".train.tsv"));
  save_labeled_file(dataset.dev, dataset.label_names,
                    small_dir / (dataset.name + ".dev.tsv"));
  save_labeled_file(dataset.test, dataset.label_names,
                    small_dir / (dataset.name + ".test.tsv"));
}

PrepareStats prepare_large(const std::filesystem::path& raw_path,
                           const HashtagMap& hashtag_map,
                           const std::filesystem::path& out_tsv) {
  std::ifstream in(raw_path, std::ios::binary);
  if (!in) throw IoError("cannot open file: " + raw_path.string());

  PrepareStats stats;
  std::ostringstream out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    ++stats.total;
    auto labeled = distant_label(line, hashtag_map.tag_to_label);
    if (!labeled.has_value()) continue;
    ++stats.accepted;
    out << hashtag_map.label_names[static_cast<std::size_t>(labeled->label)]
        << '\t' << labeled->cleaned << '\n';
  }
  write_file(out_tsv, out.str());
  return stats;
}

}  // namespace emo2vec
