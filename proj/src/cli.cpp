#include "cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "checkpoint.hpp"
#include "corpus_io.hpp"
#include "eval.hpp"
#include "rng.hpp"
#include "trainer.hpp"
#include "util.hpp"

namespace emo2vec::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct VerbSpec {
  std::vector<std::string> required;
  // optional key -> default value ("" means no default)
  std::vector<std::pair<std::string, std::string>> optional;
};

const std::vector<std::pair<std::string, std::string>> kTrainLikeOptions = {
    {"lr", "0.001"},         {"l2", "1.0"},
    {"epochs", "20"},        {"patience", "3"},
    {"dim", "100"},          {"filters", "1024"},
    {"widths", "1,3,5,7"},   {"min-count", "2"},
    {"min-count-small", "1"}, {"include-large", "true"},
    {"l2-exact-norm", "false"}, {"ratios", "0.7,0.15,0.15"},
};

const std::map<std::string, VerbSpec>& verb_table() {
  static const std::map<std::string, VerbSpec> table = [] {
    std::map<std::string, VerbSpec> t;
    t["prepare"] = {{"raw", "hashtag-map", "out"},
                    {{"small", ""}, {"ratios", "0.7,0.15,0.15"}}};

    VerbSpec pretrain{{"corpus", "out"}, kTrainLikeOptions};
    pretrain.optional.emplace_back("batch-size", "16");
    t["pretrain"] = std::move(pretrain);

    VerbSpec train{{"corpus", "out"}, kTrainLikeOptions};
    train.optional.emplace_back("batch-size", "32");
    train.optional.emplace_back("init", "");
    t["train"] = std::move(train);

    t["export"] = {{"checkpoint", "out"}, {}};
    t["concat"] = {{"a", "b", "out"}, {}};

    VerbSpec eval{{"corpus", "mode", "out"}, kTrainLikeOptions};
    eval.optional.emplace_back("batch-size", "32");
    eval.optional.emplace_back("embedding", "");
    eval.optional.emplace_back("dataset", "");
    eval.optional.emplace_back("hold-out", "");
    eval.optional.emplace_back("pretrain", "false");
    t["eval"] = std::move(eval);

    t["stats"] = {{"corpus"}, {{"out", ""}}};
    return t;
  }();
  return table;
}

bool spec_allows(const VerbSpec& spec, const std::string& key) {
  if (key == "seed" || key == "config") return true;
  if (std::find(spec.required.begin(), spec.required.end(), key) != spec.required.end()) {
    return true;
  }
  for (const auto& [k, v] : spec.optional) {
    if (k == key) return true;
  }
  return false;
}

double parse_double(const Command& cmd, const std::string& key) {
  const std::string& s = cmd.require(key);
  try {
    std::size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw UsageError("option --" + key + ": expected a number, got \"" + s + "\"");
  }
}

std::uint64_t parse_u64(const Command& cmd, const std::string& key) {
  const std::string& s = cmd.require(key);
  try {
    // stoull would wrap "-1" around instead of rejecting it
    if (s.empty() || s[0] == '-') throw std::invalid_argument(s);
    std::size_t used = 0;
    unsigned long long v = std::stoull(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw UsageError("option --" + key + ": expected an integer, got \"" + s + "\"");
  }
}

bool parse_bool(const Command& cmd, const std::string& key) {
  const std::string& s = cmd.require(key);
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw UsageError("option --" + key + ": expected true or false, got \"" + s + "\"");
}

std::vector<std::size_t> parse_widths(const std::string& s) {
  std::vector<std::size_t> widths;
  for (const std::string& part : split(s, ',')) {
    try {
      std::size_t used = 0;
      unsigned long long v = std::stoull(part, &used);
      if (used != part.size() || v == 0) throw std::invalid_argument(part);
      widths.push_back(v);
    } catch (const std::exception&) {
      throw UsageError("option --widths: expected a list like 1,3,5,7, got \"" + s + "\"");
    }
  }
  if (widths.empty()) throw UsageError("option --widths: empty list");
  return widths;
}

SplitRatios parse_ratios(const std::string& s) {
  std::vector<std::string> parts = split(s, ',');
  if (parts.size() != 3) {
    throw UsageError("option --ratios: expected train,dev,test fractions");
  }
  try {
    return {std::stod(parts[0]), std::stod(parts[1]), std::stod(parts[2])};
  } catch (const std::exception&) {
    throw UsageError("option --ratios: malformed fractions \"" + s + "\"");
  }
}

TrainerConfig config_from_options(const Command& cmd) {
  TrainerConfig cfg;
  cfg.lr = parse_double(cmd, "lr");
  cfg.lambda = parse_double(cmd, "l2");
  cfg.batch_size = parse_u64(cmd, "batch-size");
  cfg.max_epochs = parse_u64(cmd, "epochs");
  cfg.patience = parse_u64(cmd, "patience");
  cfg.seed = parse_u64(cmd, "seed");
  cfg.dim = parse_u64(cmd, "dim");
  cfg.widths = parse_widths(cmd.require("widths"));
  const std::size_t total_filters = parse_u64(cmd, "filters");
  if (total_filters % cfg.widths.size() != 0) {
    throw UsageError("option --filters: " + std::to_string(total_filters) +
                     " does not divide evenly over " +
                     std::to_string(cfg.widths.size()) + " widths");
  }
  cfg.filters_per_width = total_filters / cfg.widths.size();
  cfg.min_count_large = static_cast<int>(parse_u64(cmd, "min-count"));
  cfg.min_count_small = static_cast<int>(parse_u64(cmd, "min-count-small"));
  cfg.include_large_in_joint = parse_bool(cmd, "include-large");
  cfg.l2_exact_norm = parse_bool(cmd, "l2-exact-norm");
  cfg.large_split = parse_ratios(cmd.require("ratios"));
  return cfg;
}

std::vector<fs::path> corpus_input_files(const fs::path& dir) {
  std::vector<fs::path> files;
  files.push_back(dir / "large.tsv");
  if (fs::exists(dir / "hashtag_map.tsv")) files.push_back(dir / "hashtag_map.tsv");
  const fs::path small = dir / "small";
  if (fs::is_directory(small)) {
    std::vector<fs::path> entries;
    for (const auto& entry : fs::directory_iterator(small)) {
      if (entry.is_regular_file()) entries.push_back(entry.path());
    }
    std::sort(entries.begin(), entries.end());
    files.insert(files.end(), entries.begin(), entries.end());
  }
  return files;
}

void write_manifest(const Command& cmd, const std::vector<fs::path>& inputs,
                    const std::vector<std::string>& outputs,
                    const fs::path& manifest_path) {
  json j;
  j["command"] = cmd.verb;
  json opts = json::object();
  for (const auto& [k, v] : cmd.options) opts[k] = v;
  j["options"] = opts;
  j["seed"] = cmd.get("seed", "13");
  json in = json::object();
  for (const fs::path& p : inputs) {
    in[p.string()] = git_blob_sha1(read_file(p));
  }
  j["inputs"] = in;
  j["outputs"] = outputs;
  write_file(manifest_path, j.dump(2) + "\n");
}

void print_epoch(const EpochRecord& rec) {
  std::ostringstream line;
  line << "epoch " << rec.epoch;
  char buf[64];
  std::snprintf(buf, sizeof(buf), " loss %.6f", rec.combined);
  line << buf;
  if (rec.train_accuracy.has_value()) {
    std::snprintf(buf, sizeof(buf), " train_acc %.4f", *rec.train_accuracy);
    line << buf;
  }
  std::snprintf(buf, sizeof(buf), " dev_acc %.4f", rec.averaged_dev_accuracy);
  line << buf;
  std::cout << line.str() << '\n';
}

MultiTaskCorpus load_split_corpus(const Command& cmd) {
  MultiTaskCorpus corpus = load_corpus_dir(cmd.require("corpus"));
  apply_large_split(corpus, parse_ratios(cmd.require("ratios")),
                    derive_seed(parse_u64(cmd, "seed"), "large-split"));
  return corpus;
}

int run_prepare(const Command& cmd) {
  const fs::path out_dir = cmd.require("out");
  fs::create_directories(out_dir);
  const fs::path raw = cmd.require("raw");
  const fs::path map_path = cmd.require("hashtag-map");
  const SplitRatios ratios = parse_ratios(cmd.require("ratios"));
  const std::uint64_t seed = parse_u64(cmd, "seed");

  HashtagMap map = load_hashtag_map(map_path);
  PrepareStats stats = prepare_large(raw, map, out_dir / "large.tsv");
  write_file(out_dir / "hashtag_map.tsv", read_file(map_path));
  std::cout << "prepare: accepted " << stats.accepted << " of " << stats.total
            << " documents into large.tsv\n";

  std::vector<fs::path> inputs = {raw, map_path};
  if (cmd.has("small") && !cmd.get("small").empty()) {
    for (const std::string& spath : split(cmd.get("small"), ',')) {
      inputs.emplace_back(spath);
      LabeledFile lf = load_labeled_file(spath);
      std::string name = fs::path(spath).stem().string();
      const TaskKind kind =
          lf.label_names.size() == 2 ? TaskKind::binary : TaskKind::multiclass;
      Dataset ds = split_dataset(lf.docs, lf.label_names, ratios,
                                 derive_seed(seed, "split:" + name), name, kind);
      ds.metric = default_metric(kind);
      save_small_dataset(ds, out_dir / "small");
      std::cout << "prepare: " << name << " split into " << ds.train.size()
                << "/" << ds.dev.size() << "/" << ds.test.size() << "\n";
    }
  }
  write_manifest(cmd, inputs, {"large.tsv", "hashtag_map.tsv", "small/"},
                 out_dir / "manifest.json");
  return 0;
}

int run_pretrain(const Command& cmd) {
  const fs::path out_dir = cmd.require("out");
  fs::create_directories(out_dir);
  MultiTaskCorpus corpus = load_split_corpus(cmd);
  TrainerConfig cfg = config_from_options(cmd);

  TrainResult result = pretrain_large(corpus.large, cfg, print_epoch);
  save_checkpoint(result.checkpoint, out_dir / "checkpoint.e2v");
  write_history_jsonl(result.history, out_dir / "history.jsonl");
  export_text(result.checkpoint.model.embedding, out_dir / "cnn_embedding.txt");
  std::cout << "pretrain: best dev accuracy "
            << format_double(result.checkpoint.best_dev) << " at epoch "
            << result.checkpoint.epoch << "\n";

  write_manifest(cmd, corpus_input_files(cmd.require("corpus")),
                 {"checkpoint.e2v", "history.jsonl", "cnn_embedding.txt"},
                 out_dir / "manifest.json");
  return 0;
}

int run_train(const Command& cmd) {
  const fs::path out_dir = cmd.require("out");
  fs::create_directories(out_dir);
  MultiTaskCorpus corpus = load_split_corpus(cmd);
  TrainerConfig cfg = config_from_options(cmd);

  Checkpoint init;
  const bool has_init = cmd.has("init") && !cmd.get("init").empty();
  if (has_init) init = load_checkpoint(cmd.get("init"));
  cfg.pretrain = has_init;

  TrainResult result =
      train_multitask(corpus, cfg, has_init ? &init.model : nullptr, print_epoch);
  save_checkpoint(result.checkpoint, out_dir / "checkpoint.e2v");
  write_history_jsonl(result.history, out_dir / "history.jsonl");
  export_text(result.checkpoint.model.embedding, out_dir / "emo2vec.txt");
  std::cout << "train: best averaged dev accuracy "
            << format_double(result.checkpoint.best_dev) << " at epoch "
            << result.checkpoint.epoch << "\n";

  std::vector<fs::path> inputs = corpus_input_files(cmd.require("corpus"));
  if (has_init) inputs.emplace_back(cmd.get("init"));
  write_manifest(cmd, inputs, {"checkpoint.e2v", "history.jsonl", "emo2vec.txt"},
                 out_dir / "manifest.json");
  return 0;
}

int run_export(const Command& cmd) {
  const fs::path out = cmd.require("out");
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  Checkpoint ckpt = load_checkpoint(cmd.require("checkpoint"));
  export_text(ckpt.model.embedding, out);
  std::cout << "export: wrote " << (ckpt.model.embedding.vocab.size() - 2)
            << " vectors of dim " << ckpt.model.embedding.dim << "\n";
  write_manifest(cmd, {cmd.require("checkpoint")}, {out.filename().string()},
                 out.string() + ".manifest.json");
  return 0;
}

int run_concat(const Command& cmd) {
  const fs::path out = cmd.require("out");
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  EmbeddingMatrix a = import_text(cmd.require("a"));
  EmbeddingMatrix b = import_text(cmd.require("b"));
  EmbeddingMatrix joined = concat(a, b);
  export_text(joined, out);
  std::cout << "concat: " << a.dim << " + " << b.dim << " -> dim " << joined.dim
            << ", " << (joined.vocab.size() - 2) << " words\n";
  write_manifest(cmd, {cmd.require("a"), cmd.require("b")},
                 {out.filename().string()}, out.string() + ".manifest.json");
  return 0;
}

int run_eval(const Command& cmd) {
  const fs::path out_dir = cmd.require("out");
  fs::create_directories(out_dir);
  MultiTaskCorpus corpus = load_split_corpus(cmd);
  TrainerConfig cfg = config_from_options(cmd);
  const std::string mode = cmd.require("mode");

  std::vector<EvalResult> results;
  std::vector<fs::path> inputs = corpus_input_files(cmd.require("corpus"));

  if (mode == "frozen") {
    if (!cmd.has("embedding") || cmd.get("embedding").empty()) {
      throw UsageError("eval --mode frozen requires --embedding");
    }
    inputs.emplace_back(cmd.get("embedding"));
    EmbeddingMatrix emb = import_text(cmd.get("embedding"));
    std::vector<const Dataset*> targets;
    if (cmd.has("dataset") && !cmd.get("dataset").empty()) {
      const std::string want = cmd.get("dataset");
      for (const Dataset& ds : corpus.smalls) {
        if (ds.name == want) targets.push_back(&ds);
      }
      if (targets.empty()) throw std::invalid_argument("no small dataset named " + want);
    } else {
      for (const Dataset& ds : corpus.smalls) targets.push_back(&ds);
    }
    for (const Dataset* ds : targets) {
      results.push_back(eval_frozen_embedding(emb, *ds, cfg));
    }
  } else if (mode == "leave-one-out") {
    if (!cmd.has("hold-out") || cmd.get("hold-out").empty()) {
      throw UsageError("eval --mode leave-one-out requires --hold-out");
    }
    cfg.pretrain = parse_bool(cmd, "pretrain");
    std::vector<std::size_t> held;
    if (cmd.get("hold-out") == "all") {
      for (std::size_t i = 0; i < corpus.smalls.size(); ++i) held.push_back(i);
    } else {
      held.push_back(parse_u64(cmd, "hold-out"));
    }
    for (std::size_t i : held) {
      LeaveOneOutOutcome outcome = leave_one_out_eval(corpus, i, cfg);
      results.push_back(outcome.result);
    }
  } else {
    throw UsageError("eval: unknown --mode \"" + mode +
                     "\" (expected frozen or leave-one-out)");
  }

  write_eval_tsv(results, out_dir / "results.tsv");
  write_eval_summary_json(results, out_dir / "summary.json");
  for (const EvalResult& r : results) {
    std::cout << r.dataset << '\t' << metric_name(r.metric) << '\t'
              << format_double(r.value) << '\n';
  }
  write_manifest(cmd, inputs, {"results.tsv", "summary.json"},
                 out_dir / "manifest.json");
  return 0;
}

int run_stats(const Command& cmd) {
  MultiTaskCorpus corpus = load_corpus_dir(cmd.require("corpus"));
  json stats_json = json::object();
  std::cout << "dataset\tlabel\tcount\tfraction\n";

  auto report = [&](const Dataset& ds, const std::vector<LabeledDocument>& docs) {
    json entry = json::object();
    for (const LabelStat& s : label_distribution(docs, ds.label_names)) {
      std::cout << ds.name << '\t' << s.label << '\t' << s.count << '\t'
                << format_double(s.fraction) << '\n';
      entry[s.label] = {{"count", s.count}, {"fraction", s.fraction}};
    }
    stats_json[ds.name] = entry;
  };

  report(corpus.large, corpus.large.train);
  for (const Dataset& ds : corpus.smalls) {
    std::vector<LabeledDocument> all;
    all.insert(all.end(), ds.train.begin(), ds.train.end());
    all.insert(all.end(), ds.dev.begin(), ds.dev.end());
    all.insert(all.end(), ds.test.begin(), ds.test.end());
    report(ds, all);
  }

  if (cmd.has("out") && !cmd.get("out").empty()) {
    const fs::path out_dir = cmd.get("out");
    fs::create_directories(out_dir);
    write_file(out_dir / "stats.json", stats_json.dump(2) + "\n");
    write_manifest(cmd, corpus_input_files(cmd.require("corpus")),
                   {"stats.json"}, out_dir / "manifest.json");
  }
  return 0;
}

}  // namespace

const std::string& Command::require(const std::string& key) const {
  auto it = options.find(key);
  if (it == options.end()) {
    throw UsageError("missing required option --" + key + " for " + verb);
  }
  return it->second;
}

std::string Command::get(const std::string& key, const std::string& fallback) const {
  auto it = options.find(key);
  return it == options.end() ? fallback : it->second;
}

Command parse_args(const std::vector<std::string>& args) {
  if (args.empty()) throw UsageError("missing command");
  Command cmd;
  cmd.verb = args[0];
  auto spec_it = verb_table().find(cmd.verb);
  if (spec_it == verb_table().end()) {
    throw UsageError("unknown command \"" + cmd.verb + "\"");
  }
  const VerbSpec& spec = spec_it->second;

  for (std::size_t i = 1; i < args.size(); i += 2) {
    const std::string& arg = args[i];
    if (arg.size() < 3 || arg.compare(0, 2, "--") != 0) {
      throw UsageError("expected --option, got \"" + arg + "\"");
    }
    const std::string key = arg.substr(2);
    if (!spec_allows(spec, key)) {
      throw UsageError("unknown option --" + key + " for " + cmd.verb);
    }
    if (i + 1 >= args.size()) {
      throw UsageError("missing value for --" + key);
    }
    cmd.options[key] = args[i + 1];
  }

  // --config provides defaults; explicit flags override.
  if (cmd.has("config")) {
    json defaults;
    try {
      defaults = json::parse(read_file(cmd.options["config"]));
    } catch (const json::parse_error& e) {
      throw UsageError("config file " + cmd.options["config"] + ": " + e.what());
    }
    if (!defaults.is_object()) {
      throw UsageError("config file must hold a JSON object of option values");
    }
    for (const auto& [key, value] : defaults.items()) {
      if (!spec_allows(spec, key)) {
        throw UsageError("config file sets unknown option \"" + key + "\" for " + cmd.verb);
      }
      if (cmd.has(key)) continue;
      if (value.is_string()) {
        cmd.options[key] = value.get<std::string>();
      } else if (value.is_array()) {
        // arrays map onto the comma-list flag form, e.g. widths [1,3] -> "1,3"
        std::string joined;
        for (const auto& item : value) {
          if (!joined.empty()) joined += ',';
          joined += item.is_string() ? item.get<std::string>() : item.dump();
        }
        cmd.options[key] = joined;
      } else {
        cmd.options[key] = value.dump();
      }
    }
  }

  if (!cmd.has("seed")) cmd.options["seed"] = "13";
  for (const auto& [key, fallback] : spec.optional) {
    if (!fallback.empty() && !cmd.has(key)) cmd.options[key] = fallback;
  }
  for (const std::string& key : spec.required) {
    if (!cmd.has(key)) {
      throw UsageError("missing required option --" + key + " for " + cmd.verb);
    }
  }
  return cmd;
}

int run(const Command& command) {
  try {
    if (command.verb == "prepare") return run_prepare(command);
    if (command.verb == "pretrain") return run_pretrain(command);
    if (command.verb == "train") return run_train(command);
    if (command.verb == "export") return run_export(command);
    if (command.verb == "concat") return run_concat(command);
    if (command.verb == "eval") return run_eval(command);
    if (command.verb == "stats") return run_stats(command);
    throw UsageError("unknown command \"" + command.verb + "\"");
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << usage_text();
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

int cli_main(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  Command cmd;
  try {
    cmd = parse_args(args);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << usage_text();
    return 2;
  }
  return run(cmd);
}

std::string usage_text() {
  return
      "usage: emo2vec <command> [--option value ...]\n"
      "\n"
      "commands:\n"
      "  prepare   --raw FILE --hashtag-map FILE --out DIR [--small a.tsv,b.tsv]\n"
      "            [--ratios 0.7,0.15,0.15] [--seed N]\n"
      "  pretrain  --corpus DIR --out DIR [--dim 100] [--filters 1024]\n"
      "            [--widths 1,3,5,7] [--batch-size 16] [--lr 0.001]\n"
      "            [--epochs N] [--patience 3] [--min-count 2] [--seed N]\n"
      "  train     --corpus DIR --out DIR [--init checkpoint.e2v] [--lr 0.001]\n"
      "            [--l2 1.0] [--batch-size 32] [--epochs N] [--patience 3]\n"
      "            [--include-large true|false] [--l2-exact-norm true|false]\n"
      "            [--seed N]\n"
      "  export    --checkpoint FILE --out FILE\n"
      "  concat    --a vectors.txt --b vectors.txt --out FILE\n"
      "  eval      --corpus DIR --mode frozen|leave-one-out --out DIR\n"
      "            [--embedding vectors.txt] [--dataset NAME]\n"
      "            [--hold-out I|all] [--pretrain true|false] [--seed N]\n"
      "  stats     --corpus DIR [--out DIR]\n"
      "\n"
      "Every command also accepts --config FILE (JSON defaults overridden by\n"
      "explicit flags) and --seed N (default 13).\n";
}

}  // namespace emo2vec::cli
