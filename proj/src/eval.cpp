#include "eval.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "rng.hpp"
#include "util.hpp"

namespace emo2vec {

using nlohmann::json;

const char* metric_name(MetricKind kind) {
  switch (kind) {
    case MetricKind::accuracy:
      return "accuracy";
    case MetricKind::f1_positive:
      return "f1_positive";
    case MetricKind::f1_ovr_mean:
      return "f1_ovr_mean";
  }
  return "accuracy";
}

MetricKind metric_from_name(std::string_view name) {
  if (name == "accuracy") return MetricKind::accuracy;
  if (name == "f1_positive") return MetricKind::f1_positive;
  if (name == "f1_ovr_mean") return MetricKind::f1_ovr_mean;
  throw std::invalid_argument("unknown metric: " + std::string(name));
}

MetricKind default_metric(TaskKind kind) {
  return kind == TaskKind::binary ? MetricKind::accuracy : MetricKind::f1_ovr_mean;
}

double metric_accuracy(std::span<const int> pred, std::span<const int> gold) {
  if (pred.size() != gold.size()) {
    throw std::invalid_argument("metric_accuracy: length mismatch");
  }
  if (pred.empty()) throw std::invalid_argument("metric_accuracy: empty input");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i] == gold[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(pred.size());
}

namespace {

double f1_for_class(std::span<const int> pred, std::span<const int> gold,
                    int positive) {
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool p = pred[i] == positive;
    const bool g = gold[i] == positive;
    if (p && g) ++tp;
    if (p && !g) ++fp;
    if (!p && g) ++fn;
  }
  const double pd = static_cast<double>(tp + fp);
  const double rd = static_cast<double>(tp + fn);
  const double precision = pd == 0.0 ? 0.0 : static_cast<double>(tp) / pd;
  const double recall = rd == 0.0 ? 0.0 : static_cast<double>(tp) / rd;
  if (precision + recall == 0.0) return 0.0;  // 0/0 convention
  return 2.0 * precision * recall / (precision + recall);
}

}  // namespace

double metric_f1_positive(std::span<const int> pred, std::span<const int> gold,
                          int positive) {
  if (pred.size() != gold.size()) {
    throw std::invalid_argument("metric_f1_positive: length mismatch");
  }
  if (pred.empty()) throw std::invalid_argument("metric_f1_positive: empty input");
  if (positive != 0 && positive != 1) {
    throw std::invalid_argument("metric_f1_positive: positive label must be 0 or 1");
  }
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if ((pred[i] != 0 && pred[i] != 1) || (gold[i] != 0 && gold[i] != 1)) {
      throw std::invalid_argument("metric_f1_positive: non-binary labels present");
    }
  }
  return f1_for_class(pred, gold, positive);
}

double metric_f1_ovr_mean(std::span<const int> pred, std::span<const int> gold,
                          std::size_t num_classes) {
  if (pred.size() != gold.size()) {
    throw std::invalid_argument("metric_f1_ovr_mean: length mismatch");
  }
  if (pred.empty()) throw std::invalid_argument("metric_f1_ovr_mean: empty input");
  if (num_classes == 0) throw std::invalid_argument("metric_f1_ovr_mean: no classes");
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i] < 0 || static_cast<std::size_t>(pred[i]) >= num_classes ||
        gold[i] < 0 || static_cast<std::size_t>(gold[i]) >= num_classes) {
      throw std::invalid_argument("metric_f1_ovr_mean: label out of range");
    }
  }
  double sum = 0.0;
  for (std::size_t c = 0; c < num_classes; ++c) {
    sum += f1_for_class(pred, gold, static_cast<int>(c));
  }
  return sum / static_cast<double>(num_classes);
}

std::string config_fingerprint(const TrainerConfig& cfg) {
  return git_blob_sha1(config_to_json(cfg)).substr(0, 12);
}

namespace {

std::vector<std::vector<double>> pooled_features(
    const EmbeddingMatrix& embedding, const std::vector<LabeledDocument>& docs) {
  std::vector<std::vector<double>> out;
  out.reserve(docs.size());
  for (const LabeledDocument& doc : docs) {
    std::vector<std::string> tokens = tokenize(doc.text);
    EncodedSentence sent =
        encode(tokens, embedding.vocab, std::max<std::size_t>(tokens.size(), 1));
    out.push_back(mean_pool(lookup(embedding, sent), sent.true_len));
  }
  return out;
}

int argmax_first(std::span<const double> v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return static_cast<int>(best);
}

double feature_accuracy(const std::vector<std::vector<double>>& features,
                        const std::vector<LabeledDocument>& docs,
                        const LogRegParams& head) {
  std::size_t hits = 0;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    if (argmax_first(logreg_forward(features[i], head)) == docs[i].label) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(docs.size());
}

}  // namespace

FrozenFit fit_logreg_frozen(const EmbeddingMatrix& embedding,
                            const Dataset& dataset, const TrainerConfig& cfg) {
  cfg.validate();
  if (dataset.train.empty()) throw std::invalid_argument("dataset " + dataset.name + ": empty train set");
  if (dataset.dev.empty()) throw std::invalid_argument("dataset " + dataset.name + ": empty dev set");
  if (dataset.num_labels() < 2) {
    throw std::invalid_argument("dataset " + dataset.name + ": needs at least 2 labels");
  }

  const auto train_features = pooled_features(embedding, dataset.train);
  const auto dev_features = pooled_features(embedding, dataset.dev);

  LogRegParams head = logreg_init(dataset.name, embedding.dim, dataset.num_labels());
  LogRegGradients grads(head);
  AdamState w_state(head.weights.values.size());
  AdamState b_state(head.bias.size());
  AdamConfig acfg;
  acfg.lr = cfg.lr;

  Rng rng(derive_seed(cfg.seed, "downstream:" + dataset.name));
  std::vector<std::size_t> order(dataset.train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t steps =
      (dataset.train.size() + cfg.batch_size - 1) / cfg.batch_size;

  EarlyStopper stopper(cfg.patience);
  FrozenFit best;
  std::vector<double> feature_grad;

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t s = 0; s < steps; ++s) {
      const std::size_t begin = s * cfg.batch_size;
      const std::size_t end = std::min(dataset.train.size(), begin + cfg.batch_size);
      grads.zero();
      const double weight = 1.0 / static_cast<double>(end - begin);
      for (std::size_t i = begin; i < end; ++i) {
        const std::size_t idx = order[i];
        std::vector<double> probs = logreg_forward(train_features[idx], head);
        logreg_backward(train_features[idx], head, probs,
                        dataset.train[idx].label, grads, feature_grad);
      }
      for (double& v : grads.weights.values) v *= weight;
      for (double& v : grads.bias) v *= weight;
      l2_penalty_backward(head, cfg.l2_exact_norm, cfg.lambda, grads);
      adam_step(head.weights.values, grads.weights.values, w_state, acfg);
      adam_step(head.bias, grads.bias, b_state, acfg);
    }
    const double dev_acc = feature_accuracy(dev_features, dataset.dev, head);
    const bool stop = stopper.observe(dev_acc);
    if (stopper.improved_last()) {
      best.head = head;
      best.best_dev_accuracy = stopper.best();
    }
    if (stop) break;
  }
  return best;
}

EvalResult eval_frozen_embedding(const EmbeddingMatrix& embedding,
                                 const Dataset& dataset,
                                 const TrainerConfig& cfg) {
  if (dataset.test.empty()) {
    throw std::invalid_argument("dataset " + dataset.name + ": empty test set");
  }
  FrozenFit fit = fit_logreg_frozen(embedding, dataset, cfg);

  const auto test_features = pooled_features(embedding, dataset.test);
  std::vector<int> pred, gold;
  pred.reserve(dataset.test.size());
  gold.reserve(dataset.test.size());
  for (std::size_t i = 0; i < dataset.test.size(); ++i) {
    pred.push_back(argmax_first(logreg_forward(test_features[i], fit.head)));
    gold.push_back(dataset.test[i].label);
  }

  EvalResult result;
  result.dataset = dataset.name;
  result.metric = dataset.metric;
  result.seed = cfg.seed;
  result.config_fingerprint = config_fingerprint(cfg);
  switch (dataset.metric) {
    case MetricKind::accuracy:
      result.value = metric_accuracy(pred, gold);
      break;
    case MetricKind::f1_positive:
      result.value = metric_f1_positive(pred, gold, 1);
      break;
    case MetricKind::f1_ovr_mean:
      result.value = metric_f1_ovr_mean(pred, gold, dataset.num_labels());
      break;
  }
  return result;
}

LeaveOneOutOutcome leave_one_out_eval(const MultiTaskCorpus& corpus,
                                      std::size_t held_out,
                                      const TrainerConfig& cfg) {
  if (held_out >= corpus.smalls.size()) {
    throw std::invalid_argument("leave_one_out_eval: held-out index out of range");
  }
  MultiTaskCorpus reduced;
  reduced.large = corpus.large;
  for (std::size_t i = 0; i < corpus.smalls.size(); ++i) {
    if (i != held_out) reduced.smalls.push_back(corpus.smalls[i]);
  }

  TrainResult trained;
  if (cfg.pretrain) {
    TrainResult pre = pretrain_large(reduced.large, cfg);
    trained = train_multitask(reduced, cfg, &pre.checkpoint.model);
  } else {
    trained = train_multitask(reduced, cfg);
  }

  LeaveOneOutOutcome outcome;
  outcome.result = eval_frozen_embedding(trained.checkpoint.model.embedding,
                                         corpus.smalls[held_out], cfg);
  if (cfg.include_large_in_joint) {
    outcome.trained_dataset_names.push_back(
        reduced.large.name.empty() ? "large" : reduced.large.name);
  }
  for (const Dataset& ds : reduced.smalls) {
    outcome.trained_dataset_names.push_back(ds.name);
  }
  outcome.checkpoint = std::move(trained.checkpoint);
  return outcome;
}

void write_eval_tsv(const std::vector<EvalResult>& results,
                    const std::filesystem::path& path) {
  std::ostringstream out;
  out << "dataset\tmetric\tvalue\tseed\tconfig\n";
  for (const EvalResult& r : results) {
    out << r.dataset << '\t' << metric_name(r.metric) << '\t'
        << format_double(r.value) << '\t' << r.seed << '\t'
        << r.config_fingerprint << '\n';
  }
  write_file(path, out.str());
}

void write_eval_summary_json(const std::vector<EvalResult>& results,
                             const std::filesystem::path& path) {
  json per_dataset = json::object();
  double sum = 0.0;
  for (const EvalResult& r : results) {
    per_dataset[r.dataset] = {{"metric", metric_name(r.metric)},
                              {"value", r.value},
                              {"seed", r.seed},
                              {"config", r.config_fingerprint}};
    sum += r.value;
  }
  json j;
  j["results"] = per_dataset;
  j["average"] = results.empty() ? 0.0 : sum / static_cast<double>(results.size());
  j["count"] = results.size();
  write_file(path, j.dump(2) + "\n");
}

}  // namespace emo2vec
