#include "trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "rng.hpp"
#include "util.hpp"

namespace emo2vec {

using nlohmann::json;

void TrainerConfig::validate() const {
  // lr 0 is allowed: it turns training into a deterministic no-op, which the
  // test suites rely on.
  if (lr < 0.0 || !std::isfinite(lr)) throw std::invalid_argument("config: lr must be >= 0");
  if (lambda < 0.0) throw std::invalid_argument("config: lambda must be >= 0");
  if (batch_size < 1) throw std::invalid_argument("config: batch_size must be >= 1");
  if (patience < 1) throw std::invalid_argument("config: patience must be >= 1");
  if (max_epochs < 1) throw std::invalid_argument("config: max_epochs must be >= 1");
  if (dim < 1) throw std::invalid_argument("config: dim must be >= 1");
  if (widths.empty()) throw std::invalid_argument("config: widths must not be empty");
  for (std::size_t w : widths) {
    if (w < 1) throw std::invalid_argument("config: filter widths must be >= 1");
  }
  if (filters_per_width < 1) throw std::invalid_argument("config: filters_per_width must be >= 1");
  if (min_count_large < 1 || min_count_small < 1) {
    throw std::invalid_argument("config: min_count must be >= 1");
  }
}

const LogRegParams* MultiTaskModel::find_head(std::string_view dataset_name) const {
  for (const LogRegParams& head : heads) {
    if (head.dataset_name == dataset_name) return &head;
  }
  return nullptr;
}

GradBuffers::GradBuffers(const MultiTaskModel& model)
    : embedding(model.embedding.table.rows, model.embedding.table.cols),
      cnn(model.cnn) {
  heads.reserve(model.heads.size());
  for (const LogRegParams& head : model.heads) heads.emplace_back(head);
}

void GradBuffers::zero() {
  embedding.zero();
  cnn.zero();
  for (LogRegGradients& g : heads) g.zero();
}

namespace {

void add_scaled(CnnGradients& dst, const CnnGradients& src, double scale) {
  for (std::size_t j = 0; j < dst.filters.size(); ++j) {
    for (std::size_t i = 0; i < dst.filters[j].values.size(); ++i) {
      dst.filters[j].values[i] += scale * src.filters[j].values[i];
    }
    dst.filter_bias[j] += scale * src.filter_bias[j];
  }
  for (std::size_t i = 0; i < dst.output_w.values.size(); ++i) {
    dst.output_w.values[i] += scale * src.output_w.values[i];
  }
  for (std::size_t i = 0; i < dst.output_b.size(); ++i) {
    dst.output_b[i] += scale * src.output_b[i];
  }
}

void add_scaled(LogRegGradients& dst, const LogRegGradients& src, double scale) {
  for (std::size_t i = 0; i < dst.weights.values.size(); ++i) {
    dst.weights.values[i] += scale * src.weights.values[i];
  }
  for (std::size_t i = 0; i < dst.bias.size(); ++i) {
    dst.bias[i] += scale * src.bias[i];
  }
}

LossReport joint_loss_impl(const std::vector<MiniBatch>& batches,
                           const MultiTaskModel& model, double lambda,
                           bool include_large, bool l2_exact_norm,
                           GradBuffers* grads) {
  const MiniBatch* large = nullptr;
  std::vector<const MiniBatch*> smalls;
  for (const MiniBatch& mb : batches) {
    if (mb.sentences.size() != mb.labels.size()) {
      throw std::invalid_argument("joint_loss: sentences/labels size mismatch");
    }
    if (mb.sentences.empty()) throw std::invalid_argument("joint_loss: empty mini-batch");
    if (mb.is_large) {
      if (large != nullptr) throw std::invalid_argument("joint_loss: duplicate large batch");
      large = &mb;
    } else {
      smalls.push_back(&mb);
    }
  }
  const std::size_t n = smalls.size();
  if (n == 0 && !include_large) throw std::runtime_error("no tasks");
  if (include_large && large == nullptr) {
    throw std::invalid_argument("joint_loss: large batch required but missing");
  }

  LossReport report;
  report.large_included = include_large;
  report.lambda = lambda;
  double combined = 0.0;

  if (include_large) {
    const std::size_t batch = large->sentences.size();
    const double weight = 1.0 / static_cast<double>(batch);
    CnnGradients scratch(model.cnn);
    DenseMatrix emb_grad;
    double loss_sum = 0.0;
    for (std::size_t i = 0; i < batch; ++i) {
      DenseMatrix emb = lookup(model.embedding, large->sentences[i]);
      CnnActivations acts = cnn_forward(emb, model.cnn);
      if (grads != nullptr) {
        loss_sum += cnn_backward(emb, model.cnn, acts, large->labels[i], scratch, emb_grad);
        for (double& v : emb_grad.values) v *= weight;
        accumulate_sparse_grad(grads->embedding, large->sentences[i], emb_grad);
      } else {
        loss_sum += nll_loss(acts.probs, static_cast<std::size_t>(large->labels[i]));
      }
    }
    if (grads != nullptr) add_scaled(grads->cnn, scratch, weight);
    report.large_nll = loss_sum * weight;
    combined += report.large_nll;
  }

  for (const MiniBatch* mb : smalls) {
    std::ptrdiff_t head_idx = -1;
    for (std::size_t h = 0; h < model.heads.size(); ++h) {
      if (model.heads[h].dataset_name == mb->dataset_name) {
        head_idx = static_cast<std::ptrdiff_t>(h);
        break;
      }
    }
    if (head_idx < 0) {
      throw std::invalid_argument("joint_loss: no head for dataset " + mb->dataset_name);
    }
    const LogRegParams& head = model.heads[static_cast<std::size_t>(head_idx)];
    const std::size_t batch = mb->sentences.size();
    const double weight = 1.0 / static_cast<double>(n * batch);
    LogRegGradients scratch(head);
    std::vector<double> feature_grad;
    double loss_sum = 0.0;
    for (std::size_t i = 0; i < batch; ++i) {
      const EncodedSentence& sent = mb->sentences[i];
      DenseMatrix emb = lookup(model.embedding, sent);
      std::vector<double> features = mean_pool(emb, sent.true_len);
      std::vector<double> probs = logreg_forward(features, head);
      if (grads != nullptr) {
        loss_sum += logreg_backward(features, head, probs, mb->labels[i], scratch, feature_grad);
        DenseMatrix emb_grad(emb.rows, emb.cols);
        mean_pool_backward(feature_grad, sent.true_len, emb_grad);
        for (double& v : emb_grad.values) v *= weight;
        accumulate_sparse_grad(grads->embedding, sent, emb_grad);
      } else {
        loss_sum += nll_loss(probs, static_cast<std::size_t>(mb->labels[i]));
      }
    }
    if (grads != nullptr) {
      add_scaled(grads->heads[static_cast<std::size_t>(head_idx)], scratch, weight);
    }
    const double mean_nll = loss_sum / static_cast<double>(batch);
    report.small_nll.emplace_back(mb->dataset_name, mean_nll);
    combined += mean_nll / static_cast<double>(n);
  }

  report.penalty = l2_penalty(model.heads, l2_exact_norm);
  combined += lambda * report.penalty;
  if (grads != nullptr) {
    for (std::size_t h = 0; h < model.heads.size(); ++h) {
      l2_penalty_backward(model.heads[h], l2_exact_norm, lambda, grads->heads[h]);
    }
  }
  report.combined = combined;
  return report;
}

}  // namespace

LossReport joint_loss(const std::vector<MiniBatch>& batches,
                      const MultiTaskModel& model, double lambda,
                      bool include_large, bool l2_exact_norm) {
  return joint_loss_impl(batches, model, lambda, include_large, l2_exact_norm, nullptr);
}

LossReport joint_loss_grads(const std::vector<MiniBatch>& batches,
                            const MultiTaskModel& model, double lambda,
                            bool include_large, bool l2_exact_norm,
                            GradBuffers& grads) {
  return joint_loss_impl(batches, model, lambda, include_large, l2_exact_norm, &grads);
}

EarlyStopper::EarlyStopper(std::size_t patience)
    : patience_(patience), best_(-std::numeric_limits<double>::infinity()) {
  if (patience < 1) throw std::invalid_argument("patience must be >= 1");
}

bool EarlyStopper::observe(double dev_score) {
  ++epoch_;
  if (dev_score > best_) {
    best_ = dev_score;
    best_epoch_ = epoch_;
    stale_ = 0;
    improved_last_ = true;
    return false;
  }
  improved_last_ = false;
  ++stale_;
  return stale_ >= patience_;
}

namespace {

// Shuffled index stream that reshuffles and recycles when exhausted.
class BatchStream {
 public:
  BatchStream(std::size_t size, std::uint64_t seed)
      : rng_(seed), indices_(size), pos_(size) {
    std::iota(indices_.begin(), indices_.end(), std::size_t{0});
  }

  void draw(std::size_t count, std::vector<std::size_t>& out) {
    out.clear();
    while (out.size() < count) {
      if (pos_ >= indices_.size()) {
        rng_.shuffle(indices_);
        pos_ = 0;
      }
      out.push_back(indices_[pos_++]);
    }
  }

 private:
  Rng rng_;
  std::vector<std::size_t> indices_;
  std::size_t pos_;
};

std::vector<std::vector<std::string>> tokenize_docs(
    const std::vector<LabeledDocument>& docs) {
  std::vector<std::vector<std::string>> out;
  out.reserve(docs.size());
  for (const LabeledDocument& doc : docs) out.push_back(tokenize(doc.text));
  return out;
}

MiniBatch encode_batch(const Dataset& ds,
                       const std::vector<std::vector<std::string>>& tokens,
                       const std::vector<std::size_t>& idxs,
                       const Vocabulary& vocab, std::size_t min_padded,
                       bool is_large) {
  std::size_t padded = min_padded;
  for (std::size_t i : idxs) padded = std::max(padded, tokens[i].size());
  MiniBatch mb;
  mb.dataset_name = ds.name;
  mb.is_large = is_large;
  mb.sentences.reserve(idxs.size());
  mb.labels.reserve(idxs.size());
  for (std::size_t i : idxs) {
    mb.sentences.push_back(encode(tokens[i], vocab, padded));
    mb.labels.push_back(ds.train[i].label);
  }
  return mb;
}

struct Slot {
  std::string name;
  std::span<double> param;
  std::span<double> grad;
};

std::vector<Slot> build_slots(MultiTaskModel& model, GradBuffers& grads) {
  std::vector<Slot> slots;
  slots.push_back({"embedding", model.embedding.table.values, grads.embedding.values});
  for (std::size_t j = 0; j < model.cnn.filters.size(); ++j) {
    slots.push_back({"cnn.filter." + std::to_string(j),
                     model.cnn.filters[j].values, grads.cnn.filters[j].values});
  }
  slots.push_back({"cnn.filter_bias", model.cnn.filter_bias, grads.cnn.filter_bias});
  slots.push_back({"cnn.output_w", model.cnn.output_w.values, grads.cnn.output_w.values});
  slots.push_back({"cnn.output_b", model.cnn.output_b, grads.cnn.output_b});
  for (std::size_t h = 0; h < model.heads.size(); ++h) {
    const std::string& name = model.heads[h].dataset_name;
    slots.push_back({"head." + name + ".weights", model.heads[h].weights.values,
                     grads.heads[h].weights.values});
    slots.push_back({"head." + name + ".bias", model.heads[h].bias, grads.heads[h].bias});
  }
  return slots;
}

OptimizerStates make_optimizer_states(const std::vector<Slot>& slots) {
  OptimizerStates opt;
  opt.states.reserve(slots.size());
  for (const Slot& s : slots) opt.states.emplace_back(s.name, AdamState(s.param.size()));
  return opt;
}

void apply_adam(const std::vector<Slot>& slots, OptimizerStates& opt,
                const AdamConfig& acfg) {
  for (std::size_t i = 0; i < slots.size(); ++i) {
    adam_step(slots[i].param, slots[i].grad, opt.states[i].second, acfg);
  }
}

std::size_t argmax_first(std::span<const double> v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

// Builds the shared vocabulary for joint training. A word is kept when its
// large-corpus count reaches min_count_large or its small-corpus count
// reaches min_count_small; ids follow total frequency, ties lexicographic.
Vocabulary build_joint_vocab(
    const std::vector<std::vector<std::string>>* large_tokens,
    const std::vector<const std::vector<std::vector<std::string>>*>& small_tokens,
    int min_count_large, int min_count_small) {
  std::unordered_map<std::string, std::pair<std::size_t, std::size_t>> counts;
  if (large_tokens != nullptr) {
    for (const auto& doc : *large_tokens) {
      for (const auto& tok : doc) ++counts[tok].first;
    }
  }
  for (const auto* docs : small_tokens) {
    for (const auto& doc : *docs) {
      for (const auto& tok : doc) ++counts[tok].second;
    }
  }
  std::vector<std::pair<std::string, std::size_t>> kept;
  for (auto& [word, c] : counts) {
    if (c.first >= static_cast<std::size_t>(min_count_large) ||
        c.second >= static_cast<std::size_t>(min_count_small)) {
      kept.emplace_back(word, c.first + c.second);
    }
  }
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  Vocabulary vocab = Vocabulary::with_specials();
  for (auto& [word, count] : kept) vocab.add(word);
  return vocab;
}

// Carries rows over from a previous embedding; words it does not know keep
// their random initialization. PAD stays zero, UNK transfers.
EmbeddingMatrix transfer_embedding(const EmbeddingMatrix& src,
                                   const Vocabulary& vocab, std::uint64_t seed) {
  EmbeddingMatrix out = init_random(vocab, src.dim, seed);
  auto unk_src = src.table.row(Vocabulary::kUnkId);
  std::copy(unk_src.begin(), unk_src.end(), out.table.row(Vocabulary::kUnkId).begin());
  for (int id = Vocabulary::kUnkId + 1; id < out.vocab.size(); ++id) {
    const std::string& word = out.vocab.words[static_cast<std::size_t>(id)];
    if (!src.vocab.contains(word)) continue;
    auto row = src.table.row(static_cast<std::size_t>(src.vocab.id_of(word)));
    std::copy(row.begin(), row.end(), out.table.row(static_cast<std::size_t>(id)).begin());
  }
  return out;
}

void require_splits(const Dataset& ds) {
  if (ds.train.empty()) throw std::invalid_argument("dataset " + ds.name + ": empty train set");
  if (ds.dev.empty()) throw std::invalid_argument("dataset " + ds.name + ": empty dev set");
}

}  // namespace

int predict_cnn(const EmbeddingMatrix& embedding, const CnnParams& cnn,
                const std::vector<std::string>& tokens) {
  EncodedSentence sent = encode(tokens, embedding.vocab,
                                std::max(tokens.size(), cnn.max_width()));
  CnnActivations acts = cnn_forward(lookup(embedding, sent), cnn);
  return static_cast<int>(argmax_first(acts.probs));
}

int predict_logreg(const EmbeddingMatrix& embedding, const LogRegParams& head,
                   const std::vector<std::string>& tokens) {
  EncodedSentence sent =
      encode(tokens, embedding.vocab, std::max<std::size_t>(tokens.size(), 1));
  std::vector<double> features = mean_pool(lookup(embedding, sent), sent.true_len);
  std::vector<double> probs = logreg_forward(features, head);
  return static_cast<int>(argmax_first(probs));
}

double accuracy_cnn(const EmbeddingMatrix& embedding, const CnnParams& cnn,
                    const std::vector<LabeledDocument>& docs) {
  if (docs.empty()) throw std::invalid_argument("accuracy: no documents");
  std::size_t hits = 0;
  for (const LabeledDocument& doc : docs) {
    if (predict_cnn(embedding, cnn, tokenize(doc.text)) == doc.label) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(docs.size());
}

double accuracy_logreg(const EmbeddingMatrix& embedding,
                       const LogRegParams& head,
                       const std::vector<LabeledDocument>& docs) {
  if (docs.empty()) throw std::invalid_argument("accuracy: no documents");
  std::size_t hits = 0;
  for (const LabeledDocument& doc : docs) {
    if (predict_logreg(embedding, head, tokenize(doc.text)) == doc.label) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(docs.size());
}

TrainResult pretrain_large(const Dataset& large, const TrainerConfig& cfg,
                           const EpochCallback& on_epoch) {
  cfg.validate();
  if (large.train.empty()) throw std::invalid_argument("empty train set");
  require_splits(large);
  if (large.num_labels() < 2) {
    throw std::invalid_argument("large dataset needs at least 2 labels");
  }

  const std::vector<std::vector<std::string>> train_tokens = tokenize_docs(large.train);
  Vocabulary vocab = build_vocab(train_tokens, cfg.min_count_large);

  MultiTaskModel model;
  model.embedding = init_random(std::move(vocab), cfg.dim,
                                derive_seed(cfg.seed, "embedding-init"));
  Rng cnn_rng(derive_seed(cfg.seed, "cnn-init"));
  model.cnn = cnn_init(cfg.widths, cfg.filters_per_width, cfg.dim,
                       large.num_labels(), cnn_rng);

  GradBuffers grads(model);
  std::vector<Slot> slots = build_slots(model, grads);
  OptimizerStates opt = make_optimizer_states(slots);
  AdamConfig acfg;
  acfg.lr = cfg.lr;

  const std::size_t train_size = large.train.size();
  const std::size_t steps = (train_size + cfg.batch_size - 1) / cfg.batch_size;
  Rng shuffle_rng(derive_seed(cfg.seed, "batches:large"));
  std::vector<std::size_t> order(train_size);
  std::iota(order.begin(), order.end(), std::size_t{0});

  EarlyStopper stopper(cfg.patience);
  TrainResult result;
  Checkpoint best;
  best.config = cfg;
  const std::size_t max_width = model.cnn.max_width();

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double loss_sum = 0.0;
    for (std::size_t s = 0; s < steps; ++s) {
      const std::size_t begin = s * cfg.batch_size;
      const std::size_t end = std::min(train_size, begin + cfg.batch_size);
      std::vector<std::size_t> idxs(order.begin() + static_cast<std::ptrdiff_t>(begin),
                                    order.begin() + static_cast<std::ptrdiff_t>(end));
      std::vector<MiniBatch> batches;
      batches.push_back(encode_batch(large, train_tokens, idxs,
                                     model.embedding.vocab, max_width, true));
      LossReport rep = joint_loss_grads(batches, model, 0.0, true, false, grads);
      apply_adam(slots, opt, acfg);
      grads.zero();
      loss_sum += rep.combined;
    }

    EpochRecord rec;
    rec.epoch = epoch;
    const double mean_loss = loss_sum / static_cast<double>(steps);
    rec.task_loss.emplace_back(large.name.empty() ? "large" : large.name, mean_loss);
    rec.combined = mean_loss;
    rec.train_accuracy = accuracy_cnn(model.embedding, model.cnn, large.train);
    const double dev_acc = accuracy_cnn(model.embedding, model.cnn, large.dev);
    rec.dev_accuracy.emplace_back(large.name.empty() ? "large" : large.name, dev_acc);
    rec.averaged_dev_accuracy = dev_acc;
    result.history.push_back(std::move(rec));
    if (on_epoch) on_epoch(result.history.back());

    const bool stop = stopper.observe(dev_acc);
    if (stopper.improved_last()) {
      best.model = model;
      best.opt = opt;
      best.epoch = epoch;
      best.best_dev = stopper.best();
    }
    if (stop) break;
  }
  result.checkpoint = std::move(best);
  return result;
}

TrainResult train_multitask(const MultiTaskCorpus& corpus,
                            const TrainerConfig& cfg,
                            const MultiTaskModel* init,
                            const EpochCallback& on_epoch) {
  cfg.validate();
  const std::size_t n = corpus.smalls.size();
  const bool use_large = cfg.include_large_in_joint;
  if (n == 0 && !use_large) throw std::runtime_error("no tasks");

  std::unordered_set<std::string> names;
  for (const Dataset& ds : corpus.smalls) {
    if (!names.insert(ds.name).second) {
      throw std::invalid_argument("duplicate dataset name: " + ds.name);
    }
    require_splits(ds);
    if (ds.num_labels() < 2) {
      throw std::invalid_argument("dataset " + ds.name + ": needs at least 2 labels");
    }
  }
  if (use_large) require_splits(corpus.large);

  const std::vector<std::vector<std::string>> large_tokens =
      use_large ? tokenize_docs(corpus.large.train)
                : std::vector<std::vector<std::string>>{};
  std::vector<std::vector<std::vector<std::string>>> small_tokens;
  small_tokens.reserve(n);
  for (const Dataset& ds : corpus.smalls) small_tokens.push_back(tokenize_docs(ds.train));

  std::vector<const std::vector<std::vector<std::string>>*> small_token_ptrs;
  for (const auto& t : small_tokens) small_token_ptrs.push_back(&t);
  Vocabulary vocab = build_joint_vocab(use_large ? &large_tokens : nullptr,
                                       small_token_ptrs, cfg.min_count_large,
                                       cfg.min_count_small);

  MultiTaskModel model;
  if (init != nullptr) {
    if (init->embedding.dim != cfg.dim || init->cnn.dim != cfg.dim) {
      throw std::invalid_argument("initial parameters have a different embedding dim");
    }
    if (use_large && init->cnn.classes != corpus.large.num_labels()) {
      throw std::invalid_argument("initial CNN was trained with a different label space");
    }
    model.embedding = transfer_embedding(init->embedding, vocab,
                                         derive_seed(cfg.seed, "embedding-init"));
    model.cnn = init->cnn;
  } else {
    model.embedding =
        init_random(vocab, cfg.dim, derive_seed(cfg.seed, "embedding-init"));
    Rng cnn_rng(derive_seed(cfg.seed, "cnn-init"));
    model.cnn = cnn_init(cfg.widths, cfg.filters_per_width, cfg.dim,
                         std::max<std::size_t>(2, corpus.large.num_labels()), cnn_rng);
  }
  for (const Dataset& ds : corpus.smalls) {
    model.heads.push_back(logreg_init(ds.name, cfg.dim, ds.num_labels()));
  }

  GradBuffers grads(model);
  std::vector<Slot> slots = build_slots(model, grads);
  OptimizerStates opt = make_optimizer_states(slots);
  AdamConfig acfg;
  acfg.lr = cfg.lr;

  std::size_t largest = 0;
  if (use_large) largest = corpus.large.train.size();
  for (const Dataset& ds : corpus.smalls) largest = std::max(largest, ds.train.size());
  const std::size_t steps = (largest + cfg.batch_size - 1) / cfg.batch_size;

  std::optional<BatchStream> large_stream;
  if (use_large) {
    large_stream.emplace(corpus.large.train.size(),
                         derive_seed(cfg.seed, "batches:large"));
  }
  std::vector<BatchStream> small_streams;
  small_streams.reserve(n);
  for (const Dataset& ds : corpus.smalls) {
    small_streams.emplace_back(ds.train.size(),
                               derive_seed(cfg.seed, "batches:" + ds.name));
  }

  EarlyStopper stopper(cfg.patience);
  TrainResult result;
  Checkpoint best;
  best.config = cfg;
  best.config.pretrain = init != nullptr;
  const std::size_t max_width = model.cnn.max_width();

  std::vector<std::size_t> idxs;
  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    double combined_sum = 0.0;
    double penalty_sum = 0.0;
    double large_sum = 0.0;
    std::vector<double> small_sums(n, 0.0);

    for (std::size_t s = 0; s < steps; ++s) {
      std::vector<MiniBatch> batches;
      if (use_large) {
        large_stream->draw(std::min(cfg.batch_size, corpus.large.train.size()), idxs);
        batches.push_back(encode_batch(corpus.large, large_tokens, idxs,
                                       model.embedding.vocab, max_width, true));
      }
      for (std::size_t j = 0; j < n; ++j) {
        small_streams[j].draw(std::min(cfg.batch_size, corpus.smalls[j].train.size()), idxs);
        batches.push_back(encode_batch(corpus.smalls[j], small_tokens[j], idxs,
                                       model.embedding.vocab, 1, false));
      }
      LossReport rep = joint_loss_grads(batches, model, cfg.lambda, use_large,
                                        cfg.l2_exact_norm, grads);
      apply_adam(slots, opt, acfg);
      grads.zero();

      combined_sum += rep.combined;
      penalty_sum += rep.penalty;
      large_sum += rep.large_nll;
      for (std::size_t j = 0; j < rep.small_nll.size(); ++j) {
        small_sums[j] += rep.small_nll[j].second;
      }
    }

    EpochRecord rec;
    rec.epoch = epoch;
    const double inv_steps = 1.0 / static_cast<double>(steps);
    if (use_large) {
      rec.task_loss.emplace_back(corpus.large.name.empty() ? "large" : corpus.large.name,
                                 large_sum * inv_steps);
    }
    for (std::size_t j = 0; j < n; ++j) {
      rec.task_loss.emplace_back(corpus.smalls[j].name, small_sums[j] * inv_steps);
    }
    rec.penalty = penalty_sum * inv_steps;
    rec.combined = combined_sum * inv_steps;

    double acc_sum = 0.0;
    std::size_t acc_count = 0;
    if (use_large) {
      const double acc = accuracy_cnn(model.embedding, model.cnn, corpus.large.dev);
      rec.dev_accuracy.emplace_back(corpus.large.name.empty() ? "large" : corpus.large.name, acc);
      acc_sum += acc;
      ++acc_count;
    }
    for (std::size_t j = 0; j < n; ++j) {
      const double acc =
          accuracy_logreg(model.embedding, model.heads[j], corpus.smalls[j].dev);
      rec.dev_accuracy.emplace_back(corpus.smalls[j].name, acc);
      acc_sum += acc;
      ++acc_count;
    }
    rec.averaged_dev_accuracy = acc_sum / static_cast<double>(acc_count);
    result.history.push_back(rec);
    if (on_epoch) on_epoch(result.history.back());

    const bool stop = stopper.observe(rec.averaged_dev_accuracy);
    if (stopper.improved_last()) {
      best.model = model;
      best.opt = opt;
      best.epoch = epoch;
      best.best_dev = stopper.best();
    }
    if (stop) break;
  }
  result.checkpoint = std::move(best);
  return result;
}

void write_history_jsonl(const std::vector<EpochRecord>& history,
                         const std::filesystem::path& path) {
  std::ostringstream out;
  for (const EpochRecord& rec : history) {
    json j;
    j["epoch"] = rec.epoch;
    json losses = json::object();
    for (const auto& [name, v] : rec.task_loss) losses[name] = v;
    j["task_loss"] = losses;
    j["penalty"] = rec.penalty;
    j["combined"] = rec.combined;
    if (rec.train_accuracy.has_value()) j["train_accuracy"] = *rec.train_accuracy;
    json devs = json::object();
    for (const auto& [name, v] : rec.dev_accuracy) devs[name] = v;
    j["dev_accuracy"] = devs;
    j["averaged_dev_accuracy"] = rec.averaged_dev_accuracy;
    out << j.dump() << '\n';
  }
  write_file(path, out.str());
}

std::string config_to_json(const TrainerConfig& cfg) {
  json j;
  j["lr"] = cfg.lr;
  j["lambda"] = cfg.lambda;
  j["batch_size"] = cfg.batch_size;
  j["max_epochs"] = cfg.max_epochs;
  j["patience"] = cfg.patience;
  j["seed"] = cfg.seed;
  j["pretrain"] = cfg.pretrain;
  j["include_large_in_joint"] = cfg.include_large_in_joint;
  j["l2_exact_norm"] = cfg.l2_exact_norm;
  j["dim"] = cfg.dim;
  j["widths"] = cfg.widths;
  j["filters_per_width"] = cfg.filters_per_width;
  j["min_count_large"] = cfg.min_count_large;
  j["min_count_small"] = cfg.min_count_small;
  j["large_split"] = {cfg.large_split.train, cfg.large_split.dev, cfg.large_split.test};
  return j.dump();
}

TrainerConfig config_from_json(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
    if (!j.is_object()) throw ParseError("config: expected a JSON object");
  } catch (const json::exception& e) {
    throw ParseError(std::string("config: ") + e.what());
  }
  TrainerConfig cfg;
  try {
    cfg.lr = j.value("lr", cfg.lr);
    cfg.lambda = j.value("lambda", cfg.lambda);
    cfg.batch_size = j.value("batch_size", cfg.batch_size);
    cfg.max_epochs = j.value("max_epochs", cfg.max_epochs);
    cfg.patience = j.value("patience", cfg.patience);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.pretrain = j.value("pretrain", cfg.pretrain);
    cfg.include_large_in_joint =
        j.value("include_large_in_joint", cfg.include_large_in_joint);
    cfg.l2_exact_norm = j.value("l2_exact_norm", cfg.l2_exact_norm);
    cfg.dim = j.value("dim", cfg.dim);
    if (j.contains("widths")) cfg.widths = j["widths"].get<std::vector<std::size_t>>();
    cfg.filters_per_width = j.value("filters_per_width", cfg.filters_per_width);
    cfg.min_count_large = j.value("min_count_large", cfg.min_count_large);
    cfg.min_count_small = j.value("min_count_small", cfg.min_count_small);
    if (j.contains("large_split")) {
      auto v = j["large_split"].get<std::vector<double>>();
      if (v.size() != 3) throw std::invalid_argument("config: large_split needs 3 ratios");
      cfg.large_split = {v[0], v[1], v[2]};
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("config: ") + e.what());
  }
  return cfg;
}

}  // namespace emo2vec
