#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cnn.hpp"
#include "embedding.hpp"
#include "logreg.hpp"
#include "text.hpp"

namespace emo2vec {

struct TrainerConfig {
  double lr = 0.001;
  double lambda = 1.0;
  std::size_t batch_size = 32;  // the pretrain command defaults this to 16
  std::size_t max_epochs = 20;
  std::size_t patience = 3;
  std::uint64_t seed = 13;
  bool pretrain = false;  // whether initial params come from pre-training
  bool include_large_in_joint = true;
  bool l2_exact_norm = false;

  std::size_t dim = 100;
  std::vector<std::size_t> widths = {1, 3, 5, 7};
  std::size_t filters_per_width = 256;
  int min_count_large = 2;
  int min_count_small = 1;
  SplitRatios large_split;

  void validate() const;
};

// Everything trainable: the shared matrix plus every task head.
struct MultiTaskModel {
  EmbeddingMatrix embedding;
  CnnParams cnn;
  std::vector<LogRegParams> heads;

  const LogRegParams* find_head(std::string_view dataset_name) const;
};

// One encoded mini-batch drawn from a single dataset.
struct MiniBatch {
  std::string dataset_name;
  bool is_large = false;
  std::vector<EncodedSentence> sentences;
  std::vector<int> labels;
};

// Per-task losses and the combined objective for one step or epoch.
struct LossReport {
  bool large_included = false;
  double large_nll = 0.0;
  std::vector<std::pair<std::string, double>> small_nll;
  double lambda = 0.0;
  double penalty = 0.0;
  double combined = 0.0;
};

// Forward-only joint objective over one mini-batch per participating dataset:
// combined = [L_large if included] + (1/n) * sum L_j + lambda * penalty,
// each L_j the batch-mean NLL, penalty over all heads in the model.
LossReport joint_loss(const std::vector<MiniBatch>& batches,
                      const MultiTaskModel& model, double lambda,
                      bool include_large, bool l2_exact_norm);

// Gradient buffers shaped like a model. PAD's embedding row never receives
// gradient.
struct GradBuffers {
  DenseMatrix embedding;
  CnnGradients cnn;
  std::vector<LogRegGradients> heads;

  explicit GradBuffers(const MultiTaskModel& model);
  void zero();
};

// Same objective as joint_loss, plus gradients of the combined loss with
// respect to every parameter, accumulated into `grads`.
LossReport joint_loss_grads(const std::vector<MiniBatch>& batches,
                            const MultiTaskModel& model, double lambda,
                            bool include_large, bool l2_exact_norm,
                            GradBuffers& grads);

// Halts when the dev score fails to improve (strictly) for `patience`
// consecutive epochs. Best epoch is the first attainment of the best score.
class EarlyStopper {
 public:
  explicit EarlyStopper(std::size_t patience);

  // Records one epoch's score. Returns true when training should stop.
  bool observe(double dev_score);
  bool improved_last() const { return improved_last_; }
  double best() const { return best_; }
  std::size_t best_epoch() const { return best_epoch_; }

 private:
  std::size_t patience_;
  double best_;
  std::size_t best_epoch_ = 0;
  std::size_t epoch_ = 0;
  std::size_t stale_ = 0;
  bool improved_last_ = false;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  std::vector<std::pair<std::string, double>> task_loss;  // mean train NLL
  double penalty = 0.0;
  double combined = 0.0;
  std::optional<double> train_accuracy;  // tracked during pre-training
  std::vector<std::pair<std::string, double>> dev_accuracy;
  double averaged_dev_accuracy = 0.0;
};

// Adam moments for every tensor, keyed by a stable slot name so checkpoints
// can rebind them on reload.
struct OptimizerStates {
  std::vector<std::pair<std::string, AdamState>> states;
};

struct Checkpoint {
  MultiTaskModel model;
  OptimizerStates opt;
  TrainerConfig config;
  std::size_t epoch = 0;    // epoch the model was taken from
  double best_dev = 0.0;
};

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<EpochRecord> history;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

// Pre-trains the shared matrix and the CNN on the large dataset alone.
// Returns the parameters from the best-dev epoch; the exported T of this
// phase is the "CNN embedding" ablation baseline.
TrainResult pretrain_large(const Dataset& large, const TrainerConfig& cfg,
                           const EpochCallback& on_epoch = {});

// Joint training over the large dataset (optional) and every small dataset,
// all sharing one embedding matrix. Each step draws one mini-batch per
// participating dataset round-robin; small datasets reshuffle and recycle;
// one epoch is one pass over the largest participating dataset. Early-stops
// on the averaged dev accuracy. `init` (from pretrain_large) seeds T and the
// CNN; words missing from it are randomly initialized.
TrainResult train_multitask(const MultiTaskCorpus& corpus,
                            const TrainerConfig& cfg,
                            const MultiTaskModel* init = nullptr,
                            const EpochCallback& on_epoch = {});

// Greedy decisions for evaluation: argmax probability, first index on ties.
int predict_cnn(const EmbeddingMatrix& embedding, const CnnParams& cnn,
                const std::vector<std::string>& tokens);
int predict_logreg(const EmbeddingMatrix& embedding, const LogRegParams& head,
                   const std::vector<std::string>& tokens);
double accuracy_cnn(const EmbeddingMatrix& embedding, const CnnParams& cnn,
                    const std::vector<LabeledDocument>& docs);
double accuracy_logreg(const EmbeddingMatrix& embedding,
                       const LogRegParams& head,
                       const std::vector<LabeledDocument>& docs);

void write_history_jsonl(const std::vector<EpochRecord>& history,
                         const std::filesystem::path& path);

std::string config_to_json(const TrainerConfig& cfg);
TrainerConfig config_from_json(const std::string& json_text);

}  // namespace emo2vec
