#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "trainer.hpp"

namespace emo2vec {

struct EvalResult {
  std::string dataset;
  MetricKind metric = MetricKind::accuracy;
  double value = 0.0;
  std::uint64_t seed = 0;
  std::string config_fingerprint;
};

const char* metric_name(MetricKind kind);
MetricKind metric_from_name(std::string_view name);
// binary -> accuracy, multiclass -> one-vs-rest mean F1; dataset metadata
// can override (e.g. F1 of the positive class for non-sentiment binary tasks).
MetricKind default_metric(TaskKind kind);

double metric_accuracy(std::span<const int> pred, std::span<const int> gold);

// F1 of the `positive` class; 0 by convention when precision+recall is 0.
// Labels must be binary (0/1).
double metric_f1_positive(std::span<const int> pred, std::span<const int> gold,
                          int positive);

// Unweighted mean over classes of one-vs-rest F1, 0-convention per class.
double metric_f1_ovr_mean(std::span<const int> pred, std::span<const int> gold,
                          std::size_t num_classes);

// Short stable hash of the full training configuration, recorded with every
// result row.
std::string config_fingerprint(const TrainerConfig& cfg);

struct FrozenFit {
  LogRegParams head;
  double best_dev_accuracy = 0.0;
};

// Fits a fresh logistic regression over mean-pooled frozen-embedding
// features, mirroring the trainer's optimizer and early stopping.
FrozenFit fit_logreg_frozen(const EmbeddingMatrix& embedding,
                            const Dataset& dataset, const TrainerConfig& cfg);

// Fit on train, early-stop on dev, report the dataset's test metric.
EvalResult eval_frozen_embedding(const EmbeddingMatrix& embedding,
                                 const Dataset& dataset,
                                 const TrainerConfig& cfg);

struct LeaveOneOutOutcome {
  EvalResult result;
  std::vector<std::string> trained_dataset_names;  // never holds the held-out
  Checkpoint checkpoint;  // intermediate multi-task model
};

// Trains the shared matrix on everything except smalls[held_out], then
// evaluates the frozen embedding on the held-out dataset.
LeaveOneOutOutcome leave_one_out_eval(const MultiTaskCorpus& corpus,
                                      std::size_t held_out,
                                      const TrainerConfig& cfg);

// Report files: a TSV row per result plus a JSON summary with the
// cross-dataset average.
void write_eval_tsv(const std::vector<EvalResult>& results,
                    const std::filesystem::path& path);
void write_eval_summary_json(const std::vector<EvalResult>& results,
                             const std::filesystem::path& path);

}  // namespace emo2vec
