#pragma once

// Synthetic corpora and model fixtures shared by the unit suites and the
// acceptance runner. Everything is seeded; no test data lives on disk.

#include <string>
#include <vector>

#include "embedding.hpp"
#include "rng.hpp"
#include "text.hpp"
#include "trainer.hpp"

namespace testsupport {

using namespace emo2vec;

inline std::vector<std::string> filler_pool(std::size_t count = 30) {
  std::vector<std::string> pool;
  pool.reserve(count);
  for (std::size_t i = 0; i < count; ++i) pool.push_back("filler" + std::to_string(i));
  return pool;
}

inline std::string make_doc(Rng& rng, const std::vector<std::string>& fillers,
                            const std::vector<std::string>& markers,
                            std::size_t marker_count) {
  std::vector<std::string> words;
  const std::size_t len = 6 + rng.next_index(4);
  for (std::size_t i = 0; i < len; ++i) {
    words.push_back(fillers[rng.next_index(fillers.size())]);
  }
  for (std::size_t m = 0; m < marker_count; ++m) {
    const std::string& marker = markers[rng.next_index(markers.size())];
    words.insert(words.begin() + static_cast<std::ptrdiff_t>(rng.next_index(words.size() + 1)),
                 marker);
  }
  std::string text = words[0];
  for (std::size_t i = 1; i < words.size(); ++i) text += " " + words[i];
  return text;
}

// Four-class corpus where a single marker word decides the label.
inline Dataset make_marker_dataset(std::size_t train_per_class,
                                   std::size_t dev_per_class,
                                   std::size_t test_per_class,
                                   std::uint64_t seed) {
  Dataset ds;
  ds.name = "markers";
  ds.label_names = {"joy", "sadness", "anger", "fear"};
  ds.task_kind = TaskKind::multiclass;
  ds.metric = MetricKind::accuracy;

  Rng rng(seed);
  const auto fillers = filler_pool();
  std::vector<std::vector<std::string>> markers(4);
  for (int c = 0; c < 4; ++c) {
    for (int m = 0; m < 5; ++m) {
      markers[c].push_back("marker" + std::to_string(c) + "x" + std::to_string(m));
    }
  }
  auto fill = [&](std::size_t per_class, std::vector<LabeledDocument>& out) {
    for (int c = 0; c < 4; ++c) {
      for (std::size_t i = 0; i < per_class; ++i) {
        out.push_back({make_doc(rng, fillers, markers[c], 1), c});
      }
    }
  };
  fill(train_per_class, ds.train);
  fill(dev_per_class, ds.dev);
  fill(test_per_class, ds.test);
  return ds;
}

// Transfer suite: one large two-class corpus plus four binary tasks that all
// draw from shared positive/negative marker pools. Task t's dev and test
// documents use only markers with index % 4 == t, which its own train split
// never contains; those markers do appear in the other tasks and in the
// large corpus. Frozen random embeddings therefore cannot generalize to a
// task's test split, while a shared trained matrix can.
inline MultiTaskCorpus make_transfer_suite(std::uint64_t seed,
                                           std::size_t num_tasks = 4) {
  Rng rng(seed);
  const auto fillers = filler_pool();
  const std::size_t pool_size = 20;
  std::vector<std::string> pos, neg;
  for (std::size_t i = 0; i < pool_size; ++i) {
    pos.push_back("good" + std::to_string(i));
    neg.push_back("bad" + std::to_string(i));
  }

  MultiTaskCorpus corpus;
  corpus.large.name = "large";
  corpus.large.label_names = {"joy", "sadness"};
  corpus.large.task_kind = TaskKind::binary;
  corpus.large.metric = MetricKind::accuracy;
  for (std::size_t i = 0; i < 150; ++i) {
    corpus.large.train.push_back({make_doc(rng, fillers, pos, 2), 0});
    corpus.large.train.push_back({make_doc(rng, fillers, neg, 2), 1});
  }
  for (std::size_t i = 0; i < 25; ++i) {
    corpus.large.dev.push_back({make_doc(rng, fillers, pos, 2), 0});
    corpus.large.dev.push_back({make_doc(rng, fillers, neg, 2), 1});
  }
  for (std::size_t i = 0; i < 25; ++i) {
    corpus.large.test.push_back({make_doc(rng, fillers, pos, 2), 0});
    corpus.large.test.push_back({make_doc(rng, fillers, neg, 2), 1});
  }

  for (std::size_t t = 0; t < num_tasks; ++t) {
    Dataset ds;
    ds.name = "task" + std::to_string(t);
    ds.label_names = {"neg", "pos"};
    ds.task_kind = TaskKind::binary;
    ds.metric = MetricKind::accuracy;

    // Modulus of at least 2 keeps both pools non-empty for a 1-task suite.
    const std::size_t modulus = std::max<std::size_t>(num_tasks, 2);
    std::vector<std::string> train_pos, train_neg, held_pos, held_neg;
    for (std::size_t i = 0; i < pool_size; ++i) {
      if (i % modulus == t) {
        held_pos.push_back(pos[i]);
        held_neg.push_back(neg[i]);
      } else {
        train_pos.push_back(pos[i]);
        train_neg.push_back(neg[i]);
      }
    }
    for (std::size_t i = 0; i < 20; ++i) {
      ds.train.push_back({make_doc(rng, fillers, train_pos, 2), 1});
      ds.train.push_back({make_doc(rng, fillers, train_neg, 2), 0});
    }
    for (std::size_t i = 0; i < 10; ++i) {
      ds.dev.push_back({make_doc(rng, fillers, held_pos, 2), 1});
      ds.dev.push_back({make_doc(rng, fillers, held_neg, 2), 0});
    }
    for (std::size_t i = 0; i < 30; ++i) {
      ds.test.push_back({make_doc(rng, fillers, held_pos, 2), 1});
      ds.test.push_back({make_doc(rng, fillers, held_neg, 2), 0});
    }
    corpus.smalls.push_back(std::move(ds));
  }
  return corpus;
}

// Tiny multi-task model with random parameters and one mini-batch per task,
// small enough for exhaustive finite-difference sweeps.
struct TinyFixture {
  MultiTaskModel model;
  std::vector<MiniBatch> batches;
  double lambda = 0.7;
  bool include_large = true;
  bool l2_exact_norm = false;
};

inline TinyFixture make_tiny_fixture(std::uint64_t seed) {
  Rng rng(seed);
  TinyFixture fx;

  Vocabulary vocab = Vocabulary::with_specials();
  for (int i = 0; i < 18; ++i) vocab.add("w" + std::to_string(i));
  const std::size_t dim = 8;
  fx.model.embedding.vocab = vocab;
  fx.model.embedding.dim = dim;
  fx.model.embedding.table = DenseMatrix(static_cast<std::size_t>(vocab.size()), dim);
  for (std::size_t r = 1; r < fx.model.embedding.table.rows; ++r) {
    for (std::size_t c = 0; c < dim; ++c) {
      fx.model.embedding.table(r, c) = rng.next_uniform(-0.5, 0.5);
    }
  }

  fx.model.cnn = cnn_init({1, 3}, 2, dim, 4, rng);
  for (DenseMatrix& f : fx.model.cnn.filters) {
    for (double& v : f.values) v = rng.next_uniform(-0.5, 0.5);
  }
  for (double& v : fx.model.cnn.filter_bias) v = rng.next_uniform(-0.2, 0.2);
  for (double& v : fx.model.cnn.output_w.values) v = rng.next_uniform(-0.5, 0.5);
  for (double& v : fx.model.cnn.output_b) v = rng.next_uniform(-0.2, 0.2);

  fx.model.heads.push_back(logreg_init("heads2", dim, 2));
  fx.model.heads.push_back(logreg_init("heads3", dim, 3));
  for (LogRegParams& head : fx.model.heads) {
    for (double& v : head.weights.values) v = rng.next_uniform(-0.5, 0.5);
    for (double& v : head.bias) v = rng.next_uniform(-0.2, 0.2);
  }

  auto random_sentence = [&](std::size_t true_len, std::size_t padded) {
    EncodedSentence sent;
    sent.true_len = true_len;
    sent.ids.assign(padded, Vocabulary::kPadId);
    for (std::size_t i = 0; i < true_len; ++i) {
      sent.ids[i] = 1 + static_cast<int>(rng.next_index(
                            static_cast<std::size_t>(vocab.size()) - 1));
    }
    return sent;
  };

  MiniBatch large;
  large.dataset_name = "large";
  large.is_large = true;
  large.sentences = {random_sentence(7, 7), random_sentence(5, 7)};
  large.labels = {static_cast<int>(rng.next_index(4)), static_cast<int>(rng.next_index(4))};
  fx.batches.push_back(std::move(large));

  const std::size_t head_classes[2] = {2, 3};
  for (std::size_t h = 0; h < 2; ++h) {
    MiniBatch mb;
    mb.dataset_name = fx.model.heads[h].dataset_name;
    mb.is_large = false;
    mb.sentences = {random_sentence(4, 5), random_sentence(3, 5)};
    mb.labels = {static_cast<int>(rng.next_index(head_classes[h])),
                 static_cast<int>(rng.next_index(head_classes[h]))};
    fx.batches.push_back(std::move(mb));
  }
  return fx;
}

inline double rel_err(double a, double b) {
  const double denom = std::max({std::abs(a), std::abs(b), 1e-8});
  return std::abs(a - b) / denom;
}

}  // namespace testsupport
