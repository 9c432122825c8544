// Acceptance suite: whole-pipeline checks on synthetic data, one pass/fail
// line per criterion. Returns the number of failed criteria.

#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "checkpoint.hpp"
#include "cli.hpp"
#include "corpus_io.hpp"
#include "eval.hpp"
#include "rng.hpp"
#include "support/distant_fixture.hpp"
#include "support/synthetic.hpp"
#include "text.hpp"
#include "trainer.hpp"
#include "util.hpp"

using namespace emo2vec;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

fs::path temp_dir(const std::string& tag) {
  fs::path dir = fs::temp_directory_path() /
                 ("emo2vec_acceptance_" + std::to_string(::getpid()) + "_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

// ---------------------------------------------------------------------------
// 1. Gradient oracle suite on the tiny model.
// ---------------------------------------------------------------------------
Outcome criterion_gradients() {
  const auto start = Clock::now();
  testsupport::TinyFixture fx = testsupport::make_tiny_fixture(20260808);

  GradBuffers grads(fx.model);
  joint_loss_grads(fx.batches, fx.model, fx.lambda, fx.include_large,
                   fx.l2_exact_norm, grads);

  auto loss_fn = [&]() {
    return joint_loss(fx.batches, fx.model, fx.lambda, fx.include_large,
                      fx.l2_exact_norm)
        .combined;
  };

  double worst = 0.0;
  std::string worst_name = "none";
  auto sweep = [&](const std::string& name, std::span<double> param,
                   std::span<const double> analytic, std::size_t skip = 0) {
    std::vector<double> fd = finite_diff_grad(loss_fn, param);
    for (std::size_t i = skip; i < fd.size(); ++i) {
      const double err = testsupport::rel_err(fd[i], analytic[i]);
      if (err > worst) {
        worst = err;
        worst_name = name;
      }
    }
  };

  // PAD's row is frozen by contract and is not a trainable coordinate.
  sweep("embedding", fx.model.embedding.table.values, grads.embedding.values,
        fx.model.embedding.dim);
  for (std::size_t j = 0; j < fx.model.cnn.filter_count(); ++j) {
    sweep("cnn.filter." + std::to_string(j), fx.model.cnn.filters[j].values,
          grads.cnn.filters[j].values);
  }
  sweep("cnn.filter_bias", fx.model.cnn.filter_bias, grads.cnn.filter_bias);
  sweep("cnn.output_w", fx.model.cnn.output_w.values, grads.cnn.output_w.values);
  sweep("cnn.output_b", fx.model.cnn.output_b, grads.cnn.output_b);
  for (std::size_t h = 0; h < fx.model.heads.size(); ++h) {
    sweep("head." + fx.model.heads[h].dataset_name + ".weights",
          fx.model.heads[h].weights.values, grads.heads[h].weights.values);
    sweep("head." + fx.model.heads[h].dataset_name + ".bias",
          fx.model.heads[h].bias, grads.heads[h].bias);
  }

  const double elapsed = seconds_since(start);
  Outcome out;
  out.pass = worst <= 1e-4 && elapsed < 60.0;
  std::ostringstream msg;
  msg << "max rel err " << format_double(worst) << " (" << worst_name << "), "
      << elapsed << "s";
  out.detail = msg.str();
  return out;
}

// ---------------------------------------------------------------------------
// 2. Joint-loss identity on 100 random fixtures.
// ---------------------------------------------------------------------------
Outcome criterion_loss_identity() {
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    testsupport::TinyFixture fx = testsupport::make_tiny_fixture(40000 + seed);
    Rng rng(seed);
    const double lambda = rng.next_uniform(0.0, 3.0);
    const bool include_large = rng.next_index(5) != 0;
    const bool exact = rng.next_index(2) == 1;
    std::vector<MiniBatch> batches = fx.batches;
    if (!include_large) batches.erase(batches.begin());

    LossReport rep = joint_loss(batches, fx.model, lambda, include_large, exact);
    double expect = rep.large_included ? rep.large_nll : 0.0;
    if (!rep.small_nll.empty()) {
      double sum = 0.0;
      for (const auto& [name, v] : rep.small_nll) sum += v;
      expect += sum / static_cast<double>(rep.small_nll.size());
    }
    expect += rep.lambda * rep.penalty;
    worst = std::max(worst, std::abs(rep.combined - expect));
  }
  Outcome out;
  out.pass = worst <= 1e-12;
  out.detail = "max |combined - formula| = " + format_double(worst) +
               " over 100 fixtures";
  return out;
}

// ---------------------------------------------------------------------------
// 3. Overfit check on the 4-class marker corpus.
// ---------------------------------------------------------------------------
Outcome criterion_overfit() {
  const auto start = Clock::now();
  Dataset large = testsupport::make_marker_dataset(50, 15, 0, 8801);

  TrainerConfig cfg;
  cfg.dim = 24;
  cfg.widths = {1, 3};
  cfg.filters_per_width = 4;
  cfg.batch_size = 16;
  cfg.lr = 0.005;
  cfg.max_epochs = 200;
  cfg.patience = 200;  // run until solved or the epoch budget ends
  cfg.min_count_large = 1;
  cfg.seed = 4242;

  double best_train = 0.0, best_dev = 0.0;
  TrainResult result = pretrain_large(large, cfg, [&](const EpochRecord& rec) {
    best_train = std::max(best_train, rec.train_accuracy.value_or(0.0));
    best_dev = std::max(best_dev, rec.averaged_dev_accuracy);
  });
  const double elapsed = seconds_since(start);

  Outcome out;
  out.pass = best_train >= 0.99 && best_dev >= 0.95 && elapsed < 300.0 &&
             result.history.size() <= 200;
  std::ostringstream msg;
  msg << "train acc " << best_train << ", dev acc " << best_dev << " after "
      << result.history.size() << " epochs, " << elapsed << "s";
  out.detail = msg.str();
  return out;
}

// ---------------------------------------------------------------------------
// 4. Transfer direction: trained shared embedding beats random init by >= 15
//    accuracy points on the held-out task, averaged over 3 seeds.
// ---------------------------------------------------------------------------
Outcome criterion_transfer() {
  TrainerConfig cfg;
  cfg.dim = 16;
  cfg.widths = {1, 3};
  cfg.filters_per_width = 2;
  cfg.batch_size = 32;
  cfg.lr = 0.005;
  cfg.max_epochs = 25;
  cfg.patience = 6;
  cfg.min_count_large = 1;
  cfg.lambda = 0.1;

  double gap_sum = 0.0;
  std::ostringstream detail;
  for (std::uint64_t seed : {101ull, 202ull, 303ull}) {
    MultiTaskCorpus corpus = testsupport::make_transfer_suite(seed, 4);
    cfg.seed = seed;

    LeaveOneOutOutcome trained = leave_one_out_eval(corpus, 0, cfg);
    EmbeddingMatrix random_emb =
        init_random(trained.checkpoint.model.embedding.vocab, cfg.dim, seed + 991);
    EvalResult random_eval =
        eval_frozen_embedding(random_emb, corpus.smalls[0], cfg);

    const double gap = trained.result.value - random_eval.value;
    gap_sum += gap;
    detail << " seed " << seed << ": " << trained.result.value << " vs "
           << random_eval.value << ";";
  }
  const double mean_gap = gap_sum / 3.0;

  Outcome out;
  out.pass = mean_gap >= 0.15;
  out.detail = "mean accuracy gap " + format_double(mean_gap) + " (" +
               detail.str() + ")";
  return out;
}

// ---------------------------------------------------------------------------
// 5. Metric oracle equivalence on 1000 random prediction/gold pairs.
// ---------------------------------------------------------------------------
double oracle_f1_from_counts(std::size_t tp, std::size_t fp, std::size_t fn) {
  const double pd = static_cast<double>(tp + fp);
  const double rd = static_cast<double>(tp + fn);
  const double precision = pd == 0.0 ? 0.0 : tp / pd;
  const double recall = rd == 0.0 ? 0.0 : tp / rd;
  if (precision + recall == 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

Outcome criterion_metrics() {
  Rng rng(5150);
  bool ok = true;
  std::string why;

  for (std::size_t classes : {2ull, 4ull}) {
    std::vector<int> pred(1000), gold(1000);
    for (std::size_t i = 0; i < pred.size(); ++i) {
      pred[i] = static_cast<int>(rng.next_index(classes));
      gold[i] = static_cast<int>(rng.next_index(classes));
    }

    std::size_t hits = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
      if (pred[i] == gold[i]) ++hits;
    }
    if (metric_accuracy(pred, gold) !=
        static_cast<double>(hits) / static_cast<double>(pred.size())) {
      ok = false;
      why += " accuracy mismatch;";
    }

    double ovr = 0.0;
    for (std::size_t c = 0; c < classes; ++c) {
      std::size_t tp = 0, fp = 0, fn = 0;
      for (std::size_t i = 0; i < pred.size(); ++i) {
        const bool p = pred[i] == static_cast<int>(c);
        const bool g = gold[i] == static_cast<int>(c);
        tp += p && g;
        fp += p && !g;
        fn += !p && g;
      }
      const double f1 = oracle_f1_from_counts(tp, fp, fn);
      ovr += f1;
      if (classes == 2 &&
          metric_f1_positive(pred, gold, static_cast<int>(c)) != f1) {
        ok = false;
        why += " f1_positive mismatch;";
      }
    }
    const double got = metric_f1_ovr_mean(pred, gold, classes);
    if (std::abs(got - ovr / static_cast<double>(classes)) > 1e-15) {
      ok = false;
      why += " f1_ovr mismatch;";
    }
  }

  Outcome out;
  out.pass = ok;
  out.detail = ok ? "accuracy, f1_positive, f1_ovr_mean match brute-force "
                    "oracles on 1000 pairs (2- and 4-class)"
                  : why;
  return out;
}

// ---------------------------------------------------------------------------
// 6. Determinism: pretrain + train + export twice, bitwise-identical vectors.
// ---------------------------------------------------------------------------
int run_cli(const std::vector<std::string>& args) {
  std::vector<const char*> argv = {"emo2vec"};
  for (const std::string& a : args) argv.push_back(a.c_str());
  return cli::cli_main(static_cast<int>(argv.size()), argv.data());
}

Outcome criterion_determinism() {
  fs::path base = temp_dir("determinism");
  MultiTaskCorpus suite = testsupport::make_transfer_suite(77, 2);
  fs::path corpus = base / "corpus";
  fs::create_directories(corpus);
  {
    std::vector<LabeledDocument> all = suite.large.train;
    all.insert(all.end(), suite.large.dev.begin(), suite.large.dev.end());
    all.insert(all.end(), suite.large.test.begin(), suite.large.test.end());
    save_labeled_file(all, suite.large.label_names, corpus / "large.tsv");
    for (const Dataset& ds : suite.smalls) save_small_dataset(ds, corpus / "small");
  }

  auto pipeline = [&](const std::string& tag) -> std::string {
    fs::path pre = base / (tag + "_pre");
    fs::path joint = base / (tag + "_joint");
    fs::path vec = base / (tag + "_vectors.txt");
    const std::vector<std::string> common = {
        "--dim", "12", "--filters", "4", "--widths", "1,3",
        "--epochs", "3", "--min-count", "1", "--seed", "99"};

    std::vector<std::string> args = {"pretrain", "--corpus", corpus.string(),
                                     "--out", pre.string()};
    args.insert(args.end(), common.begin(), common.end());
    if (run_cli(args) != 0) return "";

    args = {"train", "--corpus", corpus.string(), "--out", joint.string(),
            "--init", (pre / "checkpoint.e2v").string()};
    args.insert(args.end(), common.begin(), common.end());
    if (run_cli(args) != 0) return "";

    if (run_cli({"export", "--checkpoint", (joint / "checkpoint.e2v").string(),
                 "--out", vec.string()}) != 0) {
      return "";
    }
    return read_file(vec);
  };

  const std::string first = pipeline("a");
  const std::string second = pipeline("b");
  fs::remove_all(base);

  Outcome out;
  out.pass = !first.empty() && first == second;
  out.detail = first.empty() ? "pipeline failed"
                             : (out.pass ? "identical vector files (" +
                                               std::to_string(first.size()) +
                                               " bytes)"
                                         : "vector files differ");
  return out;
}

// ---------------------------------------------------------------------------
// 7. Round trips: vector text format and checkpoint reload.
// ---------------------------------------------------------------------------
Outcome criterion_roundtrip() {
  fs::path dir = temp_dir("roundtrip");
  Outcome out;
  out.pass = true;

  Vocabulary v = Vocabulary::with_specials();
  for (int i = 0; i < 25; ++i) v.add("word" + std::to_string(i));
  EmbeddingMatrix m = init_random(v, 10, 7);
  Rng rng(71);
  for (std::size_t r = 2; r < m.table.rows; ++r) {
    for (double& x : m.table.row(r)) x = rng.next_uniform(-4.0, 4.0);
  }
  export_text(m, dir / "vec.txt");
  EmbeddingMatrix back = import_text(dir / "vec.txt");
  double max_diff = 0.0;
  // exported content only: PAD and UNK rows are not part of the format
  for (std::size_t i = 2 * m.dim; i < m.table.values.size(); ++i) {
    max_diff = std::max(max_diff, std::abs(m.table.values[i] - back.table.values[i]));
  }
  if (max_diff > 1e-6) {
    out.pass = false;
    out.detail += "vector round trip diff " + format_double(max_diff) + "; ";
  }

  testsupport::TinyFixture fx = testsupport::make_tiny_fixture(909);
  Checkpoint ckpt;
  ckpt.model = fx.model;
  ckpt.epoch = 3;
  ckpt.best_dev = 0.5;
  save_checkpoint(ckpt, dir / "model.e2v");
  Checkpoint reloaded = load_checkpoint(dir / "model.e2v");
  LossReport a = joint_loss(fx.batches, fx.model, fx.lambda, true, false);
  LossReport b = joint_loss(fx.batches, reloaded.model, fx.lambda, true, false);
  const bool bitwise = a.combined == b.combined && a.large_nll == b.large_nll &&
                       a.penalty == b.penalty;
  if (!bitwise) {
    out.pass = false;
    out.detail += "checkpoint forward outputs differ; ";
  }
  if (out.pass) {
    out.detail = "vector max diff " + format_double(max_diff) +
                 ", checkpoint forward outputs bitwise equal";
  }
  fs::remove_all(dir);
  return out;
}

// ---------------------------------------------------------------------------
// 8. Protocol guards: held-out isolation and best-checkpoint early stopping.
// ---------------------------------------------------------------------------
Outcome criterion_protocol() {
  Outcome out;
  out.pass = true;
  std::string detail;

  MultiTaskCorpus corpus = testsupport::make_transfer_suite(311, 3);
  TrainerConfig cfg;
  cfg.dim = 12;
  cfg.widths = {1, 3};
  cfg.filters_per_width = 2;
  cfg.batch_size = 32;
  cfg.max_epochs = 2;
  cfg.patience = 2;
  cfg.min_count_large = 1;
  cfg.seed = 17;

  LeaveOneOutOutcome loo = leave_one_out_eval(corpus, 1, cfg);
  bool held_out_absent = loo.checkpoint.model.find_head("task1") == nullptr;
  for (const std::string& name : loo.trained_dataset_names) {
    if (name == "task1") held_out_absent = false;
  }
  const bool others_present = loo.checkpoint.model.find_head("task0") != nullptr &&
                              loo.checkpoint.model.find_head("task2") != nullptr;
  if (!held_out_absent || !others_present) {
    out.pass = false;
    detail += "leave-one-out leaked the held-out dataset; ";
  }

  // the fixture history [0.5, 0.6, 0.6, 0.59, 0.58] with patience 2
  EarlyStopper stopper(2);
  bool stopped_at_4 = !stopper.observe(0.5) && !stopper.observe(0.6) &&
                      !stopper.observe(0.6) && stopper.observe(0.59);
  if (!stopped_at_4 || stopper.best_epoch() != 2 || stopper.best() != 0.6) {
    out.pass = false;
    detail += "early stopping diverged from the fixture; ";
  }

  out.detail = out.pass ? "held-out dataset isolated; early stopping restores "
                          "the first best epoch"
                        : detail;
  return out;
}

// ---------------------------------------------------------------------------
// 9. Distant-supervision filters on the 50-document fixture.
// ---------------------------------------------------------------------------
Outcome criterion_distant_filters() {
  const auto map = testsupport::distant_fixture_map();
  const auto cases = testsupport::distant_fixture();

  std::size_t accepted = 0;
  bool ok = cases.size() == 50;
  std::string why = ok ? "" : "fixture is not 50 documents; ";
  for (const auto& c : cases) {
    auto got = distant_label(c.text, map);
    if (c.label < 0) {
      if (got.has_value()) {
        ok = false;
        why += "wrongly accepted: " + c.text + "; ";
      }
    } else {
      if (!got.has_value() || got->label != c.label || got->cleaned != c.cleaned) {
        ok = false;
        why += "wrongly filtered or mislabeled: " + c.text + "; ";
      } else {
        ++accepted;
      }
    }
  }
  if (ok && accepted != 20) {
    ok = false;
    why = "accepted " + std::to_string(accepted) + " of the expected 20";
  }

  Outcome out;
  out.pass = ok;
  out.detail = ok ? "exactly the 20 hand-enumerated documents accepted from 50"
                  : why;
  return out;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "gradient oracle suite", criterion_gradients},
      {2, "joint-loss identity", criterion_loss_identity},
      {3, "overfit check", criterion_overfit},
      {4, "transfer direction check", criterion_transfer},
      {5, "metric oracle equivalence", criterion_metrics},
      {6, "determinism", criterion_determinism},
      {7, "round trips", criterion_roundtrip},
      {8, "protocol guards", criterion_protocol},
      {9, "distant-supervision filters", criterion_distant_filters},
  };

  int failures = 0;
  for (const Criterion& c : criteria) {
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out.pass = false;
      out.detail = std::string("exception: ") + e.what();
    }
    std::printf("[%s] criterion %d: %s — %s\n", out.pass ? "PASS" : "FAIL",
                c.id, c.name, out.detail.c_str());
    std::fflush(stdout);
    if (!out.pass) ++failures;
  }
  if (failures == 0) {
    std::printf("all %zu acceptance criteria passed\n", criteria.size());
  } else {
    std::printf("%d acceptance criteria FAILED\n", failures);
  }
  return failures;
}
