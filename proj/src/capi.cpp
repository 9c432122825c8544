#include "emo2vec/emo2vec.h"

#include <cstring>
#include <memory>
#include <string>

#include <json.hpp>

#include "checkpoint.hpp"
#include "cli.hpp"
#include "corpus_io.hpp"
#include "embedding.hpp"
#include "eval.hpp"
#include "rng.hpp"
#include "trainer.hpp"
#include "util.hpp"

struct e2v_embedding {
  emo2vec::EmbeddingMatrix matrix;
};

struct e2v_corpus {
  emo2vec::MultiTaskCorpus corpus;
};

struct e2v_model {
  emo2vec::Checkpoint checkpoint;
};

namespace {

thread_local std::string g_last_error = "no error";

e2v_status fail(e2v_status code, const std::string& message) {
  g_last_error = message;
  return code;
}

// Runs `fn`, translating the library's exception types onto status codes.
template <typename Fn>
e2v_status guarded(Fn&& fn) {
  try {
    fn();
    return E2V_OK;
  } catch (const emo2vec::UsageError& e) {
    return fail(E2V_ERR_USAGE, e.what());
  } catch (const emo2vec::ParseError& e) {
    return fail(E2V_ERR_PARSE, e.what());
  } catch (const emo2vec::IoError& e) {
    return fail(E2V_ERR_IO, e.what());
  } catch (const std::invalid_argument& e) {
    return fail(E2V_ERR_INVALID_ARGUMENT, e.what());
  } catch (const std::exception& e) {
    return fail(E2V_ERR_RUNTIME, e.what());
  }
}

e2v_status require(bool ok, const char* what) {
  return ok ? E2V_OK : fail(E2V_ERR_INVALID_ARGUMENT, what);
}

emo2vec::TrainerConfig parse_config(const char* config_json) {
  if (config_json == nullptr || *config_json == '\0') return {};
  return emo2vec::config_from_json(config_json);
}

}  // namespace

extern "C" {

const char* e2v_last_error(void) { return g_last_error.c_str(); }

void e2v_string_free(char* s) { delete[] s; }

e2v_status e2v_embedding_import(const char* path, e2v_embedding** out) {
  if (e2v_status s = require(path != nullptr && out != nullptr,
                             "e2v_embedding_import: null argument");
      s != E2V_OK) {
    return s;
  }
  return guarded([&] {
    auto handle = std::make_unique<e2v_embedding>();
    handle->matrix = emo2vec::import_text(path);
    *out = handle.release();
  });
}

e2v_status e2v_embedding_export(const e2v_embedding* emb, const char* path) {
  if (e2v_status s = require(emb != nullptr && path != nullptr,
                             "e2v_embedding_export: null argument");
      s != E2V_OK) {
    return s;
  }
  return guarded([&] { emo2vec::export_text(emb->matrix, path); });
}

void e2v_embedding_free(e2v_embedding* emb) { delete emb; }

size_t e2v_embedding_dim(const e2v_embedding* emb) {
  return emb == nullptr ? 0 : emb->matrix.dim;
}

size_t e2v_embedding_words(const e2v_embedding* emb) {
  if (emb == nullptr) return 0;
  return static_cast<size_t>(emb->matrix.vocab.size()) - 2;
}

e2v_status e2v_embedding_vector(const e2v_embedding* emb, const char* word,
                                double* buffer, size_t buffer_len) {
  if (e2v_status s = require(emb != nullptr && word != nullptr && buffer != nullptr,
                             "e2v_embedding_vector: null argument");
      s != E2V_OK) {
    return s;
  }
  if (buffer_len < emb->matrix.dim) {
    return fail(E2V_ERR_INVALID_ARGUMENT, "e2v_embedding_vector: buffer too small");
  }
  if (!emb->matrix.vocab.contains(word)) {
    return fail(E2V_ERR_INVALID_ARGUMENT,
                std::string("e2v_embedding_vector: unknown word \"") + word + "\"");
  }
  const int id = emb->matrix.vocab.id_of(word);
  auto row = emb->matrix.table.row(static_cast<std::size_t>(id));
  std::memcpy(buffer, row.data(), emb->matrix.dim * sizeof(double));
  return E2V_OK;
}

e2v_status e2v_embedding_concat(const e2v_embedding* a, const e2v_embedding* b,
                                e2v_embedding** out) {
  if (e2v_status s = require(a != nullptr && b != nullptr && out != nullptr,
                             "e2v_embedding_concat: null argument");
      s != E2V_OK) {
    return s;
  }
  return guarded([&] {
    auto handle = std::make_unique<e2v_embedding>();
    handle->matrix = emo2vec::concat(a->matrix, b->matrix);
    *out = handle.release();
  });
}

e2v_status e2v_corpus_open(const char* dir, e2v_corpus** out) {
  if (e2v_status s = require(dir != nullptr && out != nullptr,
                             "e2v_corpus_open: null argument");
      s != E2V_OK) {
    return s;
  }
  return guarded([&] {
    auto handle = std::make_unique<e2v_corpus>();
    handle->corpus = emo2vec::load_corpus_dir(dir);
    *out = handle.release();
  });
}

void e2v_corpus_free(e2v_corpus* corpus) { delete corpus; }

size_t e2v_corpus_small_count(const e2v_corpus* corpus) {
  return corpus == nullptr ? 0 : corpus->corpus.smalls.size();
}

e2v_status e2v_corpus_stats_json(const e2v_corpus* corpus, char** out_json) {
  if (e2v_status s = require(corpus != nullptr && out_json != nullptr,
                             "e2v_corpus_stats_json: null argument");
      s != E2V_OK) {
    return s;
  }
  return guarded([&] {
    nlohmann::json j = nlohmann::json::object();
    auto add = [&](const emo2vec::Dataset& ds,
                   const std::vector<emo2vec::LabeledDocument>& docs) {
      nlohmann::json entry = nlohmann::json::object();
      entry["documents"] = docs.size();
      nlohmann::json labels = nlohmann::json::object();
      for (const auto& s : emo2vec::label_distribution(docs, ds.label_names)) {
        labels[s.label] = {{"count", s.count}, {"fraction", s.fraction}};
      }
      entry["labels"] = labels;
      j[ds.name] = entry;
    };
    add(corpus->corpus.large, corpus->corpus.large.train);
    for (const emo2vec::Dataset& ds : corpus->corpus.smalls) {
      std::vector<emo2vec::LabeledDocument> all;
      all.insert(all.end(), ds.train.begin(), ds.train.end());
      all.insert(all.end(), ds.dev.begin(), ds.dev.end());
      all.insert(all.end(), ds.test.begin(), ds.test.end());
      add(ds, all);
    }
    const std::string text = j.dump(2);
    char* buf = new char[text.size() + 1];
    std::memcpy(buf, text.c_str(), text.size() + 1);
    *out_json = buf;
  });
}

e2v_status e2v_model_load(const char* path, e2v_model** out) {
  if (e2v_status s = require(path != nullptr && out != nullptr,
                             "e2v_model_load: null argument");
      s != E2V_OK) {
    return s;
  }
  return guarded([&] {
    auto handle = std::make_unique<e2v_model>();
    handle->checkpoint = emo2vec::load_checkpoint(path);
    *out = handle.release();
  });
}

e2v_status e2v_model_save(const e2v_model* model, const char* path) {
  if (e2v_status s = require(model != nullptr && path != nullptr,
                             "e2v_model_save: null argument");
      s != E2V_OK) {
    return s;
  }
  return guarded([&] { emo2vec::save_checkpoint(model->checkpoint, path); });
}

void e2v_model_free(e2v_model* model) { delete model; }

e2v_status e2v_model_embedding(const e2v_model* model, e2v_embedding** out) {
  if (e2v_status s = require(model != nullptr && out != nullptr,
                             "e2v_model_embedding: null argument");
      s != E2V_OK) {
    return s;
  }
  return guarded([&] {
    auto handle = std::make_unique<e2v_embedding>();
    handle->matrix = model->checkpoint.model.embedding;
    *out = handle.release();
  });
}

e2v_status e2v_pretrain(const e2v_corpus* corpus, const char* config_json,
                        e2v_model** out) {
  if (e2v_status s = require(corpus != nullptr && out != nullptr,
                             "e2v_pretrain: null argument");
      s != E2V_OK) {
    return s;
  }
  return guarded([&] {
    emo2vec::TrainerConfig cfg = parse_config(config_json);
    emo2vec::MultiTaskCorpus working = corpus->corpus;
    emo2vec::apply_large_split(working, cfg.large_split,
                               emo2vec::derive_seed(cfg.seed, "large-split"));
    emo2vec::TrainResult result = emo2vec::pretrain_large(working.large, cfg);
    auto handle = std::make_unique<e2v_model>();
    handle->checkpoint = std::move(result.checkpoint);
    *out = handle.release();
  });
}

e2v_status e2v_train(const e2v_corpus* corpus, const char* config_json,
                     const e2v_model* init, e2v_model** out) {
  if (e2v_status s = require(corpus != nullptr && out != nullptr,
                             "e2v_train: null argument");
      s != E2V_OK) {
    return s;
  }
  return guarded([&] {
    emo2vec::TrainerConfig cfg = parse_config(config_json);
    cfg.pretrain = init != nullptr;
    emo2vec::MultiTaskCorpus working = corpus->corpus;
    emo2vec::apply_large_split(working, cfg.large_split,
                               emo2vec::derive_seed(cfg.seed, "large-split"));
    emo2vec::TrainResult result = emo2vec::train_multitask(
        working, cfg, init == nullptr ? nullptr : &init->checkpoint.model);
    auto handle = std::make_unique<e2v_model>();
    handle->checkpoint = std::move(result.checkpoint);
    *out = handle.release();
  });
}

int e2v_main(int argc, const char* const* argv) {
  try {
    return emo2vec::cli::cli_main(argc, argv);
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return 1;
  }
}

}  // extern "C"
